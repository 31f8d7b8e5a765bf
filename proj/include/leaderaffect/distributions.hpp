#pragma once

namespace leaderaffect::dist {

/// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double x, double a, double b);

double normal_cdf(double x);
double normal_pdf(double x);

/// Student t with `df` > 0 degrees of freedom (non-integer allowed).
double t_cdf(double x, double df);
double t_pdf(double x, double df);
/// P(|T| >= |t|), evaluated without cancellation for large |t|.
double t_two_sided_p(double t, double df);
double t_quantile(double p, double df);

double f_cdf(double x, double d1, double d2);
double f_pdf(double x, double d1, double d2);
/// Upper tail P(F >= x), evaluated without cancellation.
double f_sf(double x, double d1, double d2);
double f_quantile(double p, double d1, double d2);

/// Distribution of the range of `k` iid standard normals (infinite df).
double normal_range_cdf(double w, int k);

/// Studentized range distribution with `k` >= 2 groups and `df` > 0.
double studentized_range_cdf(double q, int k, double df);
double studentized_range_sf(double q, int k, double df);
double studentized_range_quantile(double p, int k, double df);

}  // namespace leaderaffect::dist
