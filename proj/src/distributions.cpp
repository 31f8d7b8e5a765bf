#include "leaderaffect/distributions.hpp"

#include "leaderaffect/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace leaderaffect::dist {

namespace {

constexpr double kEps = 1e-16;
constexpr double kTiny = 1e-300;

void require(bool ok, const char* what) {
    if (!ok) throw StatsError(what);
}

// Modified Lentz evaluation of the incomplete beta continued fraction.
double beta_cf(double x, double a, double b) {
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 100000; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) return h;
    }
    throw StatsError("incomplete beta continued fraction did not converge");
}

double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

// Monotone root finding on a CDF-like function that is nondecreasing in x.
template <class F>
double invert(F cdf, double p, double lo, double hi) {
    while (cdf(hi) < p) {
        lo = hi;
        hi *= 2;
        if (hi > 1e300) return std::numeric_limits<double>::infinity();
    }
    for (int i = 0; i < 400 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++i) {
        const double mid = 0.5 * (lo + hi);
        if (cdf(mid) < p) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

struct GaussLegendre16 {
    std::array<double, 16> x{}, w{};
    GaussLegendre16() {
        constexpr int n = 16;
        for (int i = 0; i < n / 2; ++i) {
            double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
            double pp = 0;
            for (int iter = 0; iter < 100; ++iter) {
                double p1 = 1, p2 = 0;
                for (int j = 1; j <= n; ++j) {
                    const double p3 = p2;
                    p2 = p1;
                    p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
                }
                pp = n * (z * p1 - p2) / (z * z - 1.0);
                const double z1 = z;
                z = z1 - p1 / pp;
                if (std::abs(z - z1) < 1e-15) break;
            }
            x[i] = -z;
            x[n - 1 - i] = z;
            w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
        }
    }
};

const GaussLegendre16& gl16() {
    static const GaussLegendre16 rule;
    return rule;
}

template <class F>
double integrate(F f, double a, double b, int panels) {
    const auto& r = gl16();
    const double h = (b - a) / panels;
    double total = 0;
    for (int p = 0; p < panels; ++p) {
        const double mid = a + (p + 0.5) * h;
        double s = 0;
        for (int i = 0; i < 16; ++i) s += r.w[i] * f(mid + 0.5 * h * r.x[i]);
        total += 0.5 * h * s;
    }
    return total;
}

double upper_normal(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

// Phi(b) - Phi(a) for a <= b, using the tail that avoids cancellation.
double normal_mass(double a, double b) {
    return a >= 0 ? upper_normal(a) - upper_normal(b) : normal_cdf(b) - normal_cdf(a);
}

}  // namespace

double incomplete_beta(double x, double a, double b) {
    require(a > 0 && b > 0, "incomplete beta needs a > 0 and b > 0");
    require(!std::isnan(x), "incomplete beta argument is NaN");
    if (x <= 0) return 0.0;
    if (x >= 1) return 1.0;
    const double front = std::exp(a * std::log(x) + b * std::log1p(-x) - log_beta(a, b));
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(x, a, b) / a;
    return 1.0 - front * beta_cf(1.0 - x, b, a) / b;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2 * std::numbers::pi); }

double t_two_sided_p(double t, double df) {
    require(df > 0, "t distribution needs df > 0");
    if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
    if (std::isinf(t)) return 0.0;
    return incomplete_beta(df / (df + t * t), df / 2, 0.5);
}

double t_cdf(double x, double df) {
    require(df > 0, "t distribution needs df > 0");
    if (x == 0) return 0.5;
    const double tail = 0.5 * t_two_sided_p(x, df);
    return x > 0 ? 1.0 - tail : tail;
}

double t_pdf(double x, double df) {
    require(df > 0, "t distribution needs df > 0");
    return std::exp(std::lgamma((df + 1) / 2) - std::lgamma(df / 2) - 0.5 * std::log(df * std::numbers::pi) -
                    (df + 1) / 2 * std::log1p(x * x / df));
}

double t_quantile(double p, double df) {
    require(df > 0, "t distribution needs df > 0");
    require(p > 0 && p < 1, "t quantile needs 0 < p < 1");
    if (p == 0.5) return 0.0;
    if (p < 0.5) return -t_quantile(1 - p, df);
    return invert([df](double x) { return t_cdf(x, df); }, p, 0.0, 8.0);
}

double f_cdf(double x, double d1, double d2) {
    require(d1 > 0 && d2 > 0, "F distribution needs d1, d2 > 0");
    if (x <= 0) return 0.0;
    if (std::isinf(x)) return 1.0;
    return incomplete_beta(d1 * x / (d1 * x + d2), d1 / 2, d2 / 2);
}

double f_sf(double x, double d1, double d2) {
    require(d1 > 0 && d2 > 0, "F distribution needs d1, d2 > 0");
    if (x <= 0) return 1.0;
    if (std::isinf(x)) return 0.0;
    return incomplete_beta(d2 / (d2 + d1 * x), d2 / 2, d1 / 2);
}

double f_pdf(double x, double d1, double d2) {
    require(d1 > 0 && d2 > 0, "F distribution needs d1, d2 > 0");
    if (x < 0) return 0.0;
    if (x == 0) return d1 < 2 ? std::numeric_limits<double>::infinity() : (d1 == 2 ? 1.0 : 0.0);
    const double lg = 0.5 * (d1 * std::log(d1 * x) + d2 * std::log(d2) - (d1 + d2) * std::log(d1 * x + d2)) -
                      std::log(x) - log_beta(d1 / 2, d2 / 2);
    return std::exp(lg);
}

double f_quantile(double p, double d1, double d2) {
    require(d1 > 0 && d2 > 0, "F distribution needs d1, d2 > 0");
    require(p > 0 && p < 1, "F quantile needs 0 < p < 1");
    return invert([=](double x) { return f_cdf(x, d1, d2); }, p, 0.0, 4.0);
}

double normal_range_cdf(double w, int k) {
    require(k >= 2, "range distribution needs k >= 2");
    if (w <= 0) return 0.0;
    if (std::isinf(w)) return 1.0;
    // k * integral of phi(z) * (Phi(z + w) - Phi(z))^(k-1) dz
    const double v = k * integrate([&](double z) { return normal_pdf(z) * std::pow(normal_mass(z, z + w), k - 1); },
                                   -8.5, 8.5, 17);
    return std::clamp(v, 0.0, 1.0);
}

double studentized_range_cdf(double q, int k, double df) {
    require(k >= 2, "studentized range needs k >= 2");
    require(df > 0, "studentized range needs df > 0");
    if (std::isnan(q)) return std::numeric_limits<double>::quiet_NaN();
    if (q <= 0) return 0.0;
    if (std::isinf(q)) return 1.0;
    if (df > 1e6) return normal_range_cdf(q, k);

    // Mix the infinite-df range distribution over s = sqrt(chi2_df / df).
    const double spread = 12.0 * std::sqrt(2.0 * df);
    const double s_lo = std::sqrt(std::max(0.0, df - spread) / df);
    const double s_hi = std::sqrt((df + spread + 40.0) / df);
    const double sd = 1.0 / std::sqrt(2.0 * df);
    const int panels = std::clamp(static_cast<int>(std::ceil((s_hi - s_lo) / (sd / 2))), 16, 400);
    const double log_norm = 0.5 * df * std::log(df) - std::lgamma(df / 2) - (0.5 * df - 1) * std::log(2.0);
    const double v = integrate(
        [&](double s) {
            if (s <= 0) return 0.0;
            const double log_density = log_norm + (df - 1) * std::log(s) - 0.5 * df * s * s;
            return normal_range_cdf(q * s, k) * std::exp(log_density);
        },
        s_lo, s_hi, panels);
    return std::clamp(v, 0.0, 1.0);
}

double studentized_range_sf(double q, int k, double df) { return 1.0 - studentized_range_cdf(q, k, df); }

double studentized_range_quantile(double p, int k, double df) {
    require(p > 0 && p < 1, "studentized range quantile needs 0 < p < 1");
    return invert([=](double x) { return studentized_range_cdf(x, k, df); }, p, 0.0, 8.0);
}

}  // namespace leaderaffect::dist
