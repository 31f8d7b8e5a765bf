#include "leaderaffect/stats.hpp"

#include "leaderaffect/distributions.hpp"
#include "leaderaffect/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace leaderaffect::stats {

namespace {

double mean_of(std::span<const double> v) {
    // Two-pass: the correction term removes most rounding from the first sum.
    const double n = static_cast<double>(v.size());
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double corr = 0;
    for (double x : v) corr += x - m;
    return m + corr / n;
}

double sum_sq_dev(std::span<const double> v, double m) {
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return s;
}

}  // namespace

DescriptiveStats describe(std::span<const double> values) {
    if (values.empty()) throw StatsError("describe needs at least one value");
    DescriptiveStats d;
    d.n = values.size();
    d.mean = mean_of(values);
    if (d.n >= 2) d.sd = std::sqrt(sum_sq_dev(values, d.mean) / static_cast<double>(d.n - 1));
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    d.min = sorted.front();
    d.max = sorted.back();
    const std::size_t n = sorted.size();
    d.median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    return d;
}

MeanCI mean_ci(std::span<const double> values, double level) {
    if (values.size() < 2) throw StatsError("confidence interval needs at least two values");
    if (!(level > 0 && level < 1)) throw StatsError("confidence level must lie in (0, 1)");
    const double n = static_cast<double>(values.size());
    const double m = mean_of(values);
    const double sd = std::sqrt(sum_sq_dev(values, m) / (n - 1));
    const double half = dist::t_quantile(0.5 + level / 2, n - 1) * sd / std::sqrt(n);
    return {m, m - half, m + half};
}

std::string_view to_string(TTestVariant v) { return v == TTestVariant::welch ? "welch" : "pooled"; }

TTestVariant parse_variant(std::string_view s) {
    if (s == "welch") return TTestVariant::welch;
    if (s == "pooled") return TTestVariant::pooled;
    throw ConfigError("unknown t-test variant '" + std::string(s) + "' (expected welch or pooled)");
}

TTestResult two_group_t(std::span<const double> a, std::span<const double> b, TTestVariant variant) {
    if (a.size() < 2 || b.size() < 2) throw StatsError("t-test needs at least two values per group");
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    TTestResult r;
    r.variant = variant;
    r.mean_a = mean_of(a);
    r.mean_b = mean_of(b);
    const double va = sum_sq_dev(a, r.mean_a) / (na - 1);
    const double vb = sum_sq_dev(b, r.mean_b) / (nb - 1);
    if (va == 0 && vb == 0) throw StatsError("t-test undefined: both groups have zero variance");
    double se = 0;
    if (variant == TTestVariant::pooled) {
        r.df = na + nb - 2;
        const double sp2 = ((na - 1) * va + (nb - 1) * vb) / r.df;
        se = std::sqrt(sp2 * (1 / na + 1 / nb));
    } else {
        const double qa = va / na;
        const double qb = vb / nb;
        se = std::sqrt(qa + qb);
        r.df = (qa + qb) * (qa + qb) / (qa * qa / (na - 1) + qb * qb / (nb - 1));
    }
    r.t = (r.mean_a - r.mean_b) / se;
    r.p = dist::t_two_sided_p(r.t, r.df);
    r.ci_a = mean_ci(a);
    r.ci_b = mean_ci(b);
    return r;
}

AnovaResult anova_oneway(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2) throw StatsError("ANOVA needs at least two groups");
    std::size_t n = 0;
    double grand = 0;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        if (groups[g].size() < 2) {
            throw StatsError("ANOVA group " + std::to_string(g + 1) + " has fewer than two values");
        }
        n += groups[g].size();
        grand += std::accumulate(groups[g].begin(), groups[g].end(), 0.0);
    }
    grand /= static_cast<double>(n);
    AnovaResult r;
    for (const auto& g : groups) {
        const double m = mean_of(g);
        r.ss_between += static_cast<double>(g.size()) * (m - grand) * (m - grand);
        r.ss_within += sum_sq_dev(g, m);
    }
    r.df_between = static_cast<int>(groups.size()) - 1;
    r.df_within = static_cast<int>(n - groups.size());
    const double ss_total = r.ss_between + r.ss_within;
    r.eta_squared = ss_total > 0 ? r.ss_between / ss_total : 0.0;
    const double ms_within = r.ss_within / r.df_within;
    if (ms_within == 0) {
        if (r.ss_between == 0) {
            r.F = 0;
            r.p = 1;
            return r;
        }
        throw StatsError("ANOVA undefined: zero variance within every group");
    }
    r.F = (r.ss_between / r.df_between) / ms_within;
    r.p = dist::f_sf(r.F, r.df_between, r.df_within);
    return r;
}

std::vector<PairwiseResult> tukey_hsd(const std::vector<std::vector<double>>& groups) {
    const AnovaResult a = anova_oneway(groups);
    const double ms_within = a.ss_within / a.df_within;
    const int k = static_cast<int>(groups.size());
    std::vector<double> means;
    for (const auto& g : groups) means.push_back(mean_of(g));
    std::vector<PairwiseResult> out;
    for (std::size_t i = 0; i < groups.size(); ++i) {
        for (std::size_t j = i + 1; j < groups.size(); ++j) {
            PairwiseResult r;
            r.group_i = i;
            r.group_j = j;
            r.mean_diff = means[j] - means[i];
            const double se = std::sqrt(ms_within / 2 *
                                        (1.0 / static_cast<double>(groups[i].size()) +
                                         1.0 / static_cast<double>(groups[j].size())));
            if (se == 0) {
                r.q = r.mean_diff == 0 ? 0 : std::numeric_limits<double>::infinity();
                r.p_adjusted = r.mean_diff == 0 ? 1.0 : 0.0;
            } else {
                r.q = std::abs(r.mean_diff) / se;
                r.p_adjusted = std::clamp(dist::studentized_range_sf(r.q, k, a.df_within), 0.0, 1.0);
            }
            out.push_back(r);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

std::string_view to_string(Measure m) { return m == Measure::negative ? "negative" : "neutral"; }

double measure_value(const affect::VideoSummary& s, Measure m) {
    return m == Measure::negative ? s.mean_negative : s.mean[affect::neutral];
}

corpus::BinaryGroup binary_group(const affect::VideoSummary& s) {
    return corpus::binary_group_for(s.populism_category);
}

std::array<std::vector<double>, 2> by_binary_group(const std::vector<affect::VideoSummary>& rows, Measure m) {
    std::array<std::vector<double>, 2> out;
    for (const auto& r : rows) out[static_cast<std::size_t>(binary_group(r))].push_back(measure_value(r, m));
    return out;
}

std::vector<std::vector<double>> by_category(const std::vector<affect::VideoSummary>& rows, Measure m) {
    std::vector<std::vector<double>> out(4);
    for (const auto& r : rows) {
        corpus::binary_group_for(r.populism_category);  // validates 1..4
        out[static_cast<std::size_t>(r.populism_category - 1)].push_back(measure_value(r, m));
    }
    return out;
}

std::vector<DescriptiveRow> descriptive_table(const std::vector<affect::VideoSummary>& rows) {
    std::vector<DescriptiveRow> out;
    std::vector<double> v(rows.size());
    for (std::size_t l = 0; l < affect::kLabels; ++l) {
        for (std::size_t i = 0; i < rows.size(); ++i) v[i] = rows[i].mean[l];
        out.push_back({std::string(affect::kLabelNames[l]), describe(v)});
    }
    for (std::size_t i = 0; i < rows.size(); ++i) v[i] = rows[i].mean_negative;
    out.push_back({"negative", describe(v)});
    return out;
}

std::array<DominanceRow, 2> dominance_table(const std::vector<affect::VideoSummary>& rows) {
    std::array<DominanceRow, 2> out;
    out[0].group = corpus::BinaryGroup::pluralist;
    out[1].group = corpus::BinaryGroup::populist;
    for (const auto& r : rows) {
        auto& row = out[static_cast<std::size_t>(binary_group(r))];
        ++row.videos;
        for (std::size_t l = 0; l < affect::kLabels; ++l) row.dominance[l] += r.dominance[l];
        row.negative_dominant += r.neg_dominant_frac;
    }
    for (auto& row : out) {
        if (row.videos == 0) {
            throw StatsError("dominance table: no videos in the " + std::string(corpus::to_string(row.group)) +
                             " group");
        }
        const double n = static_cast<double>(row.videos);
        for (double& d : row.dominance) d /= n;
        row.negative_dominant /= n;
    }
    return out;
}

std::vector<CountryGroup> country_summary(const std::vector<affect::VideoSummary>& rows, Measure m) {
    std::map<std::pair<std::string, int>, CountryGroup> groups;
    for (const auto& r : rows) {
        const auto g = binary_group(r);
        auto& cg = groups[{r.country_iso, static_cast<int>(g)}];
        cg.country_iso = r.country_iso;
        cg.group = g;
        cg.values.push_back(measure_value(r, m));
        cg.video_ids.push_back(r.video_id);
    }
    std::vector<CountryGroup> out;
    for (auto& [_, cg] : groups) {
        cg.mean = mean_of(cg.values);
        out.push_back(std::move(cg));
    }
    return out;
}

}  // namespace leaderaffect::stats
