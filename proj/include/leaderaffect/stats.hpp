#pragma once

#include "leaderaffect/affect.hpp"
#include "leaderaffect/corpus.hpp"

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace leaderaffect::stats {

struct DescriptiveStats {
    std::size_t n = 0;
    double mean = 0;
    /// Sample standard deviation; absent for n = 1.
    std::optional<double> sd;
    double min = 0;
    double median = 0;
    double max = 0;
};

/// Throws StatsError on empty input.
DescriptiveStats describe(std::span<const double> values);

struct MeanCI {
    double mean = 0;
    double lo = 0;
    double hi = 0;
};

/// mean +/- t(n-1, (1+level)/2) * sd / sqrt(n). Throws StatsError for n < 2.
MeanCI mean_ci(std::span<const double> values, double level = 0.95);

enum class TTestVariant { welch, pooled };

std::string_view to_string(TTestVariant v);
TTestVariant parse_variant(std::string_view s);

struct TTestResult {
    TTestVariant variant = TTestVariant::pooled;
    double t = 0;
    double df = 0;
    /// two-sided
    double p = 1;
    double mean_a = 0;
    double mean_b = 0;
    MeanCI ci_a;
    MeanCI ci_b;
};

/// Statistic is (mean_a - mean_b) / se. Throws StatsError when a group has
/// n < 2 or both groups have zero variance.
TTestResult two_group_t(std::span<const double> a, std::span<const double> b, TTestVariant variant);

struct AnovaResult {
    double F = 0;
    int df_between = 0;
    int df_within = 0;
    double p = 1;
    double eta_squared = 0;
    double ss_between = 0;
    double ss_within = 0;
};

/// Throws StatsError for fewer than 2 groups or a group with n < 2.
AnovaResult anova_oneway(const std::vector<std::vector<double>>& groups);

struct PairwiseResult {
    std::size_t group_i = 0;
    std::size_t group_j = 0;
    /// mean_j - mean_i
    double mean_diff = 0;
    double q = 0;
    double p_adjusted = 1;
};

/// Tukey-Kramer comparisons for every pair i < j.
std::vector<PairwiseResult> tukey_hsd(const std::vector<std::vector<double>>& groups);

// ---------------------------------------------------------------------------
// per-video summary tables

enum class Measure { negative, neutral };

std::string_view to_string(Measure m);
double measure_value(const affect::VideoSummary& s, Measure m);

corpus::BinaryGroup binary_group(const affect::VideoSummary& s);

/// Values of `m` split by binary group: [pluralist, populist].
std::array<std::vector<double>, 2> by_binary_group(const std::vector<affect::VideoSummary>& rows, Measure m);

/// Values of `m` split by populism category 1..4 (index 0 is category 1).
std::vector<std::vector<double>> by_category(const std::vector<affect::VideoSummary>& rows, Measure m);

/// Label and per-video value for each of the 8 descriptive rows: the seven
/// emotion means, then the negative aggregate.
struct DescriptiveRow {
    std::string label;
    DescriptiveStats stats;
};
std::vector<DescriptiveRow> descriptive_table(const std::vector<affect::VideoSummary>& rows);

struct DominanceRow {
    corpus::BinaryGroup group = corpus::BinaryGroup::pluralist;
    std::size_t videos = 0;
    std::array<double, affect::kLabels> dominance{};
    double negative_dominant = 0;
};

/// Mean over videos of each dominance fraction, per binary group.
/// Throws StatsError when a group has no videos.
std::array<DominanceRow, 2> dominance_table(const std::vector<affect::VideoSummary>& rows);

struct CountryGroup {
    std::string country_iso;
    corpus::BinaryGroup group = corpus::BinaryGroup::pluralist;
    double mean = 0;
    std::vector<double> values;
    std::vector<std::string> video_ids;
};

/// One entry per (country, group) that has videos, ordered by country then group.
std::vector<CountryGroup> country_summary(const std::vector<affect::VideoSummary>& rows, Measure m);

}  // namespace leaderaffect::stats
