#pragma once

#include "leaderaffect/affect.hpp"
#include "leaderaffect/stats.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace leaderaffect::viz {

inline constexpr int kKdePoints = 256;
inline constexpr double kBandwidthFloor = 0.01;

struct KdeCurve {
    std::vector<double> x;
    std::vector<double> y;
    double bandwidth = 0;
};

/// Silverman's rule of thumb, 0.9 * min(sd, IQR / 1.34) * n^(-1/5), floored at 0.01.
double silverman_bandwidth(std::span<const double> values);

/// Gaussian kernel density on 256 evenly spaced points over [0, 1], truncated to
/// [0, 1] and renormalized by the kernel mass that falls inside. Throws for n < 2.
KdeCurve kde(std::span<const double> values, std::optional<double> bandwidth = std::nullopt);

enum class Grouping { binary, four_level, country };

struct FigureSpec {
    stats::Measure measure = stats::Measure::negative;
    Grouping grouping = Grouping::four_level;
    double width = 760;
    double height = 520;
    std::optional<double> reference_line = 0.5;
    std::uint64_t seed = 20240601;
    std::string title;
};

struct LabeledValues {
    std::string label;
    std::vector<double> values;
};

/// Per lane: jittered dots, box (quartiles, 1.5 IQR whiskers) and density.
/// Throws Error naming the group when a lane has fewer than two values.
std::string raincloud(const std::vector<LabeledValues>& groups, const FigureSpec& spec);

/// Two panels (negative, neutral), one dot per video split by binary group.
std::string group_scatter(const std::vector<affect::VideoSummary>& rows, const FigureSpec& spec);

/// ISO codes on the x axis; translucent raw values and opaque group means per
/// (country, binary group).
std::string country_panels(const std::vector<stats::CountryGroup>& data, const FigureSpec& spec);

/// Lanes for the four populism categories (empty categories are left out).
std::vector<LabeledValues> category_lanes(const std::vector<affect::VideoSummary>& rows, stats::Measure m);

/// `fig_<family>_<measure>_<strategy>.svg`
std::string figure_name(std::string_view family, std::string_view measure, std::string_view strategy);

}  // namespace leaderaffect::viz
