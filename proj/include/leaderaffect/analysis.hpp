#pragma once

#include "leaderaffect/affect.hpp"
#include "leaderaffect/stats.hpp"

#include <json.hpp>

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace leaderaffect::analysis {

namespace fs = std::filesystem;

struct BinaryTest {
    stats::Measure measure = stats::Measure::negative;
    std::optional<stats::TTestResult> result;  ///< a = populist, b = pluralist
    std::array<std::size_t, 2> n{};          ///< pluralist, populist
    std::string skipped;
};

struct CategoryTest {
    stats::Measure measure = stats::Measure::negative;
    /// Populism categories (1..4) that entered the test, in group order.
    std::vector<int> categories;
    std::vector<std::size_t> n;
    std::optional<stats::AnovaResult> anova;
    std::vector<stats::PairwiseResult> tukey;
    std::string skipped;
};

struct Report {
    std::string strategy;
    std::size_t videos = 0;
    stats::TTestVariant variant = stats::TTestVariant::pooled;
    std::vector<stats::DescriptiveRow> descriptives;
    std::array<BinaryTest, 2> binary;
    std::array<CategoryTest, 2> categories;
    std::optional<std::array<stats::DominanceRow, 2>> dominance;
    std::string dominance_skipped;
    std::array<std::vector<stats::CountryGroup>, 2> countries;
};

/// Full statistics set for one strategy. Tests that lack data are marked
/// skipped with a reason; an empty input throws StatsError.
Report analyze(const std::vector<affect::VideoSummary>& rows, const std::string& strategy,
               stats::TTestVariant variant = stats::TTestVariant::pooled);

std::string format_report(const Report& r);

/// Machine-readable form: {strategy, videos, descriptives, tests:[{test, groups,
/// statistic, df, p, effect_size, pairs}], dominance, countries}.
nlohmann::json to_json(const Report& r);

struct Figure {
    std::string file_name;
    std::string svg;
};

struct FigureSet {
    std::vector<Figure> figures;
    /// File names that could not be drawn, with the reason.
    std::vector<std::pair<std::string, std::string>> skipped;
};

FigureSet render_figures(const std::vector<affect::VideoSummary>& rows, const std::string& strategy,
                         std::uint64_t seed);

/// Strategy directories under `output_dir` that contain a summary CSV, sorted.
std::vector<std::string> available_strategies(const fs::path& output_dir);

struct StrategyOutputs {
    std::string strategy;
    std::vector<fs::path> written;
    std::vector<std::pair<std::string, std::string>> skipped_figures;
};

/// Reads `<output_dir>/<strategy>/summary.csv` and writes the report
/// (`analysis/report.txt`, `analysis/report.json`) and/or the figures.
/// Nothing is written when the summary is missing or empty.
StrategyOutputs analyze_strategy(const fs::path& output_dir, const std::string& strategy, stats::TTestVariant variant,
                                 std::uint64_t seed, bool write_report, bool write_figures);

}  // namespace leaderaffect::analysis
