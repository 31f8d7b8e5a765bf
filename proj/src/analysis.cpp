#include "leaderaffect/analysis.hpp"

#include "leaderaffect/errors.hpp"
#include "leaderaffect/fsutil.hpp"
#include "leaderaffect/pipeline.hpp"
#include "leaderaffect/viz.hpp"

#include <sstream>

namespace leaderaffect::analysis {

using nlohmann::json;
using stats::Measure;

namespace {

constexpr std::array<Measure, 2> kMeasures = {Measure::negative, Measure::neutral};

const char* category_name(int c) {
    switch (c) {
        case 1: return "strongly pluralist";
        case 2: return "moderately pluralist";
        case 3: return "moderately populist";
        case 4: return "strongly populist";
    }
    return "?";
}

BinaryTest binary_test(const std::vector<affect::VideoSummary>& rows, Measure m, stats::TTestVariant variant) {
    BinaryTest t;
    t.measure = m;
    const auto groups = stats::by_binary_group(rows, m);
    t.n = {groups[0].size(), groups[1].size()};
    try {
        t.result = stats::two_group_t(groups[1], groups[0], variant);
    } catch (const StatsError& e) {
        t.skipped = e.what();
    }
    return t;
}

CategoryTest category_test(const std::vector<affect::VideoSummary>& rows, Measure m) {
    CategoryTest t;
    t.measure = m;
    std::vector<std::vector<double>> groups;
    const auto all = stats::by_category(rows, m);
    for (std::size_t i = 0; i < all.size(); ++i) {
        if (all[i].empty()) continue;
        t.categories.push_back(static_cast<int>(i) + 1);
        t.n.push_back(all[i].size());
        groups.push_back(all[i]);
    }
    try {
        t.anova = stats::anova_oneway(groups);
        t.tukey = stats::tukey_hsd(groups);
    } catch (const StatsError& e) {
        t.anova.reset();
        t.tukey.clear();
        t.skipped = e.what();
    }
    return t;
}

std::string fx(double v, int d = 4) { return format_fixed(v, d); }

json ci_json(const stats::MeanCI& c) { return {{"mean", c.mean}, {"lo", c.lo}, {"hi", c.hi}}; }

}  // namespace

Report analyze(const std::vector<affect::VideoSummary>& rows, const std::string& strategy,
               stats::TTestVariant variant) {
    if (rows.empty()) throw StatsError("summary for " + strategy + " has no videos");
    Report r;
    r.strategy = strategy;
    r.videos = rows.size();
    r.variant = variant;
    r.descriptives = stats::descriptive_table(rows);
    for (std::size_t i = 0; i < kMeasures.size(); ++i) {
        r.binary[i] = binary_test(rows, kMeasures[i], variant);
        r.categories[i] = category_test(rows, kMeasures[i]);
        r.countries[i] = stats::country_summary(rows, kMeasures[i]);
    }
    try {
        r.dominance = stats::dominance_table(rows);
    } catch (const StatsError& e) {
        r.dominance_skipped = e.what();
    }
    return r;
}

std::string format_report(const Report& r) {
    std::ostringstream o;
    o << "Strategy: " << r.strategy << "\nVideos: " << r.videos << "\n\n";

    o << "Descriptive statistics (per-video mean scores)\n";
    o << "label      n     mean     sd       min      median   max\n";
    for (const auto& d : r.descriptives) {
        std::string label = d.label;
        label.resize(10, ' ');
        o << label << ' ' << d.stats.n << "  " << fx(d.stats.mean) << "  " << (d.stats.sd ? fx(*d.stats.sd) : "NA    ")
          << "  " << fx(d.stats.min) << "  " << fx(d.stats.median) << "  " << fx(d.stats.max) << '\n';
    }

    o << "\nPopulist vs pluralist (" << stats::to_string(r.variant) << " t-test, two-sided)\n";
    for (const auto& b : r.binary) {
        o << stats::to_string(b.measure) << ": n = " << b.n[1] << " populist / " << b.n[0] << " pluralist\n";
        if (!b.result) {
            o << "  skipped: " << b.skipped << '\n';
            continue;
        }
        const auto& t = *b.result;
        o << "  populist  " << fx(t.ci_a.mean) << " (95% CI " << fx(t.ci_a.lo) << " to " << fx(t.ci_a.hi) << ")\n"
          << "  pluralist " << fx(t.ci_b.mean) << " (95% CI " << fx(t.ci_b.lo) << " to " << fx(t.ci_b.hi) << ")\n"
          << "  t = " << fx(t.t) << ", df = " << format_sig(t.df) << ", p = " << format_sig(t.p) << '\n';
    }

    o << "\nFour-level populism category (one-way ANOVA, Tukey HSD)\n";
    for (const auto& c : r.categories) {
        o << stats::to_string(c.measure) << ":";
        for (std::size_t i = 0; i < c.categories.size(); ++i) o << " [" << c.categories[i] << "] n=" << c.n[i];
        o << '\n';
        if (!c.anova) {
            o << "  skipped: " << c.skipped << '\n';
            continue;
        }
        const auto& a = *c.anova;
        o << "  F(" << a.df_between << ", " << a.df_within << ") = " << fx(a.F) << ", p = " << format_sig(a.p)
          << ", eta^2 = " << fx(a.eta_squared) << '\n';
        for (const auto& p : c.tukey) {
            o << "  " << category_name(c.categories[p.group_j]) << " - " << category_name(c.categories[p.group_i])
              << ": diff = " << fx(p.mean_diff) << ", p adj = " << format_sig(p.p_adjusted) << '\n';
        }
    }

    o << "\nDominant-emotion share of frames (mean over videos)\n";
    if (!r.dominance) {
        o << "  skipped: " << r.dominance_skipped << '\n';
    } else {
        o << "group       videos";
        for (auto name : affect::kLabelNames) o << "  " << name;
        o << "  negative\n";
        for (const auto& d : *r.dominance) {
            std::string g(corpus::to_string(d.group));
            g.resize(11, ' ');
            o << g << ' ' << d.videos;
            for (double v : d.dominance) o << "  " << fx(v, 3);
            o << "  " << fx(d.negative_dominant, 3) << '\n';
        }
    }

    o << "\nCountry means\n";
    for (std::size_t i = 0; i < kMeasures.size(); ++i) {
        o << stats::to_string(kMeasures[i]) << ":\n";
        for (const auto& c : r.countries[i]) {
            o << "  " << c.country_iso << ' ' << corpus::to_string(c.group) << " n=" << c.values.size() << " mean "
              << fx(c.mean) << '\n';
        }
    }
    return o.str();
}

json to_json(const Report& r) {
    json desc = json::array();
    for (const auto& d : r.descriptives) {
        desc.push_back({{"label", d.label},
                        {"n", d.stats.n},
                        {"mean", d.stats.mean},
                        {"sd", d.stats.sd ? json(*d.stats.sd) : json(nullptr)},
                        {"min", d.stats.min},
                        {"median", d.stats.median},
                        {"max", d.stats.max}});
    }
    json tests = json::array();
    for (const auto& b : r.binary) {
        json t = {{"test", std::string("t_test_") + std::string(stats::to_string(r.variant))},
                  {"measure", stats::to_string(b.measure)},
                  {"groups", json::array({{{"name", "populist"}, {"n", b.n[1]}}, {{"name", "pluralist"}, {"n", b.n[0]}}})},
                  {"pairs", json::array()}};
        if (b.result) {
            const auto& x = *b.result;
            t["groups"][0]["ci"] = ci_json(x.ci_a);
            t["groups"][1]["ci"] = ci_json(x.ci_b);
            t["statistic"] = x.t;
            t["df"] = x.df;
            t["p"] = x.p;
            t["effect_size"] = x.mean_a - x.mean_b;
        } else {
            t["skipped"] = b.skipped;
        }
        tests.push_back(t);
    }
    for (const auto& c : r.categories) {
        json groups = json::array();
        for (std::size_t i = 0; i < c.categories.size(); ++i) {
            groups.push_back({{"name", category_name(c.categories[i])}, {"category", c.categories[i]}, {"n", c.n[i]}});
        }
        json t = {{"test", "anova_oneway"},
                  {"measure", stats::to_string(c.measure)},
                  {"groups", groups},
                  {"pairs", json::array()}};
        if (c.anova) {
            const auto& a = *c.anova;
            t["statistic"] = a.F;
            t["df"] = {a.df_between, a.df_within};
            t["p"] = a.p;
            t["effect_size"] = a.eta_squared;
            for (const auto& p : c.tukey) {
                t["pairs"].push_back({{"a", c.categories[p.group_i]},
                                      {"b", c.categories[p.group_j]},
                                      {"diff", p.mean_diff},
                                      {"q", p.q},
                                      {"p_adjusted", p.p_adjusted}});
            }
        } else {
            t["skipped"] = c.skipped;
        }
        tests.push_back(t);
    }
    json dom = nullptr;
    if (r.dominance) {
        dom = json::array();
        for (const auto& d : *r.dominance) {
            json row = {{"group", corpus::to_string(d.group)}, {"videos", d.videos}, {"negative", d.negative_dominant}};
            for (std::size_t i = 0; i < affect::kLabels; ++i) row[std::string(affect::kLabelNames[i])] = d.dominance[i];
            dom.push_back(row);
        }
    }
    json countries = json::object();
    for (std::size_t i = 0; i < kMeasures.size(); ++i) {
        json list = json::array();
        for (const auto& c : r.countries[i]) {
            list.push_back({{"country_iso", c.country_iso},
                            {"group", corpus::to_string(c.group)},
                            {"n", c.values.size()},
                            {"mean", c.mean}});
        }
        countries[std::string(stats::to_string(kMeasures[i]))] = list;
    }
    return {{"strategy", r.strategy},
            {"videos", r.videos},
            {"descriptives", desc},
            {"tests", tests},
            {"dominance", dom},
            {"countries", countries}};
}

FigureSet render_figures(const std::vector<affect::VideoSummary>& rows, const std::string& strategy,
                         std::uint64_t seed) {
    FigureSet set;
    auto add = [&](const std::string& name, auto&& draw) {
        try {
            set.figures.push_back({name, draw()});
        } catch (const Error& e) {
            set.skipped.emplace_back(name, e.what());
        }
    };

    viz::FigureSpec scatter;
    scatter.grouping = viz::Grouping::binary;
    scatter.seed = seed;
    scatter.title = "Per-video mean scores by group (" + strategy + ")";
    add(viz::figure_name("scatter", "negative-neutral", strategy), [&] { return viz::group_scatter(rows, scatter); });

    for (Measure m : kMeasures) {
        const std::string measure(stats::to_string(m));
        viz::FigureSpec rc;
        rc.measure = m;
        rc.grouping = viz::Grouping::four_level;
        rc.seed = seed;
        rc.title = "Mean " + measure + " score by populism category (" + strategy + ")";
        add(viz::figure_name("raincloud", measure, strategy),
            [&] { return viz::raincloud(viz::category_lanes(rows, m), rc); });

        viz::FigureSpec cp;
        cp.measure = m;
        cp.grouping = viz::Grouping::country;
        cp.seed = seed;
        cp.reference_line.reset();
        cp.title = "Mean " + measure + " score by country (" + strategy + ")";
        add(viz::figure_name("country", measure, strategy),
            [&] { return viz::country_panels(stats::country_summary(rows, m), cp); });
    }
    return set;
}

std::vector<std::string> available_strategies(const fs::path& output_dir) {
    std::vector<std::string> out;
    if (!fs::is_directory(output_dir)) return out;
    for (const auto& e : fs::directory_iterator(output_dir)) {
        if (e.is_directory() && fs::exists(pipeline::Layout{e.path()}.summary())) {
            out.push_back(e.path().filename().string());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

StrategyOutputs analyze_strategy(const fs::path& output_dir, const std::string& strategy, stats::TTestVariant variant,
                                 std::uint64_t seed, bool write_report, bool write_figures) {
    const auto layout = pipeline::layout_for(output_dir, strategy);
    if (!fs::exists(layout.summary())) throw Error("summary not found: " + layout.summary().string());
    const auto rows = affect::read_summary_csv(layout.summary());
    if (rows.empty()) throw StatsError("summary has no videos: " + layout.summary().string());

    StrategyOutputs out;
    out.strategy = strategy;
    // Everything is computed before anything is written.
    std::optional<Report> report;
    if (write_report) report = analyze(rows, strategy, variant);
    FigureSet figs;
    if (write_figures) figs = render_figures(rows, strategy, seed);

    if (report) {
        fs::create_directories(layout.analysis_dir());
        const auto txt = layout.analysis_dir() / "report.txt";
        const auto js = layout.analysis_dir() / "report.json";
        atomic_write(txt, format_report(*report));
        atomic_write(js, to_json(*report).dump(2) + "\n");
        out.written.insert(out.written.end(), {txt, js});
    }
    if (write_figures) {
        fs::create_directories(layout.figures_dir());
        for (const auto& f : figs.figures) {
            const auto p = layout.figures_dir() / f.file_name;
            atomic_write(p, f.svg);
            out.written.push_back(p);
        }
        for (const auto& [name, _] : figs.skipped) {
            std::error_code ec;
            fs::remove(layout.figures_dir() / name, ec);
        }
        out.skipped_figures = std::move(figs.skipped);
    }
    return out;
}

}  // namespace leaderaffect::analysis
