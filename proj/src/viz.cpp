#include "leaderaffect/viz.hpp"

#include "leaderaffect/distributions.hpp"
#include "leaderaffect/errors.hpp"
#include "leaderaffect/svg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace leaderaffect::viz {

namespace {

double quantile7(const std::vector<double>& sorted, double p) {
    const double h = (static_cast<double>(sorted.size()) - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

// Uniform [0, 1) from the top 53 bits, identical across standard libraries.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

const char* kGroupColor[2] = {"#3b6ea8", "#c0504d"};
const char* kLaneColor[4] = {"#3b6ea8", "#7fa7d6", "#e59a8c", "#c0504d"};

struct Frame {
    double left, right, top, bottom;
    double x(double v) const { return left + v * (right - left); }
    double y(double v) const { return bottom - v * (bottom - top); }
};

void score_axis_x(svg::Document& doc, const Frame& f, const std::string& label) {
    doc.line(f.left, f.bottom, f.right, f.bottom, {{"class", "axis"}, {"stroke", "#333333"}});
    for (int i = 0; i <= 10; ++i) {
        const double v = i / 10.0;
        doc.line(f.x(v), f.bottom, f.x(v), f.bottom + 5, {{"stroke", "#333333"}});
        if (i % 2 == 0) {
            doc.text(f.x(v), f.bottom + 18, svg::num(v, 1),
                     {{"class", "xtick-label"}, {"font-size", "11"}, {"text-anchor", "middle"}});
        }
    }
    doc.text(0.5 * (f.left + f.right), f.bottom + 36, label, {{"font-size", "12"}, {"text-anchor", "middle"}});
}

void score_axis_y(svg::Document& doc, const Frame& f, const std::string& label) {
    doc.line(f.left, f.top, f.left, f.bottom, {{"class", "axis"}, {"stroke", "#333333"}});
    for (int i = 0; i <= 10; ++i) {
        const double v = i / 10.0;
        doc.line(f.left - 5, f.y(v), f.left, f.y(v), {{"stroke", "#333333"}});
        if (i % 2 == 0) {
            doc.text(f.left - 8, f.y(v) + 4, svg::num(v, 1),
                     {{"class", "ytick-label"}, {"font-size", "11"}, {"text-anchor", "end"}});
        }
    }
    doc.text(f.left - 40, 0.5 * (f.top + f.bottom), label,
             {{"font-size", "12"},
              {"text-anchor", "middle"},
              {"transform", "rotate(-90 " + svg::num(f.left - 40) + " " + svg::num(0.5 * (f.top + f.bottom)) + ")"}});
}

std::string measure_label(stats::Measure m) {
    return m == stats::Measure::negative ? "Mean score of negative emotions" : "Mean score of neutral";
}

void common_meta(svg::Document& doc, const FigureSpec& spec, std::string_view family) {
    doc.meta("family", std::string(family));
    doc.meta("measure", std::string(stats::to_string(spec.measure)));
    doc.meta("seed", std::to_string(spec.seed));
}

}  // namespace

double silverman_bandwidth(std::span<const double> values) {
    if (values.size() < 2) throw Error("bandwidth needs at least two values");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    const double n = static_cast<double>(v.size());
    double mean = 0;
    for (double x : v) mean += x;
    mean /= n;
    double ss = 0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / (n - 1));
    const double iqr = (quantile7(v, 0.75) - quantile7(v, 0.25)) / 1.34;
    double spread = std::min(sd, iqr);
    if (spread <= 0) spread = std::max(sd, iqr);
    return std::max(kBandwidthFloor, 0.9 * spread * std::pow(n, -0.2));
}

KdeCurve kde(std::span<const double> values, std::optional<double> bandwidth) {
    if (values.size() < 2) throw Error("density estimate needs at least two values");
    KdeCurve c;
    c.bandwidth = bandwidth ? std::max(*bandwidth, kBandwidthFloor) : silverman_bandwidth(values);
    const double h = c.bandwidth;
    const double n = static_cast<double>(values.size());
    double inside = 0;
    for (double v : values) inside += dist::normal_cdf((1.0 - v) / h) - dist::normal_cdf((0.0 - v) / h);
    inside /= n;
    if (!(inside > 0)) throw Error("density has no mass inside [0, 1]");
    const double norm = 1.0 / (n * h * std::sqrt(2 * std::numbers::pi) * inside);
    c.x.resize(kKdePoints);
    c.y.resize(kKdePoints);
    for (int i = 0; i < kKdePoints; ++i) {
        const double x = static_cast<double>(i) / (kKdePoints - 1);
        double s = 0;
        for (double v : values) {
            const double z = (x - v) / h;
            s += std::exp(-0.5 * z * z);
        }
        c.x[i] = x;
        c.y[i] = s * norm;
    }
    return c;
}

std::string raincloud(const std::vector<LabeledValues>& groups, const FigureSpec& spec) {
    if (groups.empty()) throw Error("raincloud needs at least one group");
    for (const auto& g : groups) {
        if (g.values.size() < 2) throw Error("raincloud group '" + g.label + "' has fewer than two values");
    }
    svg::Document doc(spec.width, spec.height);
    common_meta(doc, spec, "raincloud");
    const Frame f{170, spec.width - 30, 40, spec.height - 60};
    if (!spec.title.empty()) doc.text(spec.width / 2, 24, spec.title, {{"font-size", "14"}, {"text-anchor", "middle"}});
    score_axis_x(doc, f, measure_label(spec.measure));

    std::mt19937_64 rng(spec.seed);
    const double lane = (f.bottom - f.top) / static_cast<double>(groups.size());
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        const auto& g = groups[gi];
        const char* color = groups.size() == 4 ? kLaneColor[gi] : kGroupColor[gi % 2];
        const double top = f.top + lane * static_cast<double>(gi);
        const double base = top + lane * 0.55;
        doc.open_group({{"class", "lane"}, {"data-group", g.label}, {"data-n", std::to_string(g.values.size())}});
        doc.text(f.left - 10, base + 4, g.label + " (n=" + std::to_string(g.values.size()) + ")",
                 {{"font-size", "12"}, {"text-anchor", "end"}});

        const KdeCurve k = kde(g.values);
        const double peak = *std::max_element(k.y.begin(), k.y.end());
        std::vector<std::pair<double, double>> poly;
        poly.emplace_back(f.x(0), base);
        for (int i = 0; i < kKdePoints; ++i) poly.emplace_back(f.x(k.x[i]), base - k.y[i] / peak * lane * 0.45);
        poly.emplace_back(f.x(1), base);
        doc.polygon(poly, {{"class", "density"},
                           {"fill", color},
                           {"fill-opacity", "0.45"},
                           {"stroke", color},
                           {"data-bandwidth", svg::num(k.bandwidth, 6)}});

        std::vector<double> sorted = g.values;
        std::sort(sorted.begin(), sorted.end());
        const double q1 = quantile7(sorted, 0.25);
        const double med = quantile7(sorted, 0.5);
        const double q3 = quantile7(sorted, 0.75);
        const double iqr = q3 - q1;
        double lo = q1, hi = q3;
        for (double v : sorted) {
            if (v >= q1 - 1.5 * iqr) {
                lo = std::min(v, q1);
                break;
            }
        }
        for (auto it = sorted.rbegin(); it != sorted.rend(); ++it) {
            if (*it <= q3 + 1.5 * iqr) {
                hi = std::max(*it, q3);
                break;
            }
        }
        const double bh = lane * 0.08;
        doc.open_group({{"class", "box"}, {"stroke", "#222222"}, {"fill", "none"}});
        doc.line(f.x(lo), base + bh, f.x(q1), base + bh, {{"class", "whisker"}});
        doc.line(f.x(q3), base + bh, f.x(hi), base + bh, {{"class", "whisker"}});
        doc.rect(f.x(q1), base, f.x(q3) - f.x(q1), 2 * bh, {{"fill", "#ffffff"}});
        doc.line(f.x(med), base, f.x(med), base + 2 * bh, {{"class", "median"}, {"stroke-width", "2"}});
        doc.close_group();

        const double strip_top = base + 2.5 * bh;
        const double strip_h = lane * 0.25;
        for (double v : g.values) {
            const double y = strip_top + unit(rng) * strip_h;
            doc.circle(f.x(std::clamp(v, 0.0, 1.0)), y, 2.2,
                       {{"class", "point"}, {"fill", color}, {"fill-opacity", "0.7"}, {"data-value", svg::num(v, 6)}});
        }
        doc.close_group();
    }
    if (spec.reference_line) {
        const double r = *spec.reference_line;
        if (r < 0 || r > 1) throw Error("reference line must lie in [0, 1]");
        doc.line(f.x(r), f.top, f.x(r), f.bottom,
                 {{"class", "refline"}, {"stroke", "#555555"}, {"stroke-dasharray", "6,4"}});
    }
    return doc.str();
}

std::string group_scatter(const std::vector<affect::VideoSummary>& rows, const FigureSpec& spec) {
    if (rows.empty()) throw Error("scatter needs at least one video");
    svg::Document doc(spec.width, spec.height);
    common_meta(doc, spec, "scatter");
    doc.meta("videos", std::to_string(rows.size()));
    if (!spec.title.empty()) doc.text(spec.width / 2, 24, spec.title, {{"font-size", "14"}, {"text-anchor", "middle"}});
    std::mt19937_64 rng(spec.seed);
    const double panel_w = (spec.width - 40) / 2;
    const stats::Measure measures[2] = {stats::Measure::negative, stats::Measure::neutral};
    for (int p = 0; p < 2; ++p) {
        const Frame f{40 + p * panel_w + 50, 40 + (p + 1) * panel_w - 20, 50, spec.height - 60};
        doc.open_group({{"class", "panel"}, {"data-measure", std::string(stats::to_string(measures[p]))}});
        doc.text(0.5 * (f.left + f.right), 40,
                 measures[p] == stats::Measure::negative ? "Negative emotions" : "Neutral",
                 {{"font-size", "13"}, {"text-anchor", "middle"}});
        score_axis_y(doc, f, measure_label(measures[p]));
        doc.line(f.left, f.bottom, f.right, f.bottom, {{"class", "axis"}, {"stroke", "#333333"}});
        const double slot = (f.right - f.left) / 2;
        for (int g = 0; g < 2; ++g) {
            const double cx = f.left + slot * (g + 0.5);
            doc.text(cx, f.bottom + 18, g == 0 ? "Pluralist" : "Populist",
                     {{"class", "xtick-label"}, {"font-size", "12"}, {"text-anchor", "middle"}});
        }
        for (const auto& r : rows) {
            const int g = static_cast<int>(stats::binary_group(r));
            const double v = stats::measure_value(r, measures[p]);
            const double cx = f.left + slot * (g + 0.5) + (unit(rng) - 0.5) * slot * 0.6;
            doc.circle(cx, f.y(std::clamp(v, 0.0, 1.0)), 2.5,
                       {{"class", "point"},
                        {"fill", kGroupColor[g]},
                        {"fill-opacity", "0.7"},
                        {"data-video", r.video_id},
                        {"data-value", svg::num(v, 6)}});
        }
        if (spec.reference_line) {
            doc.line(f.left, f.y(*spec.reference_line), f.right, f.y(*spec.reference_line),
                     {{"class", "refline"}, {"stroke", "#555555"}, {"stroke-dasharray", "6,4"}});
        }
        doc.close_group();
    }
    return doc.str();
}

std::string country_panels(const std::vector<stats::CountryGroup>& data, const FigureSpec& spec) {
    if (data.empty()) throw Error("country figure needs at least one country");
    std::vector<std::string> countries;
    for (const auto& d : data) {
        if (std::find(countries.begin(), countries.end(), d.country_iso) == countries.end()) {
            countries.push_back(d.country_iso);
        }
    }
    std::sort(countries.begin(), countries.end());
    svg::Document doc(spec.width, spec.height);
    common_meta(doc, spec, "country");
    doc.meta("countries", std::to_string(countries.size()));
    if (!spec.title.empty()) doc.text(spec.width / 2, 24, spec.title, {{"font-size", "14"}, {"text-anchor", "middle"}});
    const Frame f{80, spec.width - 30, 40, spec.height - 60};
    score_axis_y(doc, f, measure_label(spec.measure));
    doc.line(f.left, f.bottom, f.right, f.bottom, {{"class", "axis"}, {"stroke", "#333333"}});
    const double slot = (f.right - f.left) / static_cast<double>(countries.size());
    for (std::size_t c = 0; c < countries.size(); ++c) {
        const double cx = f.left + slot * (static_cast<double>(c) + 0.5);
        doc.line(cx, f.bottom, cx, f.bottom + 5, {{"stroke", "#333333"}});
        doc.text(cx, f.bottom + 18, countries[c],
                 {{"class", "xtick"}, {"font-size", "11"}, {"text-anchor", "middle"}});
    }
    for (int g = 0; g < 2; ++g) {
        doc.rect(f.right - 120, f.top + 16 * g, 10, 10, {{"fill", kGroupColor[g]}});
        doc.text(f.right - 105, f.top + 9 + 16 * g, g == 0 ? "Pluralist" : "Populist", {{"font-size", "11"}});
    }
    for (const auto& d : data) {
        const auto c = static_cast<std::size_t>(
            std::find(countries.begin(), countries.end(), d.country_iso) - countries.begin());
        const int g = static_cast<int>(d.group);
        const double cx = f.left + slot * (static_cast<double>(c) + 0.5) + (g == 0 ? -0.18 : 0.18) * slot;
        doc.open_group({{"class", "country-group"},
                        {"data-country", d.country_iso},
                        {"data-group", std::string(corpus::to_string(d.group))}});
        for (double v : d.values) {
            doc.circle(cx, f.y(std::clamp(v, 0.0, 1.0)), 2.5,
                       {{"class", "point raw"}, {"fill", kGroupColor[g]}, {"fill-opacity", "0.3"},
                        {"data-value", svg::num(v, 6)}});
        }
        doc.circle(cx, f.y(std::clamp(d.mean, 0.0, 1.0)), 5,
                   {{"class", "point mean"}, {"fill", kGroupColor[g]}, {"stroke", "#000000"},
                    {"data-value", svg::num(d.mean, 6)}});
        doc.close_group();
    }
    if (spec.reference_line) {
        doc.line(f.left, f.y(*spec.reference_line), f.right, f.y(*spec.reference_line),
                 {{"class", "refline"}, {"stroke", "#555555"}, {"stroke-dasharray", "6,4"}});
    }
    return doc.str();
}

std::vector<LabeledValues> category_lanes(const std::vector<affect::VideoSummary>& rows, stats::Measure m) {
    static const char* names[4] = {"Strongly pluralist", "Moderately pluralist", "Moderately populist",
                                   "Strongly populist"};
    const auto groups = stats::by_category(rows, m);
    std::vector<LabeledValues> out;
    for (std::size_t i = 0; i < groups.size(); ++i) {
        if (!groups[i].empty()) out.push_back({names[i], groups[i]});
    }
    return out;
}

std::string figure_name(std::string_view family, std::string_view measure, std::string_view strategy) {
    return "fig_" + std::string(family) + "_" + std::string(measure) + "_" + std::string(strategy) + ".svg";
}

}  // namespace leaderaffect::viz
