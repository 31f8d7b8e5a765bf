#include "leaderaffect/errors.hpp"
#include "leaderaffect/viz.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace leaderaffect;
using namespace leaderaffect::viz;

namespace {

std::size_t count(const std::string& s, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + 1)) ++n;
    return n;
}

affect::VideoSummary row(const std::string& id, const std::string& iso, int category, double negative,
                         double neutral) {
    affect::VideoSummary s;
    s.video_id = id;
    s.country_iso = iso;
    s.populism_category = category;
    s.frames = 100;
    s.mean[affect::angry] = negative;
    s.mean[affect::neutral] = neutral;
    s.mean[affect::happy] = 1 - negative - neutral;
    s.mean_negative = negative;
    return s;
}

std::vector<affect::VideoSummary> rows() {
    return {row("a", "AT", 1, 0.30, 0.50), row("b", "AT", 2, 0.35, 0.45), row("c", "HU", 3, 0.55, 0.30),
            row("d", "HU", 4, 0.60, 0.25), row("e", "DE", 1, 0.25, 0.55), row("f", "DE", 2, 0.40, 0.40),
            row("g", "HU", 3, 0.50, 0.35), row("h", "AT", 4, 0.65, 0.20)};
}

}  // namespace

TEST_SUITE("viz") {

TEST_CASE("silverman bandwidth") {
    const std::vector<double> v = {0.1, 0.2, 0.3, 0.4, 0.5};
    // sd = 0.158114, IQR = 0.2 -> min(0.158114, 0.149254) = 0.149254
    CHECK(silverman_bandwidth(v) == doctest::Approx(0.9 * 0.2 / 1.34 * std::pow(5.0, -0.2)).epsilon(1e-9));
    const std::vector<double> flat = {0.4, 0.4, 0.4};
    CHECK(silverman_bandwidth(flat) == doctest::Approx(kBandwidthFloor));
}

TEST_CASE("kde integrates to one over the unit interval") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    std::vector<double> v(200);
    for (auto& x : v) x = u(rng);
    const auto c = kde(v);
    REQUIRE(c.x.size() == static_cast<std::size_t>(kKdePoints));
    CHECK(c.x.front() == 0.0);
    CHECK(c.x.back() == 1.0);
    double area = 0;
    for (std::size_t i = 1; i < c.x.size(); ++i) area += 0.5 * (c.y[i] + c.y[i - 1]) * (c.x[i] - c.x[i - 1]);
    CHECK(area == doctest::Approx(1.0).epsilon(0.01));
    for (double y : c.y) CHECK(y >= 0.0);

    const std::vector<double> edge = {0.0, 0.01, 0.02, 0.99, 1.0};
    const auto e = kde(edge, 0.2);
    area = 0;
    for (std::size_t i = 1; i < e.x.size(); ++i) area += 0.5 * (e.y[i] + e.y[i - 1]) * (e.x[i] - e.x[i - 1]);
    CHECK(area == doctest::Approx(1.0).epsilon(0.01));
    CHECK(e.bandwidth == 0.2);
}

TEST_CASE("kde needs two values") {
    const std::vector<double> one = {0.5};
    CHECK_THROWS_AS(kde(one), Error);
}

TEST_CASE("raincloud has one lane per group and a single reference line") {
    const auto data = rows();
    const auto lanes = category_lanes(data, stats::Measure::negative);
    REQUIRE(lanes.size() == 4);
    FigureSpec spec;
    spec.title = "test";
    const auto svg = raincloud(lanes, spec);
    CHECK(count(svg, "class=\"lane\"") == 4);
    CHECK(count(svg, "class=\"refline\"") == 1);
    CHECK(count(svg, "class=\"density\"") == 4);
    CHECK(count(svg, "class=\"point\"") == data.size());
    CHECK(svg == raincloud(lanes, spec));

    spec.reference_line.reset();
    CHECK(count(raincloud(lanes, spec), "class=\"refline\"") == 0);

    spec.seed = 1;
    spec.reference_line = 0.5;
    CHECK(raincloud(lanes, spec) != svg);
}

TEST_CASE("empty categories are left out of the lanes") {
    auto data = rows();
    std::erase_if(data, [](const auto& r) { return r.populism_category == 2; });
    const auto lanes = category_lanes(data, stats::Measure::neutral);
    CHECK(lanes.size() == 3);
}

TEST_CASE("a lane with fewer than two values names its group") {
    const std::vector<LabeledValues> groups = {{"ok", {0.1, 0.2}}, {"lonely", {0.3}}};
    try {
        raincloud(groups, FigureSpec{});
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("lonely") != std::string::npos);
    }
}

TEST_CASE("scatter draws both measures") {
    const auto data = rows();
    FigureSpec spec;
    const auto svg = group_scatter(data, spec);
    CHECK(count(svg, "class=\"panel\"") == 2);
    CHECK(svg.find("data-measure=\"negative\"") != std::string::npos);
    CHECK(svg.find("data-measure=\"neutral\"") != std::string::npos);
    CHECK(count(svg, "class=\"point\"") == 2 * data.size());
    CHECK(svg == group_scatter(data, spec));
}

TEST_CASE("country panels show raw values and group means") {
    const auto data = rows();
    const auto groups = stats::country_summary(data, stats::Measure::negative);
    FigureSpec spec;
    spec.grouping = Grouping::country;
    const auto svg = country_panels(groups, spec);
    CHECK(count(svg, "class=\"point raw\"") == data.size());
    CHECK(count(svg, "class=\"point mean\"") == groups.size());
    CHECK(svg.find("<entry key=\"countries\" value=\"3\"/>") != std::string::npos);
}

TEST_CASE("figure names") {
    CHECK(figure_name("raincloud", "negative", "uniform300") == "fig_raincloud_negative_uniform300.svg");
    CHECK(figure_name("scatter", "negative-neutral", "stride10") == "fig_scatter_negative-neutral_stride10.svg");
}

}
