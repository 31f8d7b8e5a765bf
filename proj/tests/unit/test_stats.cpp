#include "leaderaffect/errors.hpp"
#include "leaderaffect/stats.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace leaderaffect;
using namespace leaderaffect::stats;

namespace {

// Reference values computed with scipy.stats.
const std::vector<double> kA = {0.61, 0.72, 0.55, 0.68, 0.80, 0.59};
const std::vector<double> kB = {0.41, 0.52, 0.47, 0.38, 0.60};
const std::vector<std::vector<double>> kGroups = {
    {0.2, 0.3, 0.25, 0.35}, {0.4, 0.45, 0.5}, {0.6, 0.55, 0.7, 0.65, 0.62}};

affect::VideoSummary row(const std::string& id, const std::string& iso, int category, double negative,
                         double neutral, double neg_dom = 0.5) {
    affect::VideoSummary s;
    s.video_id = id;
    s.country_iso = iso;
    s.populism_category = category;
    s.frames = 100;
    s.mean[affect::angry] = negative;
    s.mean[affect::neutral] = neutral;
    s.mean[affect::happy] = 1 - negative - neutral;
    s.mean_negative = negative;
    s.neg_dominant_frac = neg_dom;
    s.dominance[affect::angry] = neg_dom;
    s.dominance[affect::neutral] = 1 - neg_dom;
    return s;
}

}  // namespace

TEST_SUITE("stats") {
    TEST_CASE("describe") {
        const std::vector<double> v = {3, 1, 4, 1, 5};
        const auto d = describe(v);
        CHECK(d.n == 5);
        CHECK(d.mean == doctest::Approx(2.8));
        REQUIRE(d.sd);
        CHECK(*d.sd == doctest::Approx(std::sqrt(3.2)));
        CHECK(d.min == 1);
        CHECK(d.median == 3);
        CHECK(d.max == 5);
        const std::vector<double> even = {4, 1, 3, 2};
        CHECK(describe(even).median == 2.5);
        const std::vector<double> one = {0.4};
        CHECK_FALSE(describe(one).sd);
        CHECK_THROWS_AS(describe(std::vector<double>{}), StatsError);
    }

    TEST_CASE("t-based confidence interval") {
        const auto ci = mean_ci(kA);
        CHECK(ci.lo == doctest::Approx(0.5609184184160261).epsilon(1e-10));
        CHECK(ci.hi == doctest::Approx(0.7557482482506406).epsilon(1e-10));
        CHECK(ci.lo <= ci.mean);
        CHECK(ci.mean <= ci.hi);
        CHECK_THROWS_AS(mean_ci(std::vector<double>{1.0}), StatsError);
    }

    TEST_CASE("pooled and Welch t-tests") {
        const auto pooled = two_group_t(kA, kB, TTestVariant::pooled);
        CHECK(pooled.t == doctest::Approx(3.3206719224973833).epsilon(1e-10));
        CHECK(pooled.df == 9.0);
        CHECK(pooled.p == doctest::Approx(0.008930753846403421).epsilon(1e-8));
        const auto welch = two_group_t(kA, kB, TTestVariant::welch);
        CHECK(welch.t == doctest::Approx(3.338905758645218).epsilon(1e-10));
        CHECK(welch.df == doctest::Approx(8.804832478831017).epsilon(1e-10));
        CHECK(welch.p == doctest::Approx(0.008945433104297847).epsilon(1e-8));
        CHECK(pooled.mean_a == doctest::Approx(0.658333333));
        CHECK(pooled.ci_a.lo == doctest::Approx(0.5609184184160261));
    }

    TEST_CASE("t-test errors") {
        const std::vector<double> one = {1.0};
        CHECK_THROWS_AS(two_group_t(one, kB, TTestVariant::pooled), StatsError);
        const std::vector<double> flat = {0.5, 0.5, 0.5};
        CHECK_THROWS_AS(two_group_t(flat, flat, TTestVariant::welch), StatsError);
        CHECK(parse_variant("welch") == TTestVariant::welch);
        CHECK(parse_variant("pooled") == TTestVariant::pooled);
        CHECK_THROWS_AS(parse_variant("student"), ConfigError);
    }

    TEST_CASE("one-way ANOVA") {
        const auto a = anova_oneway(kGroups);
        CHECK(a.F == doctest::Approx(40.693620919387).epsilon(1e-10));
        CHECK(a.p == doctest::Approx(3.1017671267603336e-05).epsilon(1e-8));
        CHECK(a.df_between == 2);
        CHECK(a.df_within == 9);

        double grand = 0, n = 0;
        for (const auto& g : kGroups) {
            for (double x : g) grand += x, n += 1;
        }
        grand /= n;
        double ss_total = 0;
        for (const auto& g : kGroups) {
            for (double x : g) ss_total += (x - grand) * (x - grand);
        }
        CHECK(a.ss_between + a.ss_within == doctest::Approx(ss_total));
        CHECK(a.eta_squared == doctest::Approx(a.ss_between / ss_total));
        CHECK_THROWS_AS(anova_oneway({{1, 2, 3}}), StatsError);
        CHECK_THROWS_AS(anova_oneway({{1, 2, 3}, {4}}), StatsError);
    }

    TEST_CASE("Tukey-Kramer") {
        const auto pairs = tukey_hsd(kGroups);
        REQUIRE(pairs.size() == 3);
        const double diff[3] = {0.175, 0.349, 0.174};
        const double p[3] = {8.25138842e-03, 2.26079559e-05, 6.53815622e-03};
        for (std::size_t i = 0; i < 3; ++i) {
            CAPTURE(i);
            CHECK(pairs[i].mean_diff == doctest::Approx(diff[i]));
            CHECK(pairs[i].p_adjusted == doctest::Approx(p[i]).epsilon(1e-6));
        }
        CHECK(pairs[0].group_i == 0);
        CHECK(pairs[0].group_j == 1);
        CHECK(pairs[2].group_i == 1);
        CHECK(pairs[2].group_j == 2);
    }

    TEST_CASE("summary tables") {
        const std::vector<affect::VideoSummary> rows = {
            row("a", "AT", 1, 0.3, 0.5, 0.2), row("b", "AT", 2, 0.4, 0.4, 0.4), row("c", "HU", 4, 0.7, 0.2, 0.8),
            row("d", "AT", 3, 0.6, 0.3, 0.6), row("e", "HU", 4, 0.8, 0.1, 1.0)};

        const auto bin = by_binary_group(rows, Measure::negative);
        CHECK(bin[0] == std::vector<double>{0.3, 0.4});
        CHECK(bin[1] == std::vector<double>{0.7, 0.6, 0.8});
        const auto cat = by_category(rows, Measure::neutral);
        CHECK(cat[0] == std::vector<double>{0.5});
        CHECK(cat[1] == std::vector<double>{0.4});
        CHECK(cat[2] == std::vector<double>{0.3});
        CHECK(cat[3] == std::vector<double>{0.2, 0.1});

        const auto desc = descriptive_table(rows);
        REQUIRE(desc.size() == 8);
        CHECK(desc[0].label == "angry");
        CHECK(desc[7].label == "negative");
        CHECK(desc[7].stats.mean == doctest::Approx(0.56));

        const auto dom = dominance_table(rows);
        CHECK(dom[0].videos == 2);
        CHECK(dom[0].negative_dominant == doctest::Approx(0.3));
        CHECK(dom[1].negative_dominant == doctest::Approx(0.8));
        CHECK(dom[1].dominance[affect::neutral] == doctest::Approx(0.2));

        const auto countries = country_summary(rows, Measure::negative);
        REQUIRE(countries.size() == 3);
        CHECK(countries[0].country_iso == "AT");
        CHECK(countries[0].group == corpus::BinaryGroup::pluralist);
        CHECK(countries[0].mean == doctest::Approx(0.35));
        CHECK(countries[1].country_iso == "AT");
        CHECK(countries[1].group == corpus::BinaryGroup::populist);
        CHECK(countries[2].video_ids == std::vector<std::string>{"c", "e"});

        CHECK_THROWS_AS(dominance_table({row("a", "AT", 1, 0.3, 0.5)}), StatsError);
    }
}
