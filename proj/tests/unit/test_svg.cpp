#include "leaderaffect/errors.hpp"
#include "leaderaffect/svg.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace leaderaffect;

TEST_SUITE("svg") {

TEST_CASE("numbers are fixed point without trailing zeros") {
    CHECK(svg::num(1.0) == "1");
    CHECK(svg::num(0.5) == "0.5");
    CHECK(svg::num(0.125, 3) == "0.125");
    CHECK(svg::num(2.346) == "2.35");
    CHECK(svg::num(-0.001) == "0");
    CHECK(svg::num(120.0) == "120");
    CHECK(svg::num(-3.25) == "-3.25");
    CHECK_THROWS_AS(svg::num(std::numeric_limits<double>::quiet_NaN()), Error);
    CHECK_THROWS_AS(svg::num(INFINITY), Error);
}

TEST_CASE("markup characters are escaped") {
    CHECK(svg::escape("a<b>&\"c\"") == "a&lt;b&gt;&amp;&quot;c&quot;");
    CHECK(svg::escape("plain") == "plain");
}

TEST_CASE("document output depends only on the calls made") {
    auto build = [] {
        svg::Document doc(100, 50);
        doc.meta("family", "test");
        doc.open_group({{"class", "g"}});
        doc.rect(1, 2, 3, 4, {{"fill", "#fff"}});
        doc.text(5, 6, "AT & HU");
        doc.close_group();
        return doc.str();
    };
    const auto a = build();
    CHECK(a == build());
    CHECK(a.find("<?xml") == 0);
    CHECK(a.find("viewBox=\"0 0 100 50\"") != std::string::npos);
    CHECK(a.find("<entry key=\"family\" value=\"test\"/>") != std::string::npos);
    CHECK(a.find("AT &amp; HU") != std::string::npos);
    CHECK(a.find("<g class=\"g\">") != std::string::npos);
    CHECK(a.rfind("</svg>") != std::string::npos);
}

TEST_CASE("unbalanced groups are rejected") {
    svg::Document doc(10, 10);
    CHECK_THROWS_AS(doc.close_group(), Error);
}

}
