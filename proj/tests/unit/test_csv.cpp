#include "leaderaffect/csv.hpp"
#include "leaderaffect/errors.hpp"
#include "leaderaffect/fsutil.hpp"
#include "test_support.hpp"

#include <doctest.h>

using namespace leaderaffect;

TEST_SUITE("csv") {
    TEST_CASE("quoted fields, doubled quotes and CRLF") {
        const auto t = csv::parse("a,b,c\r\n1,\"x, y\",\"say \"\"hi\"\"\"\r\n\r\n2,,z\n");
        REQUIRE(t.header == csv::Row{"a", "b", "c"});
        REQUIRE(t.rows.size() == 2);
        CHECK(t.rows[0] == csv::Row{"1", "x, y", "say \"hi\""});
        CHECK(t.rows[1] == csv::Row{"2", "", "z"});
        CHECK(t.lines == std::vector<std::size_t>{2, 4});
        CHECK(t.column("c") == 2);
        CHECK(t.column("missing") == -1);
    }

    TEST_CASE("quoted field spanning lines") {
        const auto t = csv::parse("a\n\"one\ntwo\"\n");
        REQUIRE(t.rows.size() == 1);
        CHECK(t.rows[0][0] == "one\ntwo");
    }

    TEST_CASE("format_row round-trips through parse") {
        const csv::Row row{"plain", "with,comma", "with \"quote\"", " padded "};
        const auto t = csv::parse("h1,h2,h3,h4\n" + csv::format_row(row));
        REQUIRE(t.rows.size() == 1);
        CHECK(t.rows[0] == row);
    }

    TEST_CASE("trim") {
        CHECK(csv::trim("  a b \t") == "a b");
        CHECK(csv::trim("") == "");
    }

    TEST_CASE("sha256 of known vectors") {
        CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
        CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }

    TEST_CASE("atomic_write replaces content and leaves no temp files") {
        testing::TempDir dir;
        const auto file = dir / "sub/out.txt";
        atomic_write(file, "first");
        atomic_write(file, "second");
        CHECK(read_text(file) == "second");
        CHECK(sha256_file(file) == sha256_hex("second"));
        std::size_t entries = 0;
        for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir / "sub")) ++entries;
        CHECK(entries == 1);
    }

    TEST_CASE("read_text of a missing file names the path") {
        CHECK_THROWS_WITH_AS(read_text("/nonexistent/file.txt"), doctest::Contains("/nonexistent/file.txt"), Error);
    }

    TEST_CASE("number formatting") {
        CHECK(format_fixed(0.5635, 3) == "0.564");
        CHECK(format_fixed(-0.0000001, 3) == "0.000");
        CHECK(format_sig(0.000152345678) == "0.000152346");
        CHECK(format_sig(4.6912345) == "4.69123");
    }

    TEST_CASE("shell quoting and replacement") {
        CHECK(shell_quote("it's") == "'it'\\''s'");
        std::string s = "a {x} b {x}";
        replace_all(s, "{x}", "yy");
        CHECK(s == "a yy b yy");
    }
}
