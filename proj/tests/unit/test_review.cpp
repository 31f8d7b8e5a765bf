#include "leaderaffect/errors.hpp"
#include "leaderaffect/fsutil.hpp"
#include "leaderaffect/identity.hpp"
#include "leaderaffect/review_server.hpp"
#include "test_support.hpp"

#include <doctest.h>
#include <httplib.h>
#include <json.hpp>

using namespace leaderaffect;
using namespace leaderaffect::review;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string kPng = "\x89PNG\r\n\x1a\nfake";

/// review/<id>/bundle.json with two tracks, plus a sibling resolutions/ file.
void make_bundle(const fs::path& review_dir, const std::string& id, const std::string& status = "needs_review") {
    json tracks = json::array();
    for (int t : {1, 2}) {
        json crops = json::array();
        for (int i = 0; i < 2; ++i) {
            const auto file = "track_" + std::to_string(t) + "_" + std::to_string(i) + ".png";
            crops.push_back({{"file", file}, {"frame", i * 8}});
            atomic_write(review_dir / id / file, kPng);
        }
        tracks.push_back({{"track_id", t}, {"coverage", t == 1 ? 0.66 : 0.33}, {"crops", crops}});
    }
    atomic_write(review_dir / id / identity::kBundleFile,
                 json{{"metadata", {{"leader", "L"}, {"country_iso", "AT"}}}, {"tracks", tracks}}.dump());
    atomic_write(review_dir.parent_path() / "resolutions" / (id + ".json"),
                 json{{"video_id", id}, {"status", status}, {"method", nullptr}, {"selected_track", nullptr}}.dump());
}

json body(const ApiResponse& r) { return json::parse(r.body); }

}  // namespace

TEST_SUITE("review") {

TEST_CASE("listing shows only videos awaiting a decision") {
    testing::TempDir dir("rv");
    const auto review = dir / "review";
    make_bundle(review, "v1");
    make_bundle(review, "v2");
    make_bundle(review, "v3", "confirmed");
    ReviewApi api(review);

    auto list = body(api.list());
    REQUIRE(list.size() == 2);
    CHECK(list[0]["video_id"] == "v1");
    CHECK(list[0]["track_count"] == 2);
    CHECK(list[1]["video_id"] == "v2");

    CHECK(api.verify("v1", R"({"action":"select","track_id":2})").status == 200);
    list = body(api.list());
    REQUIRE(list.size() == 1);
    CHECK(list[0]["video_id"] == "v2");
}

TEST_CASE("video detail carries crop urls and status") {
    testing::TempDir dir("rv");
    make_bundle(dir / "review", "v1");
    ReviewApi api(dir / "review");
    auto v = body(api.video("v1"));
    CHECK(v["status"] == "needs_review");
    CHECK(v["verification"].is_null());
    CHECK(v["tracks"][1]["crops"][0]["url"] == "/api/videos/v1/crops/track_2_0.png");

    api.verify("v1", R"({"action":"discard"})");
    v = body(api.video("v1"));
    CHECK(v["status"] == "verified");
    CHECK(v["verification"]["action"] == "discard");

    CHECK(api.video("nope").status == 404);
    CHECK(api.video("../x").status == 404);
}

TEST_CASE("crops are served by name only") {
    testing::TempDir dir("rv");
    make_bundle(dir / "review", "v1");
    atomic_write(dir / "secret.png", "x");
    ReviewApi api(dir / "review");
    const auto r = api.crop("v1", "track_1_0.png");
    CHECK(r.status == 200);
    CHECK(r.content_type == "image/png");
    CHECK(r.body == kPng);
    CHECK(api.crop("v1", "track_1_9.png").status == 404);
    CHECK(api.crop("v1", "../../secret.png").status == 404);
    CHECK(api.crop("v1", "bundle.json").status == 404);
    CHECK(api.crop("..", "track_1_0.png").status == 404);
}

TEST_CASE("verification input is validated") {
    testing::TempDir dir("rv");
    make_bundle(dir / "review", "v1");
    ReviewApi api(dir / "review");
    const auto file = dir / "review/v1" / identity::kVerificationFile;

    CHECK(api.verify("v1", "{broken").status == 400);
    CHECK(api.verify("v1", "[1,2]").status == 400);
    CHECK(api.verify("v1", R"({"action":"select"})").status == 400);
    CHECK(api.verify("v1", R"({"action":"promote","track_id":1})").status == 400);
    CHECK(api.verify("v1", R"({"action":"discard","track_id":1})").status == 400);
    CHECK(api.verify("v1", R"({"video_id":"v2","action":"select","track_id":1})").status == 400);
    CHECK(api.verify("v1", R"({"action":"select","track_id":7})").status == 422);
    CHECK(api.verify("v9", R"({"action":"select","track_id":1})").status == 404);
    CHECK_FALSE(fs::exists(file));

    auto r = api.verify("v1", R"({"action":"select","track_id":2,"annotator":"ab"})");
    CHECK(r.status == 200);
    CHECK(body(r)["unchanged"] == false);
    const auto rec = identity::read_verification(file);
    REQUIRE(rec);
    CHECK(rec->track_id == 2);
    CHECK(rec->annotator == "ab");
    CHECK_FALSE(rec->timestamp.empty());

    const auto before = read_text(file);
    r = api.verify("v1", R"({"action":"select","track_id":2})");
    CHECK(r.status == 200);
    CHECK(body(r)["unchanged"] == true);
    CHECK(read_text(file) == before);

    r = api.verify("v1", R"({"action":"select","track_id":1})");
    CHECK(body(r)["unchanged"] == false);
    CHECK(identity::read_verification(file)->track_id == 1);
}

TEST_CASE("http server round trip") {
    testing::TempDir dir("rv");
    make_bundle(dir / "review", "v1");
    fs::create_directories(dir / "static");
    atomic_write(dir / "static/index.html", "<html>ui</html>");
    ReviewServer server(dir / "review", 0, "127.0.0.1", dir / "static");
    REQUIRE(server.port() > 0);
    server.start();

    httplib::Client cli("127.0.0.1", server.port());
    auto res = cli.Get("/api/videos");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(json::parse(res->body).size() == 1);

    res = cli.Get("/api/videos/v1/crops/track_1_1.png");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(res->get_header_value("Content-Type") == "image/png");

    res = cli.Get("/api/videos/v1/crops/..%2F..%2Fsecret.png");
    REQUIRE(res);
    CHECK(res->status == 404);

    res = cli.Post("/api/videos/v1/verify", R"({"action":"select","track_id":5})", "application/json");
    REQUIRE(res);
    CHECK(res->status == 422);

    res = cli.Post("/api/videos/v1/verify", R"({"action":"select","track_id":2})", "application/json");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(identity::read_verification(dir / "review/v1" / identity::kVerificationFile)->track_id == 2);

    res = cli.Get("/index.html");
    REQUIRE(res);
    CHECK(res->body == "<html>ui</html>");

    server.stop();
}

TEST_CASE("a busy port is a startup error") {
    testing::TempDir dir("rv");
    ReviewServer first(dir.path(), 0);
    CHECK_THROWS_AS(ReviewServer(dir.path(), first.port()), Error);
}

}
