#include "leaderaffect/errors.hpp"
#include "leaderaffect/fsutil.hpp"
#include "leaderaffect/pipeline.hpp"
#include "workspace.hpp"

#include <doctest.h>

#include <map>

using namespace leaderaffect;
using namespace leaderaffect::pipeline;

namespace {

std::map<std::string, std::string> snapshot(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (!e.is_regular_file() || e.path().filename() == "run_report.json") continue;
        files[fs::relative(e.path(), root).string()] = read_text(e.path());
    }
    return files;
}

const VideoRecord& record(const RunReport& r, const std::string& id) {
    for (const auto& v : r.videos) {
        if (v.video_id == id) return v;
    }
    throw std::runtime_error("no record for " + id);
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("every manifest video is accounted for") {
    testing::Workspace ws({testing::kOneFace, testing::kTwoFace, {"v_missing", "file:clips/nope.avi", "Party C", "DE", 2},
                           {"v_corrupt", "file:clips/corrupt.avi", "Party D", "PL", 3}},
                          "stride8");
    atomic_write(ws / "clips/corrupt.avi", std::string(4096, '\x42'));
    const auto cfg = ws.config();
    const auto report = run_pipeline(cfg);

    CHECK(report.videos.size() == 4);
    CHECK(report.total() == 4);
    CHECK(record(report, "v_one").outcome == Outcome::processed);
    CHECK(record(report, "v_two").outcome == Outcome::review_pending);
    CHECK(record(report, "v_missing").outcome == Outcome::failed);
    CHECK(record(report, "v_corrupt").outcome == Outcome::failed);
    CHECK_FALSE(record(report, "v_missing").detail.empty());
    CHECK(report.processed == 1);
    CHECK(report.failed == 2);
    CHECK(report.review_pending == 1);

    const auto layout = layout_for(cfg.output_dir, "stride8");
    const auto rr = nlohmann::json::parse(read_text(layout.run_report()));
    CHECK(rr["videos"].size() == 4);

    const auto summary = affect::read_summary_csv(layout.summary());
    REQUIRE(summary.size() == 1);
    CHECK(summary[0].video_id == "v_one");
    CHECK(summary[0].frames == 12);

    const auto series = affect::read_series_csv(layout.series("v_one"), "v_one");
    CHECK(series.points.size() == 12);
    CHECK(fs::exists(layout.review("v_two") / identity::kBundleFile));
    CHECK_FALSE(fs::exists(layout.series("v_two")));
    CHECK(fs::exists(ws / "out/stride8/config.json"));
}

TEST_CASE("a second run reuses observations and leaves outputs untouched") {
    testing::Workspace ws({testing::kOneFace, testing::kTwoFace}, "stride8");
    const auto cfg = ws.config();
    const auto first = run_pipeline(cfg);
    CHECK(first.recomputed == 2);
    const auto root = layout_for(cfg.output_dir, "stride8").root;
    const auto before = snapshot(root);

    const auto second = run_pipeline(cfg);
    CHECK(second.recomputed == 0);
    CHECK(second.processed == first.processed);
    CHECK(snapshot(root) == before);

    RunOptions force;
    force.force = true;
    const auto third = run_pipeline(cfg, force);
    CHECK(third.recomputed == 2);
    CHECK(snapshot(root) == before);
}

TEST_CASE("parallel and serial runs agree") {
    testing::Workspace ws({testing::kOneFace, testing::kTwoFace}, "stride8");
    auto cfg = ws.config();
    RunOptions serial;
    serial.jobs = 1;
    run_pipeline(cfg, serial);
    const auto root = layout_for(cfg.output_dir, "stride8").root;
    const auto a = snapshot(root);
    fs::remove_all(root);
    RunOptions parallel;
    parallel.jobs = 2;
    run_pipeline(cfg, parallel);
    const auto b = snapshot(root);
    CHECK(a.size() == b.size());
    for (const auto& [name, content] : a) {
        if (name == "config.json") continue;
        CHECK_MESSAGE(b.at(name) == content, name);
    }
}

TEST_CASE("review decisions flow back into the run") {
    testing::Workspace ws({testing::kOneFace, testing::kTwoFace}, "stride8");
    const auto cfg = ws.config();
    run_pipeline(cfg);
    const auto layout = layout_for(cfg.output_dir, "stride8");

    SUBCASE("selecting a track includes the video") {
        identity::write_verification(layout.verification("v_two"), {"v_two", identity::Action::select, 2, "t", "x"});
        const auto r = run_pipeline(cfg);
        CHECK(record(r, "v_two").outcome == Outcome::processed);
        CHECK(r.recomputed == 0);
        const auto summary = affect::read_summary_csv(layout.summary());
        CHECK(summary.size() == 2);
        const auto res = nlohmann::json::parse(read_text(layout.resolution("v_two")));
        CHECK(res["status"] == "confirmed");
        CHECK(res["method"] == "manual");
        CHECK(res["selected_track"] == 2);
    }
    SUBCASE("discarding excludes it") {
        identity::write_verification(layout.verification("v_two"), {"v_two", identity::Action::discard, {}, "t", "x"});
        const auto r = run_pipeline(cfg);
        CHECK(record(r, "v_two").outcome == Outcome::discarded);
        CHECK(r.discarded == 1);
        CHECK(affect::read_summary_csv(layout.summary()).size() == 1);
        CHECK_FALSE(fs::exists(layout.series("v_two")));
    }
    SUBCASE("a verification naming an unknown track fails the video") {
        identity::write_verification(layout.verification("v_two"), {"v_two", identity::Action::select, 9, "t", "x"});
        const auto r = run_pipeline(cfg);
        CHECK(record(r, "v_two").outcome == Outcome::failed);
    }
}

TEST_CASE("verifications carry over to other strategies unless disabled") {
    testing::Workspace ws({testing::kTwoFace}, "stride8");
    auto cfg = ws.config();
    run_pipeline(cfg);
    identity::write_verification(layout_for(cfg.output_dir, "stride8").verification("v_two"),
                                 {"v_two", identity::Action::select, 2, "t", "x"});

    cfg.strategy = sampler::SamplingStrategy::parse("stride12");
    const auto carried = run_pipeline(cfg);
    CHECK(record(carried, "v_two").outcome == Outcome::processed);

    cfg.strategy = sampler::SamplingStrategy::parse("stride6");
    RunOptions fresh;
    fresh.fresh_review = true;
    const auto r = run_pipeline(cfg, fresh);
    CHECK(record(r, "v_two").outcome == Outcome::review_pending);
}

TEST_CASE("model problems are configuration errors") {
    testing::Workspace ws({testing::kOneFace}, "stride8");
    auto cfg = ws.config();
    cfg.emotion.path = ws / "missing.onnx";
    CHECK_THROWS_AS(run_pipeline(cfg), ConfigError);
}

TEST_CASE("ingest fetches media and reports the join") {
    testing::Workspace ws({testing::kOneFace, testing::kTwoFace, {"v_missing", "file:clips/nope.avi", "Party C", "DE", 2}});
    const auto cfg = ws.config();
    const auto r = ingest(cfg);
    CHECK(r.manifest_rows == 3);
    CHECK(r.pluralist == 2);
    CHECK(r.populist == 1);
    CHECK(r.fetched == 2);
    CHECK(r.permanent_failures + r.retriable_failures == 1);
    CHECK(fs::exists(registry_path(cfg.output_dir)));
}

TEST_CASE("a manifest that does not join the labels is rejected") {
    testing::Workspace ws({testing::kOneFace});
    atomic_write(ws / "labels.csv", "party,country_iso,populism_category,populism_scale\nOther,AT,1,0.1\n");
    CHECK_THROWS_AS(run_pipeline(ws.config()), JoinError);
}

}
