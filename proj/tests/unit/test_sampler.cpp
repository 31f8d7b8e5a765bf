#include "leaderaffect/errors.hpp"
#include "leaderaffect/fsutil.hpp"
#include "leaderaffect/sampler.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <numeric>
#include <set>

using namespace leaderaffect;
using namespace leaderaffect::sampler;

namespace {

std::vector<std::int64_t> iota(std::int64_t from, std::int64_t to, std::int64_t step = 1) {
    std::vector<std::int64_t> v;
    for (auto i = from; i < to; i += step) v.push_back(i);
    return v;
}

/// In-memory provider: frame i is filled with i % 256; `corrupt` frames fail.
class StubProvider : public FrameProvider {
public:
    StubProvider(std::int64_t frames, std::set<std::int64_t> corrupt = {}, double fps = 25.0)
        : frames_(frames), corrupt_(std::move(corrupt)), fps_(fps) {}

    VideoInfo probe(const fs::path&) override { return {frames_, fps_, 8, 6}; }

    void read(const fs::path&, std::span<const std::int64_t> indices, const FrameCallback& on_frame,
              const FailureCallback& on_failure) override {
        std::vector<std::uint8_t> buf(8 * 6 * 3);
        for (auto i : indices) {
            if (i >= frames_ || corrupt_.count(i)) {
                on_failure(i, "corrupt frame");
                continue;
            }
            std::fill(buf.begin(), buf.end(), static_cast<std::uint8_t>(i % 256));
            on_frame(i, 8, 6, buf);
        }
    }

private:
    std::int64_t frames_;
    std::set<std::int64_t> corrupt_;
    double fps_;
};

PipeFrameProvider fake_pipe() {
    const std::string bin = shell_quote(LA_FAKE_DECODER);
    return PipeFrameProvider(bin + " probe {path}", bin + " decode {path}");
}

}  // namespace

TEST_SUITE("sampler") {
    TEST_CASE("uniform indices") {
        CHECK(uniform_indices(300, 300) == iota(0, 300));
        CHECK(uniform_indices(600, 300) == iota(0, 600, 2));
        CHECK(uniform_indices(150, 300) == iota(0, 150));
        CHECK(uniform_indices(1000, 3) == std::vector<std::int64_t>{0, 333, 666});
        CHECK(uniform_indices(0, 300).empty());
    }

    TEST_CASE("stride indices") {
        const auto s = stride_indices(500, 50);
        CHECK(s.size() == 10);
        CHECK(s.front() == 0);
        CHECK(s.back() == 450);
        CHECK(stride_indices(49, 50) == std::vector<std::int64_t>{0});
        CHECK(stride_indices(50, 50) == std::vector<std::int64_t>{0});
        CHECK(stride_indices(51, 50) == std::vector<std::int64_t>{0, 50});
    }

    TEST_CASE("stride spacing at 30 fps is 1.67 s") {
        const auto s = stride_indices(3000, 50);
        CHECK((s[1] - s[0]) / 30.0 == doctest::Approx(1.6667).epsilon(1e-4));
    }

    TEST_CASE("strategy parsing and names") {
        CHECK(SamplingStrategy::parse("uniform300").kind == StrategyKind::uniform_n);
        CHECK(SamplingStrategy::parse("uniform300").n == 300);
        CHECK(SamplingStrategy::parse("stride50").k == 50);
        CHECK(SamplingStrategy::parse("stride7").name() == "stride7");
        CHECK(SamplingStrategy::uniform().name() == "uniform300");
        CHECK(SamplingStrategy::stride().name() == "stride50");
        for (const char* bad : {"uniform", "stride0", "uniform-3", "every50", "uniform30x", ""}) {
            CHECK_THROWS_AS(SamplingStrategy::parse(bad), ConfigError);
        }
        CHECK_THROWS_AS(SamplingStrategy::uniform(0), ConfigError);
        CHECK_THROWS_AS(SamplingStrategy::stride(0), ConfigError);
    }

    TEST_CASE("extract on a healthy source yields every requested frame in order") {
        StubProvider p(100);
        const std::vector<std::int64_t> idx = {0, 10, 20, 30, 40, 50, 60, 70, 80, 90};
        const auto ex = extract_frames("vid", "unused", idx, p);
        REQUIRE(ex.samples.size() == 10);
        CHECK(ex.skipped.empty());
        for (std::size_t i = 0; i < idx.size(); ++i) {
            CHECK(ex.samples[i].frame_index == idx[i]);
            CHECK(ex.samples[i].video_id == "vid");
            CHECK(ex.samples[i].timestamp_s == doctest::Approx(idx[i] / 25.0));
            CHECK(ex.samples[i].image.at<cv::Vec3b>(0, 0)[0] == idx[i]);
        }
    }

    TEST_CASE("one corrupt frame is skipped and recorded") {
        StubProvider p(100, {30});
        const std::vector<std::int64_t> idx = {0, 10, 20, 30, 40, 50, 60, 70, 80, 90};
        const auto ex = extract_frames("vid", "unused", idx, p);
        CHECK(ex.samples.size() == 9);
        REQUIRE(ex.skipped.size() == 1);
        CHECK(ex.skipped[0].frame_index == 30);
        CHECK(ex.skipped[0].reason == "corrupt frame");
    }

    TEST_CASE("zero decodable frames is an empty-video error") {
        StubProvider p(10, {0, 1, 2});
        const std::vector<std::int64_t> idx = {0, 1, 2};
        CHECK_THROWS_AS(extract_frames("vid", "unused", idx, p), EmptyVideoError);
    }

    TEST_CASE("indices must be strictly increasing") {
        StubProvider p(10);
        const std::vector<std::int64_t> idx = {3, 1};
        CHECK_THROWS_AS(extract_frames("vid", "unused", idx, p), Error);
        const std::vector<std::int64_t> dup = {1, 1};
        CHECK_THROWS_AS(extract_frames("vid", "unused", dup, p), Error);
    }

    TEST_CASE("strategy overload samples the probed frame count") {
        StubProvider p(600);
        const auto ex = extract_frames("vid", "unused", SamplingStrategy::uniform(300), p);
        CHECK(ex.samples.size() == 300);
        CHECK(ex.samples[1].frame_index == 2);
        StubProvider empty(0);
        CHECK_THROWS_AS(extract_frames("vid", "unused", SamplingStrategy::stride(50), empty), EmptyVideoError);
    }

    TEST_CASE("streaming delivers the same frames as extraction") {
        StubProvider p(100, {20});
        const std::vector<std::int64_t> idx = {0, 10, 20, 30};
        std::vector<std::int64_t> seen;
        const auto res = stream_frames("vid", "unused", idx, p, [&](FrameSample&& s) { seen.push_back(s.frame_index); });
        CHECK(seen == std::vector<std::int64_t>{0, 10, 30});
        CHECK(res.delivered == 3);
        CHECK(res.skipped.size() == 1);
    }

    TEST_CASE("pipe provider through an external decoder") {
        testing::TempDir dir;
        atomic_write(dir / "clip.fake", "4 3 30000/1001 20\n");
        auto p = fake_pipe();
        const auto info = p.probe(dir / "clip.fake");
        CHECK(info.width == 4);
        CHECK(info.height == 3);
        CHECK(info.frame_count == 20);
        CHECK(info.fps == doctest::Approx(29.97).epsilon(1e-3));

        const std::vector<std::int64_t> idx = {0, 7, 19};
        const auto ex = extract_frames("vid", dir / "clip.fake", idx, p);
        REQUIRE(ex.samples.size() == 3);
        CHECK(ex.samples[1].image.at<cv::Vec3b>(2, 3)[2] == 7);
        CHECK(ex.samples[2].timestamp_s == doctest::Approx(19 / (30000.0 / 1001)));
    }

    TEST_CASE("pipe provider: a truncated stream records the missing frames") {
        testing::TempDir dir;
        atomic_write(dir / "clip.fake", "4 3 25 20 12\n");
        auto p = fake_pipe();
        const std::vector<std::int64_t> idx = {0, 5, 10, 15};
        const auto ex = extract_frames("vid", dir / "clip.fake", idx, p);
        CHECK(ex.samples.size() == 3);
        REQUIRE(ex.skipped.size() == 1);
        CHECK(ex.skipped[0].frame_index == 15);
    }

    TEST_CASE("pipe provider: failing probe and missing file are media errors") {
        testing::TempDir dir;
        atomic_write(dir / "garbage.fake", "not a header");
        auto p = fake_pipe();
        CHECK_THROWS_AS(p.probe(dir / "garbage.fake"), MediaError);
        CHECK_THROWS_AS(p.probe(dir / "missing.fake"), MediaError);
    }

    TEST_CASE("opencv provider on the bundled clip") {
        OpenCvFrameProvider p;
        const auto clip = testing::fixture("clips/one_face.avi");
        const auto info = p.probe(clip);
        CHECK(info.frame_count == 96);
        CHECK(info.fps == doctest::Approx(8.0));
        CHECK(info.width == 320);
        CHECK(info.height == 240);
        const std::vector<std::int64_t> idx = {0, 50, 95, 120};
        const auto ex = extract_frames("one", clip, idx, p);
        REQUIRE(ex.samples.size() == 3);
        CHECK(ex.samples[2].frame_index == 95);
        CHECK(ex.samples[2].timestamp_s == doctest::Approx(95 / 8.0));
        CHECK(ex.samples[0].image.type() == CV_8UC3);
        REQUIRE(ex.skipped.size() == 1);
        CHECK(ex.skipped[0].frame_index == 120);
    }

    TEST_CASE("opencv provider rejects non-video files") {
        testing::TempDir dir;
        atomic_write(dir / "bogus.avi", "definitely not a video container");
        OpenCvFrameProvider p;
        CHECK_THROWS_AS(p.probe(dir / "bogus.avi"), MediaError);
        CHECK_THROWS_AS(p.probe(dir / "missing.avi"), MediaError);
    }
}
