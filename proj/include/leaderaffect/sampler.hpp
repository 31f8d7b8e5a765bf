#pragma once

#include <opencv2/core.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace leaderaffect::sampler {

namespace fs = std::filesystem;

enum class StrategyKind { uniform_n, stride_k };

struct SamplingStrategy {
    StrategyKind kind = StrategyKind::uniform_n;
    std::int64_t n = 300;
    std::int64_t k = 50;

    static SamplingStrategy uniform(std::int64_t n = 300);
    static SamplingStrategy stride(std::int64_t k = 50);
    /// Accepts `uniform<N>` or `stride<K>`, e.g. "uniform300", "stride50".
    static SamplingStrategy parse(std::string_view name);

    /// Canonical name, used for output directories and figure file names.
    std::string name() const;
};

/// floor(i * total / n) for i in 0..n-1, de-duplicated; all frames when total <= n.
std::vector<std::int64_t> uniform_indices(std::int64_t total_frames, std::int64_t n);

/// 0, k, 2k, ... strictly below total_frames.
std::vector<std::int64_t> stride_indices(std::int64_t total_frames, std::int64_t k);

std::vector<std::int64_t> sample_indices(std::int64_t total_frames, const SamplingStrategy& strategy);

struct VideoInfo {
    std::int64_t frame_count = 0;
    double fps = 0.0;
    int width = 0;
    int height = 0;
};

struct FrameSample {
    std::string video_id;
    std::int64_t frame_index = 0;
    double timestamp_s = 0.0;
    cv::Mat image;  ///< CV_8UC3, RGB channel order
};

struct SkippedFrame {
    std::int64_t frame_index = 0;
    std::string reason;
};

/// Frame-provider boundary. `read` must deliver frames in ascending index order:
/// one `on_frame(index, width, height, rgb_bytes)` per decoded frame and one
/// `on_failure(index, reason)` per requested index that could not be decoded.
class FrameProvider {
public:
    using FrameCallback = std::function<void(std::int64_t, int, int, std::span<const std::uint8_t>)>;
    using FailureCallback = std::function<void(std::int64_t, const std::string&)>;

    virtual ~FrameProvider() = default;
    /// Throws MediaError if the container cannot be opened.
    virtual VideoInfo probe(const fs::path& path) = 0;
    virtual void read(const fs::path& path, std::span<const std::int64_t> indices, const FrameCallback& on_frame,
                      const FailureCallback& on_failure) = 0;
};

/// In-process decoding through the FFmpeg backend of OpenCV video I/O.
class OpenCvFrameProvider : public FrameProvider {
public:
    VideoInfo probe(const fs::path& path) override;
    void read(const fs::path& path, std::span<const std::int64_t> indices, const FrameCallback& on_frame,
              const FailureCallback& on_failure) override;
};

/// Decodes through an external process writing raw rgb24 frames to stdout.
///
/// `probe_command` must print `width,height,fps,frame_count` (fps may be a
/// rational `num/den`); `decode_command` must stream every frame of the file.
/// `{path}` is substituted (shell-quoted) in both templates.
class PipeFrameProvider : public FrameProvider {
public:
    PipeFrameProvider(std::string probe_command, std::string decode_command);

    /// Templates for the ffmpeg/ffprobe command-line tools.
    static PipeFrameProvider ffmpeg(const std::string& ffmpeg = "ffmpeg", const std::string& ffprobe = "ffprobe");

    VideoInfo probe(const fs::path& path) override;
    void read(const fs::path& path, std::span<const std::int64_t> indices, const FrameCallback& on_frame,
              const FailureCallback& on_failure) override;

private:
    std::string probe_;
    std::string decode_;
};

struct Extraction {
    VideoInfo info;
    std::vector<FrameSample> samples;
    std::vector<SkippedFrame> skipped;
};

struct StreamResult {
    VideoInfo info;
    std::size_t delivered = 0;
    std::vector<SkippedFrame> skipped;
};

/// Streaming form of extract_frames: each sample is handed to `sink` as soon as
/// it is decoded, in index order, so only one frame is held at a time.
StreamResult stream_frames(const std::string& video_id, const fs::path& video, std::span<const std::int64_t> indices,
                           FrameProvider& provider, const std::function<void(FrameSample&&)>& sink);

/// Decodes the requested frames. Per-frame failures are recorded in `skipped`;
/// an unreadable container throws MediaError, zero decoded frames EmptyVideoError.
Extraction extract_frames(const std::string& video_id, const fs::path& video, std::span<const std::int64_t> indices,
                          FrameProvider& provider);

/// probe + sample_indices + extract_frames.
Extraction extract_frames(const std::string& video_id, const fs::path& video, const SamplingStrategy& strategy,
                          FrameProvider& provider);

}  // namespace leaderaffect::sampler
