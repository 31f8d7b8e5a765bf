#include "leaderaffect/sampler.hpp"

#include "leaderaffect/errors.hpp"
#include "leaderaffect/fsutil.hpp"

#include <opencv2/imgproc.hpp>
#include <opencv2/videoio.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sys/wait.h>

namespace leaderaffect::sampler {

SamplingStrategy SamplingStrategy::uniform(std::int64_t n) {
    if (n < 1) throw ConfigError("uniform sampling needs n >= 1");
    return {StrategyKind::uniform_n, n, 50};
}

SamplingStrategy SamplingStrategy::stride(std::int64_t k) {
    if (k < 1) throw ConfigError("stride sampling needs k >= 1");
    return {StrategyKind::stride_k, 300, k};
}

namespace {

std::int64_t parse_positive(std::string_view digits, std::string_view whole) {
    std::int64_t v = 0;
    const auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
    if (digits.empty() || ec != std::errc{} || end != digits.data() + digits.size() || v < 1) {
        throw ConfigError("unknown sampling strategy '" + std::string(whole) + "' (expected uniform<N> or stride<K>)");
    }
    return v;
}

}  // namespace

SamplingStrategy SamplingStrategy::parse(std::string_view name) {
    if (name.starts_with("uniform")) return uniform(parse_positive(name.substr(7), name));
    if (name.starts_with("stride")) return stride(parse_positive(name.substr(6), name));
    throw ConfigError("unknown sampling strategy '" + std::string(name) + "' (expected uniform<N> or stride<K>)");
}

std::string SamplingStrategy::name() const {
    return kind == StrategyKind::uniform_n ? "uniform" + std::to_string(n) : "stride" + std::to_string(k);
}

std::vector<std::int64_t> uniform_indices(std::int64_t total_frames, std::int64_t n) {
    std::vector<std::int64_t> out;
    if (total_frames <= 0 || n <= 0) return out;
    if (total_frames <= n) {
        out.resize(static_cast<std::size_t>(total_frames));
        for (std::int64_t i = 0; i < total_frames; ++i) out[static_cast<std::size_t>(i)] = i;
        return out;
    }
    out.reserve(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        // i * T fits comfortably in 64 bits for any real video length.
        const std::int64_t idx = i * total_frames / n;
        if (out.empty() || out.back() != idx) out.push_back(idx);
    }
    return out;
}

std::vector<std::int64_t> stride_indices(std::int64_t total_frames, std::int64_t k) {
    std::vector<std::int64_t> out;
    if (total_frames <= 0 || k <= 0) return out;
    out.reserve(static_cast<std::size_t>((total_frames + k - 1) / k));
    for (std::int64_t i = 0; i < total_frames; i += k) out.push_back(i);
    return out;
}

std::vector<std::int64_t> sample_indices(std::int64_t total_frames, const SamplingStrategy& strategy) {
    return strategy.kind == StrategyKind::uniform_n ? uniform_indices(total_frames, strategy.n)
                                                    : stride_indices(total_frames, strategy.k);
}

// ---------------------------------------------------------------------------
// OpenCV provider

namespace {

cv::VideoCapture open_capture(const fs::path& path) {
    if (!fs::exists(path)) throw MediaError("video file not found: " + path.string());
    cv::VideoCapture cap(path.string(), cv::CAP_FFMPEG);
    if (!cap.isOpened()) throw MediaError("cannot open container: " + path.string());
    return cap;
}

}  // namespace

VideoInfo OpenCvFrameProvider::probe(const fs::path& path) {
    cv::VideoCapture cap = open_capture(path);
    VideoInfo info;
    info.fps = cap.get(cv::CAP_PROP_FPS);
    info.width = static_cast<int>(cap.get(cv::CAP_PROP_FRAME_WIDTH));
    info.height = static_cast<int>(cap.get(cv::CAP_PROP_FRAME_HEIGHT));
    info.frame_count = static_cast<std::int64_t>(std::llround(cap.get(cv::CAP_PROP_FRAME_COUNT)));
    if (info.frame_count <= 0) {
        // Some containers carry no frame count in their header: count by demuxing.
        info.frame_count = 0;
        while (cap.grab()) ++info.frame_count;
    }
    if (info.width <= 0 || info.height <= 0) throw MediaError("container has no video stream: " + path.string());
    return info;
}

void OpenCvFrameProvider::read(const fs::path& path, std::span<const std::int64_t> indices,
                               const FrameCallback& on_frame, const FailureCallback& on_failure) {
    cv::VideoCapture cap = open_capture(path);
    std::int64_t pos = 0;
    cv::Mat bgr;
    cv::Mat rgb;
    std::size_t next = 0;
    for (; next < indices.size(); ++next) {
        const std::int64_t want = indices[next];
        bool ok = true;
        while (pos < want) {
            if (!cap.grab()) {
                ok = false;
                break;
            }
            ++pos;
        }
        if (!ok) break;
        if (!cap.grab()) break;
        ++pos;
        if (!cap.retrieve(bgr) || bgr.empty() || bgr.type() != CV_8UC3) {
            on_failure(want, "frame could not be decoded");
            continue;
        }
        cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
        if (!rgb.isContinuous()) rgb = rgb.clone();
        on_frame(want, rgb.cols, rgb.rows, {rgb.data, rgb.total() * rgb.elemSize()});
    }
    for (; next < indices.size(); ++next) on_failure(indices[next], "stream ended before frame");
}

// ---------------------------------------------------------------------------
// pipe provider

namespace {

struct ProcessOutput {
    std::string text;
    int exit_code = -1;
};

ProcessOutput run_capture(const std::string& cmd) {
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe) throw MediaError("cannot start: " + cmd);
    ProcessOutput out;
    char buf[4096];
    while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) out.text.append(buf, n);
    const int status = ::pclose(pipe);
    out.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return out;
}

std::string expand(std::string templ, const fs::path& path) {
    replace_all(templ, "{path}", shell_quote(path.string()));
    return templ;
}

double parse_rate(std::string_view s) {
    const auto slash = s.find('/');
    if (slash == std::string_view::npos) return std::stod(std::string(s));
    const double num = std::stod(std::string(s.substr(0, slash)));
    const double den = std::stod(std::string(s.substr(slash + 1)));
    return den > 0 ? num / den : 0.0;
}

}  // namespace

PipeFrameProvider::PipeFrameProvider(std::string probe_command, std::string decode_command)
    : probe_(std::move(probe_command)), decode_(std::move(decode_command)) {}

PipeFrameProvider PipeFrameProvider::ffmpeg(const std::string& ffmpeg, const std::string& ffprobe) {
    return PipeFrameProvider(ffprobe +
                                 " -v error -select_streams v:0 -count_packets"
                                 " -show_entries stream=width,height,r_frame_rate,nb_read_packets -of csv=p=0 {path}",
                             ffmpeg + " -v error -nostdin -i {path} -map 0:v:0 -f rawvideo -pix_fmt rgb24 -");
}

VideoInfo PipeFrameProvider::probe(const fs::path& path) {
    if (!fs::exists(path)) throw MediaError("video file not found: " + path.string());
    const auto out = run_capture(expand(probe_, path) + " 2>/dev/null");
    if (out.exit_code != 0) {
        throw MediaError("probe failed for " + path.string() + " (exit " + std::to_string(out.exit_code) + ")");
    }
    std::vector<std::string> fields;
    std::string cur;
    for (char c : out.text) {
        if (c == ',' || c == '\n') {
            fields.push_back(cur);
            cur.clear();
            if (c == '\n') break;
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) fields.push_back(cur);
    try {
        if (fields.size() < 4) throw std::invalid_argument("short");
        VideoInfo info;
        info.width = std::stoi(fields[0]);
        info.height = std::stoi(fields[1]);
        info.fps = parse_rate(fields[2]);
        info.frame_count = std::stoll(fields[3]);
        if (info.width <= 0 || info.height <= 0) throw std::invalid_argument("size");
        return info;
    } catch (const std::logic_error&) {
        throw MediaError("unreadable probe output for " + path.string() + ": '" + out.text + "'");
    }
}

void PipeFrameProvider::read(const fs::path& path, std::span<const std::int64_t> indices,
                             const FrameCallback& on_frame, const FailureCallback& on_failure) {
    const VideoInfo info = probe(path);
    const std::size_t frame_bytes = static_cast<std::size_t>(info.width) * static_cast<std::size_t>(info.height) * 3;
    const std::string cmd = expand(decode_, path) + " 2>/dev/null";
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe) throw MediaError("cannot start decoder for " + path.string());

    std::vector<std::uint8_t> buf(frame_bytes);
    std::size_t next = 0;
    for (std::int64_t pos = 0; next < indices.size(); ++pos) {
        const std::size_t got = std::fread(buf.data(), 1, frame_bytes, pipe);
        if (got != frame_bytes) break;
        if (pos == indices[next]) {
            on_frame(pos, info.width, info.height, buf);
            ++next;
        }
    }
    // Drain so the decoder is not killed by SIGPIPE mid-write.
    while (std::fread(buf.data(), 1, buf.size(), pipe) > 0) {
    }
    ::pclose(pipe);
    for (; next < indices.size(); ++next) on_failure(indices[next], "stream ended before frame");
}

// ---------------------------------------------------------------------------

StreamResult stream_frames(const std::string& video_id, const fs::path& video, std::span<const std::int64_t> indices,
                           FrameProvider& provider, const std::function<void(FrameSample&&)>& sink) {
    if (!std::is_sorted(indices.begin(), indices.end()) ||
        std::adjacent_find(indices.begin(), indices.end()) != indices.end()) {
        throw Error(video_id + ": frame indices must be strictly increasing");
    }
    StreamResult res;
    res.info = provider.probe(video);
    const double fps = res.info.fps;
    provider.read(
        video, indices,
        [&](std::int64_t index, int w, int h, std::span<const std::uint8_t> rgb) {
            if (w <= 0 || h <= 0 || rgb.size() != static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3) {
                res.skipped.push_back({index, "frame buffer size mismatch"});
                return;
            }
            FrameSample s;
            s.video_id = video_id;
            s.frame_index = index;
            s.timestamp_s = fps > 0 ? static_cast<double>(index) / fps : 0.0;
            s.image = cv::Mat(h, w, CV_8UC3, const_cast<std::uint8_t*>(rgb.data())).clone();
            ++res.delivered;
            sink(std::move(s));
        },
        [&](std::int64_t index, const std::string& reason) { res.skipped.push_back({index, reason}); });

    std::sort(res.skipped.begin(), res.skipped.end(),
              [](const SkippedFrame& a, const SkippedFrame& b) { return a.frame_index < b.frame_index; });
    if (res.delivered == 0) {
        throw EmptyVideoError(video_id + ": none of " + std::to_string(indices.size()) +
                              " requested frames could be decoded from " + video.string());
    }
    return res;
}

Extraction extract_frames(const std::string& video_id, const fs::path& video, std::span<const std::int64_t> indices,
                          FrameProvider& provider) {
    Extraction ex;
    auto res = stream_frames(video_id, video, indices, provider,
                             [&](FrameSample&& s) { ex.samples.push_back(std::move(s)); });
    ex.info = res.info;
    ex.skipped = std::move(res.skipped);
    return ex;
}

Extraction extract_frames(const std::string& video_id, const fs::path& video, const SamplingStrategy& strategy,
                          FrameProvider& provider) {
    const VideoInfo info = provider.probe(video);
    if (info.frame_count <= 0) throw EmptyVideoError(video_id + ": container reports zero frames");
    const auto indices = sample_indices(info.frame_count, strategy);
    return extract_frames(video_id, video, indices, provider);
}

}  // namespace leaderaffect::sampler
