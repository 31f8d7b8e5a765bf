#include "leaderaffect/pipeline.hpp"

#include "leaderaffect/errors.hpp"
#include "leaderaffect/fsutil.hpp"

#include <opencv2/core.hpp>

#include <algorithm>
#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <thread>

namespace leaderaffect::pipeline {

using nlohmann::json;

Layout layout_for(const fs::path& output_dir, const std::string& strategy) { return {output_dir / strategy}; }

fs::path registry_path(const fs::path& output_dir) { return output_dir / "media_registry.json"; }

std::string_view to_string(Outcome o) {
    switch (o) {
        case Outcome::processed: return "processed";
        case Outcome::failed: return "failed";
        case Outcome::review_pending: return "review_pending";
        case Outcome::discarded: return "discarded";
    }
    return "failed";
}

namespace {

std::unique_ptr<corpus::MediaFetcher> command_fetcher(const config::PipelineConfig& cfg) {
    if (cfg.fetch_command.empty()) return nullptr;
    return std::make_unique<corpus::CommandFetcher>(cfg.fetch_command);
}

std::vector<corpus::LabeledVideo> load_corpus(const config::PipelineConfig& cfg) {
    if (cfg.manifest.empty()) throw ConfigError("config.manifest is required");
    if (cfg.labels.empty()) throw ConfigError("config.labels is required");
    return corpus::join_labels(corpus::load_manifest(cfg.manifest), corpus::load_labels(cfg.labels));
}

}  // namespace

json IngestReport::to_json() const {
    return {{"manifest_rows", manifest_rows},
            {"pluralist", pluralist},
            {"populist", populist},
            {"fetched", fetched},
            {"retriable_failures", retriable_failures},
            {"permanent_failures", permanent_failures},
            {"failures", failures}};
}

IngestReport ingest(const config::PipelineConfig& cfg, corpus::MediaFetcher* remote) {
    const auto videos = load_corpus(cfg);
    IngestReport rep;
    rep.manifest_rows = videos.size();
    for (const auto& v : videos) (v.binary_group == corpus::BinaryGroup::populist ? rep.populist : rep.pluralist)++;

    auto owned = remote ? nullptr : command_fetcher(cfg);
    corpus::RoutingFetcher fetcher(cfg.manifest.parent_path(), remote ? remote : owned.get());
    corpus::MediaRegistry registry(registry_path(cfg.output_dir));
    fs::create_directories(cfg.media_dir);
    for (const auto& v : videos) {
        try {
            corpus::fetch_media(v.entry, fetcher, registry, cfg.media_dir);
            ++rep.fetched;
        } catch (const FetchError& e) {
            (e.retriable() ? rep.retriable_failures : rep.permanent_failures)++;
            rep.failures.push_back(e.what());
        }
    }
    return rep;
}

json RunReport::to_json() const {
    json vids = json::array();
    for (const auto& v : videos) {
        vids.push_back({{"video_id", v.video_id},
                        {"outcome", to_string(v.outcome)},
                        {"detail", v.detail},
                        {"recomputed", v.recomputed},
                        {"frames", v.frames}});
    }
    return {{"strategy", strategy},   {"processed", processed}, {"failed", failed},
            {"review_pending", review_pending}, {"discarded", discarded}, {"recomputed", recomputed},
            {"total", total()},       {"videos", vids}};
}

namespace {

// ---------------------------------------------------------------------------
// observation cache

struct FaceObservation {
    detector::FaceDetection detection;
    affect::EmotionScores scores;
};

struct FrameObservation {
    std::int64_t frame_index = 0;
    double timestamp_s = 0;
    std::vector<FaceObservation> faces;
};

struct Observations {
    std::string fingerprint;
    sampler::VideoInfo info;
    std::vector<FrameObservation> frames;
    std::vector<sampler::SkippedFrame> skipped;
};

json box_json(const detector::Box& b) { return json::array({b.x, b.y, b.w, b.h}); }

detector::Box box_from(const json& j) {
    return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>(), j.at(3).get<double>()};
}

json to_json(const Observations& o) {
    json frames = json::array();
    for (const auto& f : o.frames) {
        json faces = json::array();
        for (const auto& face : f.faces) {
            json lm = json::array();
            for (const auto& p : face.detection.landmarks) lm.push_back({p.x, p.y});
            faces.push_back({{"box", box_json(face.detection.box)},
                             {"confidence", face.detection.confidence},
                             {"landmarks", lm},
                             {"scores", face.scores.v}});
        }
        frames.push_back({{"frame", f.frame_index}, {"timestamp", f.timestamp_s}, {"faces", faces}});
    }
    json skipped = json::array();
    for (const auto& s : o.skipped) skipped.push_back({{"frame", s.frame_index}, {"reason", s.reason}});
    return {{"fingerprint", o.fingerprint},
            {"frame_count", o.info.frame_count},
            {"fps", o.info.fps},
            {"width", o.info.width},
            {"height", o.info.height},
            {"frames", frames},
            {"skipped", skipped}};
}

Observations observations_from(const json& j) {
    Observations o;
    o.fingerprint = j.at("fingerprint").get<std::string>();
    o.info.frame_count = j.at("frame_count").get<std::int64_t>();
    o.info.fps = j.at("fps").get<double>();
    o.info.width = j.at("width").get<int>();
    o.info.height = j.at("height").get<int>();
    for (const auto& f : j.at("frames")) {
        FrameObservation fo{f.at("frame").get<std::int64_t>(), f.at("timestamp").get<double>(), {}};
        for (const auto& face : f.at("faces")) {
            FaceObservation obs;
            obs.detection.box = box_from(face.at("box"));
            obs.detection.confidence = face.at("confidence").get<double>();
            const auto& lm = face.at("landmarks");
            for (std::size_t i = 0; i < obs.detection.landmarks.size(); ++i) {
                obs.detection.landmarks[i] = {lm.at(i).at(0).get<double>(), lm.at(i).at(1).get<double>()};
            }
            obs.scores.v = face.at("scores").get<std::array<double, affect::kLabels>>();
            fo.faces.push_back(std::move(obs));
        }
        o.frames.push_back(std::move(fo));
    }
    for (const auto& s : j.at("skipped")) {
        o.skipped.push_back({s.at("frame").get<std::int64_t>(), s.at("reason").get<std::string>()});
    }
    return o;
}

std::optional<Observations> read_observations(const fs::path& file) {
    if (!fs::exists(file)) return std::nullopt;
    try {
        return observations_from(json::parse(read_text(file)));
    } catch (const std::exception&) {
        return std::nullopt;  // unreadable cache: recompute
    }
}

/// Everything that can change what a video's observations contain.
std::string fingerprint(const config::PipelineConfig& cfg, const fs::path& media) {
    const auto cfg_json = config::to_json(cfg);
    json fp = {{"strategy", cfg.strategy.name()},
               {"min_face_px", cfg.min_face_px},
               {"detector", cfg_json.at("detector")},
               {"models",
                {cfg.cascade.pnet.sha256, cfg.cascade.rnet.sha256, cfg.cascade.onet.sha256, cfg.emotion.sha256}},
               {"decoder", cfg_json.at("decoder")},
               {"media", media.filename().string()},
               {"media_bytes", fs::file_size(media)},
               {"media_mtime", fs::last_write_time(media).time_since_epoch().count()}};
    return sha256_hex(fp.dump());
}

// ---------------------------------------------------------------------------
// per-worker state

struct Worker {
    detector::CascadeDetector detector;
    affect::EmotionClassifier classifier;
    std::unique_ptr<sampler::FrameProvider> provider;

    explicit Worker(const config::PipelineConfig& cfg)
        : detector(cfg.cascade, cfg.cascade_params),
          classifier(cfg.emotion),
          provider(config::make_frame_provider(cfg.decoder)) {}
};

Observations observe(const std::string& video_id, const fs::path& media, const config::PipelineConfig& cfg,
                     Worker& w) {
    Observations obs;
    obs.info = w.provider->probe(media);
    if (obs.info.frame_count <= 0) throw EmptyVideoError(video_id + ": container holds no frames");
    const auto indices = sampler::sample_indices(obs.info.frame_count, cfg.strategy);
    auto res = sampler::stream_frames(video_id, media, indices, *w.provider, [&](sampler::FrameSample&& s) {
        FrameObservation fo{s.frame_index, s.timestamp_s, {}};
        for (const auto& det : detector::detect_faces(s.image, cfg.min_face_px, w.detector)) {
            try {
                const auto crop = detector::crop_and_align(s.image, det);
                fo.faces.push_back({det, w.classifier.classify(crop.model_input)});
            } catch (const CropError&) {
                // degenerate box at the frame border: not a usable face
            }
        }
        obs.frames.push_back(std::move(fo));
    });
    obs.info = res.info;
    obs.skipped = std::move(res.skipped);
    return obs;
}

std::vector<identity::FrameDetections> detections_of(const Observations& obs) {
    std::vector<identity::FrameDetections> out;
    out.reserve(obs.frames.size());
    for (const auto& f : obs.frames) {
        identity::FrameDetections fd{f.frame_index, {}};
        for (const auto& face : f.faces) fd.faces.push_back(face.detection);
        out.push_back(std::move(fd));
    }
    return out;
}

std::vector<int> track_ids(const std::vector<identity::CandidateTrack>& tracks) {
    std::vector<int> ids;
    for (const auto& t : tracks) ids.push_back(t.track_id);
    return ids;
}

void write_if_changed(const fs::path& path, const std::string& content) {
    if (fs::exists(path)) {
        try {
            if (read_text(path) == content) return;
        } catch (const Error&) {
        }
    }
    atomic_write(path, content);
}

void remove_if_exists(const fs::path& p) {
    std::error_code ec;
    fs::remove(p, ec);
}

/// Looks for a verification of the same video recorded under another sampling
/// strategy and maps it onto this strategy's tracks.
std::optional<identity::TargetResolution> carried_verification(const config::PipelineConfig& cfg,
                                                               const std::string& strategy,
                                                               const identity::TargetResolution& res,
                                                               const std::vector<identity::CandidateTrack>& tracks) {
    if (!fs::is_directory(cfg.output_dir)) return std::nullopt;
    std::vector<fs::path> siblings;
    for (const auto& entry : fs::directory_iterator(cfg.output_dir)) {
        if (entry.is_directory() && entry.path().filename() != strategy) siblings.push_back(entry.path());
    }
    std::sort(siblings.begin(), siblings.end());
    for (const auto& dir : siblings) {
        const Layout other{dir};
        const auto record = identity::read_verification(other.verification(res.video_id));
        if (!record || record->video_id != res.video_id) continue;
        if (record->action == identity::Action::discard) return identity::apply_verification(res, track_ids(tracks), *record);
        const auto bundle_file = other.review(res.video_id) / identity::kBundleFile;
        if (!fs::exists(bundle_file)) continue;
        const auto bundle = json::parse(read_text(bundle_file));
        for (const auto& t : bundle.at("tracks")) {
            if (t.at("track_id").get<int>() != *record->track_id) continue;
            const auto match = identity::match_track(box_from(t.at("median_box")), tracks, cfg.carry_over_min_iou);
            if (!match) break;
            auto mapped = *record;
            mapped.track_id = *match;
            return identity::apply_verification(res, track_ids(tracks), mapped);
        }
    }
    return std::nullopt;
}

/// Re-decodes the representative frames and attaches display crops to each track.
void attach_crops(const std::string& video_id, const fs::path& media, std::vector<identity::CandidateTrack>& tracks,
                  sampler::FrameProvider& provider) {
    std::set<std::int64_t> wanted;
    for (const auto& t : tracks) wanted.insert(t.representative_frames.begin(), t.representative_frames.end());
    const std::vector<std::int64_t> indices(wanted.begin(), wanted.end());
    std::map<std::int64_t, cv::Mat> frames;
    sampler::stream_frames(video_id, media, indices, provider,
                           [&](sampler::FrameSample&& s) { frames[s.frame_index] = std::move(s.image); });
    for (auto& t : tracks) {
        t.representative_crops.clear();
        for (auto idx : t.representative_frames) {
            const auto it = frames.find(idx);
            if (it == frames.end()) {
                t.representative_crops.emplace_back();
                continue;
            }
            t.representative_crops.push_back(
                detector::crop_and_align(it->second, t.members.at(idx).detection).display_crop);
        }
    }
}

struct VideoResult {
    VideoRecord record;
    std::optional<affect::VideoSummary> summary;
};

VideoResult process_video(const corpus::LabeledVideo& video, const config::PipelineConfig& cfg, const Layout& layout,
                          const RunOptions& options, corpus::MediaFetcher& fetcher, corpus::MediaRegistry& registry,
                          Worker& worker) {
    const auto& id = video.entry.video_id;
    VideoResult out;
    out.record.video_id = id;

    const fs::path media = corpus::fetch_media(video.entry, fetcher, registry, cfg.media_dir);
    const std::string fp = fingerprint(cfg, media);

    std::optional<Observations> obs;
    if (!options.force) {
        obs = read_observations(layout.observations(id));
        if (obs && obs->fingerprint != fp) obs.reset();
    }
    if (!obs) {
        obs = observe(id, media, cfg, worker);
        obs->fingerprint = fp;
        atomic_write(layout.observations(id), to_json(*obs).dump());
        out.record.recomputed = true;
    }

    auto tracks = identity::group_tracks(detections_of(*obs), cfg.tracking);
    if (tracks.empty()) {
        remove_if_exists(layout.series(id));
        throw Error(id + ": no face of at least " + std::to_string(cfg.min_face_px) + " px in any sampled frame");
    }

    auto res = identity::resolve_target(id, tracks, cfg.policy);
    if (auto record = identity::read_verification(layout.verification(id))) {
        res = identity::apply_verification(res, track_ids(tracks), *record);
    } else if (res.status == identity::Status::needs_review && cfg.carry_over_verifications && !options.fresh_review) {
        if (auto carried = carried_verification(cfg, cfg.strategy.name(), res, tracks)) res = *carried;
    }
    write_if_changed(layout.resolution(id), identity::to_json(res).dump(2) + "\n");

    if (res.status == identity::Status::needs_review) {
        remove_if_exists(layout.series(id));
        attach_crops(id, media, tracks, *worker.provider);
        const json meta = {{"leader", video.entry.leader_name},
                           {"party", video.entry.party_name},
                           {"country_iso", video.entry.country_iso},
                           {"populism_category", video.populism_category},
                           {"strategy", cfg.strategy.name()}};
        identity::export_review_bundle(id, tracks, layout.review(id), meta);
        out.record.outcome = Outcome::review_pending;
        out.record.detail = std::to_string(tracks.size()) + " candidate tracks";
        return out;
    }
    if (res.status == identity::Status::discarded) {
        remove_if_exists(layout.series(id));
        out.record.outcome = Outcome::discarded;
        out.record.detail = "discarded by reviewer";
        return out;
    }

    const auto& track = *std::find_if(tracks.begin(), tracks.end(),
                                      [&](const auto& t) { return t.track_id == *res.selected_track; });
    affect::EmotionSeries series;
    series.video_id = id;
    for (const auto& f : obs->frames) {
        const auto it = track.members.find(f.frame_index);
        if (it == track.members.end()) continue;
        series.push(f.frame_index, f.timestamp_s, f.faces.at(it->second.slot).scores);
    }
    // Summaries are computed from the stored representation so that
    // re-reading the series file reproduces them exactly.
    const std::string csv = affect::format_series_csv(series);
    write_if_changed(layout.series(id), csv);
    auto summary = affect::video_summary(affect::parse_series_csv(csv, id));
    summary.country_iso = video.entry.country_iso;
    summary.party = video.entry.party_name;
    summary.leader = video.entry.leader_name;
    summary.populism_category = video.populism_category;

    out.record.outcome = Outcome::processed;
    out.record.frames = series.points.size();
    out.record.detail = std::string(identity::to_string(*res.method)) + ", track " +
                        std::to_string(*res.selected_track) + ", " + std::to_string(series.points.size()) + " frames";
    out.summary = std::move(summary);
    return out;
}

}  // namespace

RunReport run_pipeline(const config::PipelineConfig& cfg, const std::vector<corpus::LabeledVideo>& videos,
                       const RunOptions& options) {
    const Layout layout = layout_for(cfg.output_dir, cfg.strategy.name());
    for (const auto& d : {layout.root / "series", layout.root / "observations", layout.root / "resolutions",
                          layout.review_dir(), cfg.media_dir}) {
        fs::create_directories(d);
    }
    write_if_changed(layout.root / "config.json", config::to_json(cfg).dump(2) + "\n");

    auto owned = options.remote_fetcher ? nullptr : command_fetcher(cfg);
    corpus::RoutingFetcher fetcher(cfg.manifest.empty() ? cfg.base_dir : cfg.manifest.parent_path(),
                                   options.remote_fetcher ? options.remote_fetcher : owned.get());
    corpus::MediaRegistry registry(registry_path(cfg.output_dir));

    const int jobs = std::max(1, std::min<int>(options.jobs, static_cast<int>(std::max<std::size_t>(videos.size(), 1))));
    // Built up front so that model problems surface as configuration errors.
    std::vector<std::unique_ptr<Worker>> workers;
    workers.push_back(std::make_unique<Worker>(cfg));

    std::vector<VideoResult> results(videos.size());
    std::atomic<std::size_t> next{0};
    std::mutex report_mutex;
    auto work = [&](Worker& worker) {
        for (std::size_t i = next++; i < videos.size(); i = next++) {
            VideoResult r;
            try {
                r = process_video(videos[i], cfg, layout, options, fetcher, registry, worker);
            } catch (const ConfigError&) {
                throw;
            } catch (const std::exception& e) {
                r = {};
                r.record.video_id = videos[i].entry.video_id;
                r.record.outcome = Outcome::failed;
                r.record.detail = e.what();
            }
            results[i] = std::move(r);
            if (options.on_video) {
                std::lock_guard lock(report_mutex);
                options.on_video(results[i].record);
            }
        }
    };

    if (jobs == 1) {
        work(*workers.front());
    } else {
        for (int j = 1; j < jobs; ++j) workers.push_back(std::make_unique<Worker>(cfg));
        std::vector<std::exception_ptr> errors(static_cast<std::size_t>(jobs));
        std::vector<std::thread> threads;
        for (int j = 0; j < jobs; ++j) {
            threads.emplace_back([&, j] {
                try {
                    work(*workers[static_cast<std::size_t>(j)]);
                } catch (...) {
                    errors[static_cast<std::size_t>(j)] = std::current_exception();
                    next = videos.size();
                }
            });
        }
        for (auto& t : threads) t.join();
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }

    RunReport report;
    report.strategy = cfg.strategy.name();
    std::vector<affect::VideoSummary> summaries;
    for (auto& r : results) {
        switch (r.record.outcome) {
            case Outcome::processed: ++report.processed; break;
            case Outcome::failed: ++report.failed; break;
            case Outcome::review_pending: ++report.review_pending; break;
            case Outcome::discarded: ++report.discarded; break;
        }
        if (r.record.recomputed) ++report.recomputed;
        if (r.summary) summaries.push_back(std::move(*r.summary));
        report.videos.push_back(std::move(r.record));
    }
    write_if_changed(layout.summary(), affect::format_summary_csv(summaries));
    atomic_write(layout.run_report(), report.to_json().dump(2) + "\n");
    return report;
}

RunReport run_pipeline(const config::PipelineConfig& cfg, const RunOptions& options) {
    return run_pipeline(cfg, load_corpus(cfg), options);
}

}  // namespace leaderaffect::pipeline
