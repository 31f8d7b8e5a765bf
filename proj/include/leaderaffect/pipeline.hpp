#pragma once

#include "leaderaffect/affect.hpp"
#include "leaderaffect/config.hpp"
#include "leaderaffect/corpus.hpp"
#include "leaderaffect/identity.hpp"

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace leaderaffect::pipeline {

namespace fs = std::filesystem;

/// Output layout under `<output_dir>/<strategy>/`.
struct Layout {
    fs::path root;

    fs::path series(const std::string& id) const { return root / "series" / (id + ".csv"); }
    fs::path observations(const std::string& id) const { return root / "observations" / (id + ".json"); }
    fs::path resolution(const std::string& id) const { return root / "resolutions" / (id + ".json"); }
    fs::path review_dir() const { return root / "review"; }
    fs::path review(const std::string& id) const { return root / "review" / id; }
    fs::path verification(const std::string& id) const { return review(id) / identity::kVerificationFile; }
    fs::path summary() const { return root / "summary.csv"; }
    fs::path run_report() const { return root / "run_report.json"; }
    fs::path analysis_dir() const { return root / "analysis"; }
    fs::path figures_dir() const { return root / "figures"; }
};

Layout layout_for(const fs::path& output_dir, const std::string& strategy);
fs::path registry_path(const fs::path& output_dir);

struct IngestReport {
    std::size_t manifest_rows = 0;
    std::size_t pluralist = 0;
    std::size_t populist = 0;
    std::size_t fetched = 0;
    std::size_t retriable_failures = 0;
    std::size_t permanent_failures = 0;
    std::vector<std::string> failures;

    nlohmann::json to_json() const;
};

/// Validates manifest and labels (schema and join), then fetches missing media.
/// `remote` handles non-`file:` URLs; when null, the configured fetch command is used.
IngestReport ingest(const config::PipelineConfig& cfg, corpus::MediaFetcher* remote = nullptr);

enum class Outcome { processed, failed, review_pending, discarded };

std::string_view to_string(Outcome o);

struct VideoRecord {
    std::string video_id;
    Outcome outcome = Outcome::failed;
    std::string detail;
    /// Frames were decoded and scored in this run (false when served from cache).
    bool recomputed = false;
    std::size_t frames = 0;
};

struct RunReport {
    std::string strategy;
    std::vector<VideoRecord> videos;
    std::size_t processed = 0;
    std::size_t failed = 0;
    std::size_t review_pending = 0;
    std::size_t discarded = 0;
    std::size_t recomputed = 0;

    std::size_t total() const { return processed + failed + review_pending + discarded; }
    nlohmann::json to_json() const;
};

struct RunOptions {
    bool force = false;
    int jobs = 1;
    /// Ignore verifications recorded under other sampling strategies.
    bool fresh_review = false;
    corpus::MediaFetcher* remote_fetcher = nullptr;
    /// Progress callback, invoked once per finished video (serialized).
    std::function<void(const VideoRecord&)> on_video;
};

/// Processes every manifest video under the configured strategy. Per-video
/// errors are recorded, never propagated; configuration errors are.
RunReport run_pipeline(const config::PipelineConfig& cfg, const std::vector<corpus::LabeledVideo>& videos,
                       const RunOptions& options = {});

/// Loads manifest and labels named in the config, joins them and runs.
RunReport run_pipeline(const config::PipelineConfig& cfg, const RunOptions& options = {});

}  // namespace leaderaffect::pipeline
