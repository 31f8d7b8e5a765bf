#pragma once

#include "leaderaffect/detector.hpp"
#include "leaderaffect/identity.hpp"
#include "leaderaffect/sampler.hpp"
#include "leaderaffect/stats.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

namespace leaderaffect::config {

namespace fs = std::filesystem;

struct DecoderConfig {
    /// "opencv" (in-process) or "pipe" (external decoder process)
    std::string kind = "opencv";
    std::string probe_command;
    std::string decode_command;
};

struct PipelineConfig {
    /// Directory relative paths were resolved against.
    fs::path base_dir;

    sampler::SamplingStrategy strategy = sampler::SamplingStrategy::uniform(300);
    int min_face_px = 50;
    detector::CascadeModels cascade;
    detector::ModelFile emotion;
    detector::CascadeParams cascade_params;
    identity::TrackingParams tracking;
    identity::ResolutionPolicy policy;
    /// Verifications made under one strategy are reused under another when the
    /// selected track's median box matches with at least this IoU.
    bool carry_over_verifications = true;
    double carry_over_min_iou = 0.3;

    fs::path manifest;
    fs::path labels;
    fs::path output_dir;
    fs::path media_dir;
    std::string fetch_command;
    DecoderConfig decoder;

    std::uint64_t seed = 20240601;
    stats::TTestVariant t_test = stats::TTestVariant::pooled;
    int jobs = 1;
};

/// Strict parse: unknown keys and out-of-range values raise ConfigError.
PipelineConfig parse_config(const nlohmann::json& doc, const fs::path& base_dir);

/// Parses the file and, unless disabled, checks every model hash.
PipelineConfig load_config(const fs::path& file, bool verify_hashes = true);

/// Throws ConfigError naming the first missing model or hash mismatch.
void verify_model_hashes(const PipelineConfig& cfg);

/// Fully resolved configuration (absolute paths), as written next to the outputs.
nlohmann::json to_json(const PipelineConfig& cfg);

std::unique_ptr<sampler::FrameProvider> make_frame_provider(const DecoderConfig& d);

}  // namespace leaderaffect::config
