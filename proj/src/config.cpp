#include "leaderaffect/config.hpp"

#include "leaderaffect/errors.hpp"
#include "leaderaffect/fsutil.hpp"

#include <set>

namespace leaderaffect::config {

using nlohmann::json;

namespace {

void only_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& [k, _] : obj.items()) {
        if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
    }
}

template <class T>
T get(const json& obj, const std::string& key, const T& fallback, const std::string& where) {
    if (!obj.contains(key) || obj[key].is_null()) return fallback;
    try {
        return obj[key].get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + "." + key + " has the wrong type");
    }
}

fs::path resolve(const fs::path& base, const std::string& p) {
    if (p.empty()) return {};
    fs::path path(p);
    return path.is_absolute() ? path : (base / path).lexically_normal();
}

detector::ModelFile model(const json& models, const std::string& key, const fs::path& base) {
    if (!models.contains(key)) throw ConfigError("models." + key + " is required");
    const json& m = models[key];
    only_keys(m, {"path", "sha256"}, "models." + key);
    const auto path = get<std::string>(m, "path", "", "models." + key);
    const auto sha = get<std::string>(m, "sha256", "", "models." + key);
    if (path.empty()) throw ConfigError("models." + key + ".path is required");
    if (sha.size() != 64) throw ConfigError("models." + key + ".sha256 must be a 64-digit hex digest");
    return {resolve(base, path), sha};
}

void check(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

}  // namespace

PipelineConfig parse_config(const json& doc, const fs::path& base_dir) {
    only_keys(doc,
              {"strategy", "min_face_px", "models", "detector", "tracking", "resolution", "manifest", "labels",
               "output_dir", "media_dir", "fetch_command", "decoder", "seed", "t_test", "jobs"},
              "config");
    PipelineConfig c;
    c.base_dir = base_dir;
    c.strategy = sampler::SamplingStrategy::parse(get<std::string>(doc, "strategy", "uniform300", "config"));
    c.min_face_px = get<int>(doc, "min_face_px", 50, "config");
    check(c.min_face_px >= 1, "min_face_px must be >= 1");

    if (!doc.contains("models")) throw ConfigError("config.models is required");
    const json& models = doc["models"];
    only_keys(models, {"pnet", "rnet", "onet", "emotion"}, "models");
    c.cascade = {model(models, "pnet", base_dir), model(models, "rnet", base_dir), model(models, "onet", base_dir)};
    c.emotion = model(models, "emotion", base_dir);

    if (doc.contains("detector")) {
        const json& d = doc["detector"];
        only_keys(d,
                  {"pyramid_min_face", "scale_factor", "stage_thresholds", "pnet_scale_nms", "pnet_merge_nms",
                   "rnet_nms", "onet_nms"},
                  "detector");
        auto& p = c.cascade_params;
        p.pyramid_min_face = get<int>(d, "pyramid_min_face", p.pyramid_min_face, "detector");
        p.scale_factor = get<double>(d, "scale_factor", p.scale_factor, "detector");
        const auto th = get<std::vector<double>>(d, "stage_thresholds",
                                                 {p.stage_thresholds.begin(), p.stage_thresholds.end()}, "detector");
        check(th.size() == 3, "detector.stage_thresholds needs three values");
        for (std::size_t i = 0; i < 3; ++i) {
            check(th[i] > 0 && th[i] < 1, "detector.stage_thresholds must lie in (0, 1)");
            p.stage_thresholds[i] = th[i];
        }
        p.pnet_scale_nms = get<double>(d, "pnet_scale_nms", p.pnet_scale_nms, "detector");
        p.pnet_merge_nms = get<double>(d, "pnet_merge_nms", p.pnet_merge_nms, "detector");
        p.rnet_nms = get<double>(d, "rnet_nms", p.rnet_nms, "detector");
        p.onet_nms = get<double>(d, "onet_nms", p.onet_nms, "detector");
        check(p.pyramid_min_face >= 1, "detector.pyramid_min_face must be >= 1");
        check(p.scale_factor > 0 && p.scale_factor < 1, "detector.scale_factor must lie in (0, 1)");
        for (double v : {p.pnet_scale_nms, p.pnet_merge_nms, p.rnet_nms, p.onet_nms}) {
            check(v > 0 && v < 1, "detector NMS thresholds must lie in (0, 1)");
        }
    }
    if (doc.contains("tracking")) {
        const json& t = doc["tracking"];
        only_keys(t, {"max_center_distance", "max_scale_ratio", "max_crops"}, "tracking");
        c.tracking.max_center_distance = get<double>(t, "max_center_distance", c.tracking.max_center_distance, "tracking");
        c.tracking.max_scale_ratio = get<double>(t, "max_scale_ratio", c.tracking.max_scale_ratio, "tracking");
        c.tracking.max_crops = get<std::size_t>(t, "max_crops", c.tracking.max_crops, "tracking");
        check(c.tracking.max_center_distance > 0, "tracking.max_center_distance must be > 0");
        check(c.tracking.max_scale_ratio >= 1, "tracking.max_scale_ratio must be >= 1");
        check(c.tracking.max_crops >= 1 && c.tracking.max_crops <= 9, "tracking.max_crops must lie in 1..9");
    }
    if (doc.contains("resolution")) {
        const json& r = doc["resolution"];
        only_keys(r, {"auto_coverage", "dominance_area_ratio", "carry_over_verifications", "carry_over_min_iou"},
                  "resolution");
        c.policy.auto_coverage = get<double>(r, "auto_coverage", c.policy.auto_coverage, "resolution");
        c.policy.dominance_area_ratio =
            get<double>(r, "dominance_area_ratio", c.policy.dominance_area_ratio, "resolution");
        c.carry_over_verifications = get<bool>(r, "carry_over_verifications", true, "resolution");
        c.carry_over_min_iou = get<double>(r, "carry_over_min_iou", c.carry_over_min_iou, "resolution");
        check(c.policy.auto_coverage > 0 && c.policy.auto_coverage <= 1, "resolution.auto_coverage must lie in (0, 1]");
        check(c.policy.dominance_area_ratio >= 1, "resolution.dominance_area_ratio must be >= 1");
        check(c.carry_over_min_iou > 0 && c.carry_over_min_iou <= 1, "resolution.carry_over_min_iou must lie in (0, 1]");
    }

    c.manifest = resolve(base_dir, get<std::string>(doc, "manifest", "", "config"));
    c.labels = resolve(base_dir, get<std::string>(doc, "labels", "", "config"));
    c.output_dir = resolve(base_dir, get<std::string>(doc, "output_dir", "out", "config"));
    const auto media = get<std::string>(doc, "media_dir", "", "config");
    c.media_dir = media.empty() ? c.output_dir / "media" : resolve(base_dir, media);
    c.fetch_command = get<std::string>(doc, "fetch_command", "", "config");

    if (doc.contains("decoder")) {
        const json& d = doc["decoder"];
        only_keys(d, {"kind", "probe_command", "decode_command"}, "decoder");
        c.decoder.kind = get<std::string>(d, "kind", "opencv", "decoder");
        c.decoder.probe_command = get<std::string>(d, "probe_command", "", "decoder");
        c.decoder.decode_command = get<std::string>(d, "decode_command", "", "decoder");
        check(c.decoder.kind == "opencv" || c.decoder.kind == "pipe" || c.decoder.kind == "ffmpeg",
              "decoder.kind must be opencv, pipe or ffmpeg");
        if (c.decoder.kind == "pipe") {
            check(!c.decoder.probe_command.empty() && !c.decoder.decode_command.empty(),
                  "decoder.kind pipe needs probe_command and decode_command");
        }
    }

    c.seed = get<std::uint64_t>(doc, "seed", c.seed, "config");
    c.t_test = stats::parse_variant(get<std::string>(doc, "t_test", "pooled", "config"));
    c.jobs = get<int>(doc, "jobs", 1, "config");
    check(c.jobs >= 1, "jobs must be >= 1");
    return c;
}

PipelineConfig load_config(const fs::path& file, bool verify_hashes) {
    if (!fs::exists(file)) throw ConfigError("config file not found: " + file.string());
    json doc;
    try {
        doc = json::parse(read_text(file));
    } catch (const json::parse_error& e) {
        throw ConfigError(file.string() + ": " + e.what());
    }
    auto cfg = parse_config(doc, fs::absolute(file).parent_path());
    if (verify_hashes) verify_model_hashes(cfg);
    return cfg;
}

void verify_model_hashes(const PipelineConfig& cfg) {
    for (const auto* m : {&cfg.cascade.pnet, &cfg.cascade.rnet, &cfg.cascade.onet, &cfg.emotion}) {
        if (!fs::exists(m->path)) throw ConfigError("model file not found: " + m->path.string());
        const auto actual = sha256_file(m->path);
        if (actual != m->sha256) {
            throw ConfigError("hash mismatch for " + m->path.string() + ": expected " + m->sha256 + ", got " + actual);
        }
    }
}

json to_json(const PipelineConfig& c) {
    auto model = [](const detector::ModelFile& m) { return json{{"path", m.path.string()}, {"sha256", m.sha256}}; };
    const auto& p = c.cascade_params;
    json j;
    j["strategy"] = c.strategy.name();
    j["min_face_px"] = c.min_face_px;
    j["models"] = {{"pnet", model(c.cascade.pnet)},
                   {"rnet", model(c.cascade.rnet)},
                   {"onet", model(c.cascade.onet)},
                   {"emotion", model(c.emotion)}};
    j["detector"] = {{"pyramid_min_face", p.pyramid_min_face}, {"scale_factor", p.scale_factor},
                     {"stage_thresholds", p.stage_thresholds}, {"pnet_scale_nms", p.pnet_scale_nms},
                     {"pnet_merge_nms", p.pnet_merge_nms},     {"rnet_nms", p.rnet_nms},
                     {"onet_nms", p.onet_nms}};
    j["tracking"] = {{"max_center_distance", c.tracking.max_center_distance},
                     {"max_scale_ratio", c.tracking.max_scale_ratio},
                     {"max_crops", c.tracking.max_crops}};
    j["resolution"] = {{"auto_coverage", c.policy.auto_coverage},
                       {"dominance_area_ratio", c.policy.dominance_area_ratio},
                       {"carry_over_verifications", c.carry_over_verifications},
                       {"carry_over_min_iou", c.carry_over_min_iou}};
    j["manifest"] = c.manifest.string();
    j["labels"] = c.labels.string();
    j["output_dir"] = c.output_dir.string();
    j["media_dir"] = c.media_dir.string();
    j["fetch_command"] = c.fetch_command;
    j["decoder"] = {{"kind", c.decoder.kind},
                    {"probe_command", c.decoder.probe_command},
                    {"decode_command", c.decoder.decode_command}};
    j["seed"] = c.seed;
    j["t_test"] = stats::to_string(c.t_test);
    j["jobs"] = c.jobs;
    return j;
}

std::unique_ptr<sampler::FrameProvider> make_frame_provider(const DecoderConfig& d) {
    if (d.kind == "pipe") return std::make_unique<sampler::PipeFrameProvider>(d.probe_command, d.decode_command);
    if (d.kind == "ffmpeg") return std::make_unique<sampler::PipeFrameProvider>(sampler::PipeFrameProvider::ffmpeg());
    return std::make_unique<sampler::OpenCvFrameProvider>();
}

}  // namespace leaderaffect::config
