#include "leaderaffect/identity.hpp"

#include "leaderaffect/errors.hpp"
#include "leaderaffect/fsutil.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cmath>

namespace leaderaffect::identity {

using nlohmann::json;

namespace {

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double side(const Box& b) { return std::sqrt(b.area()); }

}  // namespace

Box CandidateTrack::median_box() const {
    std::vector<double> xs, ys, ws, hs;
    for (const auto& [_, m] : members) {
        xs.push_back(m.detection.box.x);
        ys.push_back(m.detection.box.y);
        ws.push_back(m.detection.box.w);
        hs.push_back(m.detection.box.h);
    }
    return {median(xs), median(ys), median(ws), median(hs)};
}

double CandidateTrack::median_area() const {
    std::vector<double> areas;
    for (const auto& [_, m] : members) areas.push_back(m.detection.box.area());
    return median(areas);
}

std::vector<std::size_t> evenly_spaced(std::size_t n, std::size_t count) {
    std::vector<std::size_t> out;
    if (n == 0 || count == 0) return out;
    if (n <= count) {
        for (std::size_t i = 0; i < n; ++i) out.push_back(i);
        return out;
    }
    for (std::size_t i = 0; i < count; ++i) out.push_back(i * n / count);
    return out;
}

std::vector<CandidateTrack> group_tracks(const std::vector<FrameDetections>& frames, const TrackingParams& params) {
    std::vector<CandidateTrack> tracks;
    std::vector<Box> last;
    for (const auto& frame : frames) {
        // Highest-confidence faces claim tracks first.
        std::vector<std::size_t> order(frame.faces.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return frame.faces[a].confidence > frame.faces[b].confidence;
        });
        std::vector<bool> taken(tracks.size(), false);
        for (std::size_t slot : order) {
            const FaceDetection& det = frame.faces[slot];
            int best = -1;
            double best_dist = 0;
            for (std::size_t t = 0; t < tracks.size(); ++t) {
                if (taken[t]) continue;
                const Box& prev = last[t];
                const double ref = 0.5 * (prev.w + prev.h);
                if (ref <= 0) continue;
                const double dist = std::hypot(det.box.cx() - prev.cx(), det.box.cy() - prev.cy()) / ref;
                const double s1 = side(det.box);
                const double s2 = side(prev);
                const double ratio = std::max(s1, s2) / std::max(std::min(s1, s2), 1e-9);
                if (dist > params.max_center_distance || ratio > params.max_scale_ratio) continue;
                if (best < 0 || dist < best_dist) {
                    best = static_cast<int>(t);
                    best_dist = dist;
                }
            }
            if (best < 0) {
                CandidateTrack t;
                t.track_id = static_cast<int>(tracks.size()) + 1;
                tracks.push_back(std::move(t));
                last.push_back(det.box);
                taken.push_back(false);
                best = static_cast<int>(tracks.size()) - 1;
            }
            tracks[best].members[frame.frame_index] = {det, slot};
            last[best] = det.box;
            taken[best] = true;
        }
    }
    const double total = static_cast<double>(frames.size());
    for (auto& t : tracks) {
        t.coverage = total > 0 ? static_cast<double>(t.members.size()) / total : 0.0;
        std::vector<std::int64_t> idx;
        for (const auto& [f, _] : t.members) idx.push_back(f);
        for (auto i : evenly_spaced(idx.size(), params.max_crops)) t.representative_frames.push_back(idx[i]);
    }
    return tracks;
}

std::string_view to_string(Status s) {
    switch (s) {
        case Status::auto_confirmed: return "auto_confirmed";
        case Status::needs_review: return "needs_review";
        case Status::confirmed: return "confirmed";
        case Status::discarded: return "discarded";
    }
    return "?";
}

std::string_view to_string(Method m) {
    switch (m) {
        case Method::single_face: return "single_face";
        case Method::largest_face: return "largest_face";
        case Method::manual: return "manual";
    }
    return "?";
}

Status parse_status(std::string_view s) {
    for (auto v : {Status::auto_confirmed, Status::needs_review, Status::confirmed, Status::discarded}) {
        if (to_string(v) == s) return v;
    }
    throw SchemaError("unknown resolution status '" + std::string(s) + "'");
}

Method parse_method(std::string_view s) {
    for (auto v : {Method::single_face, Method::largest_face, Method::manual}) {
        if (to_string(v) == s) return v;
    }
    throw SchemaError("unknown resolution method '" + std::string(s) + "'");
}

TargetResolution resolve_target(const std::string& video_id, const std::vector<CandidateTrack>& tracks,
                                const ResolutionPolicy& policy) {
    TargetResolution r{video_id, Status::needs_review, std::nullopt, std::nullopt};
    if (tracks.size() == 1) {
        if (tracks[0].coverage >= policy.auto_coverage) {
            r.status = Status::auto_confirmed;
            r.selected_track = tracks[0].track_id;
            r.method = Method::single_face;
        }
        return r;
    }
    if (tracks.empty()) return r;
    const auto largest = std::max_element(tracks.begin(), tracks.end(), [](const auto& a, const auto& b) {
        return a.median_area() < b.median_area();
    });
    if (largest->coverage < policy.auto_coverage) return r;
    const double area = largest->median_area();
    for (const auto& t : tracks) {
        if (&t != &*largest && !(area > policy.dominance_area_ratio * t.median_area())) return r;
    }
    r.status = Status::auto_confirmed;
    r.selected_track = largest->track_id;
    r.method = Method::largest_face;
    return r;
}

json to_json(const TargetResolution& r) {
    json j;
    j["video_id"] = r.video_id;
    j["status"] = to_string(r.status);
    j["selected_track"] = r.selected_track ? json(*r.selected_track) : json(nullptr);
    j["method"] = r.method ? json(to_string(*r.method)) : json(nullptr);
    return j;
}

TargetResolution resolution_from_json(const json& j) {
    try {
        TargetResolution r;
        r.video_id = j.at("video_id").get<std::string>();
        r.status = parse_status(j.at("status").get<std::string>());
        if (j.contains("selected_track") && !j["selected_track"].is_null()) r.selected_track = j["selected_track"].get<int>();
        if (j.contains("method") && !j["method"].is_null()) r.method = parse_method(j["method"].get<std::string>());
        return r;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("malformed resolution record: ") + e.what());
    }
}

void export_review_bundle(const std::string& video_id, const std::vector<CandidateTrack>& tracks, const fs::path& dir,
                          const json& metadata) {
    if (tracks.empty()) throw Error(video_id + ": no candidate tracks, nothing to review");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error("cannot create review directory " + dir.string() + ": " + ec.message());
    // Crops from an earlier export may belong to tracks that no longer exist.
    for (const auto& entry : fs::directory_iterator(dir)) {
        const auto name = entry.path().filename().string();
        if (name.starts_with("track_") && entry.path().extension() == ".png") fs::remove(entry.path());
    }

    json bundle;
    bundle["video_id"] = video_id;
    bundle["metadata"] = metadata;
    bundle["tracks"] = json::array();
    for (const auto& t : tracks) {
        json jt;
        jt["track_id"] = t.track_id;
        jt["coverage"] = t.coverage;
        jt["detections"] = t.members.size();
        const Box mb = t.median_box();
        jt["median_box"] = {mb.x, mb.y, mb.w, mb.h};
        jt["crops"] = json::array();
        const std::size_t n = std::min(t.representative_frames.size(), t.representative_crops.size());
        for (std::size_t i = 0; i < n; ++i) {
            if (t.representative_crops[i].empty()) continue;  // frame failed to decode on re-read
            const std::string file = "track_" + std::to_string(t.track_id) + "_" + std::to_string(i) + ".png";
            cv::Mat bgr;
            cv::cvtColor(t.representative_crops[i], bgr, cv::COLOR_RGB2BGR);
            std::vector<uchar> png;
            if (!cv::imencode(".png", bgr, png)) throw Error("cannot encode crop " + (dir / file).string());
            atomic_write(dir / file, std::string_view(reinterpret_cast<const char*>(png.data()), png.size()));
            jt["crops"].push_back({{"file", file}, {"frame", t.representative_frames[i]}});
        }
        bundle["tracks"].push_back(std::move(jt));
    }
    atomic_write(dir / kBundleFile, bundle.dump(2) + "\n");
}

namespace {

std::string_view to_string(Action a) { return a == Action::select ? "select" : "discard"; }

}  // namespace

VerificationRecord verification_from_json(const json& j) {
    if (!j.is_object()) throw ManifestError("verification must be a JSON object");
    VerificationRecord v;
    if (!j.contains("video_id") || !j["video_id"].is_string() || j["video_id"].get<std::string>().empty()) {
        throw ManifestError("verification needs a non-empty string 'video_id'");
    }
    v.video_id = j["video_id"].get<std::string>();
    if (!j.contains("action") || !j["action"].is_string()) throw ManifestError("verification needs an 'action'");
    const auto action = j["action"].get<std::string>();
    if (action == "select") {
        v.action = Action::select;
        if (!j.contains("track_id") || !j["track_id"].is_number_integer()) {
            throw ManifestError("action 'select' needs an integer 'track_id'");
        }
        v.track_id = j["track_id"].get<int>();
    } else if (action == "discard") {
        v.action = Action::discard;
        if (j.contains("track_id") && !j["track_id"].is_null()) {
            throw ManifestError("action 'discard' takes no 'track_id'");
        }
    } else {
        throw ManifestError("unknown action '" + action + "' (expected select or discard)");
    }
    for (const char* key : {"annotator", "timestamp"}) {
        if (j.contains(key) && !j[key].is_null() && !j[key].is_string()) {
            throw ManifestError(std::string("'") + key + "' must be a string");
        }
    }
    if (j.contains("annotator") && j["annotator"].is_string()) v.annotator = j["annotator"].get<std::string>();
    if (j.contains("timestamp") && j["timestamp"].is_string()) v.timestamp = j["timestamp"].get<std::string>();
    return v;
}

json to_json(const VerificationRecord& v) {
    json j;
    j["video_id"] = v.video_id;
    j["action"] = to_string(v.action);
    j["track_id"] = v.track_id ? json(*v.track_id) : json(nullptr);
    j["annotator"] = v.annotator;
    j["timestamp"] = v.timestamp;
    return j;
}

std::optional<VerificationRecord> read_verification(const fs::path& file) {
    if (!fs::exists(file)) return std::nullopt;
    json j;
    try {
        j = json::parse(read_text(file));
    } catch (const json::parse_error& e) {
        throw ManifestError(file.string() + ": " + e.what());
    }
    try {
        return verification_from_json(j);
    } catch (const ManifestError& e) {
        throw ManifestError(file.string() + ": " + e.what());
    }
}

void write_verification(const fs::path& file, const VerificationRecord& v) {
    atomic_write(file, to_json(v).dump(2) + "\n");
}

TargetResolution apply_verification(const TargetResolution& resolution, const std::vector<int>& track_ids,
                                    const VerificationRecord& record) {
    if (record.video_id != resolution.video_id) {
        throw ManifestError("verification for '" + record.video_id + "' applied to video '" + resolution.video_id +
                            "'");
    }
    TargetResolution r = resolution;
    r.method = Method::manual;
    if (record.action == Action::discard) {
        r.status = Status::discarded;
        r.selected_track.reset();
        return r;
    }
    if (!record.track_id || std::find(track_ids.begin(), track_ids.end(), *record.track_id) == track_ids.end()) {
        throw ManifestError(resolution.video_id + ": verification selects unknown track " +
                            (record.track_id ? std::to_string(*record.track_id) : std::string("(none)")));
    }
    r.status = Status::confirmed;
    r.selected_track = record.track_id;
    return r;
}

std::optional<int> match_track(const Box& reference, const std::vector<CandidateTrack>& tracks, double min_iou) {
    std::optional<int> best;
    double best_iou = min_iou;
    for (const auto& t : tracks) {
        const double o = detector::iou(reference, t.median_box());
        if (o >= best_iou && (!best || o > best_iou)) {
            best = t.track_id;
            best_iou = o;
        }
    }
    return best;
}

}  // namespace leaderaffect::identity
