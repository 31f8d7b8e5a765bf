#pragma once

#include "leaderaffect/detector.hpp"

#include <json.hpp>
#include <opencv2/core.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace leaderaffect::identity {

namespace fs = std::filesystem;
using detector::Box;
using detector::FaceDetection;

/// Size-filtered detections for one sampled frame. Frames without faces must
/// be present too: they count towards the coverage denominator.
struct FrameDetections {
    std::int64_t frame_index = 0;
    std::vector<FaceDetection> faces;
};

struct TrackMember {
    FaceDetection detection;
    /// Position of the detection within its frame's `faces` list.
    std::size_t slot = 0;
};

struct CandidateTrack {
    int track_id = 0;
    std::map<std::int64_t, TrackMember> members;
    /// Frame indices of the representative crops, evenly spaced over the members.
    std::vector<std::int64_t> representative_frames;
    /// Display crops matching representative_frames; filled in by the caller.
    std::vector<cv::Mat> representative_crops;
    double coverage = 0;

    /// Component-wise median of the member boxes.
    Box median_box() const;
    double median_area() const;
};

struct TrackingParams {
    /// Center distance divided by the previous box's mean side.
    double max_center_distance = 0.5;
    /// Ratio of the larger to the smaller box side (square root of area).
    double max_scale_ratio = 1.5;
    std::size_t max_crops = 9;
};

/// Greedy frame-by-frame association against each track's most recent box.
/// Track ids are 1-based in order of first appearance.
std::vector<CandidateTrack> group_tracks(const std::vector<FrameDetections>& frames,
                                         const TrackingParams& params = {});

/// `count` evenly spaced picks out of `n` positions: floor(i * n / count).
std::vector<std::size_t> evenly_spaced(std::size_t n, std::size_t count);

enum class Status { auto_confirmed, needs_review, confirmed, discarded };
enum class Method { single_face, largest_face, manual };

std::string_view to_string(Status s);
std::string_view to_string(Method m);
Status parse_status(std::string_view s);
Method parse_method(std::string_view s);

struct TargetResolution {
    std::string video_id;
    Status status = Status::needs_review;
    std::optional<int> selected_track;
    std::optional<Method> method;

    bool operator==(const TargetResolution&) const = default;
};

struct ResolutionPolicy {
    double auto_coverage = 0.90;
    /// With several tracks, the largest one must exceed every other track's
    /// median area by this factor to be picked automatically.
    double dominance_area_ratio = 1.0;
};

TargetResolution resolve_target(const std::string& video_id, const std::vector<CandidateTrack>& tracks,
                                const ResolutionPolicy& policy = {});

nlohmann::json to_json(const TargetResolution& r);
TargetResolution resolution_from_json(const nlohmann::json& j);

/// Writes `bundle.json` and `track_<id>_<n>.png` into `dir`. `metadata` is
/// copied verbatim into the bundle (leader, party, country, ...).
/// Throws Error with path context on I/O failure, and for an empty track list.
void export_review_bundle(const std::string& video_id, const std::vector<CandidateTrack>& tracks, const fs::path& dir,
                          const nlohmann::json& metadata = nlohmann::json::object());

inline constexpr const char* kBundleFile = "bundle.json";
inline constexpr const char* kVerificationFile = "verification.json";

enum class Action { select, discard };

struct VerificationRecord {
    std::string video_id;
    Action action = Action::select;
    std::optional<int> track_id;
    std::string annotator;
    std::string timestamp;
};

/// Validates the shape of a verification document; ManifestError on anything malformed.
VerificationRecord verification_from_json(const nlohmann::json& j);
nlohmann::json to_json(const VerificationRecord& v);

std::optional<VerificationRecord> read_verification(const fs::path& file);
void write_verification(const fs::path& file, const VerificationRecord& v);

/// Confirms the selected track or discards the video. ManifestError when the
/// record names another video or a track that does not exist.
TargetResolution apply_verification(const TargetResolution& resolution, const std::vector<int>& track_ids,
                                    const VerificationRecord& record);

/// Track whose median box overlaps `reference` best, if the IoU reaches `min_iou`.
std::optional<int> match_track(const Box& reference, const std::vector<CandidateTrack>& tracks, double min_iou = 0.3);

}  // namespace leaderaffect::identity
