#pragma once

#include "leaderaffect/detector.hpp"

#include <opencv2/core.hpp>
#include <opencv2/dnn.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace leaderaffect::affect {

namespace fs = std::filesystem;

inline constexpr std::size_t kLabels = 7;

/// Canonical label order; also the argmax tie-break order.
inline constexpr std::array<std::string_view, kLabels> kLabelNames = {"angry", "disgust",  "fear",   "happy",
                                                                      "sad",   "surprise", "neutral"};

enum Label : std::size_t { angry, disgust, fear, happy, sad, surprise, neutral };

inline constexpr double kSimplexTolerance = 1e-3;

struct EmotionScores {
    std::array<double, kLabels> v{};

    double operator[](std::size_t i) const { return v[i]; }
    double& operator[](std::size_t i) { return v[i]; }
    double sum() const;
    bool operator==(const EmotionScores&) const = default;
};

/// Components in [0,1] and summing to 1 within kSimplexTolerance.
bool on_simplex(const EmotionScores& s);

/// Clamps negatives to zero and rescales to sum 1. Returns true when the input
/// was off the simplex and had to be changed.
bool close_simplex(EmotionScores& s);

/// angry + disgust + fear + sad
double negative_score(const EmotionScores& s);

Label dominant_label(const EmotionScores& s);

/// Seven-way facial expression classifier over 48x48 grayscale crops in [0,1].
///
/// The bundled network was trained on 64x64 inputs scaled to [-1,1]; crops are
/// upsampled bilinearly and rescaled before inference. One instance per thread.
class EmotionClassifier {
public:
    explicit EmotionClassifier(const detector::ModelFile& model);

    /// Throws ConfigError when `model_input` is not 48x48 single-channel.
    EmotionScores classify(const cv::Mat& model_input);

private:
    cv::dnn::Net net_;
    int side_ = 64;
};

struct SeriesPoint {
    std::int64_t frame_index = 0;
    double timestamp_s = 0;
    EmotionScores scores;
};

struct EmotionSeries {
    std::string video_id;
    std::vector<SeriesPoint> points;
    /// Frame indices whose scores were renormalized onto the simplex.
    std::vector<std::int64_t> renormalized;

    /// Appends in frame order; closes the simplex if needed and records the frame.
    void push(std::int64_t frame_index, double timestamp_s, EmotionScores scores);
};

struct VideoSummary {
    std::string video_id;
    std::string country_iso;
    std::string party;
    std::string leader;
    int populism_category = 0;
    std::int64_t frames = 0;
    std::array<double, kLabels> mean{};
    double mean_negative = 0;
    double neg_dominant_frac = 0;
    std::array<double, kLabels> dominance{};
};

/// Means, negative aggregate and dominance fractions over the series.
/// Throws Error on an empty series.
VideoSummary video_summary(const EmotionSeries& series);

inline constexpr int kStoredDecimals = 6;

std::string format_series_csv(const EmotionSeries& series);
EmotionSeries parse_series_csv(std::string_view text, const std::string& video_id);
void write_series_csv(const fs::path& path, const EmotionSeries& series);
EmotionSeries read_series_csv(const fs::path& path, const std::string& video_id);

std::vector<std::string> summary_columns();
std::string format_summary_csv(const std::vector<VideoSummary>& rows);
std::vector<VideoSummary> parse_summary_csv(std::string_view text, std::string_view source = "summary");
void write_summary_csv(const fs::path& path, const std::vector<VideoSummary>& rows);
std::vector<VideoSummary> read_summary_csv(const fs::path& path);

}  // namespace leaderaffect::affect
