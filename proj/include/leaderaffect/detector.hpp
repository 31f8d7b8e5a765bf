#pragma once

#include <opencv2/core.hpp>
#include <opencv2/dnn.hpp>

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace leaderaffect::detector {

namespace fs = std::filesystem;

/// Pixel box, (x, y) top-left corner.
struct Box {
    double x = 0, y = 0, w = 0, h = 0;

    double area() const { return w > 0 && h > 0 ? w * h : 0.0; }
    double cx() const { return x + w / 2; }
    double cy() const { return y + h / 2; }
    bool operator==(const Box&) const = default;
};

double iou(const Box& a, const Box& b);

struct ScoredBox {
    Box box;
    double score = 0;
};

/// Greedy suppression in descending score order (stable for equal scores).
/// A candidate is dropped when its IoU with an already kept box is >= threshold.
std::vector<ScoredBox> nms(std::vector<ScoredBox> candidates, double iou_threshold);

struct Point {
    double x = 0, y = 0;
    bool operator==(const Point&) const = default;
};

struct FaceDetection {
    Box box;
    double confidence = 0;
    /// left eye, right eye, nose, left mouth corner, right mouth corner
    std::array<Point, 5> landmarks{};
};

inline constexpr std::array<const char*, 5> kLandmarkNames = {"left_eye", "right_eye", "nose", "mouth_left",
                                                              "mouth_right"};

struct ModelFile {
    fs::path path;
    std::string sha256;
};

struct CascadeModels {
    ModelFile pnet, rnet, onet;
};

struct CascadeParams {
    /// Smallest face the image pyramid is built to find. Independent of the
    /// reporting size filter passed to detect_faces.
    int pyramid_min_face = 20;
    double scale_factor = 0.709;
    std::array<double, 3> stage_thresholds = {0.6, 0.7, 0.7};
    double pnet_scale_nms = 0.5;
    double pnet_merge_nms = 0.7;
    double rnet_nms = 0.7;
    double onet_nms = 0.7;
};

/// Reads an ONNX file after checking its SHA-256; ConfigError on mismatch or load failure.
cv::dnn::Net load_verified_onnx(const ModelFile& model);

/// Three-stage cascaded detector (proposal, refine, output networks).
///
/// Instances hold cv::dnn::Net objects, whose forward pass mutates internal
/// buffers: use one instance per thread.
class CascadeDetector {
public:
    explicit CascadeDetector(const CascadeModels& models, CascadeParams params = {});

    /// All faces found in an RGB 8-bit frame, before any size filter.
    std::vector<FaceDetection> detect(const cv::Mat& rgb);

    const CascadeParams& params() const { return params_; }

private:
    cv::dnn::Net pnet_, rnet_, onet_;
    CascadeParams params_;
};

/// Detections with w >= min_size and h >= min_size, clipped to the frame,
/// sorted by descending confidence.
std::vector<FaceDetection> detect_faces(const cv::Mat& rgb, int min_size, CascadeDetector& model);

struct FaceCrop {
    FaceDetection source;
    cv::Mat display_crop;  ///< CV_8UC3 RGB, square region around the box
    cv::Mat model_input;   ///< CV_32FC1, 48x48, values in [0, 1]
};

inline constexpr int kModelInputSide = 48;

/// Expands the box to a square about its center (clipped at frame edges),
/// converts to luma and resizes to 48x48. CropError on degenerate boxes.
FaceCrop crop_and_align(const cv::Mat& rgb, const FaceDetection& det);

}  // namespace leaderaffect::detector
