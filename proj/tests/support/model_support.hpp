#pragma once

#include "leaderaffect/detector.hpp"
#include "leaderaffect/fsutil.hpp"
#include "test_support.hpp"

#include <json.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace testing {

inline leaderaffect::detector::ModelFile model_file(const std::string& name) {
    const auto sums = nlohmann::json::parse(leaderaffect::read_text(model("SHA256SUMS.json")));
    return {model(name), sums.at(name).get<std::string>()};
}

inline leaderaffect::detector::CascadeModels cascade_models() {
    return {model_file("mtcnn_pnet.onnx"), model_file("mtcnn_rnet.onnx"), model_file("mtcnn_onet.onnx")};
}

inline leaderaffect::detector::ModelFile emotion_model() { return model_file("emotion_mini_xception.onnx"); }

inline cv::Mat read_rgb(const std::string& rel) {
    cv::Mat bgr = cv::imread(fixture(rel).string(), cv::IMREAD_COLOR);
    cv::Mat rgb;
    cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
    return rgb;
}

inline nlohmann::json oracles() {
    return nlohmann::json::parse(leaderaffect::read_text(fixture("reference/oracles.json")));
}

}  // namespace testing
