#include "leaderaffect/detector.hpp"
#include "leaderaffect/errors.hpp"
#include "model_support.hpp"

#include <doctest.h>

#include <cmath>

using namespace leaderaffect;
using namespace leaderaffect::detector;

namespace {

CascadeDetector& shared_detector() {
    static CascadeDetector det(testing::cascade_models());
    return det;
}

FaceDetection with_box(double x, double y, double w, double h) {
    FaceDetection d;
    d.box = {x, y, w, h};
    d.confidence = 0.99;
    return d;
}

}  // namespace

TEST_SUITE("detector") {
    TEST_CASE("IoU") {
        CHECK(iou({0, 0, 10, 10}, {0, 0, 10, 10}) == doctest::Approx(1.0));
        CHECK(iou({0, 0, 10, 10}, {20, 20, 5, 5}) == 0.0);
        CHECK(iou({0, 0, 10, 10}, {2, 0, 10, 10}) == doctest::Approx(80.0 / 120.0));
        CHECK(iou({0, 0, 0, 10}, {0, 0, 10, 10}) == 0.0);
    }

    TEST_CASE("NMS examples") {
        SUBCASE("identical boxes") {
            const auto kept = nms({{{0, 0, 10, 10}, 0.9}, {{0, 0, 10, 10}, 0.8}}, 0.5);
            REQUIRE(kept.size() == 1);
            CHECK(kept[0].score == 0.9);
        }
        SUBCASE("disjoint boxes") {
            CHECK(nms({{{0, 0, 10, 10}, 0.9}, {{50, 50, 10, 10}, 0.8}}, 0.5).size() == 2);
        }
        SUBCASE("IoU 0.667 above threshold 0.6 drops the weaker") {
            const auto kept = nms({{{2, 0, 10, 10}, 0.8}, {{0, 0, 10, 10}, 0.9}}, 0.6);
            REQUIRE(kept.size() == 1);
            CHECK(kept[0].box == Box{0, 0, 10, 10});
        }
        SUBCASE("same pair below threshold keeps both") {
            CHECK(nms({{{0, 0, 10, 10}, 0.9}, {{2, 0, 10, 10}, 0.8}}, 0.7).size() == 2);
        }
    }

    TEST_CASE("model hash mismatch is a configuration error") {
        auto m = testing::model_file("mtcnn_pnet.onnx");
        m.sha256 = std::string(64, '0');
        CHECK_THROWS_WITH_AS(load_verified_onnx(m), doctest::Contains("hash"), ConfigError);
        CHECK_THROWS_AS(load_verified_onnx({"/nonexistent.onnx", ""}), ConfigError);
    }

    TEST_CASE("swapped cascade stages are rejected at load time") {
        auto models = testing::cascade_models();
        std::swap(models.pnet, models.onet);
        CHECK_THROWS_AS(CascadeDetector{models}, ConfigError);
    }

    TEST_CASE("one frontal face matches the reference implementation") {
        const auto ref = testing::oracles()["detector"]["one_face"];
        const auto faces = shared_detector().detect(testing::read_rgb("frames/one_face.png"));
        REQUIRE(faces.size() == ref.size());
        REQUIRE(faces.size() == 1);
        const auto& f = faces[0];
        const auto box = ref[0]["box"];
        CHECK(std::trunc(f.box.x) == box[0].get<double>());
        CHECK(std::trunc(f.box.y) == box[1].get<double>());
        CHECK(std::trunc(f.box.w) == box[2].get<double>());
        CHECK(std::trunc(f.box.h) == box[3].get<double>());
        CHECK(f.confidence == doctest::Approx(ref[0]["confidence"].get<double>()).epsilon(1e-5));
        CHECK(f.confidence > 0.9);
        for (std::size_t i = 0; i < kLandmarkNames.size(); ++i) {
            const auto kp = ref[0]["keypoints"][kLandmarkNames[i]];
            CHECK(std::abs(f.landmarks[i].x - kp[0].get<double>()) <= 1.0);
            CHECK(std::abs(f.landmarks[i].y - kp[1].get<double>()) <= 1.0);
        }
    }

    TEST_CASE("noise frame has no faces") {
        CHECK(shared_detector().detect(testing::read_rgb("frames/noise.png")).empty());
    }

    TEST_CASE("downscaled face is found by the cascade but dropped by the 50 px filter") {
        const auto ref = testing::oracles()["detector"]["small_face"];
        const auto rgb = testing::read_rgb("frames/small_face.png");
        const auto raw = shared_detector().detect(rgb);
        REQUIRE(raw.size() == 1);
        CHECK(std::trunc(raw[0].box.w) == ref[0]["box"][2].get<double>());
        CHECK(std::trunc(raw[0].box.h) == ref[0]["box"][3].get<double>());
        CHECK(raw[0].confidence == doctest::Approx(ref[0]["confidence"].get<double>()).epsilon(1e-5));
        CHECK(detect_faces(rgb, 50, shared_detector()).empty());
        CHECK(detect_faces(rgb, 30, shared_detector()).size() == 1);
    }

    TEST_CASE("detect_faces keeps large faces, clipped to the frame") {
        const auto rgb = testing::read_rgb("frames/one_face.png");
        const auto faces = detect_faces(rgb, 50, shared_detector());
        REQUIRE(faces.size() == 1);
        const auto& b = faces[0].box;
        CHECK(b.x >= 0);
        CHECK(b.y >= 0);
        CHECK(b.x + b.w <= rgb.cols);
        CHECK(b.y + b.h <= rgb.rows);
    }

    TEST_CASE("crop contract") {
        const cv::Mat rgb(240, 320, CV_8UC3, cv::Scalar(200, 100, 50));
        SUBCASE("100x100 box") {
            const auto c = crop_and_align(rgb, with_box(50, 50, 100, 100));
            CHECK(c.model_input.rows == 48);
            CHECK(c.model_input.cols == 48);
            CHECK(c.model_input.type() == CV_32FC1);
            double lo = 0, hi = 0;
            cv::minMaxLoc(c.model_input, &lo, &hi);
            CHECK(lo >= 0.0);
            CHECK(hi <= 1.0);
            CHECK(c.display_crop.rows == 100);
            CHECK(c.display_crop.cols == 100);
        }
        SUBCASE("80x100 box is squared about its center") {
            const auto c = crop_and_align(rgb, with_box(60, 40, 80, 100));
            CHECK(c.display_crop.rows == 100);
            CHECK(c.display_crop.cols == 100);
            CHECK(c.model_input.size() == cv::Size(48, 48));
        }
        SUBCASE("box at the border is clipped") {
            const auto c = crop_and_align(rgb, with_box(280, 200, 60, 60));
            CHECK(c.display_crop.cols == 40);
            CHECK(c.display_crop.rows == 40);
            CHECK(c.model_input.size() == cv::Size(48, 48));
        }
        SUBCASE("degenerate and outside boxes") {
            CHECK_THROWS_AS(crop_and_align(rgb, with_box(10, 10, 0, 20)), CropError);
            CHECK_THROWS_AS(crop_and_align(rgb, with_box(10, 10, 20, 0)), CropError);
            CHECK_THROWS_AS(crop_and_align(rgb, with_box(1000, 1000, 20, 20)), CropError);
        }
    }

    TEST_CASE("crop of the oracle box matches the golden file and is stable") {
        const auto ref = testing::oracles()["detector"]["one_face"][0]["box"];
        const auto rgb = testing::read_rgb("frames/one_face.png");
        const auto det = with_box(ref[0].get<double>(), ref[1].get<double>(), ref[2].get<double>(),
                                  ref[3].get<double>());
        const auto a = crop_and_align(rgb, det);
        const auto b = crop_and_align(rgb, det);
        CHECK(cv::norm(a.model_input, b.model_input, cv::NORM_INF) == 0.0);

        const cv::Mat golden = cv::imread(testing::fixture("reference/crop_one_face.png").string(), cv::IMREAD_GRAYSCALE);
        REQUIRE(golden.size() == cv::Size(48, 48));
        cv::Mat ours;
        a.model_input.convertTo(ours, CV_8U, 255.0);
        CHECK(cv::norm(ours, golden, cv::NORM_INF) == 0.0);
    }
}
