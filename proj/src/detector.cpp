#include "leaderaffect/detector.hpp"

#include "leaderaffect/errors.hpp"
#include "leaderaffect/fsutil.hpp"

#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace leaderaffect::detector {

double iou(const Box& a, const Box& b) {
    const double ix = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
    const double iy = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
    if (ix <= 0 || iy <= 0) return 0.0;
    const double inter = ix * iy;
    const double uni = a.area() + b.area() - inter;
    return uni > 0 ? inter / uni : 0.0;
}

std::vector<ScoredBox> nms(std::vector<ScoredBox> candidates, double iou_threshold) {
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const ScoredBox& a, const ScoredBox& b) { return a.score > b.score; });
    std::vector<ScoredBox> kept;
    for (const auto& c : candidates) {
        const bool suppressed = std::any_of(kept.begin(), kept.end(),
                                            [&](const ScoredBox& k) { return iou(k.box, c.box) >= iou_threshold; });
        if (!suppressed) kept.push_back(c);
    }
    return kept;
}

cv::dnn::Net load_verified_onnx(const ModelFile& model) {
    if (!fs::exists(model.path)) throw ConfigError("model file not found: " + model.path.string());
    const std::string bytes = read_text(model.path);
    if (!model.sha256.empty()) {
        const std::string actual = sha256_hex(bytes);
        if (actual != model.sha256) {
            throw ConfigError("hash mismatch for " + model.path.string() + ": expected " + model.sha256 + ", got " +
                              actual);
        }
    }
    try {
        std::vector<uchar> buf(bytes.begin(), bytes.end());
        cv::dnn::Net net = cv::dnn::readNetFromONNX(buf);
        if (net.empty()) throw ConfigError("empty network in " + model.path.string());
        net.setPreferableBackend(cv::dnn::DNN_BACKEND_OPENCV);
        net.setPreferableTarget(cv::dnn::DNN_TARGET_CPU);
        return net;
    } catch (const cv::Exception& e) {
        throw ConfigError("cannot load " + model.path.string() + ": " + e.what());
    }
}

namespace {

// Corner-form box used inside the cascade: inclusive pixel coordinates, 1-based
// in the crop convention of the reference implementation.
struct Cand {
    double x1, y1, x2, y2, score;
    double r[4] = {0, 0, 0, 0};
};

enum class Overlap { union_, min };

std::vector<std::size_t> cascade_nms(const std::vector<Cand>& boxes, double threshold, Overlap method) {
    std::vector<std::size_t> order(boxes.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return boxes[a].score > boxes[b].score; });
    std::vector<std::size_t> pick;
    std::vector<bool> dead(boxes.size(), false);
    for (std::size_t oi = 0; oi < order.size(); ++oi) {
        const std::size_t i = order[oi];
        if (dead[i]) continue;
        pick.push_back(i);
        const Cand& a = boxes[i];
        const double area_a = (a.x2 - a.x1 + 1) * (a.y2 - a.y1 + 1);
        for (std::size_t oj = oi + 1; oj < order.size(); ++oj) {
            const std::size_t j = order[oj];
            if (dead[j]) continue;
            const Cand& b = boxes[j];
            const double area_b = (b.x2 - b.x1 + 1) * (b.y2 - b.y1 + 1);
            const double w = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1) + 1);
            const double h = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1) + 1);
            const double inter = w * h;
            const double o =
                method == Overlap::min ? inter / std::min(area_a, area_b) : inter / (area_a + area_b - inter);
            if (o > threshold) dead[j] = true;
        }
    }
    return pick;
}

std::vector<Cand> select(const std::vector<Cand>& boxes, const std::vector<std::size_t>& idx) {
    std::vector<Cand> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(boxes[i]);
    return out;
}

void rerec(Cand& c) {
    const double h = c.y2 - c.y1;
    const double w = c.x2 - c.x1;
    const double side = std::max(w, h);
    c.x1 = c.x1 + w * 0.5 - side * 0.5;
    c.y1 = c.y1 + h * 0.5 - side * 0.5;
    c.x2 = c.x1 + side;
    c.y2 = c.y1 + side;
}

void bbreg(Cand& c, const float* reg) {
    const double w = c.x2 - c.x1 + 1;
    const double h = c.y2 - c.y1 + 1;
    c.x1 += reg[0] * w;
    c.y1 += reg[1] * h;
    c.x2 += reg[2] * w;
    c.y2 += reg[3] * h;
}

void fix(Cand& c) {
    c.x1 = std::trunc(c.x1);
    c.y1 = std::trunc(c.y1);
    c.x2 = std::trunc(c.x2);
    c.y2 = std::trunc(c.y2);
}

cv::Mat normalize(const cv::Mat& img) {
    cv::Mat out;
    img.convertTo(out, CV_32F, 0.0078125, -127.5 * 0.0078125);
    return out;
}

// The networks were trained on column-major images: axis 2 of the blob is x.
cv::Mat to_blob(const std::vector<cv::Mat>& images) {
    std::vector<cv::Mat> t(images.size());
    for (std::size_t i = 0; i < images.size(); ++i) cv::transpose(images[i], t[i]);
    return cv::dnn::blobFromImages(t, 1.0, cv::Size(), cv::Scalar(), false, false, CV_32F);
}

// Box region with zero fill outside the frame, resized to side x side.
bool padded_crop(const cv::Mat& frame, const Cand& c, int side, cv::Mat& out) {
    const int x1 = static_cast<int>(c.x1);
    const int y1 = static_cast<int>(c.y1);
    const int tw = static_cast<int>(c.x2 - c.x1 + 1);
    const int th = static_cast<int>(c.y2 - c.y1 + 1);
    if (tw < 1 || th < 1) return false;
    cv::Mat canvas(th, tw, CV_32FC3, cv::Scalar::all(0));
    // canvas pixel (0,0) is frame pixel (x1-1, y1-1)
    const cv::Rect want(x1 - 1, y1 - 1, tw, th);
    const cv::Rect inside = want & cv::Rect(0, 0, frame.cols, frame.rows);
    if (inside.area() > 0) {
        frame(inside).convertTo(canvas(cv::Rect(inside.x - want.x, inside.y - want.y, inside.width, inside.height)),
                                CV_32F);
    }
    cv::resize(canvas, out, cv::Size(side, side), 0, 0, cv::INTER_AREA);
    return true;
}

void verify_outputs(cv::dnn::Net& net, const std::vector<int>& shape, const std::vector<cv::String>& names,
                    const std::vector<int>& channels, const std::string& what) {
    try {
        cv::Mat blob(static_cast<int>(shape.size()), shape.data(), CV_32F, cv::Scalar(0));
        net.setInput(blob, "input");
        std::vector<cv::Mat> outs;
        net.forward(outs, names);
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (outs[i].dims < 2 || outs[i].size[1] != channels[i]) {
                throw ConfigError(what + ": output '" + names[i] + "' has unexpected shape");
            }
        }
    } catch (const cv::Exception& e) {
        throw ConfigError(what + ": model does not accept the expected input: " + e.what());
    }
}

}  // namespace

CascadeDetector::CascadeDetector(const CascadeModels& models, CascadeParams params)
    : pnet_(load_verified_onnx(models.pnet)),
      rnet_(load_verified_onnx(models.rnet)),
      onet_(load_verified_onnx(models.onet)),
      params_(params) {
    if (params_.pyramid_min_face < 1) throw ConfigError("pyramid_min_face must be >= 1");
    if (params_.scale_factor <= 0 || params_.scale_factor >= 1) throw ConfigError("scale_factor must be in (0, 1)");
    verify_outputs(pnet_, {1, 3, 12, 12}, {"reg", "prob"}, {4, 2}, "proposal network " + models.pnet.path.string());
    verify_outputs(rnet_, {1, 3, 24, 24}, {"reg", "prob"}, {4, 2}, "refine network " + models.rnet.path.string());
    verify_outputs(onet_, {1, 3, 48, 48}, {"reg", "landmarks", "prob"}, {4, 10, 2},
                   "output network " + models.onet.path.string());
}

std::vector<FaceDetection> CascadeDetector::detect(const cv::Mat& rgb) {
    if (rgb.empty()) throw Error("empty frame passed to the face detector");
    if (rgb.type() != CV_8UC3) throw Error("face detector expects an 8-bit 3-channel RGB frame");
    const int width = rgb.cols;
    const int height = rgb.rows;
    const auto& th = params_.stage_thresholds;

    // stage 1: proposals over the image pyramid
    const double m = 12.0 / params_.pyramid_min_face;
    std::vector<double> scales;
    for (double min_layer = std::min(width, height) * m, s = m; min_layer >= 12; min_layer *= params_.scale_factor) {
        scales.push_back(s);
        s *= params_.scale_factor;
    }

    std::vector<Cand> total;
    for (double scale : scales) {
        const int ws = static_cast<int>(std::ceil(width * scale));
        const int hs = static_cast<int>(std::ceil(height * scale));
        cv::Mat scaled;
        cv::resize(rgb, scaled, cv::Size(ws, hs), 0, 0, cv::INTER_AREA);
        pnet_.setInput(to_blob({normalize(scaled)}), "input");
        std::vector<cv::Mat> outs;
        pnet_.forward(outs, std::vector<cv::String>{"reg", "prob"});
        const cv::Mat& reg = outs[0];
        const cv::Mat& prob = outs[1];
        const int ox = prob.size[2];
        const int oy = prob.size[3];
        const std::size_t plane = static_cast<std::size_t>(ox) * static_cast<std::size_t>(oy);
        const float* face = prob.ptr<float>() + plane;
        const float* r = reg.ptr<float>();

        std::vector<Cand> boxes;
        for (int xi = 0; xi < ox; ++xi) {
            for (int yi = 0; yi < oy; ++yi) {
                const std::size_t at = static_cast<std::size_t>(xi) * oy + yi;
                if (face[at] < th[0]) continue;
                Cand c{std::trunc((2.0 * xi + 1) / scale), std::trunc((2.0 * yi + 1) / scale),
                       std::trunc((2.0 * xi + 12) / scale), std::trunc((2.0 * yi + 12) / scale), face[at]};
                for (int k = 0; k < 4; ++k) c.r[k] = r[k * plane + at];
                boxes.push_back(c);
            }
        }
        for (const auto& c : select(boxes, cascade_nms(boxes, params_.pnet_scale_nms, Overlap::union_))) {
            total.push_back(c);
        }
    }
    if (total.empty()) return {};

    total = select(total, cascade_nms(total, params_.pnet_merge_nms, Overlap::union_));
    for (auto& c : total) {
        const double rw = c.x2 - c.x1;
        const double rh = c.y2 - c.y1;
        c = Cand{c.x1 + c.r[0] * rw, c.y1 + c.r[1] * rh, c.x2 + c.r[2] * rw, c.y2 + c.r[3] * rh, c.score};
        rerec(c);
        fix(c);
    }

    // stage 2: refine
    {
        std::vector<cv::Mat> crops;
        std::vector<Cand> kept;
        for (const auto& c : total) {
            cv::Mat crop;
            if (!padded_crop(rgb, c, 24, crop)) continue;
            crops.push_back(normalize(crop));
            kept.push_back(c);
        }
        if (kept.empty()) return {};
        rnet_.setInput(to_blob(crops), "input");
        std::vector<cv::Mat> outs;
        rnet_.forward(outs, std::vector<cv::String>{"reg", "prob"});
        std::vector<Cand> pass;
        for (std::size_t i = 0; i < kept.size(); ++i) {
            const float score = outs[1].at<float>(static_cast<int>(i), 1);
            if (score <= th[1]) continue;
            Cand c = kept[i];
            c.score = score;
            for (int k = 0; k < 4; ++k) c.r[k] = outs[0].at<float>(static_cast<int>(i), k);
            pass.push_back(c);
        }
        if (pass.empty()) return {};
        total = select(pass, cascade_nms(pass, params_.rnet_nms, Overlap::union_));
        for (auto& c : total) {
            float reg[4] = {static_cast<float>(c.r[0]), static_cast<float>(c.r[1]), static_cast<float>(c.r[2]),
                            static_cast<float>(c.r[3])};
            bbreg(c, reg);
            rerec(c);
        }
    }

    // stage 3: output boxes and landmarks
    std::vector<FaceDetection> result;
    {
        std::vector<cv::Mat> crops;
        std::vector<Cand> kept;
        for (auto c : total) {
            fix(c);
            cv::Mat crop;
            if (!padded_crop(rgb, c, 48, crop)) continue;
            crops.push_back(normalize(crop));
            kept.push_back(c);
        }
        if (kept.empty()) return {};
        onet_.setInput(to_blob(crops), "input");
        std::vector<cv::Mat> outs;
        onet_.forward(outs, std::vector<cv::String>{"reg", "landmarks", "prob"});
        std::vector<Cand> pass;
        std::vector<std::array<Point, 5>> points;
        for (std::size_t i = 0; i < kept.size(); ++i) {
            const int row = static_cast<int>(i);
            const float score = outs[2].at<float>(row, 1);
            if (score <= th[2]) continue;
            Cand c = kept[i];
            c.score = score;
            const double w = c.x2 - c.x1 + 1;
            const double h = c.y2 - c.y1 + 1;
            std::array<Point, 5> p{};
            for (int k = 0; k < 5; ++k) {
                p[k].x = w * outs[1].at<float>(row, k) + c.x1 - 1;
                p[k].y = h * outs[1].at<float>(row, k + 5) + c.y1 - 1;
            }
            bbreg(c, outs[0].ptr<float>(row));
            pass.push_back(c);
            points.push_back(p);
        }
        for (auto i : cascade_nms(pass, params_.onet_nms, Overlap::min)) {
            const Cand& c = pass[i];
            FaceDetection d;
            const double x = std::max(0.0, std::trunc(c.x1));
            const double y = std::max(0.0, std::trunc(c.y1));
            d.box = {x, y, std::trunc(c.x2 - x), std::trunc(c.y2 - y)};
            d.confidence = c.score;
            d.landmarks = points[i];
            result.push_back(d);
        }
    }
    return result;
}

std::vector<FaceDetection> detect_faces(const cv::Mat& rgb, int min_size, CascadeDetector& model) {
    auto faces = model.detect(rgb);
    std::vector<FaceDetection> out;
    for (auto f : faces) {
        Box& b = f.box;
        b.w = std::min(b.w, rgb.cols - b.x);
        b.h = std::min(b.h, rgb.rows - b.y);
        if (b.w >= min_size && b.h >= min_size) out.push_back(f);
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const FaceDetection& a, const FaceDetection& b) { return a.confidence > b.confidence; });
    return out;
}

FaceCrop crop_and_align(const cv::Mat& rgb, const FaceDetection& det) {
    const Box& b = det.box;
    if (!(b.w >= 1) || !(b.h >= 1)) {
        throw CropError("degenerate face box " + std::to_string(b.w) + "x" + std::to_string(b.h));
    }
    if (rgb.empty() || rgb.type() != CV_8UC3) throw CropError("crop source must be an 8-bit RGB frame");
    const double side = std::max(b.w, b.h);
    const int x0 = static_cast<int>(std::lround(b.cx() - side / 2));
    const int y0 = static_cast<int>(std::lround(b.cy() - side / 2));
    const int s = static_cast<int>(std::lround(side));
    const cv::Rect region = cv::Rect(x0, y0, s, s) & cv::Rect(0, 0, rgb.cols, rgb.rows);
    if (region.width < 1 || region.height < 1) throw CropError("face box lies outside the frame");

    FaceCrop crop;
    crop.source = det;
    crop.display_crop = rgb(region).clone();
    cv::Mat gray;
    cv::cvtColor(crop.display_crop, gray, cv::COLOR_RGB2GRAY);
    cv::Mat small;
    cv::resize(gray, small, cv::Size(kModelInputSide, kModelInputSide), 0, 0, cv::INTER_AREA);
    small.convertTo(crop.model_input, CV_32F, 1.0 / 255.0);
    return crop;
}

}  // namespace leaderaffect::detector
