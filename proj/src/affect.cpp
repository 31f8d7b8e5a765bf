#include "leaderaffect/affect.hpp"

#include "leaderaffect/csv.hpp"
#include "leaderaffect/errors.hpp"
#include "leaderaffect/fsutil.hpp"

#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cmath>

namespace leaderaffect::affect {

double EmotionScores::sum() const {
    double s = 0;
    for (double x : v) s += x;
    return s;
}

bool on_simplex(const EmotionScores& s) {
    for (double x : s.v) {
        if (!(x >= 0.0 && x <= 1.0)) return false;
    }
    return std::abs(s.sum() - 1.0) <= kSimplexTolerance;
}

bool close_simplex(EmotionScores& s) {
    if (on_simplex(s)) return false;
    double total = 0;
    for (double& x : s.v) {
        if (!std::isfinite(x) || x < 0) x = 0;
        total += x;
    }
    if (!(total > 0)) throw Error("emotion scores have no positive mass and cannot be renormalized");
    for (double& x : s.v) x /= total;
    return true;
}

double negative_score(const EmotionScores& s) { return s[angry] + s[disgust] + s[fear] + s[sad]; }

Label dominant_label(const EmotionScores& s) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < kLabels; ++i) {
        if (s[i] > s[best]) best = i;
    }
    return static_cast<Label>(best);
}

EmotionClassifier::EmotionClassifier(const detector::ModelFile& model) : net_(detector::load_verified_onnx(model)) {
    try {
        cv::Mat probe(std::vector<int>{1, 1, side_, side_}, CV_32F, cv::Scalar(0));
        net_.setInput(probe, "input");
        cv::Mat out = net_.forward("scores");
        if (out.total() != kLabels) {
            throw ConfigError("classifier " + model.path.string() + " produces " + std::to_string(out.total()) +
                              " scores, expected 7");
        }
    } catch (const cv::Exception& e) {
        throw ConfigError("classifier " + model.path.string() + " does not accept 1x1x64x64 input: " + e.what());
    }
}

EmotionScores EmotionClassifier::classify(const cv::Mat& model_input) {
    if (model_input.rows != detector::kModelInputSide || model_input.cols != detector::kModelInputSide ||
        model_input.channels() != 1) {
        throw ConfigError("classifier input must be 48x48x1, got " + std::to_string(model_input.cols) + "x" +
                          std::to_string(model_input.rows) + "x" + std::to_string(model_input.channels()));
    }
    cv::Mat unit;
    model_input.convertTo(unit, CV_32F, model_input.depth() == CV_8U ? 1.0 / 255.0 : 1.0);
    cv::Mat up;
    cv::resize(unit, up, cv::Size(side_, side_), 0, 0, cv::INTER_LINEAR);
    up = up * 2.0 - 1.0;
    net_.setInput(cv::dnn::blobFromImage(up), "input");
    const cv::Mat out = net_.forward("scores");
    EmotionScores s;
    for (std::size_t i = 0; i < kLabels; ++i) s[i] = out.ptr<float>()[i];
    return s;
}

void EmotionSeries::push(std::int64_t frame_index, double timestamp_s, EmotionScores scores) {
    if (!points.empty() && frame_index <= points.back().frame_index) {
        throw Error(video_id + ": series frames must be strictly increasing (" + std::to_string(frame_index) +
                    " after " + std::to_string(points.back().frame_index) + ")");
    }
    if (close_simplex(scores)) renormalized.push_back(frame_index);
    points.push_back({frame_index, timestamp_s, scores});
}

VideoSummary video_summary(const EmotionSeries& series) {
    if (series.points.empty()) throw Error(series.video_id + ": cannot summarize an empty emotion series");
    VideoSummary s;
    s.video_id = series.video_id;
    const double n = static_cast<double>(series.points.size());
    std::size_t neg_dominant = 0;
    for (const auto& p : series.points) {
        for (std::size_t i = 0; i < kLabels; ++i) s.mean[i] += p.scores[i];
        s.dominance[dominant_label(p.scores)] += 1;
        if (negative_score(p.scores) >= 0.5) ++neg_dominant;
    }
    for (std::size_t i = 0; i < kLabels; ++i) {
        s.mean[i] /= n;
        s.dominance[i] /= n;
    }
    s.frames = static_cast<std::int64_t>(series.points.size());
    s.mean_negative = s.mean[angry] + s.mean[disgust] + s.mean[fear] + s.mean[sad];
    s.neg_dominant_frac = static_cast<double>(neg_dominant) / n;
    return s;
}

// ---------------------------------------------------------------------------
// CSV I/O

namespace {

double parse_double(const std::string& s, std::string_view source, std::size_t line, std::string_view column) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::logic_error&) {
        throw SchemaError(std::string(source) + " line " + std::to_string(line) + ": column " + std::string(column) +
                          " is not a number: '" + s + "'");
    }
}

std::int64_t parse_int(const std::string& s, std::string_view source, std::size_t line, std::string_view column) {
    const double v = parse_double(s, source, line, column);
    if (v != std::floor(v)) {
        throw SchemaError(std::string(source) + " line " + std::to_string(line) + ": column " + std::string(column) +
                          " is not an integer: '" + s + "'");
    }
    return static_cast<std::int64_t>(v);
}

void require_header(const csv::Table& t, const std::vector<std::string>& expected, std::string_view source) {
    for (const auto& col : expected) {
        if (t.column(col) < 0) throw SchemaError(std::string(source) + ": missing column " + col);
    }
}

std::vector<std::string> series_columns() {
    std::vector<std::string> cols = {"frame", "timestamp"};
    for (auto l : kLabelNames) cols.emplace_back(l);
    return cols;
}

}  // namespace

std::string format_series_csv(const EmotionSeries& series) {
    std::string out = csv::format_row(series_columns());
    for (const auto& p : series.points) {
        csv::Row row = {std::to_string(p.frame_index), format_fixed(p.timestamp_s, kStoredDecimals)};
        for (double v : p.scores.v) row.push_back(format_fixed(v, kStoredDecimals));
        out += csv::format_row(row);
    }
    return out;
}

EmotionSeries parse_series_csv(std::string_view text, const std::string& video_id) {
    const auto t = csv::parse(text);
    const auto cols = series_columns();
    require_header(t, cols, video_id + " series");
    EmotionSeries s;
    s.video_id = video_id;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        auto get = [&](const std::string& c) { return row.at(static_cast<std::size_t>(t.column(c))); };
        SeriesPoint p;
        p.frame_index = parse_int(get("frame"), video_id, t.lines[r], "frame");
        p.timestamp_s = parse_double(get("timestamp"), video_id, t.lines[r], "timestamp");
        for (std::size_t i = 0; i < kLabels; ++i) {
            p.scores[i] = parse_double(get(std::string(kLabelNames[i])), video_id, t.lines[r], kLabelNames[i]);
        }
        if (!s.points.empty() && p.frame_index <= s.points.back().frame_index) {
            throw SchemaError(video_id + " series line " + std::to_string(t.lines[r]) + ": frames not increasing");
        }
        s.points.push_back(p);
    }
    return s;
}

void write_series_csv(const fs::path& path, const EmotionSeries& series) {
    atomic_write(path, format_series_csv(series));
}

EmotionSeries read_series_csv(const fs::path& path, const std::string& video_id) {
    return parse_series_csv(read_text(path), video_id);
}

std::vector<std::string> summary_columns() {
    std::vector<std::string> cols = {"video_id", "country_iso", "party", "leader", "populism_category", "frames"};
    for (auto l : kLabelNames) cols.push_back("mean_" + std::string(l));
    cols.emplace_back("mean_negative");
    cols.emplace_back("neg_dominant_frac");
    for (auto l : kLabelNames) cols.push_back("dom_" + std::string(l));
    return cols;
}

std::string format_summary_csv(const std::vector<VideoSummary>& rows) {
    std::string out = csv::format_row(summary_columns());
    for (const auto& s : rows) {
        csv::Row row = {s.video_id, s.country_iso, s.party, s.leader, std::to_string(s.populism_category),
                        std::to_string(s.frames)};
        for (double v : s.mean) row.push_back(format_fixed(v, kStoredDecimals));
        row.push_back(format_fixed(s.mean_negative, kStoredDecimals));
        row.push_back(format_fixed(s.neg_dominant_frac, kStoredDecimals));
        for (double v : s.dominance) row.push_back(format_fixed(v, kStoredDecimals));
        out += csv::format_row(row);
    }
    return out;
}

std::vector<VideoSummary> parse_summary_csv(std::string_view text, std::string_view source) {
    const auto t = csv::parse(text);
    const auto cols = summary_columns();
    require_header(t, cols, source);
    std::vector<VideoSummary> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        const std::size_t line = t.lines[r];
        auto get = [&](const std::string& c) { return csv::trim(row.at(static_cast<std::size_t>(t.column(c)))); };
        auto num = [&](const std::string& c) { return parse_double(get(c), source, line, c); };
        VideoSummary s;
        s.video_id = get("video_id");
        s.country_iso = get("country_iso");
        s.party = get("party");
        s.leader = get("leader");
        s.populism_category = static_cast<int>(parse_int(get("populism_category"), source, line, "populism_category"));
        if (s.populism_category < 1 || s.populism_category > 4) {
            throw SchemaError(std::string(source) + " line " + std::to_string(line) +
                              ": populism_category must be 1..4");
        }
        s.frames = parse_int(get("frames"), source, line, "frames");
        for (std::size_t i = 0; i < kLabels; ++i) {
            s.mean[i] = num("mean_" + std::string(kLabelNames[i]));
            s.dominance[i] = num("dom_" + std::string(kLabelNames[i]));
        }
        s.mean_negative = num("mean_negative");
        s.neg_dominant_frac = num("neg_dominant_frac");
        out.push_back(std::move(s));
    }
    return out;
}

void write_summary_csv(const fs::path& path, const std::vector<VideoSummary>& rows) {
    atomic_write(path, format_summary_csv(rows));
}

std::vector<VideoSummary> read_summary_csv(const fs::path& path) {
    return parse_summary_csv(read_text(path), path.string());
}

}  // namespace leaderaffect::affect
