#pragma once

#include "leaderaffect/config.hpp"
#include "leaderaffect/fsutil.hpp"
#include "model_support.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace testing {

struct WorkspaceVideo {
    std::string id;
    std::string url;
    std::string party;
    std::string country;
    int category;
};

inline const WorkspaceVideo kOneFace{"v_one", "file:clips/one_face.avi", "Party A", "AT", 1};
inline const WorkspaceVideo kTwoFace{"v_two", "file:clips/two_face.avi", "Party B", "HU", 4};

/// A self-contained project directory: config.json, manifest, labels and the
/// fixture clips under clips/.
class Workspace {
public:
    Workspace(const std::vector<WorkspaceVideo>& videos, const std::string& strategy = "uniform300")
        : dir_("ws") {
        fs::create_directories(dir_ / "clips");
        for (const char* clip : {"one_face.avi", "two_face.avi"}) {
            fs::copy_file(fixture(std::string("clips/") + clip), dir_ / "clips" / clip);
        }
        std::string manifest = "video_id,url,leader,party,country_iso\n";
        std::string labels = "party,country_iso,populism_category,populism_scale\n";
        for (const auto& v : videos) {
            manifest += v.id + "," + v.url + ",Leader " + v.id + "," + v.party + "," + v.country + "\n";
            labels += v.party + "," + v.country + "," + std::to_string(v.category) + "," +
                      std::to_string(0.2 * v.category) + "\n";
        }
        leaderaffect::atomic_write(dir_ / "manifest.csv", manifest);
        leaderaffect::atomic_write(dir_ / "labels.csv", labels);

        auto entry = [](const std::string& name) {
            const auto m = model_file(name);
            return nlohmann::json{{"path", m.path.string()}, {"sha256", m.sha256}};
        };
        doc_ = {{"strategy", strategy},
                {"models",
                 {{"pnet", entry("mtcnn_pnet.onnx")},
                  {"rnet", entry("mtcnn_rnet.onnx")},
                  {"onet", entry("mtcnn_onet.onnx")},
                  {"emotion", entry("emotion_mini_xception.onnx")}}},
                {"manifest", "manifest.csv"},
                {"labels", "labels.csv"},
                {"output_dir", "out"},
                {"jobs", 2}};
        save();
    }

    nlohmann::json& doc() { return doc_; }
    void save() { leaderaffect::atomic_write(config_file(), doc_.dump(2)); }

    fs::path config_file() const { return dir_ / "config.json"; }
    leaderaffect::config::PipelineConfig config() const { return leaderaffect::config::load_config(config_file()); }
    const fs::path& path() const { return dir_.path(); }
    fs::path operator/(const std::string& rel) const { return dir_ / rel; }

private:
    TempDir dir_;
    nlohmann::json doc_;
};

}  // namespace testing
