#pragma once

#include <filesystem>
#include <random>
#include <string>

namespace testing {

namespace fs = std::filesystem;

inline fs::path fixture(const std::string& rel) { return fs::path(LA_FIXTURE_DIR) / rel; }
inline fs::path model(const std::string& name) { return fs::path(LA_MODEL_DIR) / name; }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "la") {
        std::random_device rd;
        path_ = fs::temp_directory_path() / (tag + "_" + std::to_string(rd()) + std::to_string(rd()));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    fs::path path_;
};

}  // namespace testing
