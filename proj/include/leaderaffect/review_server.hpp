#pragma once

#include <json.hpp>

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

namespace httplib {
class Server;
}

namespace leaderaffect::review {

namespace fs = std::filesystem;

struct ApiResponse {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
};

/// Endpoint logic, independent of the transport. `review_dir` is a strategy's
/// `review/` directory holding one bundle directory per flagged video.
class ReviewApi {
public:
    explicit ReviewApi(fs::path review_dir);

    /// GET /api/videos: videos awaiting a decision, ordered by video_id.
    ApiResponse list() const;
    /// GET /api/videos/{id}
    ApiResponse video(const std::string& id) const;
    /// GET /api/videos/{id}/crops/{file}
    ApiResponse crop(const std::string& id, const std::string& file) const;
    /// POST /api/videos/{id}/verify
    ApiResponse verify(const std::string& id, const std::string& body);

    const fs::path& review_dir() const { return dir_; }

private:
    std::optional<nlohmann::json> bundle(const std::string& id) const;
    bool pending(const std::string& id) const;

    fs::path dir_;
    std::mutex write_mutex_;
};

/// Local-only HTTP front end for ReviewApi.
class ReviewServer {
public:
    /// Binds immediately; throws Error when the port is unavailable.
    /// Port 0 picks a free port. `static_dir`, when set, is served at `/`.
    ReviewServer(fs::path review_dir, int port, const std::string& host = "127.0.0.1",
                 std::optional<fs::path> static_dir = std::nullopt);
    ~ReviewServer();

    int port() const { return port_; }
    /// Serves until stop() is called from another thread.
    void run();
    /// Serves on a background thread.
    void start();
    void stop();

private:
    ReviewApi api_;
    std::unique_ptr<httplib::Server> server_;
    int port_ = 0;
    std::thread thread_;
};

}  // namespace leaderaffect::review
