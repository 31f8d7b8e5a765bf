#include "leaderaffect/review_server.hpp"

#include "leaderaffect/errors.hpp"
#include "leaderaffect/fsutil.hpp"
#include "leaderaffect/identity.hpp"

#include <httplib.h>

#include <algorithm>
#include <regex>

namespace leaderaffect::review {

using nlohmann::json;

namespace {

const std::regex kVideoId(R"([A-Za-z0-9][A-Za-z0-9._-]*)");
const std::regex kCropFile(R"(track_[0-9]+_[0-9]+\.png)");

ApiResponse error(int status, const std::string& message) {
    return {status, "application/json", json{{"error", message}}.dump()};
}

ApiResponse ok(const json& j) { return {200, "application/json", j.dump()}; }

bool valid_id(const std::string& id) { return std::regex_match(id, kVideoId) && id.find("..") == std::string::npos; }

}  // namespace

ReviewApi::ReviewApi(fs::path review_dir) : dir_(std::move(review_dir)) {}

std::optional<json> ReviewApi::bundle(const std::string& id) const {
    if (!valid_id(id)) return std::nullopt;
    const auto file = dir_ / id / identity::kBundleFile;
    if (!fs::exists(file)) return std::nullopt;
    return json::parse(read_text(file));
}

bool ReviewApi::pending(const std::string& id) const {
    if (fs::exists(dir_ / id / identity::kVerificationFile)) return false;
    // A bundle left over from an earlier run no longer needs review once the
    // pipeline has resolved the video otherwise.
    const auto res_file = dir_.parent_path() / "resolutions" / (id + ".json");
    if (!fs::exists(res_file)) return true;
    try {
        return identity::resolution_from_json(json::parse(read_text(res_file))).status ==
               identity::Status::needs_review;
    } catch (const std::exception&) {
        return true;
    }
}

ApiResponse ReviewApi::list() const {
    std::vector<std::string> ids;
    if (fs::is_directory(dir_)) {
        for (const auto& e : fs::directory_iterator(dir_)) {
            const auto id = e.path().filename().string();
            if (e.is_directory() && valid_id(id) && fs::exists(e.path() / identity::kBundleFile) && pending(id)) {
                ids.push_back(id);
            }
        }
    }
    std::sort(ids.begin(), ids.end());
    json items = json::array();
    for (const auto& id : ids) {
        const auto b = bundle(id);
        if (!b) continue;
        items.push_back({{"video_id", id},
                         {"metadata", b->value("metadata", json::object())},
                         {"track_count", b->at("tracks").size()},
                         {"status", "needs_review"}});
    }
    return ok(items);
}

ApiResponse ReviewApi::video(const std::string& id) const {
    const auto b = bundle(id);
    if (!b) return error(404, "no review bundle for '" + id + "'");
    json out = *b;
    for (auto& t : out["tracks"]) {
        for (auto& c : t["crops"]) c["url"] = "/api/videos/" + id + "/crops/" + c["file"].get<std::string>();
    }
    const auto ver = identity::read_verification(dir_ / id / identity::kVerificationFile);
    out["status"] = ver ? "verified" : (pending(id) ? "needs_review" : "resolved");
    out["verification"] = ver ? identity::to_json(*ver) : json(nullptr);
    return ok(out);
}

ApiResponse ReviewApi::crop(const std::string& id, const std::string& file) const {
    if (!valid_id(id) || !std::regex_match(file, kCropFile)) return error(404, "no such crop");
    const auto path = dir_ / id / file;
    if (!fs::exists(path)) return error(404, "no such crop");
    return {200, "image/png", read_text(path)};
}

ApiResponse ReviewApi::verify(const std::string& id, const std::string& body) {
    const auto b = bundle(id);
    if (!b) return error(404, "no review bundle for '" + id + "'");
    json req;
    try {
        req = json::parse(body);
    } catch (const json::parse_error& e) {
        return error(400, std::string("malformed JSON: ") + e.what());
    }
    if (!req.is_object()) return error(400, "request body must be a JSON object");
    if (req.contains("video_id") && req["video_id"] != id) return error(400, "video_id does not match the URL");
    req["video_id"] = id;
    identity::VerificationRecord rec;
    try {
        rec = identity::verification_from_json(req);
    } catch (const ManifestError& e) {
        return error(400, e.what());
    }
    if (rec.action == identity::Action::select) {
        const auto& tracks = b->at("tracks");
        const bool known = std::any_of(tracks.begin(), tracks.end(),
                                       [&](const json& t) { return t.at("track_id").get<int>() == *rec.track_id; });
        if (!known) return error(422, "video '" + id + "' has no track " + std::to_string(*rec.track_id));
    }
    if (rec.timestamp.empty()) rec.timestamp = utc_timestamp();

    std::lock_guard lock(write_mutex_);
    const auto file = dir_ / id / identity::kVerificationFile;
    if (const auto prev = identity::read_verification(file)) {
        if (prev->action == rec.action && prev->track_id == rec.track_id) {
            return ok({{"ok", true}, {"unchanged", true}, {"verification", identity::to_json(*prev)}});
        }
    }
    identity::write_verification(file, rec);
    return ok({{"ok", true}, {"unchanged", false}, {"verification", identity::to_json(rec)}});
}

// ---------------------------------------------------------------------------

ReviewServer::ReviewServer(fs::path review_dir, int port, const std::string& host,
                           std::optional<fs::path> static_dir)
    : api_(std::move(review_dir)), server_(std::make_unique<httplib::Server>()) {
    auto reply = [](httplib::Response& res, const ApiResponse& r) {
        res.status = r.status;
        res.set_content(r.body, r.content_type);
    };
    auto guarded = [reply](httplib::Response& res, auto&& fn) {
        try {
            reply(res, fn());
        } catch (const std::exception& e) {
            reply(res, error(500, e.what()));
        }
    };
    server_->Get("/api/videos", [=, this](const httplib::Request&, httplib::Response& res) {
        guarded(res, [&] { return api_.list(); });
    });
    server_->Get(R"(/api/videos/([^/]+))", [=, this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] { return api_.video(req.matches[1]); });
    });
    server_->Get(R"(/api/videos/([^/]+)/crops/([^/]+))",
                 [=, this](const httplib::Request& req, httplib::Response& res) {
                     guarded(res, [&] { return api_.crop(req.matches[1], req.matches[2]); });
                 });
    server_->Post(R"(/api/videos/([^/]+)/verify)", [=, this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] { return api_.verify(req.matches[1], req.body); });
    });
    if (static_dir && !server_->set_mount_point("/", static_dir->string())) {
        throw Error("static directory not found: " + static_dir->string());
    }

    // The library default enables SO_REUSEPORT, which would let a second
    // server share a busy port instead of failing.
    server_->set_socket_options([](socket_t sock) {
        int yes = 1;
        ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
    if (port == 0) {
        port_ = server_->bind_to_any_port(host);
        if (port_ < 0) throw Error("cannot bind a free port on " + host);
    } else {
        if (!server_->bind_to_port(host, port)) {
            throw Error("cannot listen on " + host + ":" + std::to_string(port) + " (port in use?)");
        }
        port_ = port;
    }
}

ReviewServer::~ReviewServer() { stop(); }

void ReviewServer::run() { server_->listen_after_bind(); }

void ReviewServer::start() {
    thread_ = std::thread([this] { run(); });
    server_->wait_until_ready();
}

void ReviewServer::stop() {
    server_->stop();
    if (thread_.joinable()) thread_.join();
}

}  // namespace leaderaffect::review
