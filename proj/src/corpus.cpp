#include "leaderaffect/corpus.hpp"

#include "leaderaffect/csv.hpp"
#include "leaderaffect/errors.hpp"
#include "leaderaffect/fsutil.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <set>
#include <span>
#include <sys/wait.h>

namespace leaderaffect::corpus {

using nlohmann::json;

std::string_view to_string(BinaryGroup g) { return g == BinaryGroup::pluralist ? "pluralist" : "populist"; }

BinaryGroup binary_group_for(int category) {
    if (category < 1 || category > 4) {
        throw SchemaError("populism_category must be in 1..4, got " + std::to_string(category));
    }
    return category <= 2 ? BinaryGroup::pluralist : BinaryGroup::populist;
}

namespace {

void require_columns(const csv::Table& table, std::span<const std::string_view> expected, std::string_view source,
                     bool ordered) {
    for (std::size_t i = 0; i < expected.size(); ++i) {
        const int at = table.column(expected[i]);
        if (at < 0) {
            throw SchemaError(std::string(source) + ": missing required column '" + std::string(expected[i]) + "'");
        }
        if (ordered && at != static_cast<int>(i)) {
            throw SchemaError(std::string(source) + ": column '" + std::string(expected[i]) + "' must be at position " +
                              std::to_string(i + 1));
        }
    }
}

std::string cell(const csv::Table& t, std::size_t row, std::string_view column, std::string_view source,
                 bool required = true) {
    const int at = t.column(column);
    const auto& r = t.rows[row];
    std::string value = at >= 0 && static_cast<std::size_t>(at) < r.size() ? csv::trim(r[at]) : std::string();
    if (required && value.empty()) {
        throw SchemaError(std::string(source) + ": line " + std::to_string(t.lines[row]) + " missing " +
                          std::string(column));
    }
    return value;
}

void check_iso(const std::string& iso, std::string_view source, std::size_t line) {
    const bool ok = iso.size() == 2 && std::isupper(static_cast<unsigned char>(iso[0])) &&
                    std::isupper(static_cast<unsigned char>(iso[1]));
    if (!ok) {
        throw SchemaError(std::string(source) + ": line " + std::to_string(line) + " country_iso '" + iso +
                          "' is not a 2-letter uppercase code");
    }
}

}  // namespace

std::vector<VideoManifestEntry> parse_manifest(std::string_view text, std::string_view source) {
    const csv::Table table = csv::parse(text);
    require_columns(table, kManifestColumns, source, true);
    std::vector<VideoManifestEntry> out;
    out.reserve(table.rows.size());
    std::set<std::string> seen;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        VideoManifestEntry e;
        e.video_id = cell(table, i, "video_id", source);
        e.source_url = cell(table, i, "url", source);
        e.leader_name = cell(table, i, "leader", source);
        e.party_name = cell(table, i, "party", source);
        e.country_iso = cell(table, i, "country_iso", source);
        check_iso(e.country_iso, source, table.lines[i]);
        if (!seen.insert(e.video_id).second) {
            throw SchemaError(std::string(source) + ": duplicate video_id '" + e.video_id + "' at line " +
                              std::to_string(table.lines[i]));
        }
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<VideoManifestEntry> load_manifest(const fs::path& path) {
    return parse_manifest(read_text(path), path.string());
}

std::string format_manifest(const std::vector<VideoManifestEntry>& entries) {
    std::string out = csv::format_row({"video_id", "url", "leader", "party", "country_iso"});
    for (const auto& e : entries) {
        out += csv::format_row({e.video_id, e.source_url, e.leader_name, e.party_name, e.country_iso});
    }
    return out;
}

void write_manifest(const fs::path& path, const std::vector<VideoManifestEntry>& entries) {
    atomic_write(path, format_manifest(entries));
}

std::vector<PartyLabel> parse_labels(std::string_view text, std::string_view source) {
    const csv::Table table = csv::parse(text);
    require_columns(table, std::span(kLabelColumns).first(3), source, false);
    std::vector<PartyLabel> out;
    std::set<std::pair<std::string, std::string>> seen;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        PartyLabel l;
        l.party_name = cell(table, i, "party", source);
        l.country_iso = cell(table, i, "country_iso", source);
        check_iso(l.country_iso, source, table.lines[i]);
        const std::string cat = cell(table, i, "populism_category", source);
        try {
            std::size_t used = 0;
            l.populism_category = std::stoi(cat, &used);
            if (used != cat.size()) throw std::invalid_argument(cat);
        } catch (const std::exception&) {
            throw SchemaError(std::string(source) + ": line " + std::to_string(table.lines[i]) +
                              " populism_category '" + cat + "' is not an integer");
        }
        binary_group_for(l.populism_category);
        if (table.column("populism_scale") >= 0) {
            const std::string scale = cell(table, i, "populism_scale", source, false);
            if (!scale.empty()) {
                try {
                    l.populism_scale = std::stod(scale);
                } catch (const std::exception&) {
                    throw SchemaError(std::string(source) + ": line " + std::to_string(table.lines[i]) +
                                      " populism_scale '" + scale + "' is not a number");
                }
            }
        }
        if (!seen.insert({l.party_name, l.country_iso}).second) {
            throw SchemaError(std::string(source) + ": duplicate label for (" + l.party_name + ", " + l.country_iso +
                              ")");
        }
        out.push_back(std::move(l));
    }
    return out;
}

std::vector<PartyLabel> load_labels(const fs::path& path) { return parse_labels(read_text(path), path.string()); }

std::vector<LabeledVideo> join_labels(const std::vector<VideoManifestEntry>& manifest,
                                      const std::vector<PartyLabel>& labels) {
    std::map<std::pair<std::string, std::string>, const PartyLabel*> index;
    for (const auto& l : labels) index[{csv::trim(l.party_name), csv::trim(l.country_iso)}] = &l;

    std::vector<LabeledVideo> out;
    out.reserve(manifest.size());
    std::vector<std::string> unresolved;
    for (const auto& e : manifest) {
        const auto it = index.find({csv::trim(e.party_name), csv::trim(e.country_iso)});
        if (it == index.end()) {
            unresolved.push_back(e.video_id + " (" + e.party_name + ", " + e.country_iso + ")");
            continue;
        }
        LabeledVideo v;
        v.entry = e;
        v.populism_category = it->second->populism_category;
        v.binary_group = binary_group_for(v.populism_category);
        out.push_back(std::move(v));
    }
    if (!unresolved.empty()) {
        std::string msg = "unresolved party labels for " + std::to_string(unresolved.size()) + " row(s):";
        for (const auto& u : unresolved) msg += "\n  " + u;
        throw JoinError(msg);
    }
    return out;
}

// ---------------------------------------------------------------------------

std::string_view to_string(FetchStatus s) {
    switch (s) {
    case FetchStatus::ok: return "ok";
    case FetchStatus::retriable_failure: return "retriable_failure";
    case FetchStatus::permanent_failure: return "permanent_failure";
    }
    return "unknown";
}

namespace {

FetchStatus parse_status(const std::string& s) {
    if (s == "ok") return FetchStatus::ok;
    if (s == "retriable_failure") return FetchStatus::retriable_failure;
    if (s == "permanent_failure") return FetchStatus::permanent_failure;
    throw SchemaError("unknown fetch_status '" + s + "'");
}

}  // namespace

MediaRegistry::MediaRegistry(fs::path file) : file_(std::move(file)) {
    if (!fs::exists(file_)) return;
    const json doc = json::parse(read_text(file_));
    for (const auto& [id, rec] : doc.items()) {
        RegistryRecord r;
        r.local_path = rec.value("local_path", std::string());
        r.fetch_status = parse_status(rec.value("fetch_status", std::string("ok")));
        r.timestamp = rec.value("timestamp", std::string());
        r.detail = rec.value("detail", std::string());
        records_.emplace(id, std::move(r));
    }
}

std::optional<RegistryRecord> MediaRegistry::get(const std::string& video_id) const {
    std::lock_guard lock(mutex_);
    const auto it = records_.find(video_id);
    if (it == records_.end()) return std::nullopt;
    return it->second;
}

void MediaRegistry::put(const std::string& video_id, RegistryRecord record) {
    std::lock_guard lock(mutex_);
    records_[video_id] = std::move(record);
    save_locked();
}

std::map<std::string, RegistryRecord> MediaRegistry::snapshot() const {
    std::lock_guard lock(mutex_);
    return records_;
}

void MediaRegistry::save_locked() const {
    json doc = json::object();
    for (const auto& [id, r] : records_) {
        json rec = {{"local_path", r.local_path.string()},
                    {"fetch_status", std::string(to_string(r.fetch_status))},
                    {"timestamp", r.timestamp}};
        if (!r.detail.empty()) rec["detail"] = r.detail;
        doc[id] = std::move(rec);
    }
    atomic_write(file_, doc.dump(2) + "\n");
}

bool well_formed_url(std::string_view url) {
    if (url.rfind("file:", 0) == 0) return url.size() > 5;
    for (std::string_view scheme : {"http://", "https://"}) {
        if (url.rfind(scheme, 0) == 0) {
            const auto host = url.substr(scheme.size());
            return !host.empty() && host.front() != '/' && host.find(' ') == std::string_view::npos;
        }
    }
    return false;
}

namespace {

fs::path file_url_path(std::string_view url, const fs::path& base) {
    std::string_view rest = url.substr(5);
    if (rest.rfind("//", 0) == 0) rest.remove_prefix(2);  // file:///abs -> /abs
    fs::path p{std::string(rest)};
    if (p.is_relative() && !base.empty()) p = base / p;
    return p;
}

}  // namespace

fs::path FileUrlFetcher::fetch(const VideoManifestEntry& entry, const fs::path& media_dir) {
    if (entry.source_url.rfind("file:", 0) != 0) {
        throw FetchError(entry.video_id + ": not a file URL: " + entry.source_url, false);
    }
    const fs::path src = file_url_path(entry.source_url, base_dir_);
    if (!fs::exists(src)) {
        throw FetchError(entry.video_id + ": source removed: " + src.string(), false);
    }
    fs::create_directories(media_dir);
    const fs::path dst = media_dir / (entry.video_id + src.extension().string());
    std::error_code ec;
    fs::copy_file(src, dst, fs::copy_options::overwrite_existing, ec);
    if (ec) throw FetchError(entry.video_id + ": copy " + src.string() + " failed: " + ec.message(), true);
    return dst;
}

CommandFetcher::CommandFetcher(std::string command_template, std::vector<std::string> permanent_markers)
    : template_(std::move(command_template)), markers_(std::move(permanent_markers)) {}

std::vector<std::string> CommandFetcher::default_permanent_markers() {
    return {"Video unavailable", "removed by the uploader", "Private video", "has been terminated",
            "HTTP Error 404", "HTTP Error 410"};
}

fs::path CommandFetcher::fetch(const VideoManifestEntry& entry, const fs::path& media_dir) {
    fs::create_directories(media_dir);
    const fs::path out = media_dir / (entry.video_id + ".mp4");
    std::string cmd = template_;
    replace_all(cmd, "{url}", shell_quote(entry.source_url));
    replace_all(cmd, "{out}", shell_quote(out.string()));
    cmd += " 2>&1";

    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe) throw FetchError(entry.video_id + ": cannot start fetch command", true);
    std::string output;
    char buf[4096];
    while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) output.append(buf, n);
    const int status = ::pclose(pipe);
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;

    if (code == 0 && fs::exists(out)) return out;
    const std::string tail = output.size() > 400 ? output.substr(output.size() - 400) : output;
    for (const auto& m : markers_) {
        if (output.find(m) != std::string::npos) {
            throw FetchError(entry.video_id + ": removed upstream (" + m + ") " + entry.source_url, false);
        }
    }
    throw FetchError(entry.video_id + ": fetch of " + entry.source_url + " failed with exit code " +
                         std::to_string(code) + ": " + tail,
                     true);
}

fs::path RoutingFetcher::fetch(const VideoManifestEntry& entry, const fs::path& media_dir) {
    if (entry.source_url.rfind("file:", 0) == 0) return local_.fetch(entry, media_dir);
    if (!remote_) {
        throw FetchError(entry.video_id + ": no remote fetcher configured for " + entry.source_url, true);
    }
    return remote_->fetch(entry, media_dir);
}

fs::path fetch_media(const VideoManifestEntry& entry, MediaFetcher& fetcher, MediaRegistry& registry,
                     const fs::path& media_dir, bool retry_permanent) {
    if (entry.local_path && fs::exists(*entry.local_path)) return *entry.local_path;
    if (const auto rec = registry.get(entry.video_id)) {
        if (rec->fetch_status == FetchStatus::ok && fs::exists(rec->local_path)) return rec->local_path;
        if (rec->fetch_status == FetchStatus::permanent_failure && !retry_permanent) {
            throw FetchError(entry.video_id + ": previously recorded as permanently unavailable: " + rec->detail,
                             false);
        }
    }
    if (!well_formed_url(entry.source_url)) {
        throw FetchError(entry.video_id + ": malformed source URL '" + entry.source_url + "'", false);
    }
    try {
        fs::path path = fetcher.fetch(entry, media_dir);
        registry.put(entry.video_id, {path, FetchStatus::ok, utc_timestamp(), {}});
        return path;
    } catch (const FetchError& e) {
        registry.put(entry.video_id,
                     {{}, e.retriable() ? FetchStatus::retriable_failure : FetchStatus::permanent_failure,
                      utc_timestamp(), e.what()});
        throw;
    }
}

}  // namespace leaderaffect::corpus
