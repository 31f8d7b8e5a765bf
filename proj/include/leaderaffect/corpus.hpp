#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace leaderaffect::corpus {

namespace fs = std::filesystem;

enum class BinaryGroup { pluralist, populist };

std::string_view to_string(BinaryGroup g);

/// Categories 1-2 are pluralist, 3-4 populist. Throws SchemaError outside 1..4.
BinaryGroup binary_group_for(int populism_category);

struct VideoManifestEntry {
    std::string video_id;
    std::string source_url;
    std::string leader_name;
    std::string party_name;
    std::string country_iso;
    std::optional<fs::path> local_path;

    bool operator==(const VideoManifestEntry&) const = default;
};

struct PartyLabel {
    std::string party_name;
    std::string country_iso;
    int populism_category = 0;
    std::optional<double> populism_scale;
};

struct LabeledVideo {
    VideoManifestEntry entry;
    int populism_category = 0;
    BinaryGroup binary_group = BinaryGroup::pluralist;
};

inline constexpr std::string_view kManifestColumns[] = {"video_id", "url", "leader", "party", "country_iso"};
inline constexpr std::string_view kLabelColumns[] = {"party", "country_iso", "populism_category", "populism_scale"};

std::vector<VideoManifestEntry> load_manifest(const fs::path& path);
std::vector<VideoManifestEntry> parse_manifest(std::string_view text, std::string_view source = "manifest");
void write_manifest(const fs::path& path, const std::vector<VideoManifestEntry>& entries);
std::string format_manifest(const std::vector<VideoManifestEntry>& entries);

std::vector<PartyLabel> load_labels(const fs::path& path);
std::vector<PartyLabel> parse_labels(std::string_view text, std::string_view source = "labels");

/// Exact (case-sensitive, whitespace-trimmed) match on (party, country_iso).
/// Throws JoinError listing every unresolved row.
std::vector<LabeledVideo> join_labels(const std::vector<VideoManifestEntry>& manifest,
                                      const std::vector<PartyLabel>& labels);

// ---------------------------------------------------------------------------
// media registry

enum class FetchStatus { ok, retriable_failure, permanent_failure };

std::string_view to_string(FetchStatus s);

struct RegistryRecord {
    fs::path local_path;
    FetchStatus fetch_status = FetchStatus::ok;
    std::string timestamp;
    std::string detail;
};

/// JSON file mapping video_id -> {local_path, fetch_status, timestamp}.
/// Mutations are serialized; every update is persisted atomically.
class MediaRegistry {
public:
    explicit MediaRegistry(fs::path file);

    std::optional<RegistryRecord> get(const std::string& video_id) const;
    void put(const std::string& video_id, RegistryRecord record);
    std::map<std::string, RegistryRecord> snapshot() const;
    const fs::path& file() const { return file_; }

private:
    void save_locked() const;

    fs::path file_;
    mutable std::mutex mutex_;
    std::map<std::string, RegistryRecord> records_;
};

/// External media fetch boundary. Implementations throw FetchError.
class MediaFetcher {
public:
    virtual ~MediaFetcher() = default;
    virtual fs::path fetch(const VideoManifestEntry& entry, const fs::path& media_dir) = 0;
};

/// Resolves `file:` URLs (absolute, or relative to `base_dir`) by copying into the media directory.
class FileUrlFetcher : public MediaFetcher {
public:
    explicit FileUrlFetcher(fs::path base_dir = {}) : base_dir_(std::move(base_dir)) {}
    fs::path fetch(const VideoManifestEntry& entry, const fs::path& media_dir) override;

private:
    fs::path base_dir_;
};

/// Runs an external downloader. `{url}` and `{out}` in the template are substituted;
/// output mentioning one of `permanent_markers` is treated as upstream removal.
class CommandFetcher : public MediaFetcher {
public:
    explicit CommandFetcher(std::string command_template,
                            std::vector<std::string> permanent_markers = default_permanent_markers());
    fs::path fetch(const VideoManifestEntry& entry, const fs::path& media_dir) override;

    static std::vector<std::string> default_permanent_markers();

private:
    std::string template_;
    std::vector<std::string> markers_;
};

/// Routes `file:` URLs to a FileUrlFetcher and everything else to `remote` (if set).
class RoutingFetcher : public MediaFetcher {
public:
    RoutingFetcher(fs::path base_dir, MediaFetcher* remote) : local_(std::move(base_dir)), remote_(remote) {}
    fs::path fetch(const VideoManifestEntry& entry, const fs::path& media_dir) override;

private:
    FileUrlFetcher local_;
    MediaFetcher* remote_;
};

bool well_formed_url(std::string_view url);

/// Idempotent: an entry already registered as fetched with its file present is
/// returned without touching the fetcher. Failures are recorded, then rethrown.
fs::path fetch_media(const VideoManifestEntry& entry, MediaFetcher& fetcher, MediaRegistry& registry,
                     const fs::path& media_dir, bool retry_permanent = false);

}  // namespace leaderaffect::corpus
