#pragma once

#include "lsfs/clock.hpp"
#include "lsfs/index_store.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace lsfs {

struct FileKey {
    std::string directory;
    std::string name;

    auto operator<=>(const FileKey&) const = default;
};

struct Version {
    std::uint64_t seq = 0;
    Timestamp recorded_at = 0;
    FileMetadata metadata;
    std::string content;
};

/// Append-only snapshot chains keyed by (directory, name).
///
/// Sequence numbers start at 1 and never repeat within a chain, even when
/// the retention cap drops the oldest versions.
class VersionRecorder {
public:
    static constexpr std::string_view kSnapshotFile = "versions.lsfs";

    /// `retention_cap == 0` keeps every version.
    explicit VersionRecorder(std::shared_ptr<const Clock> clock, std::size_t retention_cap = 0);

    static std::unique_ptr<VersionRecorder> open(const std::filesystem::path& state_dir,
                                                 std::shared_ptr<const Clock> clock, std::size_t retention_cap = 0);

    std::uint64_t record(const FileKey& key, const FileMetadata& metadata, const std::string& content);

    /// Greatest recorded_at <= target (inclusive).
    Version resolve_by_date(const FileKey& key, Timestamp target) const;
    /// k == 1 is the most recent snapshot.
    Version resolve_by_count(const FileKey& key, std::size_t k) const;

    std::vector<Version> chain(const FileKey& key) const;
    std::size_t length(const FileKey& key) const;
    bool has(const FileKey& key) const;
    std::vector<FileKey> keys() const;

    /// Writes `versions.lsfs` into the bound state directory (or `path`).
    void persist(const std::optional<std::filesystem::path>& path = std::nullopt) const;
    void load(const std::filesystem::path& path);

private:
    struct Chain {
        std::uint64_t next_seq = 1;
        std::vector<Version> versions;
    };

    const Chain& chain_locked(const FileKey& key) const;

    std::shared_ptr<const Clock> clock_;
    std::size_t cap_;
    std::optional<std::filesystem::path> state_dir_;
    mutable std::mutex mutex_;
    mutable std::mutex persist_mutex_;
    std::map<FileKey, Chain> chains_;
};

} // namespace lsfs
