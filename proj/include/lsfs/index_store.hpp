#pragma once

#include "lsfs/clock.hpp"
#include "lsfs/embedding.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

namespace lsfs {

struct FileMetadata {
    std::string display_name;
    std::string directory;
    Timestamp created_at = 0;
    Timestamp modified_at = 0;
    Timestamp accessed_at = 0;
    bool read_only = false;
    std::vector<std::string> keywords;
    std::optional<std::string> source_path;
    std::uint64_t size_bytes = 0;

    bool operator==(const FileMetadata&) const = default;
};

struct FileEntry {
    FileMetadata metadata;
    std::string content;
    EmbeddingVector embedding;
};

/// Parallel lists; `scores` present only for semantic results and then
/// non-increasing. `directories` disambiguates whole-store results.
struct RetrievalResult {
    std::vector<std::string> names;
    std::vector<std::string> directories;
    std::vector<std::string> contents;
    std::optional<std::vector<double>> scores;

    std::size_t size() const { return names.size(); }
    bool empty() const { return names.empty(); }
};

nlohmann::json to_json(const FileMetadata& metadata);
/// One object per result: directory, name, content and, when present, score.
nlohmann::json to_json(const RetrievalResult& result);

enum class MatchMode { And, Or };

struct PutOptions {
    /// nullopt keeps the existing keywords on overwrite.
    std::optional<std::vector<std::string>> keywords;
    std::optional<std::string> source_path;
};

/// Throws InvalidName unless `name` is usable as a display name.
void validate_display_name(std::string_view name);
/// Directory names follow the display-name rules and may not be ".lsfs".
void validate_directory_name(std::string_view directory);

/// In-memory semantic index with snapshot + journal persistence.
///
/// Mutations serialize on a single writer lock; reads share it. Embedding
/// happens before the writer lock is taken so readers never wait on the
/// provider.
class IndexStore {
public:
    static constexpr std::string_view kSnapshotFile = "index.lsfs";
    static constexpr std::string_view kJournalFile = "index.journal";

    IndexStore(std::shared_ptr<const EmbeddingProvider> embedder, std::shared_ptr<const Clock> clock);

    /// Store bound to `state_dir`: every mutation is journaled there and
    /// persist() writes the snapshot. Existing state is loaded.
    static std::unique_ptr<IndexStore> open(const std::filesystem::path& state_dir,
                                            std::shared_ptr<const EmbeddingProvider> embedder,
                                            std::shared_ptr<const Clock> clock);

    std::size_t dim() const { return embedder_->dim(); }
    const EmbeddingProvider& embedder() const { return *embedder_; }

    FileEntry put_entry(const std::string& directory, const std::string& name, std::string content,
                        const PutOptions& options = {});
    FileEntry get_entry(const std::string& directory, const std::string& name) const;
    std::optional<FileEntry> find_entry(const std::string& directory, const std::string& name) const;
    bool contains(const std::string& directory, const std::string& name) const;

    std::vector<FileMetadata> list_directory(const std::string& directory) const;
    std::vector<std::string> directories() const;
    bool has_directory(const std::string& directory) const;

    FileMetadata remove_entry(const std::string& directory, const std::string& name);

    /// Case-insensitive substring match over content, display name and user keywords.
    RetrievalResult scan_keywords(const std::optional<std::string>& directory,
                                  const std::vector<std::string>& keywords, std::optional<MatchMode> mode) const;
    /// Content-only single-needle match, used by keyword deletion.
    std::vector<FileMetadata> scan_content(const std::string& directory, std::string_view needle) const;

    RetrievalResult topn_semantic(const std::optional<std::string>& directory, std::string_view query,
                                  std::size_t n) const;

    FileMetadata touch(const std::string& directory, const std::string& name);
    FileMetadata set_read_only(const std::string& directory, const std::string& name, bool read_only);

    /// Every entry in scope, ordered by (directory, name).
    std::vector<FileEntry> entries(const std::optional<std::string>& directory = std::nullopt) const;
    std::size_t size() const;

    /// SHA-256 over the serialized observable state.
    std::string state_hash() const;

    /// Writes `<state_dir>/index.lsfs` (or `path` when given) and truncates the journal.
    void persist(const std::optional<std::filesystem::path>& path = std::nullopt);
    /// Replaces the in-memory state with the snapshot at `path`, then replays
    /// the sibling journal when one exists.
    void load(const std::filesystem::path& path);

private:
    using DirMap = std::map<std::string, std::map<std::string, FileEntry>>;

    Timestamp next_time_locked();
    void journal_locked(const std::vector<std::uint8_t>& record);
    std::vector<std::uint8_t> encode_body_locked() const;
    const FileEntry& at_locked(const std::string& directory, const std::string& name) const;
    FileEntry& at_locked(const std::string& directory, const std::string& name);
    void apply_journal_record(const std::vector<std::uint8_t>& record);

    std::shared_ptr<const EmbeddingProvider> embedder_;
    std::shared_ptr<const Clock> clock_;
    std::optional<std::filesystem::path> state_dir_;

    mutable std::shared_mutex mutex_;
    DirMap dirs_;
    Timestamp last_time_ = 0;
};

} // namespace lsfs
