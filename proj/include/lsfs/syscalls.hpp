#pragma once

#include "lsfs/extractor.hpp"
#include "lsfs/index_store.hpp"
#include "lsfs/version_recorder.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace lsfs {

/// Content handed to create/overwrite: literal text, or a disk path whose
/// text goes through the extractor registry.
struct ImportSource {
    enum class Kind { Text, Path };

    Kind kind = Kind::Text;
    std::string value;

    static ImportSource text(std::string t) { return {Kind::Text, std::move(t)}; }
    static ImportSource path(std::string p) { return {Kind::Path, std::move(p)}; }
    /// Path when `value` names an existing regular file, text otherwise.
    static ImportSource guess(std::string value);
};

/// One mutex per (directory, name). Store mutation and the matching disk
/// write happen under the same key lock, so the supervisor never observes
/// them half done.
class KeyLockTable {
public:
    std::mutex& at(const FileKey& key);

private:
    std::mutex guard_;
    std::map<FileKey, std::unique_ptr<std::mutex>> locks_;
};

struct BulkImportReport {
    struct Failure {
        std::string file;
        std::string code;
        std::string message;
    };

    std::vector<FileEntry> entries;
    std::vector<Failure> failures;
};

/// The atomic and composite file operations. When a mirror root is bound,
/// every mutation is reflected in `<root>/<directory>/<name>`.
class Syscalls {
public:
    Syscalls(IndexStore& store, std::optional<std::filesystem::path> mirror_root,
             std::shared_ptr<const ExtractorRegistry> extractors = std::make_shared<ExtractorRegistry>());

    IndexStore& store() { return store_; }
    const IndexStore& store() const { return store_; }
    const std::optional<std::filesystem::path>& mirror_root() const { return root_; }
    bool mirror_enabled() const { return root_.has_value(); }
    KeyLockTable& locks() { return locks_; }
    const ExtractorRegistry& extractors() const { return *extractors_; }

    using EntryOrListing = std::variant<FileEntry, std::vector<FileMetadata>>;

    EntryOrListing create_or_get_file(const std::string& directory, const std::optional<std::string>& name,
                                      const std::optional<ImportSource>& import_file);
    FileEntry add_(const std::string& directory, const std::string& name, const std::string& new_content);
    FileEntry overwrite(const std::string& directory, const std::string& name, const ImportSource& import_file);
    std::vector<FileMetadata> del_(const std::string& directory, const std::optional<std::string>& name,
                                   const std::optional<std::string>& key_text);
    RetrievalResult keywords_retrieve(const std::vector<std::string>& keywords,
                                      const std::optional<std::string>& directory,
                                      std::optional<MatchMode> mode) const;
    RetrievalResult semantic_retrieve(const std::string& query, const std::optional<std::string>& directory,
                                      std::size_t n = 3) const;
    BulkImportReport create(const std::string& directory, const std::filesystem::path& import_dir);
    FileMetadata lock_file(const std::string& directory, const std::string& name);
    FileMetadata unlock_file(const std::string& directory, const std::string& name);
    std::vector<FileMetadata> group_keywords(const std::vector<std::string>& keywords, const std::string& new_directory,
                                             const std::optional<std::string>& source_directory,
                                             std::optional<MatchMode> mode);
    std::vector<FileMetadata> group_semantic(const std::string& query, const std::string& new_directory,
                                             const std::optional<std::string>& source_directory, std::size_t n = 3);
    RetrievalResult integrated_retrieve(const std::vector<std::string>& keywords, std::optional<MatchMode> mode,
                                        const std::string& query, const std::string& new_directory,
                                        const std::optional<std::string>& source_directory, std::size_t n = 3);
    FileEntry file_join(const std::string& dir1, const std::string& name1, const std::string& name2,
                        const std::optional<std::string>& dir2, const std::optional<std::string>& condition);
    FileMetadata update_access_time(const std::string& directory, const std::string& name);

    /// Finds a file by name, searching every directory when none is given.
    /// Throws NotFound, or AmbiguousTarget when several directories hold it.
    FileKey locate(const std::string& name, const std::optional<std::string>& directory) const;

    /// Replace content in store and mirror under the caller-held key lock.
    /// Used by the APIs that already own the lock (change summary, rollback).
    FileEntry overwrite_locked(const FileKey& key, std::string content,
                               const std::optional<std::string>& source_path = std::nullopt);

    // Mirror primitives, exposed for the supervisor.
    std::filesystem::path mirror_path(const FileKey& key) const;
    void mirror_write(const FileKey& key, const std::string& content) const;
    void mirror_remove(const FileKey& key) const;

    /// Text of an import: the literal, or the extracted file content.
    std::string read_import(const ImportSource& source) const;

private:
    std::string free_name(const std::string& directory, const std::string& wanted) const;
    FileMetadata remove_locked(const FileKey& key);
    std::vector<FileMetadata> copy_into(const RetrievalResult& selection, const std::string& new_directory);

    IndexStore& store_;
    std::optional<std::filesystem::path> root_;
    std::shared_ptr<const ExtractorRegistry> extractors_;
    KeyLockTable locks_;
    std::mutex group_mutex_;
};

/// Prefix for temporary files the mirror writes; the supervisor skips them.
inline constexpr std::string_view kMirrorTempPrefix = ".lsfs-tmp-";

} // namespace lsfs
