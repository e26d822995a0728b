#include "lsfs/syscalls.hpp"

#include "lsfs/binio.hpp"
#include "lsfs/error.hpp"
#include "lsfs/util.hpp"

#include <algorithm>
#include <set>

namespace lsfs {

namespace fs = std::filesystem;

ImportSource ImportSource::guess(std::string value) {
    std::error_code ec;
    if (!value.empty() && value.size() < 4096 && value.find('\n') == std::string::npos &&
        fs::is_regular_file(fs::path(value), ec)) {
        return path(std::move(value));
    }
    return text(std::move(value));
}

std::mutex& KeyLockTable::at(const FileKey& key) {
    std::lock_guard lock(guard_);
    auto& slot = locks_[key];
    if (!slot) {
        slot = std::make_unique<std::mutex>();
    }
    return *slot;
}

Syscalls::Syscalls(IndexStore& store, std::optional<fs::path> mirror_root,
                   std::shared_ptr<const ExtractorRegistry> extractors)
    : store_(store), root_(std::move(mirror_root)), extractors_(std::move(extractors)) {
    if (root_) {
        std::error_code ec;
        if (!fs::is_directory(*root_, ec)) {
            throw Error(ErrorCode::RootMissing, "mirror root is not a directory: " + root_->string());
        }
    }
}

fs::path Syscalls::mirror_path(const FileKey& key) const {
    if (!root_) {
        throw Error(ErrorCode::InvalidArgument, "no mirror root bound");
    }
    return *root_ / key.directory / key.name;
}

void Syscalls::mirror_write(const FileKey& key, const std::string& content) const {
    if (!root_) {
        return;
    }
    const auto target = mirror_path(key);
    fs::create_directories(target.parent_path());
    binio::atomic_write(target, content);
}

void Syscalls::mirror_remove(const FileKey& key) const {
    if (!root_) {
        return;
    }
    std::error_code ec;
    const auto target = mirror_path(key);
    fs::remove(target, ec);
    const auto dir = target.parent_path();
    if (fs::is_directory(dir, ec) && fs::is_empty(dir, ec)) {
        fs::remove(dir, ec);
    }
}

std::string Syscalls::read_import(const ImportSource& source) const {
    if (source.kind == ImportSource::Kind::Text) {
        return source.value;
    }
    const fs::path p(source.value);
    std::error_code ec;
    if (!fs::is_regular_file(p, ec)) {
        throw Error(ErrorCode::PathUnreadable, "import path is not a readable file: " + source.value);
    }
    return extractors_->extract(p);
}

std::string Syscalls::free_name(const std::string& directory, const std::string& wanted) const {
    if (!store_.contains(directory, wanted)) {
        return wanted;
    }
    for (int k = 2;; ++k) {
        auto candidate = wanted + " (" + std::to_string(k) + ")";
        if (!store_.contains(directory, candidate)) {
            return candidate;
        }
    }
}

FileKey Syscalls::locate(const std::string& name, const std::optional<std::string>& directory) const {
    if (directory) {
        if (!store_.contains(*directory, name)) {
            throw Error(ErrorCode::NotFound, "no file '" + name + "' in directory '" + *directory + "'");
        }
        return {*directory, name};
    }
    std::vector<std::string> hits;
    for (const auto& d : store_.directories()) {
        if (store_.contains(d, name)) {
            hits.push_back(d);
        }
    }
    if (hits.empty()) {
        throw Error(ErrorCode::NotFound, "no file named '" + name + "'");
    }
    if (hits.size() > 1) {
        throw Error(ErrorCode::AmbiguousTarget, "file name '" + name + "' exists in several directories",
                    nlohmann::json{{"directories", hits}});
    }
    return {hits.front(), name};
}

Syscalls::EntryOrListing Syscalls::create_or_get_file(const std::string& directory,
                                                      const std::optional<std::string>& name,
                                                      const std::optional<ImportSource>& import_file) {
    if (directory.empty()) {
        throw Error(ErrorCode::InvalidName, "directory must not be empty");
    }
    if (!name) {
        return store_.list_directory(directory);
    }
    const FileKey key{directory, *name};
    std::lock_guard lock(locks_.at(key));
    if (!store_.contains(directory, *name)) {
        if (!import_file) {
            throw Error(ErrorCode::NotFound, "no file '" + *name + "' in directory '" + directory + "'");
        }
        PutOptions opts;
        if (import_file->kind == ImportSource::Kind::Path) {
            opts.source_path = import_file->value;
        }
        auto entry = store_.put_entry(directory, *name, read_import(*import_file), opts);
        mirror_write(key, entry.content);
        return entry;
    }
    store_.touch(directory, *name);
    return store_.get_entry(directory, *name);
}

FileEntry Syscalls::add_(const std::string& directory, const std::string& name, const std::string& new_content) {
    const FileKey key{directory, name};
    std::lock_guard lock(locks_.at(key));
    const auto current = store_.get_entry(directory, name);
    if (current.metadata.read_only) {
        throw Error(ErrorCode::FileLocked, "file '" + name + "' is read-only");
    }
    auto entry = store_.put_entry(directory, name, current.content + new_content);
    mirror_write(key, entry.content);
    return entry;
}

FileEntry Syscalls::overwrite_locked(const FileKey& key, std::string content,
                                     const std::optional<std::string>& source_path) {
    const auto current = store_.get_entry(key.directory, key.name);
    if (current.metadata.read_only) {
        throw Error(ErrorCode::FileLocked, "file '" + key.name + "' is read-only");
    }
    PutOptions opts;
    opts.source_path = source_path;
    auto entry = store_.put_entry(key.directory, key.name, std::move(content), opts);
    mirror_write(key, entry.content);
    return entry;
}

FileEntry Syscalls::overwrite(const std::string& directory, const std::string& name, const ImportSource& import_file) {
    const FileKey key{directory, name};
    std::lock_guard lock(locks_.at(key));
    if (!store_.contains(directory, name)) {
        throw Error(ErrorCode::NotFound, "no file '" + name + "' in directory '" + directory + "'");
    }
    std::optional<std::string> source;
    if (import_file.kind == ImportSource::Kind::Path) {
        source = import_file.value;
    }
    return overwrite_locked(key, read_import(import_file), source);
}

FileMetadata Syscalls::remove_locked(const FileKey& key) {
    auto removed = store_.remove_entry(key.directory, key.name);
    mirror_remove(key);
    return removed;
}

std::vector<FileMetadata> Syscalls::del_(const std::string& directory, const std::optional<std::string>& name,
                                         const std::optional<std::string>& key_text) {
    if (!name && !key_text) {
        throw Error(ErrorCode::MissingArgument, "del_ needs a file name or a key text; at least one must be passed");
    }
    if (name) {
        const FileKey key{directory, *name};
        std::lock_guard lock(locks_.at(key));
        return {remove_locked(key)};
    }
    const auto matches = store_.scan_content(directory, *key_text);
    for (const auto& m : matches) {
        if (m.read_only) {
            throw Error(ErrorCode::FileLocked, "key-text deletion would remove read-only file '" + m.display_name + "'");
        }
    }
    std::vector<FileMetadata> removed;
    for (const auto& m : matches) {
        const FileKey key{m.directory, m.display_name};
        std::lock_guard lock(locks_.at(key));
        if (store_.contains(key.directory, key.name)) {
            removed.push_back(remove_locked(key));
        }
    }
    return removed;
}

RetrievalResult Syscalls::keywords_retrieve(const std::vector<std::string>& keywords,
                                            const std::optional<std::string>& directory,
                                            std::optional<MatchMode> mode) const {
    return store_.scan_keywords(directory, keywords, mode);
}

RetrievalResult Syscalls::semantic_retrieve(const std::string& query, const std::optional<std::string>& directory,
                                            std::size_t n) const {
    return store_.topn_semantic(directory, query, n);
}

BulkImportReport Syscalls::create(const std::string& directory, const fs::path& import_dir) {
    validate_directory_name(directory);
    std::error_code ec;
    if (!fs::is_directory(import_dir, ec)) {
        throw Error(ErrorCode::PathUnreadable, "import folder is not readable: " + import_dir.string());
    }
    std::vector<fs::path> files;
    for (const auto& de : fs::directory_iterator(import_dir, ec)) {
        if (de.is_regular_file(ec)) {
            files.push_back(de.path());
        }
    }
    if (ec) {
        throw Error(ErrorCode::PathUnreadable, "cannot list " + import_dir.string() + ": " + ec.message());
    }
    std::sort(files.begin(), files.end());

    BulkImportReport report;
    for (const auto& p : files) {
        const auto fname = p.filename().string();
        try {
            auto text = extractors_->extract(p);
            std::lock_guard group(group_mutex_);
            const auto name = free_name(directory, fname);
            const FileKey key{directory, name};
            std::lock_guard lock(locks_.at(key));
            PutOptions opts;
            opts.source_path = p.string();
            auto entry = store_.put_entry(directory, name, std::move(text), opts);
            mirror_write(key, entry.content);
            report.entries.push_back(std::move(entry));
        } catch (const Error& e) {
            report.failures.push_back({fname, std::string(to_string(e.code())), e.what()});
        }
    }
    return report;
}

FileMetadata Syscalls::lock_file(const std::string& directory, const std::string& name) {
    std::lock_guard lock(locks_.at({directory, name}));
    return store_.set_read_only(directory, name, true);
}

FileMetadata Syscalls::unlock_file(const std::string& directory, const std::string& name) {
    std::lock_guard lock(locks_.at({directory, name}));
    return store_.set_read_only(directory, name, false);
}

std::vector<FileMetadata> Syscalls::copy_into(const RetrievalResult& selection, const std::string& new_directory) {
    for (std::size_t i = 0; i < selection.size(); ++i) {
        const auto source = store_.get_entry(selection.directories[i], selection.names[i]);
        const auto name = free_name(new_directory, selection.names[i]);
        const FileKey key{new_directory, name};
        std::lock_guard lock(locks_.at(key));
        PutOptions opts;
        opts.keywords = source.metadata.keywords;
        opts.source_path = source.metadata.source_path;
        auto entry = store_.put_entry(new_directory, name, source.content, opts);
        mirror_write(key, entry.content);
    }
    return store_.list_directory(new_directory);
}

std::vector<FileMetadata> Syscalls::group_keywords(const std::vector<std::string>& keywords,
                                                   const std::string& new_directory,
                                                   const std::optional<std::string>& source_directory,
                                                   std::optional<MatchMode> mode) {
    validate_directory_name(new_directory);
    std::lock_guard group(group_mutex_);
    if (store_.has_directory(new_directory)) {
        throw Error(ErrorCode::DirectoryExists, "directory '" + new_directory + "' already exists");
    }
    const auto matches = store_.scan_keywords(source_directory, keywords, mode);
    if (matches.empty()) {
        throw Error(ErrorCode::EmptyResult, "no file matches the keywords; nothing grouped");
    }
    return copy_into(matches, new_directory);
}

std::vector<FileMetadata> Syscalls::group_semantic(const std::string& query, const std::string& new_directory,
                                                   const std::optional<std::string>& source_directory,
                                                   std::size_t n) {
    validate_directory_name(new_directory);
    std::lock_guard group(group_mutex_);
    if (store_.has_directory(new_directory)) {
        throw Error(ErrorCode::DirectoryExists, "directory '" + new_directory + "' already exists");
    }
    const auto matches = store_.topn_semantic(source_directory, query, n);
    if (matches.empty()) {
        throw Error(ErrorCode::EmptyResult, "no file in scope; nothing grouped");
    }
    return copy_into(matches, new_directory);
}

RetrievalResult Syscalls::integrated_retrieve(const std::vector<std::string>& keywords, std::optional<MatchMode> mode,
                                              const std::string& query, const std::string& new_directory,
                                              const std::optional<std::string>& source_directory, std::size_t n) {
    if (trim(query).empty()) {
        throw Error(ErrorCode::EmptyQuery, "semantic query is empty");
    }
    if (n == 0) {
        throw Error(ErrorCode::InvalidArgument, "n must be at least 1");
    }
    try {
        group_keywords(keywords, new_directory, source_directory, mode);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::EmptyResult) {
            RetrievalResult empty;
            empty.scores.emplace();
            return empty;
        }
        throw;
    }
    return store_.topn_semantic(new_directory, query, n);
}

FileEntry Syscalls::file_join(const std::string& dir1, const std::string& name1, const std::string& name2,
                              const std::optional<std::string>& dir2, const std::optional<std::string>& condition) {
    const FileKey k1{dir1, name1};
    const FileKey k2{dir2.value_or(dir1), name2};
    if (k1 == k2) {
        throw Error(ErrorCode::SelfJoin, "cannot join a file with itself");
    }
    const bool make_new = condition && ascii_lower(*condition) == "new";

    if (make_new) {
        std::lock_guard group(group_mutex_);
        const auto f1 = store_.get_entry(k1.directory, k1.name);
        const auto f2 = store_.get_entry(k2.directory, k2.name);
        const auto joined_name = free_name(dir1, name1 + "_" + name2);
        const FileKey out{dir1, joined_name};
        std::lock_guard lock(locks_.at(out));
        auto entry = store_.put_entry(dir1, joined_name, f1.content + "\n" + f2.content);
        mirror_write(out, entry.content);
        return entry;
    }

    std::scoped_lock lock(locks_.at(k1), locks_.at(k2));
    const auto f1 = store_.get_entry(k1.directory, k1.name);
    const auto f2 = store_.get_entry(k2.directory, k2.name);
    if (f1.metadata.read_only || f2.metadata.read_only) {
        throw Error(ErrorCode::FileLocked, "destructive join needs both files writable");
    }
    auto entry = store_.put_entry(k1.directory, k1.name, f1.content + "\n" + f2.content);
    mirror_write(k1, entry.content);
    remove_locked(k2);
    return entry;
}

FileMetadata Syscalls::update_access_time(const std::string& directory, const std::string& name) {
    std::lock_guard lock(locks_.at({directory, name}));
    return store_.touch(directory, name);
}

} // namespace lsfs
