#include "lsfs/index_store.hpp"

#include "lsfs/binio.hpp"
#include "lsfs/error.hpp"
#include "lsfs/util.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

namespace lsfs {

nlohmann::json to_json(const FileMetadata& m) {
    nlohmann::json j{{"display_name", m.display_name},
                     {"directory", m.directory},
                     {"created_at", format_rfc3339(m.created_at)},
                     {"modified_at", format_rfc3339(m.modified_at)},
                     {"accessed_at", format_rfc3339(m.accessed_at)},
                     {"read_only", m.read_only},
                     {"keywords", m.keywords},
                     {"source_path", nullptr},
                     {"size_bytes", m.size_bytes}};
    if (m.source_path) {
        j["source_path"] = *m.source_path;
    }
    return j;
}

nlohmann::json to_json(const RetrievalResult& r) {
    nlohmann::json out = nlohmann::json::array();
    for (std::size_t i = 0; i < r.size(); ++i) {
        nlohmann::json item{{"directory", r.directories[i]}, {"name", r.names[i]}, {"content", r.contents[i]}};
        if (r.scores) {
            item["score"] = (*r.scores)[i];
        }
        out.push_back(std::move(item));
    }
    return out;
}

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kMagic = "LSFSIDX1";
constexpr std::uint32_t kFormatVersion = 1;

enum class JournalOp : std::uint8_t { Put = 1, Remove = 2, Meta = 3 };

void encode_metadata(binio::Writer& w, const FileMetadata& m) {
    w.str(m.directory);
    w.str(m.display_name);
    w.i64(m.created_at);
    w.i64(m.modified_at);
    w.i64(m.accessed_at);
    w.u8(m.read_only ? 1 : 0);
    w.u32(static_cast<std::uint32_t>(m.keywords.size()));
    for (const auto& k : m.keywords) {
        w.str(k);
    }
    w.u8(m.source_path ? 1 : 0);
    if (m.source_path) {
        w.str(*m.source_path);
    }
    w.u64(m.size_bytes);
}

FileMetadata decode_metadata(binio::Reader& r) {
    FileMetadata m;
    m.directory = r.str();
    m.display_name = r.str();
    m.created_at = r.i64();
    m.modified_at = r.i64();
    m.accessed_at = r.i64();
    m.read_only = r.u8() != 0;
    const std::uint32_t nk = r.u32();
    if (nk > r.remaining()) {
        throw Error(ErrorCode::CorruptSnapshot, "keyword count exceeds record");
    }
    for (std::uint32_t i = 0; i < nk; ++i) {
        m.keywords.push_back(r.str());
    }
    if (r.u8() != 0) {
        m.source_path = r.str();
    }
    m.size_bytes = r.u64();
    return m;
}

void encode_entry(binio::Writer& w, const FileEntry& e) {
    encode_metadata(w, e.metadata);
    w.str(e.content);
    w.u32(static_cast<std::uint32_t>(e.embedding.dim()));
    for (const float f : e.embedding.values) {
        w.f32(f);
    }
}

FileEntry decode_entry(binio::Reader& r, std::size_t dim) {
    FileEntry e;
    e.metadata = decode_metadata(r);
    e.content = r.str();
    const std::uint32_t d = r.u32();
    if (d != dim) {
        throw Error(ErrorCode::CorruptSnapshot, "embedding dimension does not match store");
    }
    e.embedding.values.resize(d);
    for (std::uint32_t i = 0; i < d; ++i) {
        e.embedding.values[i] = r.f32();
    }
    return e;
}

void check_name_common(std::string_view name, std::string_view what) {
    if (name.empty()) {
        throw Error(ErrorCode::InvalidName, std::string(what) + " must not be empty");
    }
    if (name.size() > 255) {
        throw Error(ErrorCode::InvalidName, std::string(what) + " longer than 255 bytes");
    }
    if (name == "." || name == "..") {
        throw Error(ErrorCode::InvalidName, std::string(what) + " may not be '.' or '..'");
    }
    if (name.find_first_of(std::string_view("/\\\0", 3)) != std::string_view::npos) {
        throw Error(ErrorCode::InvalidName, std::string(what) + " contains a path separator: " + std::string(name));
    }
    if (!is_valid_utf8(name)) {
        throw Error(ErrorCode::InvalidName, std::string(what) + " is not valid UTF-8");
    }
}

struct ScoredRef {
    double score;
    const FileEntry* entry;
};

bool ranks_before(const ScoredRef& a, const ScoredRef& b) {
    if (a.score != b.score) {
        return a.score > b.score;
    }
    if (a.entry->metadata.display_name != b.entry->metadata.display_name) {
        return a.entry->metadata.display_name < b.entry->metadata.display_name;
    }
    return a.entry->metadata.directory < b.entry->metadata.directory;
}

bool name_order(const FileEntry* a, const FileEntry* b) {
    if (a->metadata.display_name != b->metadata.display_name) {
        return a->metadata.display_name < b->metadata.display_name;
    }
    return a->metadata.directory < b->metadata.directory;
}

void push_result(RetrievalResult& out, const FileEntry& e) {
    out.names.push_back(e.metadata.display_name);
    out.directories.push_back(e.metadata.directory);
    out.contents.push_back(e.content);
}

} // namespace

void validate_display_name(std::string_view name) {
    check_name_common(name, "file name");
    if (name.rfind(".lsfs-tmp-", 0) == 0) {
        throw Error(ErrorCode::InvalidName, "file names starting with '.lsfs-tmp-' are reserved");
    }
}

void validate_directory_name(std::string_view directory) {
    check_name_common(directory, "directory name");
    if (directory == ".lsfs") {
        throw Error(ErrorCode::InvalidName, "directory name '.lsfs' is reserved");
    }
}

IndexStore::IndexStore(std::shared_ptr<const EmbeddingProvider> embedder, std::shared_ptr<const Clock> clock)
    : embedder_(std::move(embedder)), clock_(std::move(clock)) {
    if (!embedder_ || !clock_) {
        throw Error(ErrorCode::InvalidArgument, "index store needs an embedder and a clock");
    }
}

std::unique_ptr<IndexStore> IndexStore::open(const fs::path& state_dir,
                                             std::shared_ptr<const EmbeddingProvider> embedder,
                                             std::shared_ptr<const Clock> clock) {
    auto store = std::make_unique<IndexStore>(std::move(embedder), std::move(clock));
    fs::create_directories(state_dir);
    const auto snapshot = state_dir / kSnapshotFile;
    if (fs::exists(snapshot)) {
        store->load(snapshot);
    } else {
        for (const auto& rec : binio::read_journal(state_dir / kJournalFile)) {
            store->apply_journal_record(rec);
        }
    }
    store->state_dir_ = state_dir;
    return store;
}

Timestamp IndexStore::next_time_locked() {
    last_time_ = std::max(clock_->now(), last_time_ + 1);
    return last_time_;
}

void IndexStore::journal_locked(const std::vector<std::uint8_t>& record) {
    if (state_dir_) {
        binio::append_journal(*state_dir_ / kJournalFile, record);
    }
}

const FileEntry& IndexStore::at_locked(const std::string& directory, const std::string& name) const {
    const auto d = dirs_.find(directory);
    if (d != dirs_.end()) {
        const auto f = d->second.find(name);
        if (f != d->second.end()) {
            return f->second;
        }
    }
    throw Error(ErrorCode::NotFound, "no file '" + name + "' in directory '" + directory + "'");
}

FileEntry& IndexStore::at_locked(const std::string& directory, const std::string& name) {
    return const_cast<FileEntry&>(std::as_const(*this).at_locked(directory, name));
}

FileEntry IndexStore::put_entry(const std::string& directory, const std::string& name, std::string content,
                                const PutOptions& options) {
    validate_directory_name(directory);
    validate_display_name(name);
    if (!is_valid_utf8(content)) {
        throw Error(ErrorCode::InvalidArgument, "content is not valid UTF-8");
    }
    EmbeddingVector embedding;
    try {
        embedding = embedder_->embed(content);
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw Error(ErrorCode::EmbeddingFailure, e.what());
    }
    if (embedding.dim() != dim()) {
        throw Error(ErrorCode::EmbeddingFailure, "provider returned a vector of the wrong dimension");
    }

    std::unique_lock lock(mutex_);
    const FileEntry* existing = nullptr;
    if (auto d = dirs_.find(directory); d != dirs_.end()) {
        if (auto f = d->second.find(name); f != d->second.end()) {
            existing = &f->second;
        }
    }
    if (existing && existing->metadata.read_only) {
        throw Error(ErrorCode::FileLocked, "file '" + name + "' is read-only");
    }
    const Timestamp now = next_time_locked();
    FileEntry entry;
    if (existing) {
        entry.metadata = existing->metadata;
    } else {
        entry.metadata.directory = directory;
        entry.metadata.display_name = name;
        entry.metadata.created_at = now;
        entry.metadata.accessed_at = now;
    }
    entry.metadata.modified_at = now;
    entry.metadata.size_bytes = content.size();
    if (options.keywords) {
        entry.metadata.keywords = *options.keywords;
    }
    if (options.source_path) {
        entry.metadata.source_path = options.source_path;
    }
    entry.content = std::move(content);
    entry.embedding = std::move(embedding);

    binio::Writer w;
    w.u8(static_cast<std::uint8_t>(JournalOp::Put));
    encode_entry(w, entry);
    journal_locked(w.bytes());

    dirs_[directory][name] = entry;
    return entry;
}

FileEntry IndexStore::get_entry(const std::string& directory, const std::string& name) const {
    std::shared_lock lock(mutex_);
    return at_locked(directory, name);
}

std::optional<FileEntry> IndexStore::find_entry(const std::string& directory, const std::string& name) const {
    std::shared_lock lock(mutex_);
    const auto d = dirs_.find(directory);
    if (d == dirs_.end()) {
        return std::nullopt;
    }
    const auto f = d->second.find(name);
    if (f == d->second.end()) {
        return std::nullopt;
    }
    return f->second;
}

bool IndexStore::contains(const std::string& directory, const std::string& name) const {
    std::shared_lock lock(mutex_);
    const auto d = dirs_.find(directory);
    return d != dirs_.end() && d->second.count(name) != 0;
}

std::vector<FileMetadata> IndexStore::list_directory(const std::string& directory) const {
    std::shared_lock lock(mutex_);
    std::vector<FileMetadata> out;
    const auto d = dirs_.find(directory);
    if (d == dirs_.end()) {
        return out;
    }
    for (const auto& [name, entry] : d->second) {
        out.push_back(entry.metadata);
    }
    return out;
}

std::vector<std::string> IndexStore::directories() const {
    std::shared_lock lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [name, files] : dirs_) {
        out.push_back(name);
    }
    return out;
}

bool IndexStore::has_directory(const std::string& directory) const {
    std::shared_lock lock(mutex_);
    return dirs_.count(directory) != 0;
}

FileMetadata IndexStore::remove_entry(const std::string& directory, const std::string& name) {
    std::unique_lock lock(mutex_);
    auto& entry = at_locked(directory, name);
    if (entry.metadata.read_only) {
        throw Error(ErrorCode::FileLocked, "file '" + name + "' is read-only");
    }
    FileMetadata removed = entry.metadata;

    binio::Writer w;
    w.u8(static_cast<std::uint8_t>(JournalOp::Remove));
    w.str(directory);
    w.str(name);
    journal_locked(w.bytes());

    auto d = dirs_.find(directory);
    d->second.erase(name);
    if (d->second.empty()) {
        dirs_.erase(d);
    }
    return removed;
}

RetrievalResult IndexStore::scan_keywords(const std::optional<std::string>& directory,
                                          const std::vector<std::string>& keywords,
                                          std::optional<MatchMode> mode) const {
    if (keywords.empty() ||
        std::all_of(keywords.begin(), keywords.end(), [](const std::string& k) { return k.empty(); })) {
        throw Error(ErrorCode::EmptyQuery, "keyword list is empty");
    }
    if (keywords.size() > 1 && !mode) {
        throw Error(ErrorCode::MissingMode, "multiple keywords require a matching condition (and/or)");
    }
    const MatchMode m = mode.value_or(MatchMode::And);
    std::vector<std::string> needles;
    for (const auto& k : keywords) {
        if (!k.empty()) {
            needles.push_back(ascii_lower(k));
        }
    }

    auto matches = [&](const FileEntry& e) {
        const std::string content = ascii_lower(e.content);
        const std::string name = ascii_lower(e.metadata.display_name);
        std::vector<std::string> user_keywords;
        for (const auto& k : e.metadata.keywords) {
            user_keywords.push_back(ascii_lower(k));
        }
        auto hit = [&](const std::string& needle) {
            if (content.find(needle) != std::string::npos || name.find(needle) != std::string::npos) {
                return true;
            }
            return std::any_of(user_keywords.begin(), user_keywords.end(),
                               [&](const std::string& k) { return k.find(needle) != std::string::npos; });
        };
        return m == MatchMode::And ? std::all_of(needles.begin(), needles.end(), hit)
                                   : std::any_of(needles.begin(), needles.end(), hit);
    };

    std::shared_lock lock(mutex_);
    std::vector<const FileEntry*> hits;
    for (const auto& [dname, files] : dirs_) {
        if (directory && dname != *directory) {
            continue;
        }
        for (const auto& [fname, entry] : files) {
            if (matches(entry)) {
                hits.push_back(&entry);
            }
        }
    }
    std::sort(hits.begin(), hits.end(), name_order);
    RetrievalResult out;
    for (const auto* e : hits) {
        push_result(out, *e);
    }
    return out;
}

std::vector<FileMetadata> IndexStore::scan_content(const std::string& directory, std::string_view needle) const {
    if (needle.empty()) {
        throw Error(ErrorCode::EmptyQuery, "key text is empty");
    }
    const std::string lowered = ascii_lower(needle);
    std::shared_lock lock(mutex_);
    std::vector<FileMetadata> out;
    const auto d = dirs_.find(directory);
    if (d == dirs_.end()) {
        return out;
    }
    for (const auto& [name, entry] : d->second) {
        if (ascii_lower(entry.content).find(lowered) != std::string::npos) {
            out.push_back(entry.metadata);
        }
    }
    return out;
}

RetrievalResult IndexStore::topn_semantic(const std::optional<std::string>& directory, std::string_view query,
                                          std::size_t n) const {
    if (n == 0) {
        throw Error(ErrorCode::InvalidArgument, "n must be at least 1");
    }
    if (trim(query).empty()) {
        throw Error(ErrorCode::EmptyQuery, "semantic query is empty");
    }
    EmbeddingVector q;
    try {
        q = embedder_->embed(query);
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw Error(ErrorCode::EmbeddingFailure, e.what());
    }

    std::shared_lock lock(mutex_);
    std::vector<ScoredRef> scored;
    for (const auto& [dname, files] : dirs_) {
        if (directory && dname != *directory) {
            continue;
        }
        for (const auto& [fname, entry] : files) {
            scored.push_back({cosine(q, entry.embedding), &entry});
        }
    }
    const std::size_t k = std::min(n, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k), scored.end(), ranks_before);
    RetrievalResult out;
    out.scores.emplace();
    for (std::size_t i = 0; i < k; ++i) {
        push_result(out, *scored[i].entry);
        out.scores->push_back(scored[i].score);
    }
    return out;
}

FileMetadata IndexStore::touch(const std::string& directory, const std::string& name) {
    std::unique_lock lock(mutex_);
    auto& entry = at_locked(directory, name);
    entry.metadata.accessed_at = next_time_locked();
    binio::Writer w;
    w.u8(static_cast<std::uint8_t>(JournalOp::Meta));
    encode_metadata(w, entry.metadata);
    journal_locked(w.bytes());
    return entry.metadata;
}

FileMetadata IndexStore::set_read_only(const std::string& directory, const std::string& name, bool read_only) {
    std::unique_lock lock(mutex_);
    auto& entry = at_locked(directory, name);
    if (entry.metadata.read_only == read_only) {
        return entry.metadata;
    }
    entry.metadata.read_only = read_only;
    binio::Writer w;
    w.u8(static_cast<std::uint8_t>(JournalOp::Meta));
    encode_metadata(w, entry.metadata);
    journal_locked(w.bytes());
    return entry.metadata;
}

std::vector<FileEntry> IndexStore::entries(const std::optional<std::string>& directory) const {
    std::shared_lock lock(mutex_);
    std::vector<FileEntry> out;
    for (const auto& [dname, files] : dirs_) {
        if (directory && dname != *directory) {
            continue;
        }
        for (const auto& [fname, entry] : files) {
            out.push_back(entry);
        }
    }
    return out;
}

std::size_t IndexStore::size() const {
    std::shared_lock lock(mutex_);
    std::size_t n = 0;
    for (const auto& [dname, files] : dirs_) {
        n += files.size();
    }
    return n;
}

std::vector<std::uint8_t> IndexStore::encode_body_locked() const {
    binio::Writer w;
    std::uint64_t count = 0;
    for (const auto& [dname, files] : dirs_) {
        count += files.size();
    }
    w.u64(count);
    for (const auto& [dname, files] : dirs_) {
        for (const auto& [fname, entry] : files) {
            encode_entry(w, entry);
        }
    }
    return w.take();
}

std::string IndexStore::state_hash() const {
    std::shared_lock lock(mutex_);
    const auto body = encode_body_locked();
    return sha256_hex(std::string_view(reinterpret_cast<const char*>(body.data()), body.size()));
}

void IndexStore::persist(const std::optional<fs::path>& path) {
    std::unique_lock lock(mutex_);
    fs::path target;
    if (path) {
        target = *path;
    } else if (state_dir_) {
        target = *state_dir_ / kSnapshotFile;
    } else {
        throw Error(ErrorCode::InvalidArgument, "store has no state directory; pass a snapshot path");
    }
    const auto body = encode_body_locked();
    binio::write_snapshot(target, {std::string(kMagic), kFormatVersion, static_cast<std::uint32_t>(dim())}, body);
    if (state_dir_ && target.parent_path() == *state_dir_) {
        std::error_code ec;
        fs::remove(*state_dir_ / kJournalFile, ec);
    }
}

void IndexStore::apply_journal_record(const std::vector<std::uint8_t>& record) {
    binio::Reader r(record);
    const auto op = static_cast<JournalOp>(r.u8());
    switch (op) {
    case JournalOp::Put: {
        auto entry = decode_entry(r, dim());
        last_time_ = std::max({last_time_, entry.metadata.modified_at, entry.metadata.accessed_at});
        auto& slot = dirs_[entry.metadata.directory][entry.metadata.display_name];
        slot = std::move(entry);
        break;
    }
    case JournalOp::Remove: {
        const std::string directory = r.str();
        const std::string name = r.str();
        auto d = dirs_.find(directory);
        if (d != dirs_.end()) {
            d->second.erase(name);
            if (d->second.empty()) {
                dirs_.erase(d);
            }
        }
        break;
    }
    case JournalOp::Meta: {
        auto meta = decode_metadata(r);
        auto d = dirs_.find(meta.directory);
        if (d != dirs_.end()) {
            auto f = d->second.find(meta.display_name);
            if (f != d->second.end()) {
                last_time_ = std::max({last_time_, meta.modified_at, meta.accessed_at});
                f->second.metadata = std::move(meta);
            }
        }
        break;
    }
    default:
        throw Error(ErrorCode::CorruptSnapshot, "unknown journal opcode");
    }
}

void IndexStore::load(const fs::path& path) {
    binio::SnapshotHeader header;
    const auto body = binio::read_snapshot(path, kMagic, header);
    if (header.version != kFormatVersion) {
        throw Error(ErrorCode::CorruptSnapshot, "unsupported snapshot version " + std::to_string(header.version));
    }
    if (header.aux != dim()) {
        throw Error(ErrorCode::CorruptSnapshot, "snapshot dimension " + std::to_string(header.aux) +
                                                    " does not match provider dimension " + std::to_string(dim()));
    }
    DirMap loaded;
    Timestamp latest = 0;
    binio::Reader r(body);
    const std::uint64_t count = r.u64();
    for (std::uint64_t i = 0; i < count; ++i) {
        auto entry = decode_entry(r, dim());
        latest = std::max({latest, entry.metadata.modified_at, entry.metadata.accessed_at});
        loaded[entry.metadata.directory][entry.metadata.display_name] = std::move(entry);
    }
    if (!r.done()) {
        throw Error(ErrorCode::CorruptSnapshot, "trailing bytes after last record");
    }

    std::unique_lock lock(mutex_);
    dirs_ = std::move(loaded);
    last_time_ = latest;
    const auto journal = path.parent_path() / kJournalFile;
    for (const auto& rec : binio::read_journal(journal)) {
        apply_journal_record(rec);
    }
}

} // namespace lsfs
