#include "lsfs/version_recorder.hpp"

#include "lsfs/binio.hpp"
#include "lsfs/error.hpp"

#include <algorithm>

namespace lsfs {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kMagic = "LSFSVER1";
constexpr std::uint32_t kFormatVersion = 1;

std::string describe(const FileKey& key) { return key.directory + "/" + key.name; }

void encode_version(binio::Writer& w, const Version& v) {
    w.u64(v.seq);
    w.i64(v.recorded_at);
    const auto& m = v.metadata;
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
    w.str(v.content);
}

Version decode_version(binio::Reader& r) {
    Version v;
    v.seq = r.u64();
    v.recorded_at = r.i64();
    auto& m = v.metadata;
    m.directory = r.str();
    m.display_name = r.str();
    m.created_at = r.i64();
    m.modified_at = r.i64();
    m.accessed_at = r.i64();
    m.read_only = r.u8() != 0;
    const auto nk = r.u32();
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
    v.content = r.str();
    return v;
}

} // namespace

VersionRecorder::VersionRecorder(std::shared_ptr<const Clock> clock, std::size_t retention_cap)
    : clock_(std::move(clock)), cap_(retention_cap) {}

std::unique_ptr<VersionRecorder> VersionRecorder::open(const fs::path& state_dir, std::shared_ptr<const Clock> clock,
                                                       std::size_t retention_cap) {
    auto rec = std::make_unique<VersionRecorder>(std::move(clock), retention_cap);
    fs::create_directories(state_dir);
    const auto snapshot = state_dir / kSnapshotFile;
    if (fs::exists(snapshot)) {
        rec->load(snapshot);
    }
    rec->state_dir_ = state_dir;
    return rec;
}

std::uint64_t VersionRecorder::record(const FileKey& key, const FileMetadata& metadata, const std::string& content) {
    std::uint64_t seq = 0;
    {
        std::lock_guard lock(mutex_);
        auto& c = chains_[key];
        Timestamp at = clock_->now();
        if (!c.versions.empty()) {
            at = std::max(at, c.versions.back().recorded_at);
        }
        seq = c.next_seq++;
        c.versions.push_back({seq, at, metadata, content});
        if (cap_ > 0 && c.versions.size() > cap_) {
            c.versions.erase(c.versions.begin(),
                             c.versions.begin() + static_cast<std::ptrdiff_t>(c.versions.size() - cap_));
        }
    }
    // TODO: append to a journal like the index does instead of rewriting the
    // whole snapshot on every record.
    if (state_dir_) {
        persist();
    }
    return seq;
}

const VersionRecorder::Chain& VersionRecorder::chain_locked(const FileKey& key) const {
    const auto it = chains_.find(key);
    if (it == chains_.end() || it->second.versions.empty()) {
        throw Error(ErrorCode::UnknownKey, "no version history for " + describe(key));
    }
    return it->second;
}

Version VersionRecorder::resolve_by_date(const FileKey& key, Timestamp target) const {
    std::lock_guard lock(mutex_);
    const auto& versions = chain_locked(key).versions;
    // recorded_at is non-decreasing, so the last version <= target is just
    // before the first one past it.
    const auto it = std::upper_bound(versions.begin(), versions.end(), target,
                                     [](Timestamp t, const Version& v) { return t < v.recorded_at; });
    if (it == versions.begin()) {
        throw Error(ErrorCode::NoVersionBefore,
                    "no version of " + describe(key) + " recorded at or before " + format_rfc3339(target));
    }
    return *std::prev(it);
}

Version VersionRecorder::resolve_by_count(const FileKey& key, std::size_t k) const {
    std::lock_guard lock(mutex_);
    const auto& versions = chain_locked(key).versions;
    if (k == 0) {
        throw Error(ErrorCode::InvalidArgument, "version count must be at least 1");
    }
    if (k > versions.size()) {
        throw Error(ErrorCode::TooFewVersions, describe(key) + " has only " + std::to_string(versions.size()) +
                                                   " recorded versions, asked for " + std::to_string(k));
    }
    return versions[versions.size() - k];
}

std::vector<Version> VersionRecorder::chain(const FileKey& key) const {
    std::lock_guard lock(mutex_);
    const auto it = chains_.find(key);
    return it == chains_.end() ? std::vector<Version>{} : it->second.versions;
}

std::size_t VersionRecorder::length(const FileKey& key) const {
    std::lock_guard lock(mutex_);
    const auto it = chains_.find(key);
    return it == chains_.end() ? 0 : it->second.versions.size();
}

bool VersionRecorder::has(const FileKey& key) const { return length(key) > 0; }

std::vector<FileKey> VersionRecorder::keys() const {
    std::lock_guard lock(mutex_);
    std::vector<FileKey> out;
    for (const auto& [k, c] : chains_) {
        out.push_back(k);
    }
    return out;
}

void VersionRecorder::persist(const std::optional<fs::path>& path) const {
    fs::path target;
    if (path) {
        target = *path;
    } else if (state_dir_) {
        target = *state_dir_ / kSnapshotFile;
    } else {
        throw Error(ErrorCode::InvalidArgument, "recorder has no state directory; pass a snapshot path");
    }
    std::lock_guard persist_lock(persist_mutex_);
    binio::Writer w;
    {
        std::lock_guard lock(mutex_);
        w.u64(chains_.size());
        for (const auto& [key, c] : chains_) {
            w.str(key.directory);
            w.str(key.name);
            w.u64(c.next_seq);
            w.u64(c.versions.size());
            for (const auto& v : c.versions) {
                encode_version(w, v);
            }
        }
    }
    binio::write_snapshot(target, {std::string(kMagic), kFormatVersion, 0}, w.bytes());
}

void VersionRecorder::load(const fs::path& path) {
    binio::SnapshotHeader header;
    const auto body = binio::read_snapshot(path, kMagic, header);
    if (header.version != kFormatVersion) {
        throw Error(ErrorCode::CorruptSnapshot, "unsupported version snapshot format");
    }
    std::map<FileKey, Chain> loaded;
    binio::Reader r(body);
    const auto n = r.u64();
    for (std::uint64_t i = 0; i < n; ++i) {
        FileKey key;
        key.directory = r.str();
        key.name = r.str();
        Chain c;
        c.next_seq = r.u64();
        const auto nv = r.u64();
        for (std::uint64_t j = 0; j < nv; ++j) {
            c.versions.push_back(decode_version(r));
        }
        loaded.emplace(std::move(key), std::move(c));
    }
    if (!r.done()) {
        throw Error(ErrorCode::CorruptSnapshot, "trailing bytes in version snapshot");
    }
    std::lock_guard lock(mutex_);
    chains_ = std::move(loaded);
}

} // namespace lsfs
