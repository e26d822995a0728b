#include "lsfs/share_store.hpp"

#include "lsfs/binio.hpp"
#include "lsfs/error.hpp"
#include "lsfs/util.hpp"

#include <algorithm>
#include <fstream>
#include <tuple>

namespace lsfs {

namespace fs = std::filesystem;

nlohmann::json to_json(const ShareLink& link) {
    nlohmann::json j{{"token", link.token},
                     {"directory", link.key.directory},
                     {"name", link.key.name},
                     {"created_at", format_rfc3339(link.created_at)},
                     {"expires_at", nullptr},
                     {"revoked", link.revoked},
                     {"url", link.url},
                     {"content_hash", link.content_hash}};
    if (link.expires_at) {
        j["expires_at"] = format_rfc3339(*link.expires_at);
    }
    return j;
}

LocalShareStore::LocalShareStore(std::shared_ptr<const Clock> clock, std::string base_url,
                                 std::optional<fs::path> state_file)
    : clock_(std::move(clock)), base_url_(std::move(base_url)), state_file_(std::move(state_file)) {
    while (!base_url_.empty() && base_url_.back() == '/') {
        base_url_.pop_back();
    }
    if (state_file_ && fs::exists(*state_file_)) {
        load();
    }
}

void LocalShareStore::set_base_url(std::string base_url) {
    std::lock_guard lock(mutex_);
    base_url_ = std::move(base_url);
    for (auto& [token, rec] : records_) {
        rec.link.url = base_url_ + "/share/" + token;
    }
}

ShareLink LocalShareStore::publish(const FileKey& key, const std::string& content,
                                   std::optional<Timestamp> expires_at) {
    std::lock_guard lock(mutex_);
    Record rec;
    // 32 random bytes; collisions are not a practical concern but are cheap to rule out
    do {
        rec.link.token = random_token_hex(32);
    } while (records_.count(rec.link.token) != 0);
    rec.link.key = key;
    rec.link.created_at = clock_->now();
    rec.link.expires_at = expires_at;
    rec.link.url = base_url_ + "/share/" + rec.link.token;
    rec.link.content_hash = sha256_hex(content);
    rec.content = content;
    const auto token = rec.link.token;
    auto& stored = records_.emplace(token, std::move(rec)).first->second;
    try {
        save_locked();
    } catch (...) {
        records_.erase(token);
        throw;
    }
    return stored.link;
}

LocalShareStore::Record& LocalShareStore::find_locked(const std::string& token) {
    auto it = records_.find(token);
    if (it == records_.end()) {
        throw Error(ErrorCode::NotFound, "unknown share token");
    }
    return it->second;
}

bool LocalShareStore::expire_locked(Record& record) {
    if (!record.link.revoked && record.link.expires_at && clock_->now() >= *record.link.expires_at) {
        record.link.revoked = true;
        return true;
    }
    return false;
}

ShareLink LocalShareStore::revoke(const std::string& token) {
    std::lock_guard lock(mutex_);
    auto& rec = find_locked(token);
    if (!rec.link.revoked) {
        rec.link.revoked = true;
        save_locked();
    }
    return rec.link;
}

std::string LocalShareStore::fetch(const std::string& token) {
    std::lock_guard lock(mutex_);
    auto& rec = find_locked(token);
    if (expire_locked(rec)) {
        save_locked();
    }
    if (rec.link.revoked) {
        throw Error(ErrorCode::Gone, "share link is no longer valid", {{"token", token}});
    }
    return rec.content;
}

ShareLink LocalShareStore::get(const std::string& token) {
    std::lock_guard lock(mutex_);
    auto& rec = find_locked(token);
    if (expire_locked(rec)) {
        save_locked();
    }
    return rec.link;
}

std::vector<ShareLink> LocalShareStore::list() {
    std::lock_guard lock(mutex_);
    bool dirty = false;
    std::vector<ShareLink> out;
    for (auto& [token, rec] : records_) {
        dirty = expire_locked(rec) || dirty;
        out.push_back(rec.link);
    }
    if (dirty) {
        save_locked();
    }
    std::sort(out.begin(), out.end(), [](const ShareLink& a, const ShareLink& b) {
        return std::tie(a.created_at, a.token) < std::tie(b.created_at, b.token);
    });
    return out;
}

void LocalShareStore::save_locked() const {
    if (!state_file_) {
        return;
    }
    nlohmann::json j = nlohmann::json::array();
    for (const auto& [token, rec] : records_) {
        nlohmann::json r{{"token", token},
                         {"directory", rec.link.key.directory},
                         {"name", rec.link.key.name},
                         {"created_at", rec.link.created_at},
                         {"expires_at", nullptr},
                         {"revoked", rec.link.revoked},
                         {"content_hash", rec.link.content_hash},
                         {"content", rec.content}};
        if (rec.link.expires_at) {
            r["expires_at"] = *rec.link.expires_at;
        }
        j.push_back(std::move(r));
    }
    try {
        std::error_code ec;
        fs::create_directories(state_file_->parent_path(), ec);
        binio::atomic_write(*state_file_, j.dump());
    } catch (const Error& e) {
        throw Error(ErrorCode::ShareStoreUnavailable, std::string("cannot save share links: ") + e.what());
    }
}

void LocalShareStore::load() {
    std::ifstream in(*state_file_);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ShareStoreUnavailable, std::string("unreadable share store: ") + e.what());
    }
    for (const auto& r : j) {
        Record rec;
        rec.link.token = r.at("token").get<std::string>();
        rec.link.key = {r.at("directory").get<std::string>(), r.at("name").get<std::string>()};
        rec.link.created_at = r.at("created_at").get<Timestamp>();
        if (!r.at("expires_at").is_null()) {
            rec.link.expires_at = r.at("expires_at").get<Timestamp>();
        }
        rec.link.revoked = r.at("revoked").get<bool>();
        rec.link.content_hash = r.at("content_hash").get<std::string>();
        rec.link.url = base_url_ + "/share/" + rec.link.token;
        rec.content = r.at("content").get<std::string>();
        records_.emplace(rec.link.token, std::move(rec));
    }
}

} // namespace lsfs
