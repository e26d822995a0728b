#pragma once

#include "lsfs/clock.hpp"
#include "lsfs/version_recorder.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace lsfs {

struct ShareLink {
    std::string token;
    FileKey key;
    Timestamp created_at = 0;
    std::optional<Timestamp> expires_at;
    bool revoked = false;
    std::string url;
    /// SHA-256 of the content captured at publish time.
    std::string content_hash;
};

nlohmann::json to_json(const ShareLink& link);

/// Backend that serves a snapshot of a file under an unguessable token.
class ShareStore {
public:
    virtual ~ShareStore() = default;

    virtual ShareLink publish(const FileKey& key, const std::string& content, std::optional<Timestamp> expires_at) = 0;
    /// Idempotent. Throws NotFound for unknown tokens.
    virtual ShareLink revoke(const std::string& token) = 0;
    /// Throws NotFound for unknown tokens and Gone once revoked or expired.
    virtual std::string fetch(const std::string& token) = 0;
    virtual ShareLink get(const std::string& token) = 0;
    virtual std::vector<ShareLink> list() = 0;
};

/// In-process share store. Content is copied at publish time; state is kept
/// in a JSON file when one is given. Expired links flip to revoked the first
/// time they are looked at.
class LocalShareStore final : public ShareStore {
public:
    static constexpr std::string_view kStateFile = "links.json";

    LocalShareStore(std::shared_ptr<const Clock> clock, std::string base_url,
                    std::optional<std::filesystem::path> state_file = std::nullopt);

    ShareLink publish(const FileKey& key, const std::string& content, std::optional<Timestamp> expires_at) override;
    ShareLink revoke(const std::string& token) override;
    std::string fetch(const std::string& token) override;
    ShareLink get(const std::string& token) override;
    std::vector<ShareLink> list() override;

    void set_base_url(std::string base_url);

private:
    struct Record {
        ShareLink link;
        std::string content;
    };

    Record& find_locked(const std::string& token);
    /// Returns true when the record changed.
    bool expire_locked(Record& record);
    void save_locked() const;
    void load();

    std::shared_ptr<const Clock> clock_;
    std::string base_url_;
    std::optional<std::filesystem::path> state_file_;
    std::mutex mutex_;
    std::map<std::string, Record> records_;
};

} // namespace lsfs
