#pragma once

#include "lsfs/clock.hpp"
#include "lsfs/llm_client.hpp"
#include "lsfs/syscalls.hpp"
#include "lsfs/text_diff.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace lsfs {

struct ScanReport {
    struct Changed {
        std::string directory;
        std::string name;
        std::string old_hash;
        std::string new_hash;
        std::string old_content;
        std::string new_content;
    };
    struct Failure {
        std::string path;
        std::string code;
        std::string message;
    };

    Timestamp scanned_at = 0;
    std::vector<Changed> changed;
    std::vector<FileKey> deleted;
    std::vector<FileKey> created;
    /// Read-only files edited or deleted on disk; the disk copy was put back.
    std::vector<FileKey> restored;
    std::vector<Failure> errors;

    /// True when the scan found store and disk already in agreement.
    bool quiescent() const { return changed.empty() && deleted.empty() && created.empty() && restored.empty(); }
};

nlohmann::json to_json(const ScanReport& report);

struct ChangeLogEntry {
    FileKey key;
    TextDiff diff;
    /// Absent when the LLM could not be reached.
    std::optional<std::string> summary;
};

/// Polls the mirror root and pulls out-of-band edits, deletions and new
/// files into the store. One supervisor per root.
class Supervisor {
public:
    Supervisor(Syscalls& syscalls, std::shared_ptr<const Clock> clock, std::shared_ptr<const LlmClient> llm = nullptr);
    ~Supervisor();

    Supervisor(const Supervisor&) = delete;
    Supervisor& operator=(const Supervisor&) = delete;

    /// Blocks while another scan is in flight.
    ScanReport scan_once();

    /// Starts the background loop. Throws AlreadyRunning, or InvalidArgument
    /// for intervals under 100 ms. A tick that finds a scan still running is
    /// skipped.
    void run(std::chrono::milliseconds interval);
    void stop();
    bool running() const { return running_.load(); }

    std::uint64_t scans_completed() const { return scans_.load(); }
    std::uint64_t scans_skipped() const { return skipped_.load(); }

    /// Called after every background scan that changed something.
    void on_report(std::function<void(const ScanReport&)> callback);

    /// One entry per changed file; also appended to `<root>/.lsfs/changes.log`.
    /// Throws PreconditionFailed when nothing changed.
    std::vector<ChangeLogEntry> emit_change_log(const ScanReport& report, const LlmClient& llm);

private:
    ScanReport scan_locked();
    void loop(std::chrono::milliseconds interval);

    Syscalls& sys_;
    std::shared_ptr<const Clock> clock_;
    std::shared_ptr<const LlmClient> llm_;

    std::mutex scan_mutex_;
    std::mutex state_mutex_;
    std::condition_variable cv_;
    bool stop_requested_ = false;
    std::atomic<bool> running_{false};
    std::thread worker_;
    std::atomic<std::uint64_t> scans_{0};
    std::atomic<std::uint64_t> skipped_{0};
    std::function<void(const ScanReport&)> callback_;
};

} // namespace lsfs
