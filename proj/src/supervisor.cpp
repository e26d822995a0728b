#include "lsfs/supervisor.hpp"

#include "lsfs/error.hpp"
#include "lsfs/util.hpp"

#include <spdlog/spdlog.h>

#include <fstream>
#include <set>

namespace lsfs {

namespace fs = std::filesystem;

namespace {

nlohmann::json key_json(const FileKey& k) { return {{"directory", k.directory}, {"name", k.name}}; }

} // namespace

nlohmann::json to_json(const ScanReport& report) {
    nlohmann::json j;
    j["scanned_at"] = format_rfc3339(report.scanned_at);
    j["changed"] = nlohmann::json::array();
    for (const auto& c : report.changed) {
        j["changed"].push_back(
            {{"directory", c.directory}, {"name", c.name}, {"old_hash", c.old_hash}, {"new_hash", c.new_hash}});
    }
    for (const auto* field : {"deleted", "created", "restored"}) {
        j[field] = nlohmann::json::array();
    }
    for (const auto& k : report.deleted) {
        j["deleted"].push_back(key_json(k));
    }
    for (const auto& k : report.created) {
        j["created"].push_back(key_json(k));
    }
    for (const auto& k : report.restored) {
        j["restored"].push_back(key_json(k));
    }
    j["errors"] = nlohmann::json::array();
    for (const auto& e : report.errors) {
        j["errors"].push_back({{"path", e.path}, {"code", e.code}, {"message", e.message}});
    }
    return j;
}

Supervisor::Supervisor(Syscalls& syscalls, std::shared_ptr<const Clock> clock, std::shared_ptr<const LlmClient> llm)
    : sys_(syscalls), clock_(std::move(clock)), llm_(std::move(llm)) {
    if (!sys_.mirror_enabled()) {
        throw Error(ErrorCode::PreconditionFailed, "supervisor needs a mirror root");
    }
}

Supervisor::~Supervisor() { stop(); }

ScanReport Supervisor::scan_once() {
    std::lock_guard lock(scan_mutex_);
    return scan_locked();
}

ScanReport Supervisor::scan_locked() {
    const fs::path root = *sys_.mirror_root();
    std::error_code ec;
    if (!fs::is_directory(root, ec)) {
        throw Error(ErrorCode::RootMissing, "mirror root is missing: " + root.string());
    }
    auto& store = sys_.store();
    ScanReport report;
    report.scanned_at = clock_->now();

    auto fail = [&](const fs::path& p, const Error& e) {
        report.errors.push_back({p.string(), std::string(to_string(e.code())), e.what()});
    };

    std::set<FileKey> on_disk;
    for (const auto& dir_entry : fs::directory_iterator(root, ec)) {
        if (!dir_entry.is_directory(ec)) {
            continue; // files directly under the root have no directory and are not mirrored
        }
        const auto dname = dir_entry.path().filename().string();
        if (dname == ".lsfs") {
            continue;
        }
        try {
            validate_directory_name(dname);
        } catch (const Error& e) {
            fail(dir_entry.path(), e);
            continue;
        }
        for (const auto& file_entry : fs::directory_iterator(dir_entry.path(), ec)) {
            if (!file_entry.is_regular_file(ec)) {
                continue;
            }
            const auto fname = file_entry.path().filename().string();
            if (fname.rfind(kMirrorTempPrefix, 0) == 0) {
                continue;
            }
            try {
                validate_display_name(fname);
            } catch (const Error& e) {
                fail(file_entry.path(), e);
                continue;
            }
            on_disk.insert({dname, fname});
        }
    }

    for (const auto& key : on_disk) {
        const auto path = sys_.mirror_path(key);
        std::lock_guard key_lock(sys_.locks().at(key));
        try {
            if (!fs::exists(path, ec)) {
                continue; // removed since listing; the deletion pass below handles it
            }
            const auto current = store.find_entry(key.directory, key.name);
            if (!current) {
                auto text = sys_.extractors().extract(path);
                PutOptions opts;
                opts.source_path = path.string();
                store.put_entry(key.directory, key.name, std::move(text), opts);
                report.created.push_back(key);
                continue;
            }
            auto disk = read_text_file(path);
            if (disk == current->content) {
                continue;
            }
            if (current->metadata.read_only) {
                sys_.mirror_write(key, current->content);
                report.restored.push_back(key);
                continue;
            }
            if (!is_valid_utf8(disk)) {
                throw Error(ErrorCode::ExtractorUnsupported, "disk content is not UTF-8 text");
            }
            store.put_entry(key.directory, key.name, disk);
            report.changed.push_back({key.directory, key.name, sha256_hex(current->content), sha256_hex(disk),
                                      current->content, std::move(disk)});
        } catch (const Error& e) {
            fail(path, e);
        }
    }

    for (const auto& entry : store.entries()) {
        const FileKey key{entry.metadata.directory, entry.metadata.display_name};
        if (on_disk.count(key) != 0) {
            continue;
        }
        std::lock_guard key_lock(sys_.locks().at(key));
        const auto path = sys_.mirror_path(key);
        try {
            const auto current = store.find_entry(key.directory, key.name);
            if (!current || fs::exists(path, ec)) {
                continue; // changed under us by a syscall; next scan reconciles
            }
            if (current->metadata.read_only) {
                sys_.mirror_write(key, current->content);
                report.restored.push_back(key);
                continue;
            }
            store.remove_entry(key.directory, key.name);
            // drop the on-disk directory too if the deletion emptied it
            sys_.mirror_remove(key);
            report.deleted.push_back(key);
        } catch (const Error& e) {
            fail(path, e);
        }
    }
    scans_.fetch_add(1);
    return report;
}

void Supervisor::run(std::chrono::milliseconds interval) {
    if (interval.count() < 100) {
        throw Error(ErrorCode::InvalidArgument, "scan interval must be at least 100 ms");
    }
    std::lock_guard lock(state_mutex_);
    if (running_.load()) {
        throw Error(ErrorCode::AlreadyRunning, "supervisor is already running");
    }
    stop_requested_ = false;
    running_.store(true);
    worker_ = std::thread([this, interval] { loop(interval); });
}

void Supervisor::stop() {
    {
        std::lock_guard lock(state_mutex_);
        if (!running_.load()) {
            return;
        }
        stop_requested_ = true;
    }
    cv_.notify_all();
    if (worker_.joinable()) {
        worker_.join();
    }
    running_.store(false);
}

void Supervisor::on_report(std::function<void(const ScanReport&)> callback) {
    std::lock_guard lock(state_mutex_);
    callback_ = std::move(callback);
}

void Supervisor::loop(std::chrono::milliseconds interval) {
    auto next = std::chrono::steady_clock::now();
    while (true) {
        {
            std::unique_lock lock(state_mutex_);
            if (cv_.wait_until(lock, next, [this] { return stop_requested_; })) {
                return;
            }
        }
        next += interval;
        std::unique_lock scan(scan_mutex_, std::try_to_lock);
        if (!scan.owns_lock()) {
            skipped_.fetch_add(1);
            continue;
        }
        try {
            auto report = scan_locked();
            scan.unlock();
            if (!report.changed.empty() && llm_) {
                emit_change_log(report, *llm_);
            }
            std::function<void(const ScanReport&)> cb;
            {
                std::lock_guard lock(state_mutex_);
                cb = callback_;
            }
            if (cb && !report.quiescent()) {
                cb(report);
            }
        } catch (const std::exception& e) {
            spdlog::warn("supervisor scan failed: {}", e.what());
        }
        const auto now = std::chrono::steady_clock::now();
        if (next < now) {
            next = now; // fell behind; do not burst
        }
    }
}

std::vector<ChangeLogEntry> Supervisor::emit_change_log(const ScanReport& report, const LlmClient& llm) {
    if (report.changed.empty()) {
        throw Error(ErrorCode::PreconditionFailed, "change log requested for a scan without changes");
    }
    std::vector<ChangeLogEntry> out;
    for (const auto& c : report.changed) {
        ChangeLogEntry entry{{c.directory, c.name}, compare_change(c.old_content, c.new_content), std::nullopt};
        const auto prompt = render_template(prompt_template("change_log.v1.txt"),
                                            {{"old", c.old_content},
                                             {"new", c.new_content},
                                             {"directory", c.directory},
                                             {"name", c.name},
                                             {"diff", render_diff(entry.diff)}});
        try {
            entry.summary = llm.complete({"", prompt, false});
        } catch (const Error& e) {
            spdlog::warn("change log summary for {}/{} unavailable: {}", c.directory, c.name, e.what());
        }
        out.push_back(std::move(entry));
    }

    const auto log_dir = *sys_.mirror_root() / ".lsfs";
    std::error_code ec;
    fs::create_directories(log_dir, ec);
    std::ofstream log(log_dir / "changes.log", std::ios::app);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto& c = report.changed[i];
        nlohmann::json line{{"ts", format_rfc3339(report.scanned_at)},
                            {"directory", c.directory},
                            {"name", c.name},
                            {"old_hash", c.old_hash},
                            {"new_hash", c.new_hash},
                            {"diff", render_diff(out[i].diff)},
                            {"summary", out[i].summary ? nlohmann::json(*out[i].summary) : nlohmann::json(nullptr)}};
        log << line.dump() << '\n';
    }
    return out;
}

} // namespace lsfs
