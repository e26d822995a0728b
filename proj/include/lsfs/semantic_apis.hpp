#pragma once

#include "lsfs/clock.hpp"
#include "lsfs/llm_client.hpp"
#include "lsfs/share_store.hpp"
#include "lsfs/syscalls.hpp"
#include "lsfs/text_diff.hpp"
#include "lsfs/version_recorder.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace lsfs {

enum class RetrieveMode { Keyword, Semantic, Integrated };

std::string_view to_string(RetrieveMode mode);
RetrieveMode parse_retrieve_mode(std::string_view text);

struct RetrieveArgs {
    std::vector<std::string> keywords;
    std::optional<MatchMode> condition;
    std::string query;
    std::optional<std::string> directory;
    std::size_t n = 3;
    /// Integrated mode only: where the keyword-filtered files are grouped.
    std::string new_directory;
};

/// Receives the candidates and returns the indices to keep.
using SelectionFilter = std::function<std::vector<std::size_t>(const RetrievalResult&)>;

struct RetrieveSummary {
    RetrievalResult candidates;
    RetrievalResult kept;
    /// One per kept file, same order.
    std::vector<std::string> summaries;
    /// All summaries joined, each under a "## directory/name" heading.
    std::string summary;
};

struct ChangeSummary {
    FileKey key;
    TextDiff diff;
    std::string summary;
    /// False when the LLM failed; the change is committed regardless.
    bool summarized = true;
    std::uint64_t version_seq_before = 0;
    FileEntry entry;
};

struct RollbackTarget {
    enum class By { Date, Count };

    By by = By::Count;
    Timestamp date = 0;
    std::size_t k = 1;

    static RollbackTarget count(std::size_t k) { return {By::Count, 0, k}; }
    static RollbackTarget at(Timestamp date) { return {By::Date, date, 0}; }
};

inline constexpr std::string_view kNoChangeSummary = "No changes.";

/// Retrieval summaries, change summaries, rollback and share links, built on
/// the syscalls, the recorder and the LLM.
class SemanticApis {
public:
    SemanticApis(Syscalls& syscalls, VersionRecorder& recorder, ShareStore& shares,
                 std::shared_ptr<const LlmClient> llm, std::shared_ptr<const Clock> clock);

    Syscalls& syscalls() { return sys_; }
    VersionRecorder& recorder() { return recorder_; }
    ShareStore& shares() { return shares_; }
    const LlmClient& llm() const { return *llm_; }

    /// An empty selection returns no summaries and makes no LLM call.
    RetrieveSummary retrieve_summary(RetrieveMode mode, const RetrieveArgs& args,
                                     const SelectionFilter& filter = nullptr);

    ChangeSummary change_summary(const FileKey& key, const ImportSource& import_file);

    /// Records the current state first, so a rollback can itself be undone.
    FileEntry rollback(const FileKey& key, const RollbackTarget& target);

    /// `validity_seconds` absent means the link never expires.
    ShareLink create_link(const FileKey& key, std::optional<std::int64_t> validity_seconds);
    ShareLink revoke_link(const std::string& token);
    std::string fetch_shared(const std::string& token);

private:
    Syscalls& sys_;
    VersionRecorder& recorder_;
    ShareStore& shares_;
    std::shared_ptr<const LlmClient> llm_;
    std::shared_ptr<const Clock> clock_;
};

} // namespace lsfs
