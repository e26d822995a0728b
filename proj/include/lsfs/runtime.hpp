#pragma once

#include "lsfs/clock.hpp"
#include "lsfs/embedding.hpp"
#include "lsfs/error.hpp"
#include "lsfs/executor.hpp"
#include "lsfs/gate.hpp"
#include "lsfs/index_store.hpp"
#include "lsfs/llm_client.hpp"
#include "lsfs/parser.hpp"
#include "lsfs/semantic_apis.hpp"
#include "lsfs/share_store.hpp"
#include "lsfs/supervisor.hpp"
#include "lsfs/syscalls.hpp"
#include "lsfs/version_recorder.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

namespace lsfs {

struct RuntimeConfig {
    std::filesystem::path root;
    std::int64_t scan_interval_ms = 1000;
    LlmProviderConfig llm;
    EmbeddingProviderConfig embedding;
    std::optional<std::uint16_t> http_port;
    /// Safe calls run without asking. Danger calls always ask.
    bool auto_approve_safe = true;
    /// Required as "Authorization: Bearer <token>" on /v1 when set.
    std::string api_token;
    /// Prefix of share URLs; defaults to http://127.0.0.1:<port>.
    std::string public_url;
    std::size_t version_retention = 0;

    /// Reads LSFS_* variables from `env` (the process environment when empty).
    static RuntimeConfig from_env(const std::map<std::string, std::string>& env = {});

    std::filesystem::path state_dir() const { return root / ".lsfs"; }
    void validate() const;
};

/// Everything that happened to one prompt or direct call.
struct Transcript {
    std::string prompt;
    std::optional<ApiCall> call;
    std::string preview;
    bool danger = false;
    /// "auto", "approved", "rejected", "expired" or empty when never gated.
    std::string decision;
    std::string approved_by;
    std::string action_id;
    std::optional<nlohmann::json> result;
    std::optional<ErrorCode> error;
    std::string error_message;
    nlohmann::json error_details;

    bool ok() const { return !error.has_value(); }
    /// 0 ok, 2 prompt not understood, 3 refused, 1 anything else.
    int exit_code() const;
    nlohmann::json to_json() const;
    /// Stable text form; omits the random action id.
    std::string render() const;
};

/// Outcome of submitting without an interactive approver.
struct Submission {
    Transcript transcript;
    std::optional<PendingAction> pending;
};

/// Wires store, recorder, share store, LLM, parser, gate and executor for
/// one root. CLI and HTTP both drive prompts through submit/confirm.
class Runtime {
public:
    struct Overrides {
        std::shared_ptr<const Clock> clock;
        std::shared_ptr<const LlmClient> llm;
        std::shared_ptr<const EmbeddingProvider> embedder;
    };

    static std::unique_ptr<Runtime> open(const RuntimeConfig& config, Overrides overrides = {});
    ~Runtime();

    const RuntimeConfig& config() const { return config_; }
    const Clock& clock() const { return *clock_; }
    IndexStore& store() { return *store_; }
    VersionRecorder& recorder() { return *recorder_; }
    LocalShareStore& shares() { return *shares_; }
    Syscalls& syscalls() { return *syscalls_; }
    SemanticApis& apis() { return *apis_; }
    const Parser& parser() const { return *parser_; }
    Gate& gate() { return *gate_; }
    Executor& executor() { return *executor_; }
    Supervisor& supervisor() { return *supervisor_; }
    const LlmClient& llm() const { return *llm_; }

    /// Parse, gate and execute. Calls that need approval go to `approver`;
    /// without one they are refused.
    Transcript run_prompt(const std::string& text, const Approver& approver, const SelectionFilter& filter = nullptr);
    /// Same pipeline for an already-built call (direct exec).
    Transcript run_call(const ApiCall& call, const Approver& approver, const SelectionFilter& filter = nullptr);

    /// Parse and gate; executes right away when no approval is needed,
    /// otherwise returns the pending action.
    Submission submit_prompt(const std::string& text, const SelectionFilter& filter = nullptr);
    Submission submit_call(const ApiCall& call, const SelectionFilter& filter = nullptr);
    Transcript confirm(const std::string& pending_id, bool approve, const std::string& approver_name = "user",
                       const SelectionFilter& filter = nullptr);

    /// Writes the index snapshot and the version store.
    void persist();

private:
    Runtime() = default;
    void execute_into(Transcript& t, const ApprovedCall& approved, const SelectionFilter& filter);

    RuntimeConfig config_;
    std::shared_ptr<const Clock> clock_;
    std::shared_ptr<const LlmClient> llm_;
    std::shared_ptr<const EmbeddingProvider> embedder_;
    std::unique_ptr<IndexStore> store_;
    std::unique_ptr<VersionRecorder> recorder_;
    std::unique_ptr<LocalShareStore> shares_;
    std::unique_ptr<Syscalls> syscalls_;
    std::unique_ptr<SemanticApis> apis_;
    std::unique_ptr<Parser> parser_;
    std::unique_ptr<Gate> gate_;
    std::unique_ptr<Executor> executor_;
    std::unique_ptr<Supervisor> supervisor_;
    std::mutex transcripts_mutex_;
    /// Prompt text of parked actions, so confirm can complete the transcript.
    std::map<std::string, std::string> pending_prompts_;
};

} // namespace lsfs
