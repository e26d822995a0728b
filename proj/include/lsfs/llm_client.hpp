#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

namespace lsfs {

struct LlmRequest {
    std::string system_prompt;
    std::string user_prompt;
    bool expect_structured = false;
    std::size_t max_output_bytes = 64 * 1024;
};

struct LlmProviderConfig {
    enum class Kind { Remote, Mock };

    Kind kind = Kind::Mock;
    std::string endpoint;
    std::string model_name = "mock";
    /// Name of the environment variable holding the API key.
    std::string api_key_ref = "LSFS_LLM_API_KEY";
    std::int64_t timeout_ms = 30'000;
    int max_retries = 3;
    std::int64_t backoff_base_ms = 250;
    /// Mock only: JSON-lines rule file.
    std::filesystem::path mock_rules;
    /// Mock only: simulated per-call latency.
    std::int64_t mock_latency_ms = 0;

    void validate() const;
};

class LlmClient {
public:
    virtual ~LlmClient() = default;

    virtual std::string complete(const LlmRequest& request) const = 0;
    virtual std::string model_name() const = 0;
};

/// Rule-table mock. Rules are tried in insertion order against the user
/// prompt; regex rules may reference capture groups as $1..$9 in the
/// response. With no matching rule the user prompt is echoed verbatim, or
/// for structured requests wrapped as {"api": "unknown", "echo": prompt}.
class MockLlm final : public LlmClient {
public:
    struct Rule {
        enum class Kind { Exact, Regex };
        std::string match;
        Kind kind = Kind::Exact;
        std::string response;
    };

    MockLlm() = default;
    explicit MockLlm(std::vector<Rule> rules, std::int64_t latency_ms = 0);

    /// Lines of {"match": ..., "kind": "exact"|"regex", "response": ...}.
    static std::vector<Rule> load_rules(const std::filesystem::path& path);

    void add_rule(Rule rule);
    std::string complete(const LlmRequest& request) const override;
    std::string model_name() const override { return "mock"; }

    std::uint64_t calls() const { return calls_.load(); }

private:
    struct Compiled {
        Rule rule;
        std::regex pattern;
    };

    std::vector<Compiled> rules_;
    std::map<std::string, std::size_t> exact_index_;
    std::int64_t latency_ms_ = 0;
    mutable std::atomic<std::uint64_t> calls_{0};
};

/// Chat-completion client: POST {model, messages[{role, content}]} and read
/// choices[0].message.content. Retries with exponential backoff.
class RemoteLlm final : public LlmClient {
public:
    explicit RemoteLlm(LlmProviderConfig config);

    std::string complete(const LlmRequest& request) const override;
    std::string model_name() const override { return config_.model_name; }

private:
    LlmProviderConfig config_;
};

std::shared_ptr<LlmClient> make_llm_client(const LlmProviderConfig& config);

/// Prompt template shipped under prompts/, e.g. "summarize_document.v1.txt".
const std::string& prompt_template(std::string_view file_name);

/// Replaces every {{key}} with its value.
std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& values);

std::string document_summary_prompt(std::string_view content);
std::string change_summary_prompt(std::string_view old_content, std::string_view new_content);

/// Single-document summary through the LLM.
std::string summarize(const LlmClient& llm, std::string_view content);
/// Before/after change summary through the LLM.
std::string summarize(const LlmClient& llm, std::string_view old_content, std::string_view new_content);

} // namespace lsfs
