#include "lsfs/llm_client.hpp"

#include "lsfs/error.hpp"
#include "lsfs/http_transport.hpp"
#include "lsfs/util.hpp"

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <fstream>
#include <optional>
#include <thread>
#include <unordered_map>

namespace lsfs {

namespace {

const std::unordered_map<std::string, std::string>& templates() {
    static const std::unordered_map<std::string, std::string> table = [] {
        std::unordered_map<std::string, std::string> t = {
#include "lsfs/prompt_templates.inc"
        };
        for (auto& [name, text] : t) {
            while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) {
                text.pop_back();
            }
        }
        return t;
    }();
    return table;
}

void check_output(const std::string& out, const LlmRequest& request) {
    if (out.size() > request.max_output_bytes) {
        throw Error(ErrorCode::OutputTooLarge, "LLM output of " + std::to_string(out.size()) +
                                                   " bytes exceeds limit " + std::to_string(request.max_output_bytes));
    }
}

void check_request(const LlmRequest& request) {
    if (request.user_prompt.empty()) {
        throw Error(ErrorCode::PreconditionFailed, "LLM request has an empty user prompt");
    }
}

} // namespace

void LlmProviderConfig::validate() const {
    if (kind == Kind::Remote) {
        if (endpoint.empty() || api_key_ref.empty()) {
            throw Error(ErrorCode::InvalidArgument, "remote LLM provider requires endpoint and api_key_ref");
        }
    }
    if (timeout_ms <= 0 || max_retries < 1) {
        throw Error(ErrorCode::InvalidArgument, "LLM timeout and retry count must be positive");
    }
}

MockLlm::MockLlm(std::vector<Rule> rules, std::int64_t latency_ms) : latency_ms_(latency_ms) {
    for (auto& r : rules) {
        add_rule(std::move(r));
    }
}

std::vector<MockLlm::Rule> MockLlm::load_rules(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::PathUnreadable, "cannot open mock rule file " + path.string());
    }
    std::vector<Rule> rules;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) {
            continue;
        }
        try {
            const auto j = nlohmann::json::parse(line);
            Rule r;
            r.match = j.at("match").get<std::string>();
            const auto kind = j.value("kind", std::string("exact"));
            if (kind == "exact") {
                r.kind = Rule::Kind::Exact;
            } else if (kind == "regex") {
                r.kind = Rule::Kind::Regex;
            } else {
                throw Error(ErrorCode::InvalidArgument, "unknown rule kind '" + kind + "'");
            }
            const auto& resp = j.at("response");
            r.response = resp.is_string() ? resp.get<std::string>() : resp.dump();
            rules.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::InvalidArgument,
                        path.string() + ":" + std::to_string(lineno) + ": malformed rule: " + e.what());
        }
    }
    return rules;
}

void MockLlm::add_rule(Rule rule) {
    Compiled c{rule, {}};
    if (rule.kind == Rule::Kind::Regex) {
        c.pattern = std::regex(rule.match, std::regex::ECMAScript);
    } else {
        exact_index_.emplace(rule.match, rules_.size());
    }
    rules_.push_back(std::move(c));
}

std::string MockLlm::complete(const LlmRequest& request) const {
    check_request(request);
    calls_.fetch_add(1);
    if (latency_ms_ > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(latency_ms_));
    }
    std::string out;
    bool matched = false;
    const auto exact = exact_index_.find(request.user_prompt);
    for (std::size_t i = 0; i < rules_.size() && !matched; ++i) {
        const auto& c = rules_[i];
        if (c.rule.kind == Rule::Kind::Exact) {
            if (exact != exact_index_.end() && exact->second == i) {
                out = c.rule.response;
                matched = true;
            }
        } else {
            std::smatch m;
            if (std::regex_search(request.user_prompt, m, c.pattern)) {
                out = m.format(c.rule.response);
                matched = true;
            }
        }
    }
    if (!matched) {
        out = request.expect_structured
                  ? nlohmann::json{{"api", "unknown"}, {"args", nlohmann::json::object()}, {"echo", request.user_prompt}}.dump()
                  : request.user_prompt;
    }
    check_output(out, request);
    return out;
}

RemoteLlm::RemoteLlm(LlmProviderConfig config) : config_(std::move(config)) { config_.validate(); }

std::string RemoteLlm::complete(const LlmRequest& request) const {
    check_request(request);
    nlohmann::json body;
    body["model"] = config_.model_name;
    body["messages"] = nlohmann::json::array();
    if (!request.system_prompt.empty()) {
        body["messages"].push_back({{"role", "system"}, {"content", request.system_prompt}});
    }
    body["messages"].push_back({{"role", "user"}, {"content", request.user_prompt}});

    std::map<std::string, std::string> headers;
    if (const char* key = std::getenv(config_.api_key_ref.c_str()); key != nullptr && *key != '\0') {
        headers["Authorization"] = std::string("Bearer ") + key;
    }

    std::string last_error;
    ErrorCode last_code = ErrorCode::ProviderUnavailable;
    std::optional<Error> fatal;
    for (int attempt = 0; attempt < config_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(config_.backoff_base_ms << (attempt - 1)));
        }
        try {
            const auto res = http::post_json(config_.endpoint, body.dump(), headers, config_.timeout_ms);
            if (res.status >= 500 || res.status == 429) {
                last_code = ErrorCode::ProviderUnavailable;
                last_error = "HTTP " + std::to_string(res.status);
                continue;
            }
            if (res.status != 200) {
                // Client errors will not improve on retry.
                fatal = Error(ErrorCode::ProviderUnavailable, "LLM endpoint returned HTTP " + std::to_string(res.status));
                break;
            }
            std::string out;
            try {
                out = nlohmann::json::parse(res.body).at("choices").at(0).at("message").at("content").get<std::string>();
            } catch (const nlohmann::json::exception& e) {
                fatal = Error(ErrorCode::ProviderUnavailable, std::string("malformed chat completion: ") + e.what());
                break;
            }
            check_output(out, request);
            return out;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::ProviderUnavailable && e.code() != ErrorCode::Timeout) {
                throw;
            }
            last_code = e.code();
            last_error = e.what();
            spdlog::warn("LLM attempt {}/{} failed: {}", attempt + 1, config_.max_retries, last_error);
        }
    }
    if (fatal) {
        throw *fatal;
    }
    throw Error(last_code, "LLM provider failed after " + std::to_string(config_.max_retries) +
                               " attempts: " + last_error);
}

std::shared_ptr<LlmClient> make_llm_client(const LlmProviderConfig& config) {
    config.validate();
    if (config.kind == LlmProviderConfig::Kind::Remote) {
        return std::make_shared<RemoteLlm>(config);
    }
    std::vector<MockLlm::Rule> rules;
    if (!config.mock_rules.empty()) {
        rules = MockLlm::load_rules(config.mock_rules);
    }
    return std::make_shared<MockLlm>(std::move(rules), config.mock_latency_ms);
}

const std::string& prompt_template(std::string_view file_name) {
    const auto& t = templates();
    const auto it = t.find(std::string(file_name));
    if (it == t.end()) {
        throw Error(ErrorCode::NotFound, "no prompt template named " + std::string(file_name));
    }
    return it->second;
}

std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        const auto open = tmpl.find("{{", pos);
        if (open == std::string_view::npos) {
            out.append(tmpl.substr(pos));
            break;
        }
        const auto close = tmpl.find("}}", open + 2);
        if (close == std::string_view::npos) {
            out.append(tmpl.substr(pos));
            break;
        }
        out.append(tmpl.substr(pos, open - pos));
        const std::string key(tmpl.substr(open + 2, close - open - 2));
        const auto it = values.find(key);
        if (it != values.end()) {
            out.append(it->second);
        } else {
            out.append(tmpl.substr(open, close + 2 - open));
        }
        pos = close + 2;
    }
    return out;
}

std::string document_summary_prompt(std::string_view content) {
    return render_template(prompt_template("summarize_document.v1.txt"), {{"content", std::string(content)}});
}

std::string change_summary_prompt(std::string_view old_content, std::string_view new_content) {
    return render_template(prompt_template("summarize_change.v1.txt"),
                           {{"old", std::string(old_content)}, {"new", std::string(new_content)}});
}

std::string summarize(const LlmClient& llm, std::string_view content) {
    if (content.empty()) {
        throw Error(ErrorCode::PreconditionFailed, "nothing to summarize");
    }
    return llm.complete({"", document_summary_prompt(content), false});
}

std::string summarize(const LlmClient& llm, std::string_view old_content, std::string_view new_content) {
    if (old_content.empty() && new_content.empty()) {
        throw Error(ErrorCode::PreconditionFailed, "nothing to summarize");
    }
    return llm.complete({"", change_summary_prompt(old_content, new_content), false});
}

} // namespace lsfs
