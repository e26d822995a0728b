#include "lsfs/runtime.hpp"

#include "lsfs/util.hpp"

#include <spdlog/spdlog.h>

#include <cstdlib>

namespace lsfs {

namespace fs = std::filesystem;

namespace {

std::optional<std::string> lookup(const std::map<std::string, std::string>& env, const char* name) {
    if (!env.empty()) {
        const auto it = env.find(name);
        if (it == env.end() || it->second.empty()) {
            return std::nullopt;
        }
        return it->second;
    }
    const char* v = std::getenv(name);
    if (v == nullptr || *v == '\0') {
        return std::nullopt;
    }
    return std::string(v);
}

std::int64_t env_int(const std::string& name, const std::string& value) {
    try {
        std::size_t used = 0;
        const auto v = std::stoll(value, &used);
        if (used == value.size()) {
            return v;
        }
    } catch (const std::exception&) {
    }
    throw Error(ErrorCode::InvalidArgument, name + " must be an integer, got '" + value + "'");
}

bool is_parse_error(ErrorCode code) {
    return code == ErrorCode::UnknownApi || code == ErrorCode::UnparseableOutput || code == ErrorCode::SchemaViolation;
}

} // namespace

RuntimeConfig RuntimeConfig::from_env(const std::map<std::string, std::string>& env) {
    RuntimeConfig c;
    c.root = lookup(env, "LSFS_ROOT").value_or(".");
    if (const auto v = lookup(env, "LSFS_LLM_PROVIDER")) {
        const auto p = ascii_lower(*v);
        if (p == "remote") {
            c.llm.kind = LlmProviderConfig::Kind::Remote;
            c.llm.model_name = "gpt-4o-mini";
        } else if (p != "mock") {
            throw Error(ErrorCode::InvalidArgument, "LSFS_LLM_PROVIDER must be 'mock' or 'remote'");
        }
    }
    if (const auto v = lookup(env, "LSFS_LLM_ENDPOINT")) {
        c.llm.endpoint = *v;
    }
    if (const auto v = lookup(env, "LSFS_LLM_MODEL")) {
        c.llm.model_name = *v;
    }
    if (const auto v = lookup(env, "LSFS_LLM_MOCK_RULES")) {
        c.llm.mock_rules = *v;
    }
    if (const auto v = lookup(env, "LSFS_EMBED_PROVIDER")) {
        const auto p = ascii_lower(*v);
        if (p == "remote") {
            c.embedding.kind = EmbeddingProviderConfig::Kind::Remote;
        } else if (p != "deterministic") {
            throw Error(ErrorCode::InvalidArgument, "LSFS_EMBED_PROVIDER must be 'deterministic' or 'remote'");
        }
    }
    if (const auto v = lookup(env, "LSFS_EMBED_ENDPOINT")) {
        c.embedding.endpoint = *v;
    }
    if (const auto v = lookup(env, "LSFS_EMBED_DIM")) {
        const auto dim = env_int("LSFS_EMBED_DIM", *v);
        if (dim <= 0) {
            throw Error(ErrorCode::InvalidArgument, "LSFS_EMBED_DIM must be positive");
        }
        c.embedding.dim = static_cast<std::size_t>(dim);
    }
    if (const auto v = lookup(env, "LSFS_SCAN_INTERVAL_MS")) {
        c.scan_interval_ms = env_int("LSFS_SCAN_INTERVAL_MS", *v);
    }
    if (const auto v = lookup(env, "LSFS_HTTP_PORT")) {
        const auto port = env_int("LSFS_HTTP_PORT", *v);
        if (port < 0 || port > 65535) {
            throw Error(ErrorCode::InvalidArgument, "LSFS_HTTP_PORT out of range");
        }
        c.http_port = static_cast<std::uint16_t>(port);
    }
    if (const auto v = lookup(env, "LSFS_API_TOKEN")) {
        c.api_token = *v;
    }
    if (const auto v = lookup(env, "LSFS_PUBLIC_URL")) {
        c.public_url = *v;
    }
    return c;
}

void RuntimeConfig::validate() const {
    if (scan_interval_ms < 100) {
        throw Error(ErrorCode::InvalidArgument, "scan interval must be at least 100 ms");
    }
    llm.validate();
    embedding.validate();
}

int Transcript::exit_code() const {
    if (!error) {
        return 0;
    }
    if (is_parse_error(*error)) {
        return 2;
    }
    if (*error == ErrorCode::Rejected || *error == ErrorCode::ApprovalTimeout) {
        return 3;
    }
    return 1;
}

nlohmann::json Transcript::to_json() const {
    nlohmann::json j{{"prompt", prompt},
                     {"call", call ? lsfs::to_json(*call) : nlohmann::json(nullptr)},
                     {"preview", preview},
                     {"danger", danger},
                     {"approval", {{"decision", decision}, {"approved_by", approved_by}, {"action_id", action_id}}},
                     {"result", result ? *result : nlohmann::json(nullptr)},
                     {"error", nullptr}};
    if (error) {
        j["error"] = {{"code", std::string(to_string(*error))}, {"message", error_message}, {"details", error_details}};
    }
    return j;
}

std::string Transcript::render() const {
    std::string out;
    if (!prompt.empty()) {
        out += "prompt: " + prompt + "\n";
    }
    if (call) {
        out += "call: " + lsfs::to_json(*call).dump() + "\n";
        out += "preview: " + preview + "\n";
    }
    if (!decision.empty()) {
        out += "approval: " + decision;
        if (!approved_by.empty() && approved_by != decision) {
            out += " by " + approved_by;
        }
        out += "\n";
    }
    if (result) {
        out += "result: " + result->dump(2) + "\n";
    }
    if (error) {
        out += "error: " + std::string(to_string(*error)) + ": " + error_message + "\n";
    }
    return out;
}

std::unique_ptr<Runtime> Runtime::open(const RuntimeConfig& config, Overrides overrides) {
    config.validate();
    std::error_code ec;
    if (!fs::is_directory(config.root, ec)) {
        throw Error(ErrorCode::RootMissing, "root directory does not exist: " + config.root.string());
    }
    std::unique_ptr<Runtime> rt(new Runtime());
    rt->config_ = config;
    rt->config_.root = fs::absolute(config.root);
    const auto state = rt->config_.state_dir();
    fs::create_directories(state);

    rt->clock_ = overrides.clock ? overrides.clock : std::make_shared<SystemClock>();
    if (overrides.llm) {
        rt->llm_ = overrides.llm;
    } else {
        auto llm_config = config.llm;
        if (llm_config.kind == LlmProviderConfig::Kind::Mock && llm_config.mock_rules.empty() &&
            fs::exists(state / "mock_rules.jsonl")) {
            llm_config.mock_rules = state / "mock_rules.jsonl";
        }
        rt->llm_ = make_llm_client(llm_config);
    }
    rt->embedder_ = overrides.embedder ? overrides.embedder : make_embedding_provider(config.embedding);

    rt->store_ = IndexStore::open(state, rt->embedder_, rt->clock_);
    rt->recorder_ = VersionRecorder::open(state, rt->clock_, config.version_retention);
    auto base_url = config.public_url;
    if (base_url.empty()) {
        base_url = "http://127.0.0.1:" + std::to_string(config.http_port.value_or(8080));
    }
    rt->shares_ = std::make_unique<LocalShareStore>(rt->clock_, base_url, state / LocalShareStore::kStateFile);
    rt->syscalls_ = std::make_unique<Syscalls>(*rt->store_, rt->config_.root);
    rt->apis_ = std::make_unique<SemanticApis>(*rt->syscalls_, *rt->recorder_, *rt->shares_, rt->llm_, rt->clock_);
    rt->parser_ = std::make_unique<Parser>(rt->llm_, rt->clock_);
    rt->gate_ = std::make_unique<Gate>(rt->clock_, state / "audit.log");
    rt->gate_->set_auto_approve_safe(config.auto_approve_safe);
    rt->executor_ = std::make_unique<Executor>(*rt->apis_);
    rt->supervisor_ = std::make_unique<Supervisor>(*rt->syscalls_, rt->clock_, rt->llm_);
    return rt;
}

Runtime::~Runtime() {
    if (supervisor_) {
        supervisor_->stop();
    }
}

void Runtime::persist() {
    store_->persist();
    recorder_->persist();
}

void Runtime::execute_into(Transcript& t, const ApprovedCall& approved, const SelectionFilter& filter) {
    t.decision = approved.approved_by() == "auto" ? "auto" : "approved";
    t.approved_by = approved.approved_by();
    t.action_id = approved.action_id();
    try {
        t.result = executor_->execute(approved, filter);
    } catch (const Error& e) {
        t.error = e.code();
        t.error_message = e.what();
        t.error_details = e.details();
    } catch (const std::exception& e) {
        t.error = ErrorCode::Io;
        t.error_message = e.what();
    }
}

Submission Runtime::submit_call(const ApiCall& call, const SelectionFilter& filter) {
    Submission s;
    auto& t = s.transcript;
    t.prompt = call.raw_prompt;
    t.call = call;
    try {
        t.preview = preview(call);
        t.danger = is_danger(call);
        auto outcome = gate_->submit(call);
        if (auto* approved = std::get_if<ApprovedCall>(&outcome)) {
            execute_into(t, *approved, filter);
            return s;
        }
        auto& pending = std::get<PendingAction>(outcome);
        t.decision = "pending";
        t.action_id = pending.id;
        {
            std::lock_guard lock(transcripts_mutex_);
            pending_prompts_[pending.id] = call.raw_prompt;
        }
        s.pending = std::move(pending);
    } catch (const Error& e) {
        t.error = e.code();
        t.error_message = e.what();
        t.error_details = e.details();
    }
    return s;
}

Submission Runtime::submit_prompt(const std::string& text, const SelectionFilter& filter) {
    try {
        auto call = parser_->parse(text);
        call.raw_prompt = text;
        return submit_call(call, filter);
    } catch (const Error& e) {
        Submission s;
        s.transcript.prompt = text;
        s.transcript.error = e.code();
        s.transcript.error_message = e.what();
        s.transcript.error_details = e.details();
        return s;
    }
}

Transcript Runtime::confirm(const std::string& pending_id, bool approve, const std::string& approver_name,
                            const SelectionFilter& filter) {
    Transcript t;
    t.action_id = pending_id;
    {
        std::lock_guard lock(transcripts_mutex_);
        const auto it = pending_prompts_.find(pending_id);
        if (it != pending_prompts_.end()) {
            t.prompt = it->second;
            pending_prompts_.erase(it);
        }
    }
    for (const auto& p : gate_->pending()) {
        if (p.id == pending_id) {
            t.call = p.call;
            t.preview = p.preview;
            t.danger = p.danger;
        }
    }
    try {
        const auto approved = gate_->confirm(pending_id, approve, approver_name);
        execute_into(t, approved, filter);
    } catch (const Error& e) {
        t.decision = e.code() == ErrorCode::Rejected ? "rejected" : e.code() == ErrorCode::ApprovalTimeout ? "expired" : "";
        if (e.code() == ErrorCode::Rejected) {
            t.approved_by = approver_name;
        }
        t.error = e.code();
        t.error_message = e.what();
        t.error_details = e.details();
    }
    return t;
}

Transcript Runtime::run_call(const ApiCall& call, const Approver& approver, const SelectionFilter& filter) {
    auto s = submit_call(call, filter);
    if (!s.pending) {
        return std::move(s.transcript);
    }
    const bool ok = approver ? approver(*s.pending) : false;
    auto t = confirm(s.pending->id, ok, "user", filter);
    if (!approver) {
        t.error_message = "'" + call.api_name + "' is irreversible and needs approval, but no approver is available";
    }
    return t;
}

Transcript Runtime::run_prompt(const std::string& text, const Approver& approver, const SelectionFilter& filter) {
    ApiCall call;
    try {
        call = parser_->parse(text);
        call.raw_prompt = text;
    } catch (const Error& e) {
        Transcript t;
        t.prompt = text;
        t.error = e.code();
        t.error_message = e.what();
        t.error_details = e.details();
        return t;
    }
    return run_call(call, approver, filter);
}

} // namespace lsfs
