#include "lsfs/gate.hpp"

#include "lsfs/error.hpp"
#include "lsfs/util.hpp"

#include <algorithm>
#include <fstream>

namespace lsfs {

namespace fs = std::filesystem;

nlohmann::json to_json(const PendingAction& action) {
    return {{"id", action.id},
            {"call", to_json(action.call)},
            {"danger", action.danger},
            {"created_at", format_rfc3339(action.created_at)},
            {"expires_at", format_rfc3339(action.expires_at)},
            {"preview", action.preview}};
}

std::string preview(const ApiCall& call, const ApiCatalog& catalog) {
    std::string out = call.api_name + "(";
    bool first = true;
    for (const auto& [k, v] : call.args) {
        out += (first ? "" : ", ") + k + "=" + to_json(v).dump();
        first = false;
    }
    out += ")";
    if (is_danger(call, catalog)) {
        out += " [irreversible: needs approval]";
    }
    return out;
}

Gate::Gate(std::shared_ptr<const Clock> clock, std::optional<fs::path> audit_log, std::int64_t ttl_ms,
           const ApiCatalog& catalog)
    : clock_(std::move(clock)), audit_path_(std::move(audit_log)), ttl_ms_(ttl_ms), catalog_(catalog) {
    if (ttl_ms_ <= 0) {
        throw Error(ErrorCode::InvalidArgument, "approval timeout must be positive");
    }
}

bool Gate::needs_approval(const ApiCall& call) const { return is_danger(call, catalog_) || !auto_approve_safe_; }

PendingAction Gate::make_pending(const ApiCall& call) {
    validate(call, catalog_);
    PendingAction a;
    a.id = random_token_hex(16);
    a.call = call;
    a.danger = is_danger(call, catalog_);
    a.created_at = clock_->now();
    a.expires_at = a.created_at + ttl_ms_;
    a.preview = preview(call, catalog_);
    return a;
}

void Gate::record_locked(const PendingAction& action, const std::string& decision, const std::string& by) {
    AuditRecord rec{action.id, action.call, action.danger, decision, by, action.created_at, clock_->now()};
    if (audit_path_) {
        std::error_code ec;
        fs::create_directories(audit_path_->parent_path(), ec);
        std::ofstream out(*audit_path_, std::ios::app);
        nlohmann::json line{{"action_id", rec.action_id},
                            {"call", to_json(rec.call)},
                            {"danger", rec.danger},
                            {"decision", rec.decision},
                            {"approved_by", rec.approved_by},
                            {"created_at", format_rfc3339(rec.created_at)},
                            {"decided_at", format_rfc3339(rec.decided_at)}};
        out << line.dump() << '\n';
    }
    audit_.push_back(std::move(rec));
}

ApprovedCall Gate::approve_locked(const PendingAction& action, const std::string& decision, const std::string& by) {
    record_locked(action, decision, by);
    return ApprovedCall(action.call, action.id, by, action.danger);
}

ApprovedCall Gate::gate(const ApiCall& call, const Approver& approver, const std::string& approver_name) {
    const auto action = make_pending(call);
    if (!needs_approval(call)) {
        std::lock_guard lock(mutex_);
        return approve_locked(action, "auto", "auto");
    }
    const bool ok = approver ? approver(action) : false;
    std::lock_guard lock(mutex_);
    if (clock_->now() >= action.expires_at) {
        record_locked(action, "expired", "");
        throw Error(ErrorCode::ApprovalTimeout, "approval arrived after the action expired", {{"pending_id", action.id}});
    }
    if (!ok) {
        record_locked(action, "rejected", approver_name);
        throw Error(ErrorCode::Rejected, "call rejected: " + action.preview, {{"pending_id", action.id}});
    }
    return approve_locked(action, "approved", approver_name);
}

std::variant<ApprovedCall, PendingAction> Gate::submit(const ApiCall& call) {
    auto action = make_pending(call);
    std::lock_guard lock(mutex_);
    sweep_locked();
    if (!needs_approval(call)) {
        return approve_locked(action, "auto", "auto");
    }
    pending_.emplace(action.id, action);
    return action;
}

ApprovedCall Gate::confirm(const std::string& pending_id, bool approve, const std::string& approver_name) {
    std::lock_guard lock(mutex_);
    const auto it = pending_.find(pending_id);
    if (it == pending_.end()) {
        if (expired_.erase(pending_id) > 0) {
            throw Error(ErrorCode::ApprovalTimeout, "pending action expired", {{"pending_id", pending_id}});
        }
        throw Error(ErrorCode::NotFound, "no pending action " + pending_id);
    }
    const auto action = it->second;
    pending_.erase(it);
    if (clock_->now() >= action.expires_at) {
        record_locked(action, "expired", "");
        throw Error(ErrorCode::ApprovalTimeout, "pending action expired", {{"pending_id", pending_id}});
    }
    if (!approve) {
        record_locked(action, "rejected", approver_name);
        throw Error(ErrorCode::Rejected, "call rejected: " + action.preview, {{"pending_id", pending_id}});
    }
    return approve_locked(action, "approved", approver_name);
}

void Gate::sweep_locked() {
    const auto now = clock_->now();
    for (auto it = pending_.begin(); it != pending_.end();) {
        if (now >= it->second.expires_at) {
            record_locked(it->second, "expired", "");
            expired_.insert(it->first);
            it = pending_.erase(it);
        } else {
            ++it;
        }
    }
}

void Gate::sweep() {
    std::lock_guard lock(mutex_);
    sweep_locked();
}

std::vector<PendingAction> Gate::pending() {
    std::lock_guard lock(mutex_);
    sweep_locked();
    std::vector<PendingAction> out;
    for (const auto& [id, a] : pending_) {
        out.push_back(a);
    }
    std::sort(out.begin(), out.end(),
              [](const PendingAction& a, const PendingAction& b) { return a.created_at < b.created_at; });
    return out;
}

std::vector<AuditRecord> Gate::audit() const {
    std::lock_guard lock(mutex_);
    return audit_;
}

} // namespace lsfs
