#pragma once

#include "lsfs/clock.hpp"
#include "lsfs/parser.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace lsfs {

struct PendingAction {
    std::string id;
    ApiCall call;
    bool danger = false;
    Timestamp created_at = 0;
    Timestamp expires_at = 0;
    std::string preview;
};

nlohmann::json to_json(const PendingAction& action);

struct AuditRecord {
    std::string action_id;
    ApiCall call;
    bool danger = false;
    /// "approved", "rejected", "auto" or "expired".
    std::string decision;
    std::string approved_by;
    Timestamp created_at = 0;
    Timestamp decided_at = 0;
};

/// Human-readable one-line description of what a call will do.
std::string preview(const ApiCall& call, const ApiCatalog& catalog = ApiCatalog::standard());

class Gate;

/// A call that went through the gate. Only the gate can make one, so an
/// executor taking ApprovedCall cannot run an unapproved destructive call.
class ApprovedCall {
public:
    const ApiCall& call() const { return call_; }
    const std::string& action_id() const { return action_id_; }
    const std::string& approved_by() const { return approved_by_; }
    bool danger() const { return danger_; }

private:
    friend class Gate;
    ApprovedCall(ApiCall call, std::string action_id, std::string approved_by, bool danger)
        : call_(std::move(call)), action_id_(std::move(action_id)), approved_by_(std::move(approved_by)),
          danger_(danger) {}

    ApiCall call_;
    std::string action_id_;
    std::string approved_by_;
    bool danger_;
};

/// Returns true to approve.
using Approver = std::function<bool(const PendingAction&)>;

/// Confirmation step in front of every execution. Danger calls need an
/// explicit approval; safe calls pass unless `auto_approve_safe` is off.
/// Every decision is appended to the audit log.
class Gate {
public:
    static constexpr std::int64_t kDefaultTtlMs = 10 * 60 * 1000;

    Gate(std::shared_ptr<const Clock> clock, std::optional<std::filesystem::path> audit_log = std::nullopt,
         std::int64_t ttl_ms = kDefaultTtlMs, const ApiCatalog& catalog = ApiCatalog::standard());

    void set_auto_approve_safe(bool on) { auto_approve_safe_ = on; }
    bool auto_approve_safe() const { return auto_approve_safe_; }

    /// Synchronous form: asks `approver` when approval is needed. Throws
    /// Rejected when refused, SchemaViolation/UnknownApi for invalid calls.
    ApprovedCall gate(const ApiCall& call, const Approver& approver, const std::string& approver_name = "user");

    /// Asynchronous form. Returns the approved call directly when no approval
    /// is needed, otherwise parks it and returns the pending action.
    std::variant<ApprovedCall, PendingAction> submit(const ApiCall& call);
    /// Throws NotFound for unknown ids, ApprovalTimeout once expired,
    /// Rejected when `approve` is false.
    ApprovedCall confirm(const std::string& pending_id, bool approve, const std::string& approver_name = "user");

    /// Live pending actions; expired ones are dropped and audited.
    std::vector<PendingAction> pending();
    void sweep();

    std::vector<AuditRecord> audit() const;

    bool needs_approval(const ApiCall& call) const;

private:
    PendingAction make_pending(const ApiCall& call);
    void record_locked(const PendingAction& action, const std::string& decision, const std::string& by);
    ApprovedCall approve_locked(const PendingAction& action, const std::string& decision, const std::string& by);
    void sweep_locked();

    std::shared_ptr<const Clock> clock_;
    std::optional<std::filesystem::path> audit_path_;
    std::int64_t ttl_ms_;
    const ApiCatalog& catalog_;
    bool auto_approve_safe_ = true;

    mutable std::mutex mutex_;
    std::map<std::string, PendingAction> pending_;
    /// Ids swept after expiry, so a late confirm still reports ApprovalTimeout.
    std::set<std::string> expired_;
    std::vector<AuditRecord> audit_;
};

} // namespace lsfs
