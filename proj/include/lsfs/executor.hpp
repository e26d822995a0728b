#pragma once

#include "lsfs/gate.hpp"
#include "lsfs/semantic_apis.hpp"

#include <nlohmann/json.hpp>

#include <atomic>

namespace lsfs {

/// Runs approved calls against the APIs and renders the result as JSON.
class Executor {
public:
    explicit Executor(SemanticApis& apis) : apis_(apis) {}

    /// `filter` prunes retrieval candidates before summarization.
    nlohmann::json execute(const ApprovedCall& approved, const SelectionFilter& filter = nullptr);

    std::uint64_t executed() const { return executed_.load(); }

private:
    FileKey resolve(const ApiCall& call) const;

    SemanticApis& apis_;
    std::atomic<std::uint64_t> executed_{0};
};

} // namespace lsfs
