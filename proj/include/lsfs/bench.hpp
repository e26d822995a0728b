#pragma once

#include "lsfs/index_store.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

namespace lsfs::bench {

struct Paper {
    std::string name;
    std::string title;
    std::vector<std::string> authors;
    std::string institution;
    std::string category;
    std::string content;
};

/// Synthetic paper collection whose ground truth lives in the metadata, not
/// in a text search. Generation checks that no paper mentions an author,
/// institution or category it does not own.
struct Corpus {
    std::vector<Paper> papers;

    static Corpus generate(std::size_t n_files, std::uint64_t seed);

    static const std::vector<std::string>& author_pool();
    static const std::vector<std::string>& institution_pool();
    static const std::vector<std::string>& category_pool();

    /// Papers owning all (And) or any (Or) of the given attribute values.
    std::set<std::string> truth(const std::vector<std::string>& values, MatchMode mode) const;
};

struct Prf {
    double precision = 0;
    double recall = 0;
    double f1 = 0;
};

/// Empty retrieved and empty truth score 1.
Prf score(const std::set<std::string>& retrieved, const std::set<std::string>& truth);

struct RetrievalRun {
    std::size_t files = 0;
    std::size_t queries = 0;
    std::size_t exact = 0;
    Prf mean;
    double seconds = 0;
};

/// Keyword queries (single author, institution, category; pairs under And
/// and Or) against a fresh store per corpus size.
std::vector<RetrievalRun> retrieval_suite(const std::vector<std::size_t>& sizes, std::uint64_t seed);

struct SpeedRun {
    std::size_t files = 0;
    std::int64_t llm_latency_ms = 0;
    /// Semantic top-3 plus three summaries.
    double index_seconds = 0;
    /// One judge call per file, serialized.
    double judge_seconds = 0;
    double speedup() const { return index_seconds > 0 ? judge_seconds / index_seconds : 0; }
};

SpeedRun speed_comparison(std::size_t files, std::int64_t llm_latency_ms, std::uint64_t seed);

struct RollbackPoint {
    std::size_t k = 0;
    double median_ms = 0;
    bool exact = true;
};

struct RollbackRun {
    std::size_t chain_length = 0;
    std::vector<RollbackPoint> points;
    double seconds = 0;
    bool all_exact() const;
};

/// For each k, `reps` fresh files get `chain_length` edits through
/// change_summary, then one timed rollback by count k. Store and disk are
/// compared with an independently kept history.
RollbackRun rollback_suite(std::size_t chain_length, const std::vector<std::size_t>& ks, std::size_t reps,
                           const std::filesystem::path& scratch);

struct SharingRun {
    std::size_t prompts = 0;
    std::size_t generated = 0;
    std::size_t valid_before = 0;
    std::size_t inaccessible_after = 0;
    double seconds = 0;
};

/// Link prompts through parse, gate and execute with a mock LLM and a
/// manual clock; half carry a validity, half are revoked by prompt.
SharingRun sharing_suite(std::size_t prompts, const std::filesystem::path& scratch);

nlohmann::json to_json(const RetrievalRun& r);
nlohmann::json to_json(const SpeedRun& r);
nlohmann::json to_json(const RollbackRun& r);
nlohmann::json to_json(const SharingRun& r);

std::string render_retrieval(const std::vector<RetrievalRun>& runs);
std::string render_rollback(const RollbackRun& run);
std::string render_sharing(const SharingRun& run);
std::string render_speed(const SpeedRun& run);

/// Fresh directory under `parent` (the system temp dir when empty), removed
/// on destruction.
class ScratchDir {
public:
    explicit ScratchDir(const std::string& tag, const std::filesystem::path& parent = {});
    ~ScratchDir();
    ScratchDir(const ScratchDir&) = delete;
    ScratchDir& operator=(const ScratchDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

} // namespace lsfs::bench
