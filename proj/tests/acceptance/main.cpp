// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any fails.

#include "lsfs/bench.hpp"
#include "lsfs/embedding.hpp"
#include "lsfs/parser.hpp"
#include "lsfs/runtime.hpp"

#include <fmt/core.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

using namespace lsfs;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass = false;
    std::string detail;
};

int g_failed = 0;

void report(const std::string& id, const std::string& title, const std::function<Outcome()>& check) {
    Outcome o;
    try {
        o = check();
    } catch (const std::exception& e) {
        o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass) {
        ++g_failed;
    }
    std::cout << (o.pass ? "PASS " : "FAIL ") << id << " " << title << ": " << o.detail << std::endl;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& p, const std::string& data) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << data;
}

std::string random_word(std::mt19937_64& rng) {
    static const std::string letters = "abcdefgh";
    std::string w;
    const auto len = 2 + rng() % 5;
    for (std::size_t i = 0; i < len; ++i) {
        w += letters[rng() % letters.size()];
    }
    return w;
}

std::string random_text(std::mt19937_64& rng, std::size_t words) {
    std::string t;
    for (std::size_t i = 0; i < words; ++i) {
        t += (i ? " " : "") + random_word(rng);
    }
    return t;
}

using Tree = std::map<std::pair<std::string, std::string>, std::string>;

Tree disk_tree(const fs::path& root) {
    Tree out;
    for (const auto& d : fs::directory_iterator(root)) {
        if (!d.is_directory() || d.path().filename() == ".lsfs") {
            continue;
        }
        for (const auto& f : fs::directory_iterator(d.path())) {
            if (f.is_regular_file()) {
                out[{d.path().filename().string(), f.path().filename().string()}] = slurp(f.path());
            }
        }
    }
    return out;
}

Tree store_tree(const IndexStore& store) {
    Tree out;
    for (const auto& e : store.entries()) {
        out[{e.metadata.directory, e.metadata.display_name}] = e.content;
    }
    return out;
}

// Retrieval against the corpus ground truth.
Outcome retrieval_oracle() {
    const auto runs = bench::retrieval_suite({10, 20, 40}, 7);
    bool ok = runs.size() == 3;
    std::string detail;
    for (const auto& r : runs) {
        ok = ok && r.exact == r.queries && r.mean.precision == 1.0 && r.mean.recall == 1.0 && r.mean.f1 == 1.0 &&
             r.seconds < 5.0;
        detail += fmt::format("{}{} files {}/{} exact F1={:.3f} {:.3f}s", detail.empty() ? "" : "; ", r.files, r.exact,
                              r.queries, r.mean.f1, r.seconds);
    }
    return {ok, detail};
}

// Top-n against an independent brute-force ranking.
Outcome semantic_topn() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(2024);
    auto clock = std::make_shared<ManualClock>(0);
    auto embedder = std::make_shared<DeterministicEmbedder>(32);
    std::size_t mismatches = 0;
    std::size_t max_files = 0;
    for (int round = 0; round < 1000; ++round) {
        IndexStore store(embedder, clock);
        const auto files = 1 + rng() % 200;
        max_files = std::max<std::size_t>(max_files, files);
        std::vector<std::pair<std::string, std::vector<float>>> docs;
        std::vector<std::string> texts;
        for (std::size_t i = 0; i < files; ++i) {
            // duplicates and empty texts force exact score ties
            std::string text;
            const auto roll = rng() % 10;
            if (roll == 0 && !texts.empty()) {
                text = texts[rng() % texts.size()];
            } else if (roll != 1) {
                text = random_text(rng, 1 + rng() % 8);
            }
            const auto name = fmt::format("f{:03}", rng() % 1000) + "-" + std::to_string(i);
            store.put_entry("d", name, text);
            texts.push_back(text);
            docs.emplace_back(name, embedder->embed(text).values);
        }
        auto query = rng() % 4 == 0 ? texts[rng() % texts.size()] : std::string();
        if (query.empty()) {
            query = random_text(rng, 1 + rng() % 4);
        }
        const auto n = 1 + rng() % 12;
        const auto q = embedder->embed(query).values;

        std::vector<std::pair<double, std::string>> ranked;
        for (const auto& [name, v] : docs) {
            double dot = 0, nq = 0, nv = 0;
            for (std::size_t i = 0; i < q.size(); ++i) {
                dot += static_cast<double>(q[i]) * v[i];
                nq += static_cast<double>(q[i]) * q[i];
                nv += static_cast<double>(v[i]) * v[i];
            }
            ranked.emplace_back(nq == 0 || nv == 0 ? 0.0 : dot / (std::sqrt(nq) * std::sqrt(nv)), name);
        }
        std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            return a.first != b.first ? a.first > b.first : a.second < b.second;
        });
        ranked.resize(std::min<std::size_t>(n, ranked.size()));

        const auto got = store.topn_semantic(std::nullopt, query, n);
        bool same = got.size() == ranked.size();
        for (std::size_t i = 0; same && i < ranked.size(); ++i) {
            same = got.names[i] == ranked[i].second && (*got.scores)[i] == ranked[i].first;
        }
        mismatches += same ? 0 : 1;
    }
    const auto s = seconds_since(t0);
    return {mismatches == 0 && s < 60.0,
            fmt::format("1000 corpora up to {} files, {} mismatches, {:.2f}s", max_files, mismatches, s)};
}

Outcome speedup() {
    const auto r = bench::speed_comparison(40, 20, 7);
    return {r.speedup() >= 2.0, fmt::format("index {:.3f}s vs per-file judge {:.3f}s at 40 files: {:.2f}x",
                                            r.index_seconds, r.judge_seconds, r.speedup())};
}

// Exact at every k; t(40)/t(5) below the quadratic ratio (8^2); medians for
// k >= 20 within a factor of 3 of each other.
Outcome rollback() {
    bench::ScratchDir scratch("accept-rollback");
    const auto r = bench::rollback_suite(40, {5, 10, 15, 20, 25, 30, 35, 40}, 9, scratch.path());
    double t5 = 0, t40 = 0, lo = 1e300, hi = 0;
    for (const auto& p : r.points) {
        if (p.k == 5) {
            t5 = p.median_ms;
        }
        if (p.k == 40) {
            t40 = p.median_ms;
        }
        if (p.k >= 20) {
            lo = std::min(lo, p.median_ms);
            hi = std::max(hi, p.median_ms);
        }
    }
    const double growth = t5 > 0 ? t40 / t5 : 1e300;
    const double plateau = lo > 0 ? hi / lo : 1e300;
    const bool ok = r.all_exact() && growth < 64.0 && plateau <= 3.0 && r.seconds < 30.0;
    return {ok, fmt::format("exact={} t40/t5={:.2f} plateau={:.2f} medians {:.3f}..{:.3f}ms {:.2f}s", r.all_exact(),
                            growth, plateau, lo, hi, r.seconds)};
}

Outcome links() {
    bench::ScratchDir scratch("accept-links");
    const auto r = bench::sharing_suite(20, scratch.path());
    const bool ok = r.prompts == 20 && r.generated == 20 && r.valid_before == 20 && r.inaccessible_after == 20;
    return {ok, fmt::format("{} prompts: generated {}, valid before expiry {}, inaccessible after {}", r.prompts,
                            r.generated, r.valid_before, r.inaccessible_after)};
}

Outcome parser_replay() {
    const auto clock = std::make_shared<ManualClock>(1'704'067'200'000);
    const auto fixtures = load_fixtures(fs::path(LSFS_FIXTURE_DIR) / "parser_fixtures.jsonl", Normalizer(clock));
    const auto run = [&](const char* rules, const char* model) {
        const Parser p(std::make_shared<MockLlm>(MockLlm::load_rules(fs::path(LSFS_FIXTURE_DIR) / rules)), clock);
        return evaluate_accuracy(p, fixtures, model);
    };
    const auto gold = run("parser_gold_rules.jsonl", "gold");
    const auto corrupt = run("parser_corrupt_rules.jsonl", "corrupt");
    bool ok = fixtures.size() == 120 && gold.macro_average() == 1.0 && corrupt.rows.size() == 4;
    for (const auto& row : gold.rows) {
        ok = ok && row.correct == row.total;
    }
    for (const auto& row : corrupt.rows) {
        ok = ok && row.correct * 10 == row.total * 9;
    }
    ok = ok && std::fabs(corrupt.macro_average() - 0.9) < 1e-12;
    return {ok, fmt::format("{} fixtures, gold {:.4f}, corrupt {:.4f}", fixtures.size(), gold.macro_average(),
                            corrupt.macro_average())};
}

// Random out-of-band edits while the background loop runs.
Outcome supervisor() {
    const auto t0 = Clock::now();
    bench::ScratchDir dir("accept-supervisor");
    auto clock = std::make_shared<SystemClock>();
    IndexStore store(std::make_shared<DeterministicEmbedder>(32), clock);
    Syscalls sys(store, dir.path());
    Supervisor sup(sys, clock);
    std::mt19937_64 rng(31);
    const std::vector<std::string> dirs{"alpha", "beta", "gamma"};
    for (int i = 0; i < 20; ++i) {
        sys.create_or_get_file(dirs[i % 3], "seed" + std::to_string(i), ImportSource::text(random_text(rng, 5)));
    }
    constexpr auto kPeriod = std::chrono::milliseconds(200);
    sup.run(kPeriod);
    std::size_t edits = 0, deletes = 0, creates = 0;
    for (int i = 0; i < 100; ++i) {
        const auto disk = disk_tree(dir.path());
        const auto roll = rng() % 3;
        if (roll == 0 && !disk.empty()) {
            auto it = disk.begin();
            std::advance(it, static_cast<std::ptrdiff_t>(rng() % disk.size()));
            spit(dir.path() / it->first.first / it->first.second, random_text(rng, 6));
            ++edits;
        } else if (roll == 1 && !disk.empty()) {
            auto it = disk.begin();
            std::advance(it, static_cast<std::ptrdiff_t>(rng() % disk.size()));
            fs::remove(dir.path() / it->first.first / it->first.second);
            ++deletes;
        } else {
            spit(dir.path() / dirs[rng() % 3] / ("new" + std::to_string(i)), random_text(rng, 4));
            ++creates;
        }
        if (rng() % 10 == 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(rng() % 150));
        }
    }
    std::this_thread::sleep_for(2 * kPeriod);
    const bool converged = disk_tree(dir.path()) == store_tree(store);
    sup.stop();
    const auto again = sup.scan_once();
    const bool idle = again.quiescent() && again.errors.empty();
    const auto s = seconds_since(t0);
    return {converged && idle && s < 20.0,
            fmt::format("{} edits, {} deletes, {} creates; converged within 2 periods={} second scan empty={} {:.2f}s",
                        edits, deletes, creates, converged, idle, s)};
}

// Random calls through parse-free gate + execute with a random approver.
Outcome gate_soundness() {
    bench::ScratchDir dir("accept-gate");
    auto clock = std::make_shared<ManualClock>(1'704'067'200'000);
    RuntimeConfig config;
    config.root = dir.path();
    auto rt = Runtime::open(config, {clock, std::make_shared<MockLlm>(), std::make_shared<DeterministicEmbedder>(16)});
    std::mt19937_64 rng(5);
    const std::vector<std::string> dirs{"a", "b"};
    const std::vector<std::string> names{"x", "y", "z", "w"};
    for (const auto& d : dirs) {
        for (const auto& n : names) {
            rt->syscalls().create_or_get_file(d, n, ImportSource::text(random_text(rng, 4)));
        }
    }
    const auto& norm = rt->parser().normalizer();
    const auto pick = [&](const std::vector<std::string>& v) { return v[rng() % v.size()]; };
    const auto random_call = [&]() -> ApiCall {
        switch (rng() % 12) {
        case 0:
            return norm.build("del_", {{"directory", pick(dirs)}, {"name", pick(names)}}, "");
        case 1:
            return norm.build("del_", {{"directory", pick(dirs)}, {"key_text", random_word(rng)}}, "");
        case 2:
            return norm.build("overwrite", {{"directory", pick(dirs)}, {"name", pick(names)}, {"import_file", random_text(rng, 3)}}, "");
        case 3:
            return norm.build("change_summary", {{"name", pick(names)}, {"directory", pick(dirs)}, {"import_file", random_text(rng, 3)}}, "");
        case 4:
            return norm.build("rollback", {{"name", pick(names)}, {"directory", pick(dirs)}, {"k", 1 + rng() % 3}}, "");
        case 5:
            return norm.build("file_join", {{"directory", pick(dirs)}, {"name1", pick(names)}, {"name2", pick(names)}}, "");
        case 6:
            return norm.build("file_join", {{"directory", pick(dirs)}, {"name1", pick(names)}, {"name2", pick(names)}, {"condition", "new"}}, "");
        case 7:
            return norm.build("create_or_get_file", {{"directory", pick(dirs)}, {"name", pick(names)}, {"import_file", random_text(rng, 2)}}, "");
        case 8:
            return norm.build(rng() % 2 ? "lock_file" : "unlock_file", {{"directory", pick(dirs)}, {"name", pick(names)}}, "");
        case 9:
            return norm.build("add_", {{"directory", pick(dirs)}, {"name", pick(names)}, {"new_content", random_word(rng)}}, "");
        case 10:
            return norm.build("keywords_retrieve", {{"keywords", random_word(rng)}}, "");
        default:
            return norm.build("semantic_retrieve", {{"query", random_text(rng, 2)}, {"n", 1 + rng() % 4}}, "");
        }
    };

    std::size_t danger = 0, approved = 0, rejected = 0, executed_danger = 0, violations = 0;
    for (int i = 0; i < 10'000; ++i) {
        const auto call = random_call();
        const bool yes = rng() % 2 == 0;
        const auto hash_before = rt->store().state_hash();
        const auto audit_before = rt->gate().audit().size();
        const auto t = rt->run_call(call, [&](const PendingAction&) { return yes; });
        if (is_danger(call)) {
            ++danger;
            // any decision other than a refusal means the executor was handed the call
            if (t.decision != "rejected") {
                ++executed_danger;
                const auto audit = rt->gate().audit();
                const bool recorded = std::any_of(audit.begin() + static_cast<std::ptrdiff_t>(audit_before), audit.end(),
                                                  [&](const AuditRecord& r) {
                                                      return r.action_id == t.action_id && r.decision == "approved";
                                                  });
                violations += (recorded && yes && t.decision == "approved") ? 0 : 1;
            }
        }
        if (t.decision == "rejected") {
            ++rejected;
            violations += rt->store().state_hash() == hash_before ? 0 : 1;
            violations += (is_danger(call) && !yes) ? 0 : 1;
        } else if (t.decision == "approved") {
            ++approved;
        }
    }
    return {violations == 0 && danger > 0 && rejected > 0,
            fmt::format("10000 calls, {} destructive, {} approved, {} rejected, {} destructive executions, {} violations",
                        danger, approved, rejected, executed_danger, violations)};
}

} // namespace

int main() {
    spdlog::set_level(spdlog::level::off);
    report("A1", "retrieval oracle equivalence", retrieval_oracle);
    report("A2", "semantic top-n equals brute force", semantic_topn);
    report("A3", "index path speedup over per-file LLM pass", speedup);
    report("A4", "rollback exactness and scalability", rollback);
    report("A5", "link lifecycle", links);
    report("A6", "parser replay accuracy", parser_replay);
    report("A7", "supervisor convergence", supervisor);
    report("A8", "safety gate soundness", gate_soundness);
    std::cout << (g_failed == 0 ? "all criteria passed" : fmt::format("{} criteria failed", g_failed)) << std::endl;
    return g_failed == 0 ? 0 : 1;
}
