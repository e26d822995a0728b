#pragma once

// Shared helpers and independent oracles for the test binaries. The oracles
// deliberately avoid the library's search code paths.

#include "lsfs/bench.hpp"
#include "lsfs/embedding.hpp"
#include "lsfs/error.hpp"
#include "lsfs/index_store.hpp"
#include "lsfs/llm_client.hpp"
#include "lsfs/syscalls.hpp"
#include "lsfs/util.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

namespace lsfs::test {

namespace fs = std::filesystem;

using bench::ScratchDir;

/// Provider that is always down.
class DownLlm final : public LlmClient {
public:
    std::string complete(const LlmRequest&) const override {
        ++calls_;
        throw Error(ErrorCode::ProviderUnavailable, "provider down");
    }
    std::string model_name() const override { return "down"; }
    int calls() const { return calls_.load(); }

private:
    mutable std::atomic<int> calls_{0};
};

/// Code of the lsfs::Error thrown by f; fails the test when nothing is thrown.
#define LSFS_CODE_OF(expr)                                                                                            \
    ([&]() -> ::lsfs::ErrorCode {                                                                                      \
        try {                                                                                                          \
            expr;                                                                                                      \
        } catch (const ::lsfs::Error& e_) {                                                                            \
            return e_.code();                                                                                          \
        }                                                                                                              \
        FAIL("expected an lsfs::Error from " #expr);                                                                   \
        return ::lsfs::ErrorCode::Io;                                                                                  \
    }())

inline fs::path fixture(const std::string& name) { return fs::path(LSFS_FIXTURE_DIR) / name; }

inline std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void spit(const fs::path& p, const std::string& data) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << data;
}

inline std::string lower(std::string s) {
    for (auto& c : s) {
        if (c >= 'A' && c <= 'Z') {
            c = static_cast<char>(c - 'A' + 'a');
        }
    }
    return s;
}

struct Doc {
    std::string directory;
    std::string name;
    std::string content;
    std::vector<std::string> keywords;
};

/// Linear-scan keyword oracle: (directory, name) pairs whose name, content or
/// keywords contain every (And) or any (Or) needle, case-insensitively.
inline std::set<std::pair<std::string, std::string>> keyword_oracle(const std::vector<Doc>& docs,
                                                                     const std::vector<std::string>& needles,
                                                                     bool all, const std::string* directory = nullptr) {
    std::set<std::pair<std::string, std::string>> out;
    for (const auto& d : docs) {
        if (directory && d.directory != *directory) {
            continue;
        }
        std::size_t hits = 0;
        for (const auto& n : needles) {
            const auto ln = lower(n);
            bool hit = lower(d.name).find(ln) != std::string::npos || lower(d.content).find(ln) != std::string::npos;
            for (const auto& k : d.keywords) {
                hit = hit || lower(k).find(ln) != std::string::npos;
            }
            hits += hit ? 1 : 0;
        }
        if (all ? hits == needles.size() : hits > 0) {
            out.insert({d.directory, d.name});
        }
    }
    return out;
}

struct Ranked {
    std::string name;
    double score;
};

/// Brute-force cosine ranking with (score desc, name asc) ordering.
inline std::vector<Ranked> cosine_oracle(const EmbeddingProvider& embedder, const std::vector<Doc>& docs,
                                         const std::string& query, std::size_t n) {
    const auto q = embedder.embed(query);
    std::vector<Ranked> all;
    for (const auto& d : docs) {
        const auto v = embedder.embed(d.content);
        double dot = 0, nq = 0, nv = 0;
        for (std::size_t i = 0; i < q.values.size(); ++i) {
            dot += static_cast<double>(q.values[i]) * v.values[i];
            nq += static_cast<double>(q.values[i]) * q.values[i];
            nv += static_cast<double>(v.values[i]) * v.values[i];
        }
        all.push_back({d.name, (nq == 0 || nv == 0) ? 0.0 : dot / (std::sqrt(nq) * std::sqrt(nv))});
    }
    std::sort(all.begin(), all.end(), [](const Ranked& a, const Ranked& b) {
        return a.score != b.score ? a.score > b.score : a.name < b.name;
    });
    if (all.size() > n) {
        all.resize(n);
    }
    return all;
}

/// Every regular file under root's subdirectories, skipping the state dir.
inline std::map<std::pair<std::string, std::string>, std::string> disk_tree(const fs::path& root) {
    std::map<std::pair<std::string, std::string>, std::string> out;
    if (!fs::exists(root)) {
        return out;
    }
    for (const auto& dir : fs::directory_iterator(root)) {
        if (!dir.is_directory() || dir.path().filename() == ".lsfs") {
            continue;
        }
        for (const auto& f : fs::directory_iterator(dir.path())) {
            if (f.is_regular_file()) {
                out[{dir.path().filename().string(), f.path().filename().string()}] = slurp(f.path());
            }
        }
    }
    return out;
}

inline std::map<std::pair<std::string, std::string>, std::string> store_tree(const IndexStore& store) {
    std::map<std::pair<std::string, std::string>, std::string> out;
    for (const auto& e : store.entries()) {
        out[{e.metadata.directory, e.metadata.display_name}] = e.content;
    }
    return out;
}

/// Random lowercase word from a small alphabet so collisions happen.
inline std::string random_word(std::mt19937_64& rng, std::size_t min_len = 2, std::size_t max_len = 7) {
    static const std::string letters = "abcdefghij";
    const auto len = std::uniform_int_distribution<std::size_t>(min_len, max_len)(rng);
    std::string w;
    for (std::size_t i = 0; i < len; ++i) {
        w += letters[std::uniform_int_distribution<std::size_t>(0, letters.size() - 1)(rng)];
    }
    return w;
}

inline std::string random_text(std::mt19937_64& rng, std::size_t words) {
    std::string t;
    for (std::size_t i = 0; i < words; ++i) {
        t += (i ? " " : "") + random_word(rng);
    }
    return t;
}

} // namespace lsfs::test
