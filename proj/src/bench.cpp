#include "lsfs/bench.hpp"

#include "lsfs/error.hpp"
#include "lsfs/llm_client.hpp"
#include "lsfs/runtime.hpp"
#include "lsfs/semantic_apis.hpp"
#include "lsfs/util.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <random>

namespace lsfs::bench {

namespace fs = std::filesystem;

namespace {

using SteadyClock = std::chrono::steady_clock;

double seconds_since(SteadyClock::time_point start) {
    return std::chrono::duration<double>(SteadyClock::now() - start).count();
}

const std::vector<std::string>& filler_words(const std::string& category) {
    static const std::map<std::string, std::vector<std::string>> words{
        {"computer-vision", {"image", "pixel", "segmentation", "detection", "convolutional", "camera", "depth"}},
        {"reinforcement-learning", {"policy", "reward", "agent", "exploration", "trajectory", "value", "return"}},
        {"natural-language-processing", {"token", "translation", "parsing", "corpus", "sentence", "lexicon", "dialogue"}},
        {"robotics", {"manipulation", "grasping", "actuator", "locomotion", "gripper", "odometry", "torque"}},
        {"distributed-systems", {"scheduler", "kernel", "consensus", "replica", "throughput", "latency", "cluster"}},
        {"learning-theory", {"proof", "bound", "lemma", "complexity", "sample", "convergence", "regret"}}};
    return words.at(category);
}

const std::vector<std::string>& common_words() {
    static const std::vector<std::string> w{"method",   "results",   "benchmark", "dataset",    "experiments",
                                            "approach", "baseline",  "evaluation", "framework", "analysis",
                                            "novel",    "efficient", "scalable",  "study",      "we",
                                            "propose",  "show",      "improves",  "over",       "prior",
                                            "work",     "on",        "the",       "a",          "with"};
    return w;
}

std::string pick(std::mt19937_64& rng, const std::vector<std::string>& v) {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

std::string sentence(std::mt19937_64& rng, const std::string& category) {
    std::string s;
    const auto n = std::uniform_int_distribution<int>(8, 14)(rng);
    for (int i = 0; i < n; ++i) {
        const bool topical = std::uniform_int_distribution<int>(0, 2)(rng) == 0;
        auto w = topical ? pick(rng, filler_words(category)) : pick(rng, common_words());
        if (i == 0) {
            w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
        }
        s += (i ? " " : "") + w;
    }
    return s + ".";
}

} // namespace

const std::vector<std::string>& Corpus::author_pool() {
    static const std::vector<std::string> a{"Emily Zhang",  "Wei Chen",    "Maria Garcia", "James Okafor",
                                            "Aisha Khan",   "Lucas Martin", "Yuki Tanaka", "Omar Haddad",
                                            "Sofia Rossi",  "Daniel Kowalski", "Priya Patel", "Noah Fischer"};
    return a;
}

const std::vector<std::string>& Corpus::institution_pool() {
    static const std::vector<std::string> i{"Cambridge University", "Columbia University", "Stanford University",
                                            "Tsinghua University",  "ETH Zurich",          "University of Toronto"};
    return i;
}

const std::vector<std::string>& Corpus::category_pool() {
    static const std::vector<std::string> c{"computer-vision", "reinforcement-learning", "natural-language-processing",
                                            "robotics",        "distributed-systems",    "learning-theory"};
    return c;
}

Corpus Corpus::generate(std::size_t n_files, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Corpus c;
    for (std::size_t i = 0; i < n_files; ++i) {
        Paper p;
        p.name = fmt::format("paper-{:03}.txt", i + 1);
        p.category = pick(rng, category_pool());
        p.institution = pick(rng, institution_pool());
        const auto n_authors = std::uniform_int_distribution<int>(1, 3)(rng);
        while (static_cast<int>(p.authors.size()) < n_authors) {
            auto a = pick(rng, author_pool());
            if (std::find(p.authors.begin(), p.authors.end(), a) == p.authors.end()) {
                p.authors.push_back(std::move(a));
            }
        }
        p.title = sentence(rng, p.category);
        p.title.pop_back();
        std::string authors;
        for (std::size_t k = 0; k < p.authors.size(); ++k) {
            authors += (k ? ", " : "") + p.authors[k];
        }
        p.content = "Title: " + p.title + "\nAuthors: " + authors + "\nAffiliation: " + p.institution +
                    "\nCategory: " + p.category + "\nAbstract:";
        const auto n_sentences = std::uniform_int_distribution<int>(4, 9)(rng);
        for (int s = 0; s < n_sentences; ++s) {
            p.content += " " + sentence(rng, p.category);
        }
        p.content += "\n";
        c.papers.push_back(std::move(p));
    }

    // Ground truth comes from metadata, so foreign mentions would silently
    // break it. Refuse to hand out such a corpus.
    for (const auto& p : c.papers) {
        auto owns = [&](const std::string& v) {
            return v == p.institution || v == p.category ||
                   std::find(p.authors.begin(), p.authors.end(), v) != p.authors.end();
        };
        for (const auto* pool : {&author_pool(), &institution_pool(), &category_pool()}) {
            for (const auto& v : *pool) {
                if (!owns(v) && (contains_icase(p.content, v) || contains_icase(p.name, v))) {
                    throw Error(ErrorCode::PreconditionFailed, p.name + " mentions '" + v + "' without owning it");
                }
            }
        }
    }
    return c;
}

std::set<std::string> Corpus::truth(const std::vector<std::string>& values, MatchMode mode) const {
    std::set<std::string> out;
    for (const auto& p : papers) {
        std::size_t hits = 0;
        for (const auto& v : values) {
            const bool has = v == p.institution || v == p.category ||
                             std::find(p.authors.begin(), p.authors.end(), v) != p.authors.end();
            hits += has ? 1 : 0;
        }
        if ((mode == MatchMode::And && hits == values.size()) || (mode == MatchMode::Or && hits > 0)) {
            out.insert(p.name);
        }
    }
    return out;
}

Prf score(const std::set<std::string>& retrieved, const std::set<std::string>& truth) {
    if (retrieved.empty() && truth.empty()) {
        return {1, 1, 1};
    }
    std::size_t tp = 0;
    for (const auto& r : retrieved) {
        tp += truth.count(r);
    }
    Prf s;
    s.precision = retrieved.empty() ? 0 : static_cast<double>(tp) / static_cast<double>(retrieved.size());
    s.recall = truth.empty() ? 0 : static_cast<double>(tp) / static_cast<double>(truth.size());
    s.f1 = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0;
    return s;
}

std::vector<RetrievalRun> retrieval_suite(const std::vector<std::size_t>& sizes, std::uint64_t seed) {
    std::vector<RetrievalRun> runs;
    for (const auto n : sizes) {
        const auto start = SteadyClock::now();
        const auto corpus = Corpus::generate(n, seed + n);
        IndexStore store(std::make_shared<DeterministicEmbedder>(), std::make_shared<SystemClock>());
        for (const auto& p : corpus.papers) {
            store.put_entry("papers", p.name, p.content);
        }
        Syscalls sys(store, std::nullopt);

        std::vector<std::pair<std::vector<std::string>, MatchMode>> queries;
        for (const auto* pool : {&Corpus::author_pool(), &Corpus::institution_pool(), &Corpus::category_pool()}) {
            for (const auto& v : *pool) {
                queries.push_back({{v}, MatchMode::Or});
            }
        }
        const auto& authors = Corpus::author_pool();
        const auto& insts = Corpus::institution_pool();
        for (std::size_t i = 0; i + 1 < authors.size(); i += 2) {
            queries.push_back({{authors[i], authors[i + 1]}, MatchMode::Or});
            queries.push_back({{authors[i], insts[i % insts.size()]}, MatchMode::And});
        }
        queries.push_back({{"Cambridge University", "Columbia University"}, MatchMode::Or});

        RetrievalRun run;
        run.files = n;
        for (const auto& [kws, mode] : queries) {
            const auto result = sys.keywords_retrieve(kws, std::nullopt, kws.size() > 1 ? std::optional(mode) : std::nullopt);
            const std::set<std::string> got(result.names.begin(), result.names.end());
            const auto truth = corpus.truth(kws, mode);
            const auto s = score(got, truth);
            run.mean.precision += s.precision;
            run.mean.recall += s.recall;
            run.mean.f1 += s.f1;
            run.exact += got == truth ? 1 : 0;
            ++run.queries;
        }
        const auto q = static_cast<double>(run.queries);
        run.mean.precision /= q;
        run.mean.recall /= q;
        run.mean.f1 /= q;
        run.seconds = seconds_since(start);
        runs.push_back(run);
    }
    return runs;
}

SpeedRun speed_comparison(std::size_t files, std::int64_t llm_latency_ms, std::uint64_t seed) {
    const auto corpus = Corpus::generate(files, seed);
    IndexStore store(std::make_shared<DeterministicEmbedder>(), std::make_shared<SystemClock>());
    for (const auto& p : corpus.papers) {
        store.put_entry("papers", p.name, p.content);
    }
    Syscalls sys(store, std::nullopt);
    const MockLlm llm({}, llm_latency_ms);
    const std::string query = "reinforcement learning policy reward agent";

    SpeedRun run;
    run.files = files;
    run.llm_latency_ms = llm_latency_ms;

    auto start = SteadyClock::now();
    const auto top = sys.semantic_retrieve(query, std::nullopt, 3);
    for (const auto& content : top.contents) {
        (void)summarize(llm, content);
    }
    run.index_seconds = seconds_since(start);

    start = SteadyClock::now();
    const auto& judge = prompt_template("baseline_judge.v1.txt");
    for (const auto& e : store.entries()) {
        (void)llm.complete({"", render_template(judge, {{"condition", query}, {"content", e.content}}), false});
    }
    run.judge_seconds = seconds_since(start);
    return run;
}

bool RollbackRun::all_exact() const {
    return std::all_of(points.begin(), points.end(), [](const RollbackPoint& p) { return p.exact; });
}

RollbackRun rollback_suite(std::size_t chain_length, const std::vector<std::size_t>& ks, std::size_t reps,
                           const fs::path& scratch) {
    const auto suite_start = SteadyClock::now();
    const auto root = scratch / "rollback-root";
    fs::create_directories(root);
    auto clock = std::make_shared<SystemClock>();
    IndexStore store(std::make_shared<DeterministicEmbedder>(), clock);
    VersionRecorder recorder(clock);
    LocalShareStore shares(clock, "http://127.0.0.1:0");
    Syscalls sys(store, root);
    SemanticApis apis(sys, recorder, shares, std::make_shared<MockLlm>(), clock);

    // Independent history: history[j] is the content after edit j.
    std::vector<std::string> base;
    for (int line = 0; line < 60; ++line) {
        base.push_back(fmt::format("line {:02} of the tracked document, with some steady filler text", line));
    }
    std::vector<std::string> history;
    for (std::size_t j = 0; j <= chain_length; ++j) {
        auto lines = base;
        lines[j % lines.size()] = fmt::format("revision {} rewrote this line", j);
        std::string text;
        for (const auto& l : lines) {
            text += l + "\n";
        }
        history.push_back(std::move(text));
    }

    RollbackRun run;
    run.chain_length = chain_length;
    std::size_t file_no = 0;
    for (const auto k : ks) {
        RollbackPoint point;
        point.k = k;
        std::vector<double> samples;
        for (std::size_t r = 0; r < reps; ++r) {
            const FileKey key{"bench", fmt::format("doc-{:04}.txt", ++file_no)};
            sys.create_or_get_file(key.directory, key.name, ImportSource::text(history[0]));
            for (std::size_t j = 1; j <= chain_length; ++j) {
                apis.change_summary(key, ImportSource::text(history[j]));
            }
            const auto start = SteadyClock::now();
            const auto entry = apis.rollback(key, RollbackTarget::count(k));
            samples.push_back(std::chrono::duration<double, std::milli>(SteadyClock::now() - start).count());

            const auto& expected = history[chain_length - k];
            std::ifstream disk(sys.mirror_path(key), std::ios::binary);
            const std::string on_disk((std::istreambuf_iterator<char>(disk)), std::istreambuf_iterator<char>());
            if (entry.content != expected || store.get_entry(key.directory, key.name).content != expected ||
                on_disk != expected) {
                point.exact = false;
            }
        }
        std::sort(samples.begin(), samples.end());
        point.median_ms = samples.empty() ? 0 : samples[samples.size() / 2];
        run.points.push_back(point);
    }
    run.seconds = seconds_since(suite_start);
    return run;
}

SharingRun sharing_suite(std::size_t prompts, const fs::path& scratch) {
    const auto start = SteadyClock::now();
    const auto root = scratch / "sharing-root";
    fs::create_directories(root);
    auto clock = std::make_shared<ManualClock>(1'704'067'200'000); // 2024-01-01T00:00:00Z
    auto llm = std::make_shared<MockLlm>();
    static const std::vector<std::string> validity{"3 months", "2 weeks", "10 days", "12 hours", "1 year"};

    std::vector<std::string> texts;
    for (std::size_t i = 0; i < prompts; ++i) {
        const auto name = fmt::format("doc-{:02}", i + 1);
        std::string text;
        if (i % 2 == 0) {
            const auto& v = validity[(i / 2) % validity.size()];
            text = "Provide a link for " + name + " that will be active for " + v + ".";
            llm->add_rule({text, MockLlm::Rule::Kind::Exact,
                           nlohmann::json{{"api", "create_link"}, {"args", {{"name", name}, {"validity", v}}}}.dump()});
        } else {
            text = "Generate a link for " + name + ".";
            llm->add_rule({text, MockLlm::Rule::Kind::Exact,
                           nlohmann::json{{"api", "create_link"}, {"args", {{"name", name}}}}.dump()});
        }
        texts.push_back(text);
    }
    llm->add_rule({R"(^Revoke the link ([0-9a-f]+)\.$)", MockLlm::Rule::Kind::Regex,
                   R"({"api": "revoke_link", "args": {"token": "$1"}})"});

    RuntimeConfig config;
    config.root = root;
    auto rt = Runtime::open(config, {clock, llm, nullptr});

    struct Issued {
        std::string token;
        std::string content;
        std::optional<Timestamp> expires_at;
        bool valid = false;
    };
    std::vector<Issued> issued;
    SharingRun run;
    run.prompts = prompts;
    for (std::size_t i = 0; i < prompts; ++i) {
        const auto name = fmt::format("doc-{:02}", i + 1);
        const auto content = fmt::format("Shared document {} body.\nSecond line {}.\n", name, i * 7);
        rt->syscalls().create_or_get_file("shared", name, ImportSource::text(content));
        const auto t = rt->run_prompt(texts[i], nullptr);
        if (!t.ok() || !t.result || !t.result->contains("token")) {
            continue;
        }
        const auto token = (*t.result)["token"].get<std::string>();
        const auto url = (*t.result)["url"].get<std::string>();
        if (url.size() < token.size() || url.compare(url.size() - token.size(), token.size(), token) != 0) {
            continue;
        }
        ++run.generated;
        Issued is{token, content, std::nullopt, false};
        if (!(*t.result)["expires_at"].is_null()) {
            is.expires_at = parse_rfc3339((*t.result)["expires_at"].get<std::string>());
        }
        try {
            is.valid = rt->apis().fetch_shared(token) == content;
        } catch (const Error&) {
        }
        issued.push_back(std::move(is));
    }

    // Walk the clock to just before each expiry; the link must still serve.
    std::vector<Issued*> expiring;
    Timestamp latest = clock->now();
    for (auto& is : issued) {
        if (is.expires_at) {
            expiring.push_back(&is);
            latest = std::max(latest, *is.expires_at);
        }
    }
    std::sort(expiring.begin(), expiring.end(), [](const Issued* a, const Issued* b) { return *a->expires_at < *b->expires_at; });
    for (auto* is : expiring) {
        clock->set(std::max(clock->now(), *is->expires_at - 1));
        try {
            is->valid = is->valid && rt->apis().fetch_shared(is->token) == is->content;
        } catch (const Error&) {
            is->valid = false;
        }
    }
    clock->set(latest + 1000);
    for (auto& is : issued) {
        if (!is.expires_at) {
            try {
                is.valid = is.valid && rt->apis().fetch_shared(is.token) == is.content;
            } catch (const Error&) {
                is.valid = false;
            }
            rt->run_prompt("Revoke the link " + is.token + ".", nullptr);
        }
        run.valid_before += is.valid ? 1 : 0;
        try {
            rt->apis().fetch_shared(is.token);
        } catch (const Error& e) {
            run.inaccessible_after += e.code() == ErrorCode::Gone ? 1 : 0;
        }
    }
    run.seconds = seconds_since(start);
    return run;
}

nlohmann::json to_json(const RetrievalRun& r) {
    return {{"files", r.files},         {"queries", r.queries},   {"exact", r.exact},
            {"precision", r.mean.precision}, {"recall", r.mean.recall}, {"f1", r.mean.f1},
            {"seconds", r.seconds}};
}

nlohmann::json to_json(const SpeedRun& r) {
    return {{"files", r.files},
            {"llm_latency_ms", r.llm_latency_ms},
            {"index_seconds", r.index_seconds},
            {"judge_seconds", r.judge_seconds},
            {"speedup", r.speedup()}};
}

nlohmann::json to_json(const RollbackRun& r) {
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : r.points) {
        points.push_back({{"k", p.k}, {"median_ms", p.median_ms}, {"exact", p.exact}});
    }
    return {{"chain_length", r.chain_length}, {"points", points}, {"seconds", r.seconds}, {"all_exact", r.all_exact()}};
}

nlohmann::json to_json(const SharingRun& r) {
    return {{"prompts", r.prompts},
            {"generated", r.generated},
            {"valid_before", r.valid_before},
            {"inaccessible_after", r.inaccessible_after},
            {"seconds", r.seconds}};
}

std::string render_retrieval(const std::vector<RetrievalRun>& runs) {
    std::string out = "files\tqueries\texact\tprecision\trecall\tf1\tseconds\n";
    for (const auto& r : runs) {
        out += fmt::format("{}\t{}\t{}\t{:.3f}\t{:.3f}\t{:.3f}\t{:.3f}\n", r.files, r.queries, r.exact,
                           r.mean.precision, r.mean.recall, r.mean.f1, r.seconds);
    }
    return out;
}

std::string render_rollback(const RollbackRun& run) {
    std::string out = "k\tmedian_ms\texact\n";
    for (const auto& p : run.points) {
        out += fmt::format("{}\t{:.3f}\t{}\n", p.k, p.median_ms, p.exact ? "yes" : "no");
    }
    out += fmt::format("total_seconds\t{:.2f}\n", run.seconds);
    return out;
}

std::string render_sharing(const SharingRun& run) {
    const auto pct = [&](std::size_t n) { return run.prompts ? 100.0 * n / run.prompts : 0.0; };
    return fmt::format("prompts\t{}\ngenerated\t{} ({:.0f}%)\nvalid_before_expiry\t{} ({:.0f}%)\n"
                       "inaccessible_after\t{} ({:.0f}%)\n",
                       run.prompts, run.generated, pct(run.generated), run.valid_before, pct(run.valid_before),
                       run.inaccessible_after, pct(run.inaccessible_after));
}

std::string render_speed(const SpeedRun& run) {
    return fmt::format("files\t{}\nllm_latency_ms\t{}\nindex_path_s\t{:.4f}\nper_file_judge_s\t{:.4f}\nspeedup\t{:.2f}x\n",
                       run.files, run.llm_latency_ms, run.index_seconds, run.judge_seconds, run.speedup());
}

ScratchDir::ScratchDir(const std::string& tag, const fs::path& parent) {
    const auto base = parent.empty() ? fs::temp_directory_path() : parent;
    path_ = base / ("lsfs-" + tag + "-" + random_token_hex(6));
    fs::create_directories(path_);
}

ScratchDir::~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

} // namespace lsfs::bench
