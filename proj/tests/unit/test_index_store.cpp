#include "lsfs/error.hpp"
#include "lsfs/index_store.hpp"

#include "../support.hpp"

#include <doctest.h>

using namespace lsfs;
using namespace lsfs::test;

namespace {

std::shared_ptr<DeterministicEmbedder> embedder(std::size_t dim = 384) {
    return std::make_shared<DeterministicEmbedder>(dim);
}

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an lsfs::Error");
    return ErrorCode::Io;
}

std::set<std::pair<std::string, std::string>> as_set(const RetrievalResult& r) {
    std::set<std::pair<std::string, std::string>> s;
    for (std::size_t i = 0; i < r.size(); ++i) {
        s.insert({r.directories[i], r.names[i]});
    }
    return s;
}

} // namespace

TEST_SUITE("index_store") {

TEST_CASE("put and get") {
    auto clock = std::make_shared<ManualClock>(1000);
    IndexStore s(embedder(), clock);
    s.put_entry("d", "a.txt", "hello");
    const auto e = s.get_entry("d", "a.txt");
    CHECK(e.content == "hello");
    CHECK(e.metadata.directory == "d");
    CHECK(e.metadata.size_bytes == 5);
    CHECK(e.embedding == s.embedder().embed("hello"));
    CHECK(code_of([&] { s.get_entry("d", "missing"); }) == ErrorCode::NotFound);
    CHECK(code_of([&] { s.put_entry("d", "a/b", "x"); }) == ErrorCode::InvalidName);
    CHECK(code_of([&] { s.put_entry("d", "", "x"); }) == ErrorCode::InvalidName);
    CHECK(code_of([&] { s.put_entry(".lsfs", "x", "x"); }) == ErrorCode::InvalidName);
}

TEST_CASE("overwrite keeps one entry and bumps modified_at even when the clock stands still") {
    auto clock = std::make_shared<ManualClock>(1000);
    IndexStore s(embedder(), clock);
    const auto first = s.put_entry("d", "a.txt", "one");
    const auto second = s.put_entry("d", "a.txt", "two");
    CHECK(s.list_directory("d").size() == 1);
    CHECK(second.metadata.modified_at > first.metadata.modified_at);
    CHECK(second.metadata.created_at == first.metadata.created_at);
    CHECK(second.metadata.created_at <= second.metadata.modified_at);
}

TEST_CASE("listing, removal and directory records") {
    IndexStore s(embedder(), std::make_shared<SystemClock>());
    s.put_entry("d", "c", "3");
    s.put_entry("d", "a", "1");
    s.put_entry("d", "b", "2");
    const auto l = s.list_directory("d");
    REQUIRE(l.size() == 3);
    CHECK(l[0].display_name == "a");
    CHECK(l[2].display_name == "c");
    CHECK(s.list_directory("nope").empty());

    s.remove_entry("d", "a");
    CHECK(s.has_directory("d"));
    s.remove_entry("d", "b");
    s.remove_entry("d", "c");
    CHECK(s.list_directory("d").empty());
    CHECK_FALSE(s.has_directory("d"));
    CHECK(s.directories().empty());
    CHECK(code_of([&] { s.remove_entry("d", "c"); }) == ErrorCode::NotFound);
}

TEST_CASE("locked entries are readable but not removable") {
    IndexStore s(embedder(), std::make_shared<SystemClock>());
    s.put_entry("d", "a", "x");
    s.set_read_only("d", "a", true);
    CHECK(s.get_entry("d", "a").content == "x");
    CHECK(code_of([&] { s.remove_entry("d", "a"); }) == ErrorCode::FileLocked);
}

TEST_CASE("keyword scan examples") {
    IndexStore s(embedder(), std::make_shared<SystemClock>());
    s.put_entry("d", "f1", "alpha beta");
    s.put_entry("d", "f2", "alpha");
    s.put_entry("d", "f3", "gamma");
    auto names = [](const RetrievalResult& r) { return r.names; };
    CHECK(names(s.scan_keywords(std::nullopt, {"alpha", "beta"}, MatchMode::And)) == std::vector<std::string>{"f1"});
    CHECK(names(s.scan_keywords(std::nullopt, {"alpha", "beta"}, MatchMode::Or)) ==
          std::vector<std::string>{"f1", "f2"});
    CHECK(names(s.scan_keywords("d", {"ALPHA"}, std::nullopt)) == std::vector<std::string>{"f1", "f2"});
    CHECK(names(s.scan_keywords(std::nullopt, {"f3"}, std::nullopt)) == std::vector<std::string>{"f3"});
    CHECK(code_of([&] { s.scan_keywords(std::nullopt, {}, MatchMode::And); }) == ErrorCode::EmptyQuery);
    CHECK(code_of([&] { s.scan_keywords(std::nullopt, {"a", "b"}, std::nullopt); }) == ErrorCode::MissingMode);
    CHECK_FALSE(s.scan_keywords(std::nullopt, {"alpha"}, std::nullopt).scores.has_value());
}

TEST_CASE("user keywords take part in matching") {
    IndexStore s(embedder(), std::make_shared<SystemClock>());
    PutOptions o;
    o.keywords = std::vector<std::string>{"Quarterly"};
    s.put_entry("d", "report", "numbers only", o);
    CHECK(s.scan_keywords(std::nullopt, {"quarterly"}, std::nullopt).names == std::vector<std::string>{"report"});
    // Overwrite without keywords keeps them.
    s.put_entry("d", "report", "other numbers");
    CHECK(s.get_entry("d", "report").metadata.keywords == std::vector<std::string>{"Quarterly"});
}

TEST_CASE("property: keyword scan equals the linear oracle and AND is a subset of OR") {
    std::mt19937_64 rng(11);
    for (int round = 0; round < 150; ++round) {
        IndexStore s(embedder(32), std::make_shared<SystemClock>());
        std::vector<Doc> docs;
        const auto n = std::uniform_int_distribution<int>(1, 25)(rng);
        for (int i = 0; i < n; ++i) {
            Doc d{"dir" + std::to_string(i % 3), "f" + std::to_string(i) + "-" + random_word(rng, 1, 3),
                  random_text(rng, 6), {}};
            if (i % 4 == 0) {
                d.keywords.push_back(random_word(rng, 2, 3));
            }
            if (s.contains(d.directory, d.name)) {
                continue;
            }
            PutOptions o;
            o.keywords = d.keywords;
            s.put_entry(d.directory, d.name, d.content, o);
            docs.push_back(d);
        }
        std::vector<std::string> ks;
        const auto nk = std::uniform_int_distribution<int>(1, 3)(rng);
        for (int i = 0; i < nk; ++i) {
            ks.push_back(random_word(rng, 1, 3));
        }
        const std::optional<MatchMode> and_mode = ks.size() > 1 ? std::optional(MatchMode::And) : std::nullopt;
        const std::optional<MatchMode> or_mode = ks.size() > 1 ? std::optional(MatchMode::Or) : std::nullopt;
        const auto got_and = as_set(s.scan_keywords(std::nullopt, ks, and_mode));
        const auto got_or = as_set(s.scan_keywords(std::nullopt, ks, or_mode));
        CHECK(got_and == keyword_oracle(docs, ks, true));
        CHECK(got_or == keyword_oracle(docs, ks, false));
        CHECK(std::includes(got_or.begin(), got_or.end(), got_and.begin(), got_and.end()));

        const std::string dir = "dir1";
        CHECK(as_set(s.scan_keywords(dir, ks, or_mode)) == keyword_oracle(docs, ks, false, &dir));
    }
}

TEST_CASE("semantic top-n examples") {
    IndexStore s(embedder(), std::make_shared<SystemClock>());
    const std::vector<std::string> texts{"cats purr on warm laps", "stock markets fell sharply today",
                                         "the cat sat on the mat", "rust borrow checker rules",
                                         "deep learning for image classification"};
    for (std::size_t i = 0; i < texts.size(); ++i) {
        s.put_entry("d", "f" + std::to_string(i + 1), texts[i]);
    }
    const auto self = s.topn_semantic(std::nullopt, texts[1], 1);
    REQUIRE(self.size() == 1);
    CHECK(self.names[0] == "f2");
    CHECK((*self.scores)[0] == doctest::Approx(1.0).epsilon(1e-6));

    const auto all = s.topn_semantic(std::nullopt, "anything", 100);
    CHECK(all.size() == 5);
    REQUIRE(all.scores.has_value());
    CHECK(std::is_sorted(all.scores->begin(), all.scores->end(), std::greater<>()));
    CHECK(code_of([&] { s.topn_semantic(std::nullopt, "", 3); }) == ErrorCode::EmptyQuery);
    CHECK(s.topn_semantic("elsewhere", "cat", 3).empty());
}

TEST_CASE("property: top-n equals brute-force cosine ranking") {
    std::mt19937_64 rng(5);
    for (int round = 0; round < 120; ++round) {
        const std::size_t dim = round % 2 ? 16 : 64;
        auto e = embedder(dim);
        IndexStore s(e, std::make_shared<SystemClock>());
        std::vector<Doc> docs;
        const auto n = std::uniform_int_distribution<int>(1, 40)(rng);
        for (int i = 0; i < n; ++i) {
            // Repeated contents force exact score ties.
            const auto content = i % 5 == 4 && !docs.empty() ? docs[0].content : random_text(rng, 4);
            docs.push_back({"d", "n" + std::to_string(1000 + i), content, {}});
            s.put_entry("d", docs.back().name, content);
        }
        const auto q = random_text(rng, 3);
        const auto k = std::uniform_int_distribution<std::size_t>(1, 12)(rng);
        const auto got = s.topn_semantic(std::nullopt, q, k);
        const auto want = cosine_oracle(*e, docs, q, k);
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < want.size(); ++i) {
            CHECK(got.names[i] == want[i].name);
            CHECK((*got.scores)[i] == doctest::Approx(want[i].score).epsilon(1e-12));
        }
    }
}

TEST_CASE("persist and load round trip") {
    ScratchDir dir("store");
    auto clock = std::make_shared<ManualClock>(5000);
    std::string hash;
    {
        auto s = IndexStore::open(dir.path(), embedder(), clock);
        s->put_entry("a", "x", "first file");
        PutOptions o;
        o.keywords = std::vector<std::string>{"k1", "k2"};
        o.source_path = "/somewhere/y.txt";
        s->put_entry("b", "y", "second file", o);
        s->set_read_only("b", "y", true);
        s->persist();
        s->put_entry("a", "z", "journaled only");
        hash = s->state_hash();
    }
    auto back = IndexStore::open(dir.path(), embedder(), clock);
    CHECK(back->state_hash() == hash);
    CHECK(back->size() == 3);
    const auto y = back->get_entry("b", "y");
    CHECK(y.metadata.read_only);
    CHECK(y.metadata.source_path == "/somewhere/y.txt");
    CHECK(y.embedding == back->embedder().embed("second file"));
    CHECK(back->get_entry("a", "z").content == "journaled only");

    SUBCASE("empty snapshot gives an empty store") {
        ScratchDir empty("store");
        IndexStore e(embedder(), clock);
        e.persist(empty.path() / "index.lsfs");
        IndexStore f(embedder(), clock);
        f.put_entry("q", "q", "q");
        f.load(empty.path() / "index.lsfs");
        CHECK(f.size() == 0);
    }
    SUBCASE("truncated snapshot is refused") {
        back->persist();
        const auto snap = dir.path() / "index.lsfs";
        const auto raw = slurp(snap);
        spit(snap, raw.substr(0, raw.size() / 2));
        IndexStore f(embedder(), clock);
        CHECK(code_of([&] { f.load(snap); }) == ErrorCode::CorruptSnapshot);
    }
    SUBCASE("snapshot from a different dimension is refused") {
        back->persist();
        IndexStore f(embedder(16), clock);
        CHECK_THROWS_AS(f.load(dir.path() / "index.lsfs"), Error);
    }
}

TEST_CASE("property: random put/remove never leaves an empty directory and survives reload") {
    ScratchDir dir("store");
    std::mt19937_64 rng(8);
    auto clock = std::make_shared<SystemClock>();
    auto s = IndexStore::open(dir.path(), embedder(16), clock);
    for (int step = 0; step < 400; ++step) {
        const auto d = "d" + std::to_string(std::uniform_int_distribution<int>(0, 3)(rng));
        const auto n = "n" + std::to_string(std::uniform_int_distribution<int>(0, 5)(rng));
        if (std::uniform_int_distribution<int>(0, 2)(rng) == 0) {
            if (s->contains(d, n)) {
                s->remove_entry(d, n);
            }
        } else {
            s->put_entry(d, n, random_text(rng, 3));
        }
        if (step % 97 == 0) {
            s->persist();
        }
        for (const auto& dd : s->directories()) {
            CHECK_FALSE(s->list_directory(dd).empty());
        }
    }
    const auto hash = s->state_hash();
    s.reset();
    CHECK(IndexStore::open(dir.path(), embedder(16), clock)->state_hash() == hash);
}

TEST_CASE("concurrent readers and a writer") {
    IndexStore s(embedder(32), std::make_shared<SystemClock>());
    for (int i = 0; i < 20; ++i) {
        s.put_entry("d", "f" + std::to_string(i), "text " + std::to_string(i));
    }
    std::atomic<bool> stop{false};
    std::vector<std::thread> readers;
    std::atomic<int> bad{0};
    for (int r = 0; r < 3; ++r) {
        readers.emplace_back([&] {
            while (!stop) {
                const auto res = s.topn_semantic(std::nullopt, "text 3", 5);
                if (res.size() != 5 || res.names.size() != res.contents.size()) {
                    ++bad;
                }
            }
        });
    }
    for (int i = 0; i < 200; ++i) {
        s.put_entry("d", "f" + std::to_string(i % 20), "text " + std::to_string(i));
    }
    stop = true;
    for (auto& t : readers) {
        t.join();
    }
    CHECK(bad == 0);
}

}
