#include "lsfs/semantic_apis.hpp"

#include "../support.hpp"

#include <doctest.h>

using namespace lsfs;
using namespace lsfs::test;

namespace {

constexpr Timestamp kStart = 1'704'067'200'000;

struct Fixture {
    ScratchDir dir{"apis"};
    std::shared_ptr<ManualClock> clock = std::make_shared<ManualClock>(kStart);
    std::shared_ptr<DeterministicEmbedder> embedder = std::make_shared<DeterministicEmbedder>(64);
    std::shared_ptr<MockLlm> llm = std::make_shared<MockLlm>();
    IndexStore store{embedder, clock};
    Syscalls sys{store, dir.path()};
    VersionRecorder recorder{clock};
    LocalShareStore shares{clock, "http://127.0.0.1:1"};
    SemanticApis apis{sys, recorder, shares, llm, clock};

    void make(const std::string& d, const std::string& n, const std::string& text) {
        sys.create_or_get_file(d, n, ImportSource::text(text));
    }
    bool consistent() const { return disk_tree(dir.path()) == store_tree(store); }
};

} // namespace

TEST_SUITE("semantic_apis") {

TEST_CASE("keyword retrieval summarizes every candidate") {
    Fixture f;
    f.make("papers", "p1", "Emily Zhang computer vision");
    f.make("papers", "p2", "Emily Zhang robotics");
    f.make("papers", "p3", "Wei Chen computer vision");
    RetrieveArgs a;
    a.keywords = {"Emily Zhang", "computer vision"};
    a.condition = MatchMode::And;
    const auto r = f.apis.retrieve_summary(RetrieveMode::Keyword, a);
    REQUIRE(r.kept.size() == 1);
    CHECK(r.kept.names[0] == "p1");
    REQUIRE(r.summaries.size() == 1);
    CHECK(r.summaries[0] == document_summary_prompt("Emily Zhang computer vision"));
    CHECK(r.summary.rfind("## papers/p1\n", 0) == 0);
    CHECK(f.llm->calls() == 1);

    a.condition = MatchMode::Or;
    CHECK(f.apis.retrieve_summary(RetrieveMode::Keyword, a).kept.size() == 3);
}

TEST_CASE("selection filter prunes before any LLM call") {
    Fixture f;
    f.make("d", "a", "apple pie");
    f.make("d", "b", "apple tart");
    RetrieveArgs a;
    a.keywords = {"apple"};
    const auto none = f.apis.retrieve_summary(RetrieveMode::Keyword, a, [](const RetrievalResult&) {
        return std::vector<std::size_t>{};
    });
    CHECK(none.candidates.size() == 2);
    CHECK(none.kept.empty());
    CHECK(none.summary.empty());
    CHECK(f.llm->calls() == 0);

    const auto one = f.apis.retrieve_summary(RetrieveMode::Keyword, a, [](const RetrievalResult& c) {
        std::vector<std::size_t> keep;
        for (std::size_t i = 0; i < c.size(); ++i) {
            if (c.names[i] == "b") {
                keep.push_back(i);
            }
        }
        return keep;
    });
    REQUIRE(one.kept.size() == 1);
    CHECK(one.kept.names[0] == "b");
    CHECK(f.llm->calls() == 1);

    CHECK(LSFS_CODE_OF(f.apis.retrieve_summary(RetrieveMode::Keyword, a, [](const RetrievalResult&) {
              return std::vector<std::size_t>{7};
          })) == ErrorCode::InvalidArgument);
    CHECK(LSFS_CODE_OF(f.apis.retrieve_summary(RetrieveMode::Keyword, a, [](const RetrievalResult&) {
              return std::vector<std::size_t>{0, 0};
          })) == ErrorCode::InvalidArgument);
}

TEST_CASE("semantic and integrated retrieval") {
    Fixture f;
    std::vector<Doc> docs;
    std::mt19937_64 rng(5);
    for (int i = 0; i < 12; ++i) {
        const auto name = "f" + std::to_string(i);
        const auto text = random_text(rng, 6) + (i % 2 ? " cnn" : "");
        f.make("d", name, text);
        docs.push_back({"d", name, text, {}});
    }
    RetrieveArgs a;
    a.query = "cnn " + docs[3].content;
    a.n = 4;
    const auto r = f.apis.retrieve_summary(RetrieveMode::Semantic, a);
    const auto oracle = cosine_oracle(*f.embedder, docs, a.query, 4);
    REQUIRE(r.kept.size() == 4);
    REQUIRE(r.kept.scores);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(r.kept.names[i] == oracle[i].name);
    }

    a.keywords = {"cnn"};
    a.new_directory = "picked";
    a.n = 2;
    const auto g = f.apis.retrieve_summary(RetrieveMode::Integrated, a);
    CHECK(g.kept.size() == 2);
    CHECK(f.store.list_directory("picked").size() == 6);
    CHECK(f.consistent());

    CHECK(parse_retrieve_mode("integrated") == RetrieveMode::Integrated);
    CHECK(to_string(RetrieveMode::Semantic) == "semantic");
    CHECK(LSFS_CODE_OF(parse_retrieve_mode("fuzzy")) == ErrorCode::InvalidArgument);
}

TEST_CASE("change summary records the old version first") {
    Fixture f;
    f.make("d", "a", "alpha\nbeta\n");
    const auto c = f.apis.change_summary({"d", "a"}, ImportSource::text("alpha\ngamma\n"));
    CHECK(c.version_seq_before == 1);
    CHECK(f.recorder.resolve_by_count({"d", "a"}, 1).content == "alpha\nbeta\n");
    CHECK(c.entry.content == "alpha\ngamma\n");
    CHECK(slurp(f.dir.path() / "d" / "a") == "alpha\ngamma\n");
    CHECK(apply_diff("alpha\nbeta\n", c.diff) == "alpha\ngamma\n");
    CHECK(c.summarized);
    CHECK(c.summary.find("alpha\nbeta\n") != std::string::npos);
    CHECK(c.summary.find("alpha\ngamma\n") != std::string::npos);

    const auto calls = f.llm->calls();
    const auto same = f.apis.change_summary({"d", "a"}, ImportSource::text("alpha\ngamma\n"));
    CHECK(same.summary == kNoChangeSummary);
    CHECK(same.diff.empty());
    CHECK(f.llm->calls() == calls);
    CHECK(f.recorder.length({"d", "a"}) == 2);

    CHECK(LSFS_CODE_OF(f.apis.change_summary({"d", "zz"}, ImportSource::text("x"))) == ErrorCode::NotFound);
    f.sys.lock_file("d", "a");
    CHECK(LSFS_CODE_OF(f.apis.change_summary({"d", "a"}, ImportSource::text("x"))) == ErrorCode::FileLocked);
    CHECK(f.store.get_entry("d", "a").content == "alpha\ngamma\n");
}

TEST_CASE("change summary survives an LLM outage") {
    Fixture f;
    auto down = std::make_shared<DownLlm>();
    SemanticApis apis{f.sys, f.recorder, f.shares, down, f.clock};
    f.make("d", "a", "one");
    const auto c = apis.change_summary({"d", "a"}, ImportSource::text("two"));
    CHECK_FALSE(c.summarized);
    CHECK(down->calls() == 1);
    CHECK(f.store.get_entry("d", "a").content == "two");
    CHECK(f.recorder.length({"d", "a"}) == 1);
}

TEST_CASE("rollback by count and by date, and undo") {
    Fixture f;
    f.make("d", "a", "v0");
    for (int i = 1; i <= 4; ++i) {
        f.clock->advance(1000);
        f.apis.change_summary({"d", "a"}, ImportSource::text("v" + std::to_string(i)));
    }
    // recorded: v0 @ +1s, v1 @ +2s, v2 @ +3s, v3 @ +4s; current v4
    CHECK(f.apis.rollback({"d", "a"}, RollbackTarget::count(2)).content == "v2");
    CHECK(slurp(f.dir.path() / "d" / "a") == "v2");
    CHECK(f.recorder.resolve_by_count({"d", "a"}, 1).content == "v4");

    CHECK(f.apis.rollback({"d", "a"}, RollbackTarget::count(1)).content == "v4");

    CHECK(f.apis.rollback({"d", "a"}, RollbackTarget::at(kStart + 2500)).content == "v1");
    CHECK(LSFS_CODE_OF(f.apis.rollback({"d", "a"}, RollbackTarget::at(kStart))) == ErrorCode::NoVersionBefore);
    CHECK(LSFS_CODE_OF(f.apis.rollback({"d", "a"}, RollbackTarget::count(99))) == ErrorCode::TooFewVersions);
    CHECK(LSFS_CODE_OF(f.apis.rollback({"d", "new"}, RollbackTarget::count(1))) == ErrorCode::UnknownKey);
    f.sys.lock_file("d", "a");
    CHECK(LSFS_CODE_OF(f.apis.rollback({"d", "a"}, RollbackTarget::count(1))) == ErrorCode::FileLocked);
    CHECK(f.consistent());
}

TEST_CASE("property: rollback by count returns the kth previous content") {
    Fixture f;
    std::mt19937_64 rng(11);
    f.make("d", "a", "start");
    std::vector<std::string> history{"start"};
    for (int i = 0; i < 40; ++i) {
        auto text = random_text(rng, 4);
        f.apis.change_summary({"d", "a"}, ImportSource::text(text));
        history.push_back(std::move(text));
    }
    for (int round = 0; round < 30; ++round) {
        const auto k = std::uniform_int_distribution<std::size_t>(1, history.size() - 1)(rng);
        const auto expect = history[history.size() - 1 - k];
        const auto e = f.apis.rollback({"d", "a"}, RollbackTarget::count(k));
        CHECK(e.content == expect);
        history.push_back(expect);
        CHECK(f.recorder.length({"d", "a"}) == history.size() - 1);
    }
    CHECK(f.consistent());
}

TEST_CASE("links expire after the requested validity") {
    Fixture f;
    f.make("d", "a", "shared text");
    const auto link = f.apis.create_link({"d", "a"}, 90LL * 86400);
    CHECK(*link.expires_at == kStart + 90LL * 86'400'000);
    CHECK(f.apis.fetch_shared(link.token) == "shared text");
    f.clock->set(*link.expires_at);
    CHECK(LSFS_CODE_OF(f.apis.fetch_shared(link.token)) == ErrorCode::Gone);

    const auto forever = f.apis.create_link({"d", "a"}, std::nullopt);
    CHECK_FALSE(forever.expires_at);
    f.clock->advance(100LL * 365 * 86'400'000);
    CHECK(f.apis.fetch_shared(forever.token) == "shared text");
    CHECK(f.apis.revoke_link(forever.token).revoked);
    CHECK(LSFS_CODE_OF(f.apis.fetch_shared(forever.token)) == ErrorCode::Gone);

    CHECK(LSFS_CODE_OF(f.apis.create_link({"d", "a"}, 0)) == ErrorCode::InvalidArgument);
    CHECK(LSFS_CODE_OF(f.apis.create_link({"d", "missing"}, 10)) == ErrorCode::NotFound);
}

}
