#include "lsfs/error.hpp"
#include "lsfs/version_recorder.hpp"

#include "../support.hpp"

#include <doctest.h>

using namespace lsfs;
using namespace lsfs::test;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an lsfs::Error");
    return ErrorCode::Io;
}

FileMetadata meta(const std::string& name) {
    FileMetadata m;
    m.display_name = name;
    m.directory = "d";
    return m;
}

} // namespace

TEST_SUITE("version_recorder") {

TEST_CASE("sequence numbers and byte-exact content") {
    auto clock = std::make_shared<ManualClock>(10);
    VersionRecorder r(clock);
    const FileKey k{"d", "f"};
    const std::string binaryish("a\0b\r\n\xc3\xa9", 7);
    CHECK(r.record(k, meta("f"), "one") == 1);
    CHECK(r.record(k, meta("f"), "two") == 2);
    CHECK(r.record(k, meta("f"), binaryish) == 3);
    CHECK(sha256_hex(r.resolve_by_count(k, 1).content) == sha256_hex(binaryish));
    CHECK(r.length(k) == 3);
    CHECK(r.has(k));
    CHECK_FALSE(r.has({"d", "other"}));
}

TEST_CASE("resolve by date is inclusive and refuses early targets") {
    auto clock = std::make_shared<ManualClock>(10);
    VersionRecorder r(clock);
    const FileKey k{"d", "f"};
    r.record(k, meta("f"), "v1");
    clock->set(20);
    r.record(k, meta("f"), "v2");
    clock->set(30);
    r.record(k, meta("f"), "v3");
    CHECK(r.resolve_by_date(k, 25).seq == 2);
    CHECK(r.resolve_by_date(k, 20).seq == 2);
    CHECK(r.resolve_by_date(k, 1000).seq == 3);
    CHECK(code_of([&] { r.resolve_by_date(k, 5); }) == ErrorCode::NoVersionBefore);
    CHECK(code_of([&] { r.resolve_by_date({"x", "y"}, 5); }) == ErrorCode::UnknownKey);
}

TEST_CASE("resolve by count") {
    VersionRecorder r(std::make_shared<ManualClock>(0));
    const FileKey k{"d", "f"};
    for (int i = 1; i <= 5; ++i) {
        r.record(k, meta("f"), "v" + std::to_string(i));
    }
    CHECK(r.resolve_by_count(k, 3).seq == 3);
    CHECK(r.resolve_by_count(k, 1).content == "v5");
    CHECK(code_of([&] { r.resolve_by_count(k, 6); }) == ErrorCode::TooFewVersions);
    CHECK(code_of([&] { r.resolve_by_count(k, 0); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([&] { r.resolve_by_count({"no", "pe"}, 1); }) == ErrorCode::UnknownKey);
}

TEST_CASE("chains are per directory") {
    VersionRecorder r(std::make_shared<ManualClock>(0));
    r.record({"a", "f"}, meta("f"), "in a");
    r.record({"b", "f"}, meta("f"), "in b");
    CHECK(r.resolve_by_count({"a", "f"}, 1).content == "in a");
    CHECK(r.resolve_by_count({"b", "f"}, 1).content == "in b");
    CHECK(r.keys().size() == 2);
}

TEST_CASE("retention cap drops the oldest but keeps numbering") {
    VersionRecorder r(std::make_shared<ManualClock>(0), 3);
    const FileKey k{"d", "f"};
    for (int i = 1; i <= 5; ++i) {
        r.record(k, meta("f"), "v" + std::to_string(i));
    }
    const auto c = r.chain(k);
    REQUIRE(c.size() == 3);
    CHECK(c.front().seq == 3);
    CHECK(r.record(k, meta("f"), "v6") == 6);
}

TEST_CASE("property: roundtrip, monotone dates and strictly increasing seqs") {
    std::mt19937_64 rng(77);
    auto clock = std::make_shared<ManualClock>(0);
    VersionRecorder r(clock);
    const FileKey k{"d", "f"};
    std::vector<std::string> history;
    for (int i = 0; i < 300; ++i) {
        clock->advance(std::uniform_int_distribution<int>(0, 3)(rng));
        const auto text = random_text(rng, 3);
        r.record(k, meta("f"), text);
        history.push_back(text);
        CHECK(r.resolve_by_count(k, 1).content == text);
    }
    const auto chain = r.chain(k);
    for (std::size_t i = 1; i < chain.size(); ++i) {
        CHECK(chain[i].seq == chain[i - 1].seq + 1);
        CHECK(chain[i].recorded_at >= chain[i - 1].recorded_at);
    }
    for (std::size_t kk = 1; kk <= history.size(); kk += 7) {
        CHECK(r.resolve_by_count(k, kk).content == history[history.size() - kk]);
    }
    std::uint64_t last = 0;
    for (Timestamp t = chain.front().recorded_at; t <= chain.back().recorded_at; ++t) {
        const auto seq = r.resolve_by_date(k, t).seq;
        CHECK(seq >= last);
        last = seq;
    }
}

TEST_CASE("persist and reload") {
    ScratchDir dir("recorder");
    auto clock = std::make_shared<ManualClock>(100);
    {
        auto r = VersionRecorder::open(dir.path(), clock);
        auto m = meta("f");
        m.keywords = {"k"};
        m.source_path = "/x";
        r->record({"d", "f"}, m, "one");
        r->record({"d", "f"}, m, "two");
        r->persist();
    }
    auto back = VersionRecorder::open(dir.path(), clock);
    const auto c = back->chain({"d", "f"});
    REQUIRE(c.size() == 2);
    CHECK(c[1].content == "two");
    CHECK(c[1].metadata.keywords == std::vector<std::string>{"k"});
    CHECK(c[1].metadata.source_path == "/x");
    CHECK(back->record({"d", "f"}, meta("f"), "three") == 3);

    const auto snap = dir.path() / "versions.lsfs";
    auto raw = slurp(snap);
    raw[raw.size() - 2] ^= 0x10;
    spit(snap, raw);
    CHECK(code_of([&] { VersionRecorder::open(dir.path(), clock); }) == ErrorCode::CorruptSnapshot);
}

}
