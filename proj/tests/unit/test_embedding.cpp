#include "lsfs/embedding.hpp"
#include "lsfs/error.hpp"

#include "../support.hpp"

#include <doctest.h>
#include <httplib.h>

#include <cstring>
#include <thread>

using namespace lsfs;
using namespace lsfs::test;

namespace {

double norm2(const EmbeddingVector& v) {
    double s = 0;
    for (const float x : v.values) {
        s += static_cast<double>(x) * x;
    }
    return std::sqrt(s);
}

} // namespace

TEST_SUITE("embedding") {

TEST_CASE("matches the reference vectors bit for bit") {
    const auto rows = nlohmann::json::parse(slurp(fixture("embedding_vectors.json")));
    REQUIRE(rows.size() >= 10);
    for (const auto& row : rows) {
        const DeterministicEmbedder e(row["dim"].get<std::size_t>());
        const auto v = e.embed(row["text"].get<std::string>());
        const auto& bits = row["bits"];
        REQUIRE(v.dim() == bits.size());
        for (std::size_t i = 0; i < v.dim(); ++i) {
            std::uint32_t b = 0;
            std::memcpy(&b, &v.values[i], sizeof b);
            CHECK_MESSAGE(b == bits[i].get<std::uint32_t>(), row["text"].get<std::string>(), " dim ", v.dim(), " i ", i);
        }
    }
}

TEST_CASE("pure, unit length and fixed dimension") {
    const DeterministicEmbedder e;
    std::mt19937_64 rng(3);
    for (int i = 0; i < 200; ++i) {
        const auto t = random_text(rng, static_cast<std::size_t>(i % 20));
        const auto a = e.embed(t);
        CHECK(a == e.embed(t));
        CHECK(a.dim() == 384);
        CHECK(norm2(a) == doctest::Approx(1.0).epsilon(1e-6));
        for (const float x : a.values) {
            CHECK(std::isfinite(x));
        }
    }
}

TEST_CASE("repeated token is closer than an unrelated token") {
    const DeterministicEmbedder e;
    CHECK(cosine(e.embed("alpha alpha"), e.embed("alpha")) > cosine(e.embed("alpha"), e.embed("zq9")));
    CHECK(cosine(e.embed("Alpha"), e.embed("alpha")) == doctest::Approx(1.0));
}

TEST_CASE("batch equals element-wise embed") {
    const DeterministicEmbedder e(64);
    CHECK(e.embed_batch({}).empty());
    const auto b = e.embed_batch({"a b", "c d"});
    REQUIRE(b.size() == 2);
    CHECK(b[0] == e.embed("a b"));
    CHECK(b[1] == e.embed("c d"));

    std::vector<std::string> many;
    for (int i = 0; i < 1000; ++i) {
        many.push_back("short text number " + std::to_string(i));
    }
    const auto start = std::chrono::steady_clock::now();
    CHECK(e.embed_batch(many).size() == 1000);
    CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(10));
}

TEST_CASE("oversize text truncates by default and can be refused") {
    const DeterministicEmbedder cut(32, 8);
    CHECK(cut.embed("abcdefgh and more") == cut.embed("abcdefgh"));
    const DeterministicEmbedder strict(32, 8, false);
    try {
        strict.embed("abcdefgh and more");
        FAIL("expected TextTooLarge");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::TextTooLarge);
    }
}

TEST_CASE("config validation") {
    EmbeddingProviderConfig c;
    c.kind = EmbeddingProviderConfig::Kind::Remote;
    CHECK_THROWS_AS(c.validate(), Error);
    c.endpoint = "http://127.0.0.1:1/embed";
    CHECK_NOTHROW(c.validate());
    c.dim = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    CHECK(make_embedding_provider(EmbeddingProviderConfig{})->dim() == 384);
}

TEST_CASE("remote embedder speaks {model, input} -> {vectors}") {
    httplib::Server server;
    nlohmann::json seen;
    server.Post("/embed", [&](const httplib::Request& req, httplib::Response& res) {
        seen = nlohmann::json::parse(req.body);
        nlohmann::json vectors = nlohmann::json::array();
        for (std::size_t i = 0; i < seen["input"].size(); ++i) {
            vectors.push_back({static_cast<double>(i), 1.0, 0.0});
        }
        res.set_content(nlohmann::json{{"vectors", vectors}}.dump(), "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    EmbeddingProviderConfig c;
    c.kind = EmbeddingProviderConfig::Kind::Remote;
    c.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/embed";
    c.dim = 3;
    const RemoteEmbedder e(c);
    const auto out = e.embed_batch({"x", "y"});
    CHECK(seen["model"] == c.model_name);
    CHECK(seen["input"] == nlohmann::json::array({"x", "y"}));
    REQUIRE(out.size() == 2);
    CHECK(out[1].values == std::vector<float>{1.0f, 1.0f, 0.0f});

    c.dim = 4;
    const RemoteEmbedder wrong_dim(c);
    CHECK_THROWS_AS(wrong_dim.embed("x"), Error);

    server.stop();
    t.join();
}

TEST_CASE("remote embedder with nothing listening is unavailable") {
    EmbeddingProviderConfig c;
    c.kind = EmbeddingProviderConfig::Kind::Remote;
    c.endpoint = "http://127.0.0.1:9/embed";
    c.timeout_ms = 500;
    const RemoteEmbedder e(c);
    try {
        e.embed("x");
        FAIL("expected an error");
    } catch (const Error& err) {
        CHECK((err.code() == ErrorCode::ProviderUnavailable || err.code() == ErrorCode::EmbeddingFailure));
    }
}

}
