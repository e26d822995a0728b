#include "lsfs/service.hpp"

#include "../support.hpp"

#include <doctest.h>
#include <httplib.h>

using namespace lsfs;
using namespace lsfs::test;

namespace {

constexpr Timestamp kStart = 1'704'067'200'000;

std::vector<MockLlm::Rule> rules() {
    using K = MockLlm::Rule::Kind;
    return {
        {"Find notes about milk.", K::Exact, R"({"api": "retrieve_summary", "args": {"keywords": ["milk"]}})"},
        {"Delete the notes file.", K::Exact, R"({"api": "del_", "args": {"directory": "misc", "name": "notes"}})"},
        {R"(^Change (\S+) to (.+)\.$)", K::Regex,
         R"({"api": "change_summary", "args": {"name": "$1", "import_file": "$2"}})"},
    };
}

struct Server {
    ScratchDir dir{"service"};
    std::shared_ptr<ManualClock> clock = std::make_shared<ManualClock>(kStart);
    std::unique_ptr<Runtime> rt;
    std::unique_ptr<HttpService> http;
    std::unique_ptr<httplib::Client> client;

    explicit Server(const std::string& token = "") {
        RuntimeConfig c;
        c.root = dir.path();
        c.api_token = token;
        rt = Runtime::open(c, {clock, std::make_shared<MockLlm>(rules()), std::make_shared<DeterministicEmbedder>(64)});
        rt->syscalls().create_or_get_file("misc", "notes", ImportSource::text("remember the milk\n"));
        rt->syscalls().create_or_get_file("misc", "todo", ImportSource::text("call mom\n"));
        http = std::make_unique<HttpService>(*rt);
        http->bind("127.0.0.1", 0);
        http->start();
        client = std::make_unique<httplib::Client>("127.0.0.1", http->port());
        if (!token.empty()) {
            client->set_bearer_token_auth(token);
        }
    }
    ~Server() { http->stop(); }

    httplib::Result post(const std::string& path, const nlohmann::json& body) {
        return client->Post(path, body.dump(), "application/json");
    }
};

nlohmann::json body(const httplib::Result& r) { return nlohmann::json::parse(r->body); }

} // namespace

TEST_SUITE("service") {

TEST_CASE("safe prompt runs at once") {
    Server s;
    const auto r = s.post("/v1/prompt", {{"prompt", "Find notes about milk."}});
    REQUIRE(r);
    CHECK(r->status == 200);
    const auto j = body(r);
    CHECK(j["plan"]["api"] == "retrieve_summary");
    CHECK(j["approval"]["decision"] == "auto");
    CHECK(j["result"]["kept"][0]["name"] == "notes");
    CHECK(j["result"]["summaries"].size() == 1);

    const auto only = s.post("/v1/prompt", {{"prompt", "Find notes about milk."}, {"candidates_only", true}});
    CHECK(body(only)["result"]["candidates"].size() == 1);
    CHECK(body(only)["result"]["summaries"].empty());

    const auto bad = s.post("/v1/prompt", {{"prompt", "Find notes about milk."}, {"select", {4}}});
    CHECK(bad->status == 400);
    CHECK(body(bad)["title"] == "InvalidArgument");
}

TEST_CASE("destructive prompt waits for confirmation") {
    Server s;
    const auto hash = s.rt->store().state_hash();
    const auto r = s.post("/v1/prompt", {{"prompt", "Delete the notes file."}});
    REQUIRE(r);
    CHECK(r->status == 202);
    const auto pending = body(r);
    CHECK(pending["plan"]["api"] == "del_");
    CHECK(pending["preview"].get<std::string>().find("irreversible") != std::string::npos);
    CHECK(s.rt->store().state_hash() == hash);

    const auto list = body(s.client->Get("/v1/pending"));
    REQUIRE(list["pending"].size() == 1);
    CHECK(list["pending"][0]["id"] == pending["pending_id"]);

    const auto no = s.post("/v1/confirm", {{"pending_id", pending["pending_id"]}, {"approve", false}});
    CHECK(no->status == 200);
    CHECK(body(no)["status"] == "rejected");
    CHECK(s.rt->store().state_hash() == hash);

    const auto again = body(s.post("/v1/prompt", {{"prompt", "Delete the notes file."}}));
    const auto yes = s.post("/v1/confirm", {{"pending_id", again["pending_id"]}, {"approve", true}, {"approver", "eve"}});
    CHECK(yes->status == 200);
    CHECK(body(yes)["approval"]["approved_by"] == "eve");
    CHECK_FALSE(s.rt->store().contains("misc", "notes"));

    const auto stale = s.post("/v1/confirm", {{"pending_id", again["pending_id"]}, {"approve", true}});
    CHECK(stale->status == 404);

    const auto expired = body(s.post("/v1/prompt", {{"prompt", "Change todo to call dad."}}));
    s.clock->advance(Gate::kDefaultTtlMs);
    const auto late = s.post("/v1/confirm", {{"pending_id", expired["pending_id"]}, {"approve", true}});
    CHECK(late->status == 410);
    CHECK(body(late)["title"] == "ApprovalTimeout");
}

TEST_CASE("same transcript as the in-process path") {
    Server s;
    const auto r = body(s.post("/v1/prompt", {{"prompt", "Find notes about milk."}}));
    const auto t = s.rt->run_prompt("Find notes about milk.", nullptr);
    CHECK(r["plan"] == to_json(*t.call));
    CHECK(r["result"] == *t.result);
    CHECK(r["preview"] == t.preview);
}

TEST_CASE("problem responses") {
    Server s;
    auto r = s.post("/v1/prompt", {{"prompt", "Sing me a song."}});
    CHECK(r->status == 422);
    auto j = body(r);
    CHECK(j["type"] == "urn:lsfs:error:UnknownApi");
    CHECK(j["status"] == 422);
    CHECK(r->get_header_value("Content-Type") == "application/problem+json");

    r = s.client->Post("/v1/prompt", "not json", "application/json");
    CHECK(r->status == 400);
    r = s.post("/v1/prompt", {{"text", "x"}});
    CHECK(r->status == 400);
    r = s.post("/v1/confirm", {{"pending_id", "x"}});
    CHECK(r->status == 400);
    r = s.client->Get("/v1/files/misc/ghost");
    CHECK(r->status == 404);
    CHECK(body(r)["title"] == "NotFound");
    r = s.client->Get("/v1/directories/ghost/files");
    CHECK(r->status == 404);

    CHECK(http_status(ErrorCode::FileLocked) == 409);
    CHECK(http_status(ErrorCode::Rejected) == 403);
    CHECK(http_status(ErrorCode::ProviderUnavailable) == 503);
    CHECK(problem(ErrorCode::Gone, "x")["status"] == 410);
}

TEST_CASE("browsing directories, files and versions") {
    Server s;
    s.rt->apis().change_summary({"misc", "notes"}, ImportSource::text("v2"));
    auto j = body(s.client->Get("/v1/directories"));
    REQUIRE(j["directories"].size() == 1);
    CHECK(j["directories"][0]["name"] == "misc");
    CHECK(j["directories"][0]["file_count"] == 2);

    j = body(s.client->Get("/v1/directories/misc/files"));
    CHECK(j["files"].size() == 2);

    j = body(s.client->Get("/v1/files/misc/notes"));
    CHECK(j["content"] == "v2");

    j = body(s.client->Get("/v1/files/misc/notes/versions"));
    REQUIRE(j["versions"].size() == 1);
    CHECK(j["versions"][0]["k"] == 1);
    CHECK(j["versions"][0]["content"] == "remember the milk\n");
    CHECK(j["versions"][0]["content_hash"] == sha256_hex("remember the milk\n"));
}

TEST_CASE("rollback endpoint needs confirmation") {
    Server s;
    s.rt->apis().change_summary({"misc", "notes"}, ImportSource::text("v2"));
    auto r = s.post("/v1/rollback", {{"directory", "misc"}, {"name", "notes"}, {"k", 1}});
    REQUIRE(r->status == 202);
    const auto id = body(r)["pending_id"];
    r = s.post("/v1/confirm", {{"pending_id", id}, {"approve", true}});
    CHECK(r->status == 200);
    CHECK(s.rt->store().get_entry("misc", "notes").content == "remember the milk\n");

    r = s.post("/v1/rollback", {{"name", "notes"}, {"by", "count"}, {"k", 0}});
    CHECK(r->status == 422);
}

TEST_CASE("links: create, fetch, revoke, expire") {
    Server s;
    auto r = s.post("/v1/links", {{"directory", "misc"}, {"name", "notes"}, {"validity", "1 day"}});
    REQUIRE(r->status == 201);
    const auto link = body(r)["result"];
    const auto token = link["token"].get<std::string>();
    CHECK(link["url"] == "http://127.0.0.1:" + std::to_string(s.http->port()) + "/share/" + token);

    r = s.client->Get("/share/" + token);
    CHECK(r->status == 200);
    CHECK(r->body == "remember the milk\n");
    CHECK(body(s.client->Get("/v1/links"))["links"].size() == 1);

    s.clock->advance(86'400'000);
    CHECK(s.client->Get("/share/" + token)->status == 410);

    const auto forever = body(s.post("/v1/links", {{"name", "todo"}}))["result"]["token"].get<std::string>();
    CHECK(s.client->Get("/share/" + forever)->status == 200);
    r = s.client->Delete("/v1/links/" + forever);
    CHECK(r->status == 200);
    CHECK(body(r)["result"]["revoked"] == true);
    CHECK(s.client->Get("/share/" + forever)->status == 410);
    CHECK(s.client->Get("/share/abc")->status == 404);
}

TEST_CASE("bearer token guards the api but not shares") {
    Server s("sesame");
    CHECK(s.client->Get("/v1/directories")->status == 200);
    httplib::Client anon("127.0.0.1", s.http->port());
    auto r = anon.Get("/v1/directories");
    CHECK(r->status == 401);
    CHECK(nlohmann::json::parse(r->body)["title"] == "Unauthorized");
    anon.set_bearer_token_auth("wrong");
    CHECK(anon.Get("/v1/pending")->status == 401);

    const auto token = body(s.post("/v1/links", {{"name", "todo"}}))["result"]["token"].get<std::string>();
    CHECK(anon.Get("/share/" + token)->status == 200);
}

TEST_CASE("binding a taken port fails") {
    Server s;
    HttpService other(*s.rt);
    CHECK(LSFS_CODE_OF(other.bind("127.0.0.1", s.http->port())) == ErrorCode::PortInUse);
}

}
