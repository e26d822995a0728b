#include "lsfs/service.hpp"

#include "lsfs/util.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

namespace lsfs {

namespace {

constexpr const char* kJson = "application/json";

void send(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), kJson);
}

void send_problem(httplib::Response& res, ErrorCode code, const std::string& detail,
                  const nlohmann::json& details = nullptr) {
    res.status = http_status(code);
    res.set_content(problem(code, detail, details).dump(), "application/problem+json");
}

nlohmann::json body_of(const httplib::Request& req) {
    if (req.body.empty()) {
        return nlohmann::json::object();
    }
    auto j = nlohmann::json::parse(req.body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw Error(ErrorCode::InvalidArgument, "request body must be a JSON object");
    }
    return j;
}

/// `select` keeps the listed candidate indices; `candidates_only` keeps none,
/// so retrieval returns candidates without summarizing.
SelectionFilter filter_from(const nlohmann::json& body) {
    if (body.contains("select") && !body["select"].is_null()) {
        if (!body["select"].is_array()) {
            throw Error(ErrorCode::InvalidArgument, "select must be an array of indices");
        }
        std::vector<std::size_t> keep;
        for (const auto& i : body["select"]) {
            if (!i.is_number_unsigned() && !(i.is_number_integer() && i.get<std::int64_t>() >= 0)) {
                throw Error(ErrorCode::InvalidArgument, "select must hold non-negative integers");
            }
            keep.push_back(i.get<std::size_t>());
        }
        return [keep](const RetrievalResult&) { return keep; };
    }
    if (body.value("candidates_only", false)) {
        return [](const RetrievalResult&) { return std::vector<std::size_t>{}; };
    }
    return nullptr;
}

void send_transcript(httplib::Response& res, const Transcript& t, int ok_status = 200) {
    if (t.error) {
        auto p = problem(*t.error, t.error_message, t.error_details);
        p["plan"] = t.call ? to_json(*t.call) : nlohmann::json(nullptr);
        res.status = http_status(*t.error);
        res.set_content(p.dump(), "application/problem+json");
        return;
    }
    send(res, ok_status,
         {{"plan", t.call ? to_json(*t.call) : nlohmann::json(nullptr)},
          {"preview", t.preview},
          {"approval", {{"decision", t.decision}, {"approved_by", t.approved_by}, {"action_id", t.action_id}}},
          {"result", t.result ? *t.result : nlohmann::json(nullptr)}});
}

void send_submission(httplib::Response& res, const Submission& s, int ok_status = 200) {
    if (s.pending) {
        send(res, 202,
             {{"pending_id", s.pending->id},
              {"preview", s.pending->preview},
              {"plan", to_json(s.pending->call)},
              {"expires_at", format_rfc3339(s.pending->expires_at)}});
        return;
    }
    send_transcript(res, s.transcript, ok_status);
}

} // namespace

int http_status(ErrorCode code) {
    switch (code) {
    case ErrorCode::NotFound:
    case ErrorCode::UnknownKey:
        return 404;
    case ErrorCode::InvalidName:
    case ErrorCode::InvalidArgument:
    case ErrorCode::EmptyQuery:
    case ErrorCode::MissingMode:
    case ErrorCode::MissingArgument:
    case ErrorCode::TextTooLarge:
    case ErrorCode::PathUnreadable:
    case ErrorCode::ExtractorUnsupported:
        return 400;
    case ErrorCode::UnknownApi:
    case ErrorCode::UnparseableOutput:
    case ErrorCode::SchemaViolation:
    case ErrorCode::EmptyResult:
    case ErrorCode::EmptySelection:
        return 422;
    case ErrorCode::FileLocked:
    case ErrorCode::DirectoryExists:
    case ErrorCode::SelfJoin:
    case ErrorCode::AmbiguousTarget:
    case ErrorCode::NoVersionBefore:
    case ErrorCode::TooFewVersions:
    case ErrorCode::PreconditionFailed:
    case ErrorCode::AlreadyRunning:
        return 409;
    case ErrorCode::Rejected:
        return 403;
    case ErrorCode::Gone:
    case ErrorCode::ApprovalTimeout:
        return 410;
    case ErrorCode::OutputTooLarge:
        return 502;
    case ErrorCode::ProviderUnavailable:
    case ErrorCode::ShareStoreUnavailable:
    case ErrorCode::EmbeddingFailure:
        return 503;
    case ErrorCode::Timeout:
        return 504;
    default:
        return 500;
    }
}

nlohmann::json problem(ErrorCode code, const std::string& detail, const nlohmann::json& details) {
    const std::string name(to_string(code));
    nlohmann::json p{{"type", "urn:lsfs:error:" + name}, {"title", name}, {"status", http_status(code)}, {"detail", detail}};
    if (!details.is_null()) {
        p["details"] = details;
    }
    return p;
}

HttpService::HttpService(Runtime& runtime) : rt_(runtime), server_(std::make_unique<httplib::Server>()) {
    // httplib's default also sets SO_REUSEPORT, which lets a second server share a busy port.
    server_->set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
    });
    routes();
}

HttpService::~HttpService() { stop(); }

int HttpService::bind(const std::string& host, int port) {
    if (port == 0) {
        port_ = server_->bind_to_any_port(host);
        if (port_ < 0) {
            throw Error(ErrorCode::PortInUse, "cannot bind " + host);
        }
    } else {
        if (!server_->bind_to_port(host, port)) {
            throw Error(ErrorCode::PortInUse, "port " + std::to_string(port) + " is in use", {{"port", port}});
        }
        port_ = port;
    }
    if (rt_.config().public_url.empty()) {
        rt_.shares().set_base_url("http://" + host + ":" + std::to_string(port_));
    }
    return port_;
}

void HttpService::start() {
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
}

void HttpService::serve() { server_->listen_after_bind(); }

void HttpService::stop() {
    if (server_) {
        server_->stop();
    }
    if (thread_.joinable()) {
        thread_.join();
    }
}

void HttpService::routes() {
    auto& svr = *server_;

    svr.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
        const auto& token = rt_.config().api_token;
        if (token.empty() || req.path.rfind("/v1/", 0) != 0) {
            return httplib::Server::HandlerResponse::Unhandled;
        }
        if (req.get_header_value("Authorization") != "Bearer " + token) {
            res.status = 401;
            res.set_content(nlohmann::json{{"type", "urn:lsfs:error:Unauthorized"},
                                           {"title", "Unauthorized"},
                                           {"status", 401},
                                           {"detail", "missing or wrong bearer token"}}
                                .dump(),
                            "application/problem+json");
            return httplib::Server::HandlerResponse::Handled;
        }
        return httplib::Server::HandlerResponse::Unhandled;
    });

    svr.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        try {
            std::rethrow_exception(ep);
        } catch (const Error& e) {
            send_problem(res, e.code(), e.what(), e.details());
        } catch (const std::exception& e) {
            send_problem(res, ErrorCode::Io, e.what());
        }
    });

    svr.Post("/v1/prompt", [this](const httplib::Request& req, httplib::Response& res) {
        const auto body = body_of(req);
        if (!body.contains("prompt") || !body["prompt"].is_string()) {
            throw Error(ErrorCode::InvalidArgument, "prompt is required");
        }
        send_submission(res, rt_.submit_prompt(body["prompt"].get<std::string>(), filter_from(body)));
    });

    svr.Post("/v1/confirm", [this](const httplib::Request& req, httplib::Response& res) {
        const auto body = body_of(req);
        if (!body.contains("pending_id") || !body["pending_id"].is_string() || !body.contains("approve") ||
            !body["approve"].is_boolean()) {
            throw Error(ErrorCode::InvalidArgument, "pending_id (string) and approve (boolean) are required");
        }
        const auto approver = body.value("approver", std::string("console"));
        const auto t =
            rt_.confirm(body["pending_id"].get<std::string>(), body["approve"].get<bool>(), approver, filter_from(body));
        if (t.error && *t.error == ErrorCode::Rejected) {
            send(res, 200,
                 {{"status", "rejected"},
                  {"plan", t.call ? to_json(*t.call) : nlohmann::json(nullptr)},
                  {"pending_id", t.action_id}});
            return;
        }
        send_transcript(res, t);
    });

    svr.Get("/v1/pending", [this](const httplib::Request&, httplib::Response& res) {
        nlohmann::json list = nlohmann::json::array();
        for (const auto& p : rt_.gate().pending()) {
            list.push_back(to_json(p));
        }
        send(res, 200, {{"pending", list}});
    });

    svr.Get("/v1/directories", [this](const httplib::Request&, httplib::Response& res) {
        nlohmann::json list = nlohmann::json::array();
        for (const auto& d : rt_.store().directories()) {
            list.push_back({{"name", d}, {"file_count", rt_.store().list_directory(d).size()}});
        }
        send(res, 200, {{"directories", list}});
    });

    svr.Get(R"(/v1/directories/([^/]+)/files)", [this](const httplib::Request& req, httplib::Response& res) {
        const auto dir = req.matches[1].str();
        if (!rt_.store().has_directory(dir)) {
            throw Error(ErrorCode::NotFound, "no directory '" + dir + "'");
        }
        nlohmann::json list = nlohmann::json::array();
        for (const auto& m : rt_.store().list_directory(dir)) {
            list.push_back(to_json(m));
        }
        send(res, 200, {{"directory", dir}, {"files", list}});
    });

    svr.Get(R"(/v1/files/([^/]+)/([^/]+)/versions)", [this](const httplib::Request& req, httplib::Response& res) {
        const FileKey key{req.matches[1].str(), req.matches[2].str()};
        if (!rt_.store().contains(key.directory, key.name) && !rt_.recorder().has(key)) {
            throw Error(ErrorCode::NotFound, "no file '" + key.name + "' in directory '" + key.directory + "'");
        }
        nlohmann::json list = nlohmann::json::array();
        const auto chain = rt_.recorder().has(key) ? rt_.recorder().chain(key) : std::vector<Version>{};
        for (std::size_t i = 0; i < chain.size(); ++i) {
            const auto& v = chain[i];
            list.push_back({{"seq", v.seq},
                            {"k", chain.size() - i},
                            {"recorded_at", format_rfc3339(v.recorded_at)},
                            {"size_bytes", v.content.size()},
                            {"content_hash", sha256_hex(v.content)},
                            {"content", v.content}});
        }
        send(res, 200, {{"directory", key.directory}, {"name", key.name}, {"versions", list}});
    });

    svr.Get(R"(/v1/files/([^/]+)/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        const auto entry = rt_.store().get_entry(req.matches[1].str(), req.matches[2].str());
        auto j = to_json(entry.metadata);
        j["content"] = entry.content;
        send(res, 200, j);
    });

    svr.Post("/v1/rollback", [this](const httplib::Request& req, httplib::Response& res) {
        const auto body = body_of(req);
        nlohmann::json args = nlohmann::json::object();
        for (const auto* k : {"directory", "name", "by", "k", "date"}) {
            if (body.contains(k)) {
                args[k] = body[k];
            }
        }
        const auto call = rt_.parser().normalizer().build("rollback", args, "");
        send_submission(res, rt_.submit_call(call));
    });

    svr.Get("/v1/links", [this](const httplib::Request&, httplib::Response& res) {
        nlohmann::json list = nlohmann::json::array();
        for (const auto& l : rt_.shares().list()) {
            list.push_back(to_json(l));
        }
        send(res, 200, {{"links", list}});
    });

    svr.Post("/v1/links", [this](const httplib::Request& req, httplib::Response& res) {
        const auto body = body_of(req);
        nlohmann::json args = nlohmann::json::object();
        for (const auto* k : {"directory", "name", "validity"}) {
            if (body.contains(k)) {
                args[k] = body[k];
            }
        }
        const auto call = rt_.parser().normalizer().build("create_link", args, "");
        send_submission(res, rt_.submit_call(call), 201);
    });

    svr.Delete(R"(/v1/links/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        const auto call = rt_.parser().normalizer().build("revoke_link", {{"token", req.matches[1].str()}}, "");
        send_submission(res, rt_.submit_call(call));
    });

    svr.Get(R"(/share/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        const auto token = req.matches[1].str();
        const auto content = rt_.shares().fetch(token);
        res.status = 200;
        res.set_content(content, "text/plain; charset=utf-8");
    });
}

} // namespace lsfs
