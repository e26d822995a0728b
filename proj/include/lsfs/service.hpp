#pragma once

#include "lsfs/runtime.hpp"

#include <memory>
#include <string>
#include <thread>

namespace httplib {
class Server;
}

namespace lsfs {

/// HTTP status for an error code.
int http_status(ErrorCode code);
/// Problem-detail body: {type, title, status, detail, details}.
nlohmann::json problem(ErrorCode code, const std::string& detail, const nlohmann::json& details = nullptr);

/// JSON API over one runtime plus the public share endpoint.
class HttpService {
public:
    explicit HttpService(Runtime& runtime);
    ~HttpService();

    HttpService(const HttpService&) = delete;
    HttpService& operator=(const HttpService&) = delete;

    /// Port 0 picks a free port. Throws PortInUse.
    int bind(const std::string& host, int port);
    /// Serves on a background thread until stop().
    void start();
    /// Serves on the calling thread until stop().
    void serve();
    void stop();

    int port() const { return port_; }

private:
    void routes();

    Runtime& rt_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    int port_ = 0;
};

} // namespace lsfs
