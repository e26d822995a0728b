#include "lsfs/http_transport.hpp"

#include "lsfs/error.hpp"

#include <httplib.h>

namespace lsfs::http {

Response post_json(const std::string& url, const std::string& body,
                   const std::map<std::string, std::string>& headers, std::int64_t timeout_ms) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw Error(ErrorCode::InvalidArgument, "endpoint is not an absolute URL: " + url);
    }
    const auto path_start = url.find('/', scheme_end + 3);
    const std::string base = path_start == std::string::npos ? url : url.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

    httplib::Client client(base);
    const auto sec = static_cast<time_t>(timeout_ms / 1000);
    const auto usec = static_cast<time_t>((timeout_ms % 1000) * 1000);
    client.set_connection_timeout(sec, usec);
    client.set_read_timeout(sec, usec);
    client.set_write_timeout(sec, usec);

    httplib::Headers hdrs;
    for (const auto& [k, v] : headers) {
        hdrs.emplace(k, v);
    }
    auto res = client.Post(path, hdrs, body, "application/json");
    if (!res) {
        const auto err = res.error();
        if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read) {
            throw Error(ErrorCode::Timeout, "request to " + url + " timed out: " + httplib::to_string(err));
        }
        throw Error(ErrorCode::ProviderUnavailable, "request to " + url + " failed: " + httplib::to_string(err));
    }
    return {res->status, res->body};
}

} // namespace lsfs::http
