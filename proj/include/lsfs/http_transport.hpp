#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace lsfs::http {

struct Response {
    int status = 0;
    std::string body;
};

/// POST a JSON body to a full URL (http or https). Throws
/// Error(ProviderUnavailable) on connection failure, Error(Timeout) on timeout.
Response post_json(const std::string& url, const std::string& body,
                   const std::map<std::string, std::string>& headers, std::int64_t timeout_ms);

} // namespace lsfs::http
