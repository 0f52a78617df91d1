#pragma once

#include <chrono>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qaguard::detail {

struct HttpResponse {
    int status = 0;
    std::string body;
};

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;    // starts with '/'
};

/// Throws ConfigError for URLs without a scheme or host.
SplitUrl split_url(std::string_view url);

/// POSTs a JSON body. Transport failures throw std::runtime_error with the
/// library's error name; HTTP error statuses are returned, not thrown.
HttpResponse post_json(std::string_view url, const std::string& body,
                       const std::vector<std::pair<std::string, std::string>>& headers,
                       std::chrono::milliseconds timeout);

}  // namespace qaguard::detail
