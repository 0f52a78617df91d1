#include "http_client.hpp"

#include <stdexcept>

#include <httplib.h>

#include "qaguard/errors.hpp"

namespace qaguard::detail {

SplitUrl split_url(std::string_view url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string_view::npos || scheme_end == 0) {
        throw ConfigError("endpoint '" + std::string(url) + "' has no scheme");
    }
    const auto path_start = url.find('/', scheme_end + 3);
    SplitUrl out;
    out.origin = std::string(url.substr(0, path_start));
    out.path = path_start == std::string_view::npos ? "/" : std::string(url.substr(path_start));
    if (out.origin.size() <= scheme_end + 3) {
        throw ConfigError("endpoint '" + std::string(url) + "' has no host");
    }
    return out;
}

HttpResponse post_json(std::string_view url, const std::string& body,
                       const std::vector<std::pair<std::string, std::string>>& headers,
                       std::chrono::milliseconds timeout) {
    const auto target = split_url(url);
    httplib::Client client(target.origin);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    httplib::Headers h;
    for (const auto& [name, value] : headers) h.emplace(name, value);

    auto res = client.Post(target.path, h, body, "application/json");
    if (!res) {
        throw std::runtime_error("request to " + std::string(url) +
                                 " failed: " + httplib::to_string(res.error()));
    }
    return HttpResponse{res->status, res->body};
}

}  // namespace qaguard::detail
