#include "lakelabel/http_util.hpp"

#include "lakelabel/common.hpp"

#include <httplib.h>

namespace lakelabel {

namespace {

struct SplitUrl {
    std::string host_port;
    std::string path;
};

SplitUrl split_url(const std::string& url) {
    const std::string prefix = "http://";
    if (url.rfind("https://", 0) == 0)
        throw Error("https endpoints are not supported by this build; use http://");
    if (url.rfind(prefix, 0) != 0) throw Error("endpoint must start with http://: " + url);
    std::string rest = url.substr(prefix.size());
    auto slash = rest.find('/');
    SplitUrl out;
    out.host_port = prefix + rest.substr(0, slash);
    out.path = slash == std::string::npos ? "/" : rest.substr(slash);
    return out;
}

} // namespace

nlohmann::json http_post_json(const std::string& endpoint_url, const nlohmann::json& body,
                              const std::vector<std::pair<std::string, std::string>>& headers,
                              int timeout_sec) {
    SplitUrl url = split_url(endpoint_url);
    httplib::Client client(url.host_port);
    client.set_connection_timeout(timeout_sec, 0);
    client.set_read_timeout(timeout_sec, 0);
    httplib::Headers hdrs;
    for (const auto& [k, v] : headers) hdrs.emplace(k, v);

    auto res = client.Post(url.path, hdrs, body.dump(), "application/json");
    if (!res) throw Error("transport failure calling " + endpoint_url + ": " +
                          httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300)
        throw Error("endpoint " + endpoint_url + " returned status " + std::to_string(res->status) +
                    ": " + res->body.substr(0, 200));
    try {
        return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("endpoint returned malformed JSON: ") + e.what());
    }
}

} // namespace lakelabel
