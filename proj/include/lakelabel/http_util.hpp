#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace lakelabel {

// POSTs `body` as application/json and returns the parsed JSON response.
// Plain http:// endpoints only. Throws Error on transport or non-2xx.
nlohmann::json http_post_json(const std::string& endpoint_url, const nlohmann::json& body,
                              const std::vector<std::pair<std::string, std::string>>& headers = {},
                              int timeout_sec = 30);

} // namespace lakelabel
