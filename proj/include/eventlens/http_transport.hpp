#pragma once

// cpp-httplib backed Transport. Kept out of the other headers so only the
// CLI binary pays for httplib and OpenSSL.

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <string>

#include "eventlens/error.hpp"
#include "eventlens/ingest.hpp"

namespace eventlens {

class HttpTransport final : public Transport {
 public:
  std::string get(const std::string& base_url, const QueryParams& query) override {
    // base_url = scheme://host[:port]/path
    auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos) {
      fail(ErrorCode::config, "base_url '" + base_url + "' lacks a scheme");
    }
    auto path_start = base_url.find('/', scheme_end + 3);
    const auto origin = base_url.substr(0, path_start);
    const auto path = path_start == std::string::npos ? std::string("/") : base_url.substr(path_start);

    httplib::Client client(origin);
    client.set_connection_timeout(10);
    client.set_read_timeout(60);
    client.set_follow_location(true);
    httplib::Params params;
    for (const auto& [k, v] : query) params.emplace(k, v);
    auto res = client.Get(path, params, httplib::Headers{});
    if (!res) {
      fail(ErrorCode::provider_unreachable,
           "GET " + origin + path + " failed: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
      fail(ErrorCode::provider_error,
           "GET " + origin + path + " returned HTTP " + std::to_string(res->status));
    }
    return res->body;
  }
};

}  // namespace eventlens
