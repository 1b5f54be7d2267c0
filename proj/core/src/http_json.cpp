#include "http_json.hpp"

#include <thread>

#include <httplib.h>

#include "fable/errors.hpp"

namespace fable::detail {

namespace {

struct SplitUrl {
  std::string base;  // scheme://host[:port]
  std::string path;  // starts with '/'
};

SplitUrl split_url(const std::string& url) {
  const std::size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ProviderError("endpoint URL must include a scheme: " + url);
  }
  const std::size_t path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    return {url, "/"};
  }
  return {url.substr(0, path_start), url.substr(path_start)};
}

bool retryable_status(int status) {
  return status == 408 || status == 409 || status == 429 || status >= 500;
}

}  // namespace

nlohmann::json post_json_with_retry(const HttpJsonRequest& request) {
  const SplitUrl url = split_url(request.endpoint);

  httplib::Client client(url.base);
  const auto timeout_s = std::chrono::duration_cast<std::chrono::seconds>(request.timeout);
  client.set_connection_timeout(std::max<long>(1, timeout_s.count()), 0);
  client.set_read_timeout(std::max<long>(1, timeout_s.count()), 0);

  httplib::Headers headers;
  if (!request.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + request.api_key);
  }
  const std::string payload = request.body.dump();

  std::string last_failure;
  auto backoff = request.initial_backoff;
  const int attempts = request.max_retries + 1;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff = std::chrono::milliseconds(
          static_cast<long long>(static_cast<double>(backoff.count()) * request.backoff_factor));
    }

    httplib::Result res = client.Post(url.path, headers, payload, "application/json");
    if (!res) {
      last_failure = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      const std::string detail = "HTTP " + std::to_string(res->status) + " from " +
                                 request.endpoint +
                                 (res->body.empty() ? "" : ": " + res->body.substr(0, 200));
      if (retryable_status(res->status)) {
        last_failure = detail;
        continue;
      }
      throw ProviderError(detail);
    }
    try {
      return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
      throw ProviderError("malformed response body from " + request.endpoint + ": " + e.what());
    }
  }
  throw ProviderError("request to " + request.endpoint + " failed after " +
                      std::to_string(attempts) + " attempts; last failure: " + last_failure);
}

}  // namespace fable::detail
