#pragma once

// Internal: shared POST-with-retry used by the chat and embedding clients.
// Not installed.

#include <chrono>
#include <string>

#include <nlohmann/json.hpp>

namespace fable::detail {

struct HttpJsonRequest {
  std::string endpoint;  // full URL, e.g. "http://host:8080/v1/chat/completions"
  std::string api_key;   // empty = no Authorization header
  nlohmann::json body;
  std::chrono::milliseconds timeout{30'000};
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  double backoff_factor = 2.0;
};

/// POSTs the body as application/json and parses the reply. Retries
/// transport failures and HTTP 408/409/429/5xx with exponential backoff;
/// other non-2xx statuses fail immediately. Throws ProviderError.
nlohmann::json post_json_with_retry(const HttpJsonRequest& request);

}  // namespace fable::detail
