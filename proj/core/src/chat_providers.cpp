#include "fable/story_writer.hpp"

#include <nlohmann/json.hpp>

#include "http_json.hpp"

namespace fable {

namespace {

using nlohmann::json;

json history_to_json(const std::vector<ChatMessage>& history) {
  json messages = json::array();
  for (const auto& m : history) {
    messages.push_back({{"role", std::string(role_name(m.role))}, {"content", m.content}});
  }
  return messages;
}

}  // namespace

HttpChatProvider::HttpChatProvider(HttpChatConfig config) : config_(std::move(config)) {
  if (config_.endpoint.empty()) throw ProviderError("http chat provider needs an endpoint");
}

std::string HttpChatProvider::complete(const std::vector<ChatMessage>& history,
                                       const GenerationParams& params) {
  if (history.empty() || history.front().role != Role::System) {
    throw ProviderError("history must begin with the system message");
  }

  detail::HttpJsonRequest request;
  request.endpoint = config_.endpoint;
  request.api_key = config_.api_key;
  request.timeout = params.request_timeout;
  request.max_retries = params.max_retries;
  request.initial_backoff = config_.initial_backoff;
  request.backoff_factor = config_.backoff_factor;
  request.body = {{"model", params.model_id},
                  {"messages", history_to_json(history)},
                  {"temperature", params.temperature},
                  {"max_tokens", params.max_output_tokens}};
  if (params.seed) request.body["seed"] = *params.seed;

  const json reply = detail::post_json_with_retry(request);
  if (!reply.contains("choices") || !reply["choices"].is_array() || reply["choices"].empty()) {
    throw ProviderError("response has no choices");
  }
  const json& message = reply["choices"][0].value("message", json::object());
  if (!message.contains("content") || !message["content"].is_string()) {
    throw ProviderError("response choice has no message content");
  }
  std::string content = message["content"].get<std::string>();
  if (content.empty()) throw ProviderError("empty completion");
  return content;
}

}  // namespace fable
