#include "fable/diversity_eval.hpp"

#include <cctype>

#include <nlohmann/json.hpp>

#include "fable/hashing.hpp"
#include "http_json.hpp"

namespace fable {

std::vector<EmbeddingVector> Embedder::embed_batch(const std::vector<std::string>& texts) {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed(t));
  return out;
}

EmbeddingVector HashEmbedder::embed(const std::string& text) {
  if (text.empty()) throw MetricError("cannot embed empty text");

  EmbeddingVector v;
  v.components.assign(kDim, 0.0);
  std::string word;
  auto flush = [&] {
    if (!word.empty()) {
      v.components[fnv1a64(word) % kDim] += 1.0;
      word.clear();
    }
  };
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      word += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else {
      flush();
    }
  }
  flush();

  const double n = v.norm();
  if (n <= kNormEpsilon) throw MetricError("text has no word tokens: '" + text + "'");
  for (double& c : v.components) c /= n;
  return v;
}

HttpEmbedder::HttpEmbedder(HttpEmbedderConfig config) : config_(std::move(config)) {
  if (config_.endpoint.empty()) throw ProviderError("http embedder needs an endpoint");
}

EmbeddingVector HttpEmbedder::embed(const std::string& text) {
  return embed_batch({text}).front();
}

std::vector<EmbeddingVector> HttpEmbedder::embed_batch(const std::vector<std::string>& texts) {
  using nlohmann::json;
  for (const auto& t : texts) {
    if (t.empty()) throw MetricError("cannot embed empty text");
  }

  detail::HttpJsonRequest request;
  request.endpoint = config_.endpoint;
  request.api_key = config_.api_key;
  request.timeout = config_.request_timeout;
  request.max_retries = config_.max_retries;
  request.initial_backoff = config_.initial_backoff;
  request.backoff_factor = config_.backoff_factor;
  request.body = {{"input", texts}, {"model", config_.model_id}};

  const json reply = detail::post_json_with_retry(request);
  if (!reply.contains("data") || !reply["data"].is_array() || reply["data"].size() != texts.size()) {
    throw ProviderError("embedding response data does not match request size");
  }
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& item : reply["data"]) {
    if (!item.contains("embedding") || !item["embedding"].is_array()) {
      throw ProviderError("embedding response item has no embedding array");
    }
    EmbeddingVector v;
    v.components = item["embedding"].get<std::vector<double>>();
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace fable
