#pragma once

#include <chrono>
#include <span>
#include <string>
#include <vector>

#include "fable/errors.hpp"
#include "fable/story_writer.hpp"

namespace fable {

inline constexpr double kNormEpsilon = 1e-12;

struct EmbeddingVector {
  std::vector<double> components;

  std::size_t dim() const { return components.size(); }
  double norm() const;

  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;
};

/// Text embedding provider interface.
class Embedder {
 public:
  virtual ~Embedder() = default;

  /// Throws MetricError on empty text, ProviderError on transport failure.
  virtual EmbeddingVector embed(const std::string& text) = 0;

  virtual std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts);

  virtual std::string name() const = 0;
};

/// Deterministic test embedder: lowercase word tokens hashed into a 256-dim
/// count vector, then L2-normalized. Bag-of-words, so word order is
/// irrelevant.
class HashEmbedder final : public Embedder {
 public:
  static constexpr std::size_t kDim = 256;

  EmbeddingVector embed(const std::string& text) override;
  std::string name() const override { return "hash"; }
};

struct HttpEmbedderConfig {
  std::string endpoint;  // full URL of the embeddings resource
  std::string api_key;
  std::string model_id;
  std::chrono::milliseconds request_timeout{30'000};
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  double backoff_factor = 2.0;
};

/// Client for endpoints speaking the embeddings JSON format: request
/// {input: [texts], model}, reply {data: [{embedding: [floats]}]}.
class HttpEmbedder final : public Embedder {
 public:
  explicit HttpEmbedder(HttpEmbedderConfig config);

  EmbeddingVector embed(const std::string& text) override;
  std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) override;
  std::string name() const override { return "http"; }

 private:
  HttpEmbedderConfig config_;
};

/// Componentwise arithmetic mean. Throws MetricError on empty input or
/// mismatched dims.
EmbeddingVector centroid(std::span<const EmbeddingVector> vectors);

/// dot(a,b) / (|a||b|). Both norms must exceed kNormEpsilon.
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

/// Mean cosine similarity between the set's centroid and each member.
/// 1.0 means identical texts. Requires n >= 2; a centroid with norm below
/// kNormEpsilon raises DegenerateSetError (antipodal cancellation carries no
/// signal, unlike genuine near-orthogonality).
double homogeneity_score(std::span<const EmbeddingVector> vectors);

/// Stories grouped for evaluation: same premise, same condition, same
/// paragraph count, at least two of them.
struct StorySet {
  std::string premise;
  StoryCondition condition = StoryCondition::Unguided;
  std::vector<Story> stories;

  static StorySet from_stories(std::vector<Story> stories);

  std::size_t paragraph_count() const;
};

/// Homogeneity per paragraph index: element i scores the i-th paragraphs of
/// all stories in the set. Errors are annotated with the paragraph index.
std::vector<double> paragraph_homogeneity(const StorySet& set, Embedder& embedder);

struct HomogeneityRow {
  std::string premise;
  std::string condition;
  int paragraph_index = 0;  // 1-based
  double score = 0.0;
  int set_size = 0;

  friend bool operator==(const HomogeneityRow&, const HomogeneityRow&) = default;
};

struct HomogeneityReport {
  std::vector<HomogeneityRow> rows;
};

}  // namespace fable
