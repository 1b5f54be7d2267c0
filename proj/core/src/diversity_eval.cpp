#include "fable/diversity_eval.hpp"

#include <cmath>

namespace fable {

double EmbeddingVector::norm() const {
  double sum = 0.0;
  for (double c : components) sum += c * c;
  return std::sqrt(sum);
}

EmbeddingVector centroid(std::span<const EmbeddingVector> vectors) {
  if (vectors.empty()) throw MetricError("centroid of empty set");
  const std::size_t dim = vectors.front().dim();
  EmbeddingVector mean;
  mean.components.assign(dim, 0.0);
  for (const auto& v : vectors) {
    if (v.dim() != dim) {
      throw MetricError("dim mismatch: " + std::to_string(v.dim()) + " vs " +
                        std::to_string(dim));
    }
    for (std::size_t i = 0; i < dim; ++i) mean.components[i] += v.components[i];
  }
  const double n = static_cast<double>(vectors.size());
  for (double& c : mean.components) c /= n;
  return mean;
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) {
    throw MetricError("dim mismatch: " + std::to_string(a.dim()) + " vs " +
                      std::to_string(b.dim()));
  }
  const double na = a.norm();
  const double nb = b.norm();
  if (na <= kNormEpsilon || nb <= kNormEpsilon) {
    throw MetricError("cosine similarity of a zero-norm vector");
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) dot += a.components[i] * b.components[i];
  return dot / (na * nb);
}

double homogeneity_score(std::span<const EmbeddingVector> vectors) {
  if (vectors.size() < 2) throw MetricError("homogeneity needs at least 2 vectors");
  for (const auto& v : vectors) {
    if (v.norm() <= kNormEpsilon) throw MetricError("homogeneity input has a zero-norm vector");
  }
  const EmbeddingVector center = centroid(vectors);
  if (center.norm() <= kNormEpsilon) {
    throw DegenerateSetError("set centroid is (near) zero; homogeneity undefined");
  }
  double sum = 0.0;
  for (const auto& v : vectors) sum += cosine_similarity(center, v);
  return sum / static_cast<double>(vectors.size());
}

StorySet StorySet::from_stories(std::vector<Story> stories) {
  if (stories.size() < 2) throw MetricError("a story set needs at least 2 stories");
  const std::string& premise = stories.front().premise.text;
  const StoryCondition condition = stories.front().condition;
  const std::size_t paragraphs = stories.front().paragraphs.size();
  for (const auto& s : stories) {
    if (s.premise.text != premise) throw MetricError("story set mixes premises");
    if (s.condition != condition) throw MetricError("story set mixes conditions");
    if (s.paragraphs.size() != paragraphs) {
      throw MetricError("story set mixes paragraph counts: " +
                        std::to_string(s.paragraphs.size()) + " vs " +
                        std::to_string(paragraphs));
    }
  }
  StorySet set;
  set.premise = premise;
  set.condition = condition;
  set.stories = std::move(stories);
  return set;
}

std::size_t StorySet::paragraph_count() const {
  return stories.empty() ? 0 : stories.front().paragraphs.size();
}

std::vector<double> paragraph_homogeneity(const StorySet& set, Embedder& embedder) {
  const std::size_t paragraphs = set.paragraph_count();
  std::vector<double> scores;
  scores.reserve(paragraphs);
  for (std::size_t i = 0; i < paragraphs; ++i) {
    std::vector<std::string> texts;
    texts.reserve(set.stories.size());
    for (const auto& s : set.stories) texts.push_back(s.paragraphs[i]);
    try {
      const std::vector<EmbeddingVector> vectors = embedder.embed_batch(texts);
      scores.push_back(homogeneity_score(vectors));
    } catch (const Error& e) {
      throw MetricError("paragraph index " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return scores;
}

}  // namespace fable
