#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fable/outline_dsl.hpp"

namespace fable {

/// One violated rule, with the 1-based scenes at fault (empty for absence
/// violations such as an unmet at_least).
struct Violation {
  std::string rule;
  std::vector<int> scenes;
  std::string message;
};

struct EnumerationOptions {
  /// Hard cap on emitted models; exceeding it raises ModelCapError.
  std::uint64_t model_cap = 5'000'000;
  /// Partition the search by first-scene assignment across threads.
  /// Subtree results are combined in declaration order, so output and
  /// counts are identical to the sequential mode.
  bool parallel = false;
};

using OutlineSink = std::function<void(const Outline&)>;

/// Emit every outline satisfying the spec, each exactly once, in
/// lexicographic order: scene-major, and within a scene by function
/// declaration order then parameter declaration order. Depth-first
/// backtracking with incremental constraint state; infeasible specs emit
/// nothing. Requires validate_spec(spec) to be clean.
void enumerate_all(const OutlineSpec& spec, const OutlineSink& sink,
                   const EnumerationOptions& options = {});

std::vector<Outline> enumerate_to_vector(const OutlineSpec& spec,
                                         const EnumerationOptions& options = {});

/// Number of satisfying outlines, computed by the same search without
/// materializing them.
std::uint64_t count_models(const OutlineSpec& spec, const EnumerationOptions& options = {});

/// Evaluate every constraint and per-scene assignment invariant against a
/// complete outline. Empty result means valid. Throws on a length mismatch
/// or an unknown function/param token; rule violations are returned, not
/// thrown.
std::vector<Violation> check_outline(const OutlineSpec& spec, const Outline& outline);

/// An enumerated pool held in memory, tied to its generating spec by
/// fingerprint.
struct OutlinePool {
  std::string spec_fingerprint;
  std::vector<Outline> outlines;

  std::uint64_t count() const { return outlines.size(); }
};

OutlinePool build_pool(const OutlineSpec& spec, const EnumerationOptions& options = {});

/// Deterministic uniform draw: same (pool, seed) always yields the same
/// outline. Throws PoolError on an empty pool.
const Outline& sample_uniform(const OutlinePool& pool, std::uint64_t seed);

}  // namespace fable
