#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>

#include "fable/outline_engine.hpp"

namespace fable {

inline constexpr const char* kGeneratorVersion = "0.1.0";

/// First line of a pool file: {"count": N, "generator_version": "...",
/// "spec_fingerprint": "..."}; every following line is a JSON array of
/// outline tokens ("function" or "function:param").
struct PoolHeader {
  std::string spec_fingerprint;
  std::uint64_t count = 0;
  std::string generator_version;
};

struct PoolWriteResult {
  std::string spec_fingerprint;
  std::uint64_t count = 0;
};

/// Enumerate the spec straight into a pool file. Outlines stream to a
/// temporary body file while the search runs (memory stays at search depth),
/// then header and body are assembled and atomically renamed into place.
/// Output is byte-identical across runs of the same spec.
PoolWriteResult write_pool_file(const OutlineSpec& spec, const std::filesystem::path& path,
                                const EnumerationOptions& options = {});

PoolHeader read_pool_header(const std::filesystem::path& path);

/// Load a whole pool into memory. Validates the header line count.
OutlinePool load_pool(const std::filesystem::path& path);

/// Stream outlines from a pool file without materializing the pool.
void for_each_pool_outline(const std::filesystem::path& path,
                           const std::function<void(const Outline&)>& fn);

}  // namespace fable
