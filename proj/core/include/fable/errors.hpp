#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace fable {

/// Base class for all errors raised by the fable library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& message) : std::runtime_error(message) {}
};

/// Lexical or syntactic failure while reading DSL text. Positions are 1-based.
class ParseError : public Error {
 public:
  ParseError(int line, int column, const std::string& message)
      : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " +
              message),
        line_(line),
        column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

/// One structural problem found in a spec. `subject` names the offending
/// statement or rule, `reason` says what is wrong with it.
struct Diagnostic {
  std::string subject;
  std::string reason;

  std::string to_string() const { return subject + ": " + reason; }

  friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

/// Semantic failure: the text parsed but the resulting spec is invalid.
class SpecError : public Error {
 public:
  explicit SpecError(std::vector<Diagnostic> diagnostics)
      : Error(join(diagnostics)), diagnostics_(std::move(diagnostics)) {}

  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

 private:
  static std::string join(const std::vector<Diagnostic>& ds) {
    std::string out;
    for (const auto& d : ds) {
      if (!out.empty()) out += "; ";
      out += d.to_string();
    }
    return out.empty() ? std::string("invalid spec") : out;
  }

  std::vector<Diagnostic> diagnostics_;
};

/// Enumeration hit the configured model cap before finishing.
class ModelCapError : public Error {
 public:
  explicit ModelCapError(std::uint64_t cap)
      : Error("model cap of " + std::to_string(cap) + " exceeded"), cap_(cap) {}

  std::uint64_t cap() const { return cap_; }

 private:
  std::uint64_t cap_;
};

/// Pool file is missing, malformed, or inconsistent with its header.
class PoolError : public Error {
 public:
  using Error::Error;
};

/// A chat or embedding provider failed (transport, HTTP status, bad body).
class ProviderError : public Error {
 public:
  using Error::Error;
};

/// Story generation aborted mid-run; paragraphs completed so far are kept.
class StoryGenerationError : public Error {
 public:
  StoryGenerationError(const std::string& message, int failed_scene,
                       std::vector<std::string> partial_paragraphs)
      : Error(message),
        failed_scene_(failed_scene),
        partial_paragraphs_(std::move(partial_paragraphs)) {}

  /// 1-based scene whose generation failed.
  int failed_scene() const { return failed_scene_; }
  const std::vector<std::string>& partial_paragraphs() const { return partial_paragraphs_; }

 private:
  int failed_scene_;
  std::vector<std::string> partial_paragraphs_;
};

/// Invalid input to a diversity metric (dim mismatch, zero norm, set too small).
class MetricError : public Error {
 public:
  using Error::Error;
};

/// Centroid of the set collapsed to (near) zero; no score is defined.
class DegenerateSetError : public MetricError {
 public:
  using MetricError::MetricError;
};

/// Filesystem-level failure (unreadable input, unwritable output path).
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace fable
