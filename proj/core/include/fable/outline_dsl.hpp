#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fable/errors.hpp"

namespace fable {

/// A narrative function a scene can perform, optionally refined by a
/// parameter drawn from a fixed set (e.g. a personality for an introduced
/// character).
struct FunctionDef {
  std::string name;
  std::vector<std::string> params;  // declaration order preserved; may be empty

  friend bool operator==(const FunctionDef&, const FunctionDef&) = default;
};

enum class ConstraintKind {
  NoAdjacentRepeat,    // no two adjacent scenes perform the same function
  RequireCountBefore,  // every fn_a scene needs >= number fn_b scenes before it
  AtMost,              // fn_a occurs at most `number` times
  AtLeast,             // fn_a occurs at least `number` times
  ForbidAtScene,       // scene `number` must not perform fn_a
  RequireAtScene,      // scene `number` must perform fn_a
  FirstPrecedes,       // first fn_a occurrence precedes first fn_b occurrence
  DistinctParams,      // all fn_a occurrences use pairwise distinct params
};

/// One sequencing restriction. Field use depends on `kind`:
///   NoAdjacentRepeat                    — no fields
///   RequireCountBefore(fn_a, fn_b, n)   — number = min count, >= 1
///   AtMost/AtLeast(fn_a, n)             — number = occurrence bound, >= 0
///   ForbidAtScene/RequireAtScene(fn_a)  — number = 1-based scene index
///   FirstPrecedes(fn_a, fn_b)           — no number
///   DistinctParams(fn_a)                — fn_a must declare params
struct ConstraintRule {
  ConstraintKind kind = ConstraintKind::NoAdjacentRepeat;
  std::string fn_a;
  std::string fn_b;
  int number = 0;

  friend bool operator==(const ConstraintRule&, const ConstraintRule&) = default;
};

/// The declarative design space of outlines: a scene timeline, the functions
/// scenes may perform, and the rules restricting their arrangement.
struct OutlineSpec {
  int num_scenes = 7;
  std::vector<FunctionDef> functions;
  std::vector<ConstraintRule> constraints;

  const FunctionDef* find_function(std::string_view name) const;

  friend bool operator==(const OutlineSpec&, const OutlineSpec&) = default;
};

/// One scene's assignment. `param` is present iff the named function declares
/// parameters. Token syntax: "function" or "function:param".
struct SceneAssignment {
  std::string function;
  std::optional<std::string> param;

  std::string token() const;
  static SceneAssignment from_token(std::string_view token);

  friend bool operator==(const SceneAssignment&, const SceneAssignment&) = default;
};

/// A complete outline: exactly one assignment per scene.
struct Outline {
  std::vector<SceneAssignment> assignments;

  std::vector<std::string> tokens() const;
  static Outline from_tokens(const std::vector<std::string>& tokens);

  friend bool operator==(const Outline&, const Outline&) = default;
};

/// Parse DSL text into a validated spec.
///
/// Grammar (one statement per line, `#` starts a comment):
///   scenes INT
///   function IDENT [params [IDENT {, IDENT}]]
///   constraint no_adjacent_repeat
///   constraint require_count_before IDENT IDENT INT
///   constraint at_most IDENT INT
///   constraint at_least IDENT INT
///   constraint forbid_at IDENT INT
///   constraint require_at IDENT INT
///   constraint first_precedes IDENT IDENT
///   constraint distinct_params IDENT
///
/// `scenes` defaults to 7 when absent. Identifiers match [a-z][a-z0-9_]*.
/// Throws ParseError on syntax errors (with line/column and the expected
/// tokens) and SpecError when the parsed spec violates an invariant
/// (undeclared function, duplicate name, scene index out of range, ...).
OutlineSpec parse_spec(std::string_view source);

/// Structural invariant check. Empty result means the spec is valid; each
/// diagnostic names the offending statement and the reason. Never throws,
/// never mutates.
std::vector<Diagnostic> validate_spec(const OutlineSpec& spec);

/// Canonical DSL rendering; parse_spec(pretty_print(s)) == s for valid s.
std::string pretty_print(const OutlineSpec& spec);

/// Content fingerprint of the canonical rendering (hex, 16 chars).
std::string spec_fingerprint(const OutlineSpec& spec);

bool is_identifier(std::string_view text);

}  // namespace fable
