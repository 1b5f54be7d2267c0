#include "fable/outline_dsl.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "fable/hashing.hpp"

namespace fable {

namespace {

struct Token {
  enum class Kind { Ident, Int, LBracket, RBracket, Comma, End };
  Kind kind = Kind::End;
  std::string text;
  int column = 0;  // 1-based
  long long value = 0;
};

bool is_ident_start(char c) { return c >= 'a' && c <= 'z'; }
bool is_ident_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
}

std::vector<Token> lex_line(const std::string& line, int line_no) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    char c = line[i];
    if (c == '#') break;  // comment to end of line
    if (c == ' ' || c == '\t' || c == '\r') {
      ++i;
      continue;
    }
    Token tok;
    tok.column = static_cast<int>(i) + 1;
    if (c == '[') {
      tok.kind = Token::Kind::LBracket;
      tok.text = "[";
      ++i;
    } else if (c == ']') {
      tok.kind = Token::Kind::RBracket;
      tok.text = "]";
      ++i;
    } else if (c == ',') {
      tok.kind = Token::Kind::Comma;
      tok.text = ",";
      ++i;
    } else if (is_ident_start(c)) {
      std::size_t j = i;
      while (j < line.size() && is_ident_char(line[j])) ++j;
      tok.kind = Token::Kind::Ident;
      tok.text = line.substr(i, j - i);
      i = j;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) ++j;
      tok.kind = Token::Kind::Int;
      tok.text = line.substr(i, j - i);
      if (tok.text.size() > 9) {
        throw ParseError(line_no, tok.column, "number out of range: '" + tok.text + "'");
      }
      tok.value = std::stoll(tok.text);
      i = j;
    } else {
      throw ParseError(line_no, tok.column,
                       std::string("unexpected character '") + c + "'");
    }
    tokens.push_back(std::move(tok));
  }
  Token end;
  end.kind = Token::Kind::End;
  end.column = static_cast<int>(line.size()) + 1;
  tokens.push_back(end);
  return tokens;
}

class LineParser {
 public:
  LineParser(std::vector<Token> tokens, int line_no)
      : tokens_(std::move(tokens)), line_(line_no) {}

  const Token& peek() const { return tokens_[pos_]; }

  Token expect(Token::Kind kind, const char* what) {
    const Token& t = tokens_[pos_];
    if (t.kind != kind) {
      throw ParseError(line_, t.column,
                       std::string("expected ") + what + ", got " + describe(t));
    }
    ++pos_;
    return t;
  }

  std::string expect_ident(const char* what) { return expect(Token::Kind::Ident, what).text; }

  int expect_int(const char* what) {
    return static_cast<int>(expect(Token::Kind::Int, what).value);
  }

  void expect_end() {
    const Token& t = tokens_[pos_];
    if (t.kind != Token::Kind::End) {
      throw ParseError(line_, t.column,
                       "expected end of line, got " + describe(t));
    }
  }

  bool accept_ident(std::string_view word) {
    const Token& t = tokens_[pos_];
    if (t.kind == Token::Kind::Ident && t.text == word) {
      ++pos_;
      return true;
    }
    return false;
  }

  int line() const { return line_; }

 private:
  static std::string describe(const Token& t) {
    if (t.kind == Token::Kind::End) return "end of line";
    return std::string("'") + t.text + "'";
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  int line_;
};

// A statement as read, before cross-references are resolved.
struct Statement {
  enum class Kind { Scenes, Function, Constraint };
  Kind kind;
  int line;
  int scenes = 0;
  FunctionDef function;
  ConstraintRule constraint;
};

Statement parse_function_stmt(LineParser& p) {
  Statement st;
  st.kind = Statement::Kind::Function;
  st.line = p.line();
  st.function.name = p.expect_ident("function name");
  if (p.accept_ident("params")) {
    p.expect(Token::Kind::LBracket, "'['");
    st.function.params.push_back(p.expect_ident("parameter name"));
    while (p.peek().kind == Token::Kind::Comma) {
      p.expect(Token::Kind::Comma, "','");
      st.function.params.push_back(p.expect_ident("parameter name"));
    }
    p.expect(Token::Kind::RBracket, "']'");
  }
  p.expect_end();
  return st;
}

Statement parse_constraint_stmt(LineParser& p) {
  Statement st;
  st.kind = Statement::Kind::Constraint;
  st.line = p.line();
  ConstraintRule& rule = st.constraint;

  const Token kind_tok = p.expect(Token::Kind::Ident, "constraint kind");
  const std::string& kind = kind_tok.text;
  if (kind == "no_adjacent_repeat") {
    rule.kind = ConstraintKind::NoAdjacentRepeat;
  } else if (kind == "require_count_before") {
    rule.kind = ConstraintKind::RequireCountBefore;
    rule.fn_a = p.expect_ident("function name");
    rule.fn_b = p.expect_ident("function name");
    rule.number = p.expect_int("minimum count");
  } else if (kind == "at_most") {
    rule.kind = ConstraintKind::AtMost;
    rule.fn_a = p.expect_ident("function name");
    rule.number = p.expect_int("occurrence bound");
  } else if (kind == "at_least") {
    rule.kind = ConstraintKind::AtLeast;
    rule.fn_a = p.expect_ident("function name");
    rule.number = p.expect_int("occurrence bound");
  } else if (kind == "forbid_at") {
    rule.kind = ConstraintKind::ForbidAtScene;
    rule.fn_a = p.expect_ident("function name");
    rule.number = p.expect_int("scene index");
  } else if (kind == "require_at") {
    rule.kind = ConstraintKind::RequireAtScene;
    rule.fn_a = p.expect_ident("function name");
    rule.number = p.expect_int("scene index");
  } else if (kind == "first_precedes") {
    rule.kind = ConstraintKind::FirstPrecedes;
    rule.fn_a = p.expect_ident("function name");
    rule.fn_b = p.expect_ident("function name");
  } else if (kind == "distinct_params") {
    rule.kind = ConstraintKind::DistinctParams;
    rule.fn_a = p.expect_ident("function name");
  } else {
    throw ParseError(
        p.line(), kind_tok.column,
        "expected one of no_adjacent_repeat, require_count_before, at_most, at_least, "
        "forbid_at, require_at, first_precedes, distinct_params; got '" +
            kind + "'");
  }
  p.expect_end();
  return st;
}

std::string constraint_subject(const ConstraintRule& r) {
  switch (r.kind) {
    case ConstraintKind::NoAdjacentRepeat: return "constraint no_adjacent_repeat";
    case ConstraintKind::RequireCountBefore:
      return "constraint require_count_before " + r.fn_a + " " + r.fn_b + " " +
             std::to_string(r.number);
    case ConstraintKind::AtMost:
      return "constraint at_most " + r.fn_a + " " + std::to_string(r.number);
    case ConstraintKind::AtLeast:
      return "constraint at_least " + r.fn_a + " " + std::to_string(r.number);
    case ConstraintKind::ForbidAtScene:
      return "constraint forbid_at " + r.fn_a + " " + std::to_string(r.number);
    case ConstraintKind::RequireAtScene:
      return "constraint require_at " + r.fn_a + " " + std::to_string(r.number);
    case ConstraintKind::FirstPrecedes:
      return "constraint first_precedes " + r.fn_a + " " + r.fn_b;
    case ConstraintKind::DistinctParams:
      return "constraint distinct_params " + r.fn_a;
  }
  return "constraint";
}

void validate_constraint(const OutlineSpec& spec, const ConstraintRule& rule,
                         std::vector<Diagnostic>& out) {
  const std::string subject = constraint_subject(rule);
  auto require_declared = [&](const std::string& name) {
    if (!name.empty() && spec.find_function(name) == nullptr) {
      out.push_back({subject, "reference to undeclared function '" + name + "'"});
      return false;
    }
    return true;
  };

  switch (rule.kind) {
    case ConstraintKind::NoAdjacentRepeat:
      break;
    case ConstraintKind::RequireCountBefore:
      require_declared(rule.fn_a);
      require_declared(rule.fn_b);
      if (rule.number < 1) {
        out.push_back({subject, "minimum count must be >= 1"});
      }
      break;
    case ConstraintKind::AtMost:
    case ConstraintKind::AtLeast:
      require_declared(rule.fn_a);
      if (rule.number < 0) {
        out.push_back({subject, "occurrence bound must be >= 0"});
      }
      break;
    case ConstraintKind::ForbidAtScene:
    case ConstraintKind::RequireAtScene:
      require_declared(rule.fn_a);
      if (rule.number < 1 || rule.number > spec.num_scenes) {
        out.push_back({subject, "scene index " + std::to_string(rule.number) +
                                    " out of range [1, " + std::to_string(spec.num_scenes) +
                                    "]"});
      }
      break;
    case ConstraintKind::FirstPrecedes:
      require_declared(rule.fn_a);
      require_declared(rule.fn_b);
      break;
    case ConstraintKind::DistinctParams: {
      if (!require_declared(rule.fn_a)) break;
      const FunctionDef* fn = spec.find_function(rule.fn_a);
      if (fn->params.empty()) {
        out.push_back({subject, "distinct_params requires a function with parameters"});
      }
      break;
    }
  }
}

}  // namespace

bool is_identifier(std::string_view text) {
  if (text.empty() || !is_ident_start(text.front())) return false;
  return std::all_of(text.begin(), text.end(), [](char c) { return is_ident_char(c); });
}

const FunctionDef* OutlineSpec::find_function(std::string_view name) const {
  for (const auto& fn : functions) {
    if (fn.name == name) return &fn;
  }
  return nullptr;
}

std::string SceneAssignment::token() const {
  return param ? function + ":" + *param : function;
}

SceneAssignment SceneAssignment::from_token(std::string_view token) {
  SceneAssignment a;
  const std::size_t colon = token.find(':');
  if (colon == std::string_view::npos) {
    a.function = std::string(token);
  } else {
    a.function = std::string(token.substr(0, colon));
    a.param = std::string(token.substr(colon + 1));
  }
  if (!is_identifier(a.function) || (a.param && !is_identifier(*a.param))) {
    throw Error("malformed outline token '" + std::string(token) + "'");
  }
  return a;
}

std::vector<std::string> Outline::tokens() const {
  std::vector<std::string> out;
  out.reserve(assignments.size());
  for (const auto& a : assignments) out.push_back(a.token());
  return out;
}

Outline Outline::from_tokens(const std::vector<std::string>& tokens) {
  Outline o;
  o.assignments.reserve(tokens.size());
  for (const auto& t : tokens) o.assignments.push_back(SceneAssignment::from_token(t));
  return o;
}

OutlineSpec parse_spec(std::string_view source) {
  std::vector<Statement> statements;
  int scenes_line = 0;

  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= source.size()) {
    const std::size_t nl = source.find('\n', pos);
    const std::string line(source.substr(pos, nl == std::string_view::npos ? std::string_view::npos
                                                                           : nl - pos));
    pos = (nl == std::string_view::npos) ? source.size() + 1 : nl + 1;
    ++line_no;

    LineParser p(lex_line(line, line_no), line_no);
    if (p.peek().kind == Token::Kind::End) continue;  // blank or comment-only

    const Token head = p.expect(Token::Kind::Ident, "'scenes', 'function', or 'constraint'");
    if (head.text == "scenes") {
      Statement st;
      st.kind = Statement::Kind::Scenes;
      st.line = line_no;
      st.scenes = p.expect_int("scene count");
      p.expect_end();
      if (scenes_line != 0) {
        throw SpecError({{"line " + std::to_string(line_no) + ": scenes",
                          "duplicate 'scenes' statement (first on line " +
                              std::to_string(scenes_line) + ")"}});
      }
      scenes_line = line_no;
      statements.push_back(st);
    } else if (head.text == "function") {
      statements.push_back(parse_function_stmt(p));
    } else if (head.text == "constraint") {
      statements.push_back(parse_constraint_stmt(p));
    } else {
      throw ParseError(line_no, head.column,
                       "expected 'scenes', 'function', or 'constraint', got '" + head.text +
                           "'");
    }
  }

  OutlineSpec spec;
  std::vector<Diagnostic> diagnostics;
  for (const auto& st : statements) {
    switch (st.kind) {
      case Statement::Kind::Scenes:
        spec.num_scenes = st.scenes;
        break;
      case Statement::Kind::Function:
        spec.functions.push_back(st.function);
        break;
      case Statement::Kind::Constraint:
        spec.constraints.push_back(st.constraint);
        break;
    }
  }

  // Resolve and validate with line positions attached.
  diagnostics = validate_spec(spec);
  if (!diagnostics.empty()) {
    // Map each diagnostic back to the statement line that produced it.
    std::unordered_map<std::string, int> subject_lines;
    for (const auto& st : statements) {
      std::string subject;
      if (st.kind == Statement::Kind::Scenes) {
        subject = "scenes";
      } else if (st.kind == Statement::Kind::Function) {
        subject = "function " + st.function.name;
      } else {
        subject = constraint_subject(st.constraint);
      }
      subject_lines.emplace(subject, st.line);
    }
    for (auto& d : diagnostics) {
      auto it = subject_lines.find(d.subject);
      if (it != subject_lines.end()) {
        d.subject = "line " + std::to_string(it->second) + ": " + d.subject;
      }
    }
    throw SpecError(std::move(diagnostics));
  }
  return spec;
}

std::vector<Diagnostic> validate_spec(const OutlineSpec& spec) {
  std::vector<Diagnostic> out;

  if (spec.num_scenes < 1) {
    out.push_back({"scenes", "scene count must be >= 1"});
  }
  if (spec.functions.empty()) {
    out.push_back({"spec", "at least one function must be declared"});
  }

  std::unordered_set<std::string> seen;
  for (const auto& fn : spec.functions) {
    const std::string subject = "function " + fn.name;
    if (!is_identifier(fn.name)) {
      out.push_back({subject, "function name must match [a-z][a-z0-9_]*"});
    }
    if (!seen.insert(fn.name).second) {
      out.push_back({subject, "duplicate function name '" + fn.name + "'"});
    }
    std::unordered_set<std::string> param_seen;
    for (const auto& p : fn.params) {
      if (!is_identifier(p)) {
        out.push_back({subject, "parameter name '" + p + "' must match [a-z][a-z0-9_]*"});
      }
      if (!param_seen.insert(p).second) {
        out.push_back({subject, "duplicate parameter '" + p + "'"});
      }
    }
  }

  for (const auto& rule : spec.constraints) {
    validate_constraint(spec, rule, out);
  }
  return out;
}

std::string pretty_print(const OutlineSpec& spec) {
  std::ostringstream out;
  out << "scenes " << spec.num_scenes << "\n";
  for (const auto& fn : spec.functions) {
    out << "function " << fn.name;
    if (!fn.params.empty()) {
      out << " params [";
      for (std::size_t i = 0; i < fn.params.size(); ++i) {
        if (i > 0) out << ", ";
        out << fn.params[i];
      }
      out << "]";
    }
    out << "\n";
  }
  for (const auto& rule : spec.constraints) {
    // constraint_subject renders exactly the DSL statement text
    out << constraint_subject(rule) << "\n";
  }
  return out.str();
}

std::string spec_fingerprint(const OutlineSpec& spec) {
  return to_hex(fnv1a64(pretty_print(spec)));
}

}  // namespace fable
