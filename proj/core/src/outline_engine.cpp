#include "fable/outline_engine.hpp"

#include <algorithm>
#include <atomic>
#include <future>
#include <limits>
#include <unordered_map>

#include "fable/hashing.hpp"

namespace fable {

namespace {

constexpr int kNoParam = -1;

// Spec lowered to index form for the search loop.
struct CompiledSpec {
  int num_scenes = 0;
  int num_functions = 0;

  struct Choice {
    int fn;
    int param;  // kNoParam when the function is parameterless
  };
  std::vector<Choice> choices;  // lexicographic: declaration order, then param order

  bool no_adjacent_repeat = false;
  std::vector<int> max_count;                               // per function
  std::vector<int> min_count;                               // per function
  std::vector<std::vector<std::pair<int, int>>> count_before;  // per fn: (counted fn, min)
  std::vector<std::vector<int>> first_prereqs;              // per fn: fns that must occur first
  std::vector<char> distinct_params;                        // per fn
  std::vector<int> required_fn;   // per scene: fn index, -1 none, -2 conflicting requirements
  std::vector<std::vector<char>> forbidden;  // [scene][fn]

  int initial_deficit = 0;  // sum of unmet at_least minima at the root
};

CompiledSpec compile(const OutlineSpec& spec) {
  CompiledSpec c;
  c.num_scenes = spec.num_scenes;
  c.num_functions = static_cast<int>(spec.functions.size());

  std::unordered_map<std::string, int> fn_index;
  for (int i = 0; i < c.num_functions; ++i) {
    fn_index.emplace(spec.functions[i].name, i);
    const auto& params = spec.functions[i].params;
    if (params.empty()) {
      c.choices.push_back({i, kNoParam});
    } else {
      for (int p = 0; p < static_cast<int>(params.size()); ++p) {
        c.choices.push_back({i, p});
      }
    }
  }

  c.max_count.assign(c.num_functions, std::numeric_limits<int>::max());
  c.min_count.assign(c.num_functions, 0);
  c.count_before.resize(c.num_functions);
  c.first_prereqs.resize(c.num_functions);
  c.distinct_params.assign(c.num_functions, 0);
  c.required_fn.assign(c.num_scenes, -1);
  c.forbidden.assign(c.num_scenes, std::vector<char>(c.num_functions, 0));

  auto idx = [&](const std::string& name) { return fn_index.at(name); };

  for (const auto& rule : spec.constraints) {
    switch (rule.kind) {
      case ConstraintKind::NoAdjacentRepeat:
        c.no_adjacent_repeat = true;
        break;
      case ConstraintKind::RequireCountBefore:
        c.count_before[idx(rule.fn_a)].push_back({idx(rule.fn_b), rule.number});
        break;
      case ConstraintKind::AtMost:
        c.max_count[idx(rule.fn_a)] = std::min(c.max_count[idx(rule.fn_a)], rule.number);
        break;
      case ConstraintKind::AtLeast:
        c.min_count[idx(rule.fn_a)] = std::max(c.min_count[idx(rule.fn_a)], rule.number);
        break;
      case ConstraintKind::ForbidAtScene:
        c.forbidden[rule.number - 1][idx(rule.fn_a)] = 1;
        break;
      case ConstraintKind::RequireAtScene: {
        int& slot = c.required_fn[rule.number - 1];
        const int fn = idx(rule.fn_a);
        if (slot == -1 || slot == fn) {
          slot = fn;
        } else {
          slot = -2;  // two different functions required at one scene
        }
        break;
      }
      case ConstraintKind::FirstPrecedes:
        c.first_prereqs[idx(rule.fn_b)].push_back(idx(rule.fn_a));
        break;
      case ConstraintKind::DistinctParams:
        c.distinct_params[idx(rule.fn_a)] = 1;
        break;
    }
  }

  for (int f = 0; f < c.num_functions; ++f) {
    c.initial_deficit += c.min_count[f];
  }
  return c;
}

// Raw sink over index choices; avoids rebuilding Outline strings while
// counting.
using ChoiceSink = std::function<void(const std::vector<CompiledSpec::Choice>&)>;

class Search {
 public:
  Search(const CompiledSpec& c, const ChoiceSink& sink) : c_(c), sink_(sink) {
    counts_.assign(c_.num_functions, 0);
    used_params_.assign(c_.num_functions, 0);
    stack_.reserve(c_.num_scenes);
  }

  // Runs the full search, or a single first-scene subtree when `only_first`
  // is a valid choice index.
  void run(int only_first = -1) {
    deficit_ = c_.initial_deficit;
    for (int s = 0; s < c_.num_scenes; ++s) {
      if (c_.required_fn[s] == -2) return;  // unsatisfiable scene
    }
    descend(0, only_first);
  }

 private:
  void descend(int scene, int only_choice) {
    if (scene == c_.num_scenes) {
      sink_(stack_);
      return;
    }
    const int remaining_after = c_.num_scenes - scene - 1;
    const int required = c_.required_fn[scene];
    const int n_choices = static_cast<int>(c_.choices.size());
    for (int ci = 0; ci < n_choices; ++ci) {
      if (scene == 0 && only_choice >= 0 && ci != only_choice) continue;
      const auto [fn, param] = c_.choices[ci];

      if (required >= 0 && fn != required) continue;
      if (c_.forbidden[scene][fn]) continue;
      if (c_.no_adjacent_repeat && scene > 0 && fn == stack_.back().fn) continue;
      if (counts_[fn] + 1 > c_.max_count[fn]) continue;

      bool ok = true;
      for (const auto& [g, min] : c_.count_before[fn]) {
        if (counts_[g] < min) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      for (int prereq : c_.first_prereqs[fn]) {
        if (counts_[prereq] == 0) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;

      if (c_.distinct_params[fn] && param != kNoParam &&
          ((used_params_[fn] >> param) & 1ULL)) {
        continue;
      }

      // at_least feasibility: each remaining scene can close at most one
      // unit of deficit.
      const int new_deficit = deficit_ - (counts_[fn] < c_.min_count[fn] ? 1 : 0);
      if (new_deficit > remaining_after) continue;

      stack_.push_back(c_.choices[ci]);
      ++counts_[fn];
      const int saved_deficit = deficit_;
      deficit_ = new_deficit;
      const std::uint64_t saved_params = used_params_[fn];
      if (param != kNoParam) used_params_[fn] |= 1ULL << param;

      descend(scene + 1, only_choice);

      used_params_[fn] = saved_params;
      deficit_ = saved_deficit;
      --counts_[fn];
      stack_.pop_back();
    }
  }

  const CompiledSpec& c_;
  const ChoiceSink& sink_;
  std::vector<CompiledSpec::Choice> stack_;
  std::vector<int> counts_;
  std::vector<std::uint64_t> used_params_;  // bitmask per function
  int deficit_ = 0;
};

Outline to_outline(const OutlineSpec& spec, const std::vector<CompiledSpec::Choice>& stack) {
  Outline o;
  o.assignments.reserve(stack.size());
  for (const auto& [fn, param] : stack) {
    SceneAssignment a;
    a.function = spec.functions[static_cast<std::size_t>(fn)].name;
    if (param != kNoParam) {
      a.param = spec.functions[static_cast<std::size_t>(fn)].params[static_cast<std::size_t>(param)];
    }
    o.assignments.push_back(std::move(a));
  }
  return o;
}

}  // namespace

void enumerate_all(const OutlineSpec& spec, const OutlineSink& sink,
                   const EnumerationOptions& options) {
  const CompiledSpec compiled = compile(spec);
  std::uint64_t emitted = 0;
  ChoiceSink raw = [&](const std::vector<CompiledSpec::Choice>& stack) {
    if (++emitted > options.model_cap) throw ModelCapError(options.model_cap);
    sink(to_outline(spec, stack));
  };

  if (!options.parallel) {
    Search(compiled, raw).run();
    return;
  }

  // Deterministic parallel enumeration: each first-scene subtree fills its
  // own buffer; buffers are drained in declaration order.
  const int n_choices = static_cast<int>(compiled.choices.size());
  std::vector<std::future<std::vector<Outline>>> futures;
  futures.reserve(static_cast<std::size_t>(n_choices));
  std::atomic<std::uint64_t> total{0};
  for (int ci = 0; ci < n_choices; ++ci) {
    futures.push_back(std::async(std::launch::async, [&, ci] {
      std::vector<Outline> buffer;
      ChoiceSink collect = [&](const std::vector<CompiledSpec::Choice>& stack) {
        if (total.fetch_add(1, std::memory_order_relaxed) + 1 > options.model_cap) {
          throw ModelCapError(options.model_cap);
        }
        buffer.push_back(to_outline(spec, stack));
      };
      Search(compiled, collect).run(ci);
      return buffer;
    }));
  }
  for (auto& f : futures) {
    for (const Outline& o : f.get()) sink(o);
  }
}

std::vector<Outline> enumerate_to_vector(const OutlineSpec& spec,
                                         const EnumerationOptions& options) {
  std::vector<Outline> out;
  enumerate_all(spec, [&](const Outline& o) { out.push_back(o); }, options);
  return out;
}

std::uint64_t count_models(const OutlineSpec& spec, const EnumerationOptions& options) {
  const CompiledSpec compiled = compile(spec);

  if (!options.parallel) {
    std::uint64_t n = 0;
    ChoiceSink raw = [&](const std::vector<CompiledSpec::Choice>&) {
      if (++n > options.model_cap) throw ModelCapError(options.model_cap);
    };
    Search(compiled, raw).run();
    return n;
  }

  const int n_choices = static_cast<int>(compiled.choices.size());
  std::atomic<std::uint64_t> total{0};
  std::vector<std::future<void>> futures;
  futures.reserve(static_cast<std::size_t>(n_choices));
  for (int ci = 0; ci < n_choices; ++ci) {
    futures.push_back(std::async(std::launch::async, [&, ci] {
      ChoiceSink count = [&](const std::vector<CompiledSpec::Choice>&) {
        if (total.fetch_add(1, std::memory_order_relaxed) + 1 > options.model_cap) {
          throw ModelCapError(options.model_cap);
        }
      };
      Search(compiled, count).run(ci);
    }));
  }
  for (auto& f : futures) f.get();
  return total.load();
}

namespace {

std::string rule_text(const OutlineSpec&, const ConstraintRule& rule) {
  switch (rule.kind) {
    case ConstraintKind::NoAdjacentRepeat: return "no_adjacent_repeat";
    case ConstraintKind::RequireCountBefore:
      return "require_count_before " + rule.fn_a + " " + rule.fn_b + " " +
             std::to_string(rule.number);
    case ConstraintKind::AtMost: return "at_most " + rule.fn_a + " " + std::to_string(rule.number);
    case ConstraintKind::AtLeast:
      return "at_least " + rule.fn_a + " " + std::to_string(rule.number);
    case ConstraintKind::ForbidAtScene:
      return "forbid_at " + rule.fn_a + " " + std::to_string(rule.number);
    case ConstraintKind::RequireAtScene:
      return "require_at " + rule.fn_a + " " + std::to_string(rule.number);
    case ConstraintKind::FirstPrecedes: return "first_precedes " + rule.fn_a + " " + rule.fn_b;
    case ConstraintKind::DistinctParams: return "distinct_params " + rule.fn_a;
  }
  return "?";
}

}  // namespace

std::vector<Violation> check_outline(const OutlineSpec& spec, const Outline& outline) {
  const int n = static_cast<int>(outline.assignments.size());
  if (n != spec.num_scenes) {
    throw Error("outline length " + std::to_string(n) + " does not match spec scene count " +
                std::to_string(spec.num_scenes));
  }

  // Resolve tokens first; unknown names are errors, not violations.
  std::vector<const FunctionDef*> fns(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) {
    const SceneAssignment& a = outline.assignments[static_cast<std::size_t>(s)];
    const FunctionDef* fn = spec.find_function(a.function);
    if (fn == nullptr) {
      throw Error("scene " + std::to_string(s + 1) + ": unknown function '" + a.function + "'");
    }
    if (a.param && std::find(fn->params.begin(), fn->params.end(), *a.param) == fn->params.end()) {
      throw Error("scene " + std::to_string(s + 1) + ": unknown param '" + *a.param +
                  "' for function '" + a.function + "'");
    }
    fns[static_cast<std::size_t>(s)] = fn;
  }

  std::vector<Violation> out;

  // Per-scene assignment invariant: param present iff the function has params.
  for (int s = 0; s < n; ++s) {
    const SceneAssignment& a = outline.assignments[static_cast<std::size_t>(s)];
    const bool has_params = !fns[static_cast<std::size_t>(s)]->params.empty();
    if (has_params && !a.param) {
      out.push_back({"assignment", {s + 1},
                     "scene " + std::to_string(s + 1) + ": function '" + a.function +
                         "' requires a param"});
    } else if (!has_params && a.param) {
      out.push_back({"assignment", {s + 1},
                     "scene " + std::to_string(s + 1) + ": function '" + a.function +
                         "' does not take a param"});
    }
  }

  auto scenes_of = [&](const std::string& name) {
    std::vector<int> scenes;
    for (int s = 0; s < n; ++s) {
      if (outline.assignments[static_cast<std::size_t>(s)].function == name) scenes.push_back(s + 1);
    }
    return scenes;
  };

  for (const auto& rule : spec.constraints) {
    const std::string text = rule_text(spec, rule);
    switch (rule.kind) {
      case ConstraintKind::NoAdjacentRepeat:
        for (int s = 0; s + 1 < n; ++s) {
          const auto& cur = outline.assignments[static_cast<std::size_t>(s)].function;
          const auto& next = outline.assignments[static_cast<std::size_t>(s + 1)].function;
          if (cur == next) {
            out.push_back({text, {s + 1, s + 2},
                           "scenes " + std::to_string(s + 1) + " and " + std::to_string(s + 2) +
                               " both perform '" + cur + "'"});
          }
        }
        break;
      case ConstraintKind::RequireCountBefore: {
        int count_b = 0;
        for (int s = 0; s < n; ++s) {
          const auto& fn = outline.assignments[static_cast<std::size_t>(s)].function;
          if (fn == rule.fn_a && count_b < rule.number) {
            out.push_back({text, {s + 1},
                           "scene " + std::to_string(s + 1) + ": '" + rule.fn_a + "' needs " +
                               std::to_string(rule.number) + " prior '" + rule.fn_b +
                               "' scenes, found " + std::to_string(count_b)});
          }
          if (fn == rule.fn_b) ++count_b;
        }
        break;
      }
      case ConstraintKind::AtMost: {
        const auto scenes = scenes_of(rule.fn_a);
        if (static_cast<int>(scenes.size()) > rule.number) {
          out.push_back({text, scenes,
                         "'" + rule.fn_a + "' occurs " + std::to_string(scenes.size()) +
                             " times, at most " + std::to_string(rule.number) + " allowed"});
        }
        break;
      }
      case ConstraintKind::AtLeast: {
        const auto scenes = scenes_of(rule.fn_a);
        if (static_cast<int>(scenes.size()) < rule.number) {
          out.push_back({text, {},
                         "'" + rule.fn_a + "' occurs " + std::to_string(scenes.size()) +
                             " times, at least " + std::to_string(rule.number) + " required"});
        }
        break;
      }
      case ConstraintKind::ForbidAtScene:
        if (outline.assignments[static_cast<std::size_t>(rule.number - 1)].function == rule.fn_a) {
          out.push_back({text, {rule.number},
                         "scene " + std::to_string(rule.number) + " must not perform '" +
                             rule.fn_a + "'"});
        }
        break;
      case ConstraintKind::RequireAtScene:
        if (outline.assignments[static_cast<std::size_t>(rule.number - 1)].function != rule.fn_a) {
          out.push_back({text, {rule.number},
                         "scene " + std::to_string(rule.number) + " must perform '" + rule.fn_a +
                             "'"});
        }
        break;
      case ConstraintKind::FirstPrecedes: {
        const auto a_scenes = scenes_of(rule.fn_a);
        const auto b_scenes = scenes_of(rule.fn_b);
        if (!b_scenes.empty() && (a_scenes.empty() || a_scenes.front() >= b_scenes.front())) {
          out.push_back({text, {b_scenes.front()},
                         "'" + rule.fn_b + "' first occurs at scene " +
                             std::to_string(b_scenes.front()) + " without an earlier '" +
                             rule.fn_a + "'"});
        }
        break;
      }
      case ConstraintKind::DistinctParams: {
        std::unordered_map<std::string, int> first_scene;
        std::vector<int> dup_scenes;
        for (int s = 0; s < n; ++s) {
          const SceneAssignment& a = outline.assignments[static_cast<std::size_t>(s)];
          if (a.function != rule.fn_a || !a.param) continue;
          auto [it, inserted] = first_scene.emplace(*a.param, s + 1);
          if (!inserted) {
            if (dup_scenes.empty()) dup_scenes.push_back(it->second);
            dup_scenes.push_back(s + 1);
          }
        }
        if (!dup_scenes.empty()) {
          out.push_back({text, dup_scenes,
                         "'" + rule.fn_a + "' repeats a param across scenes"});
        }
        break;
      }
    }
  }
  return out;
}

OutlinePool build_pool(const OutlineSpec& spec, const EnumerationOptions& options) {
  OutlinePool pool;
  pool.spec_fingerprint = spec_fingerprint(spec);
  pool.outlines = enumerate_to_vector(spec, options);
  return pool;
}

const Outline& sample_uniform(const OutlinePool& pool, std::uint64_t seed) {
  if (pool.outlines.empty()) throw PoolError("cannot sample from an empty pool");
  const std::uint64_t index = uniform_index(seed, pool.outlines.size());
  return pool.outlines[index];
}

}  // namespace fable
