#include "optsession/explorer.hpp"

#include "optsession/printer.hpp"
#include "optsession/typecheck.hpp"

#include "json.hpp"

#include <algorithm>
#include <deque>
#include <unordered_set>
#include <random>

namespace optsession {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Terminated: return "terminated";
    case Verdict::Stuck: return "stuck";
    case Verdict::BudgetExceeded: break;
  }
  return "budget-exceeded";
}

bool label_matches(const std::string& selector, const std::string& label) {
  // iterative glob with '*' only; '[' and the like are literal
  size_t s = 0, l = 0, star = std::string::npos, mark = 0;
  while (l < label.size()) {
    if (s < selector.size() && selector[s] == '*') {
      star = s++;
      mark = l;
    } else if (s < selector.size() && selector[s] == label[l]) {
      ++s;
      ++l;
    } else if (star != std::string::npos) {
      s = star + 1;
      l = ++mark;
    } else {
      return false;
    }
  }
  while (s < selector.size() && selector[s] == '*') ++s;
  return s == selector.size();
}

FailurePolicy parse_policy(const std::string& spec, const std::vector<std::string>& script) {
  if (spec == "never") return NeverFail{};
  if (spec == "always") return AlwaysOffer{};
  if (spec.rfind("prob:", 0) == 0) {
    auto rest = spec.substr(5);
    Probabilistic pr;
    auto colon = rest.find(':');
    pr.p = std::stod(rest.substr(0, colon));
    if (colon != std::string::npos) pr.seed = std::stoull(rest.substr(colon + 1));
    if (pr.p < 0.0 || pr.p > 1.0) throw std::invalid_argument("failure probability must be in [0,1]");
    return pr;
  }
  if (spec.rfind("script", 0) == 0) return Scripted{script};
  throw std::invalid_argument("unknown policy '" + spec + "' (never, always, prob:P[:SEED], script:FILE)");
}

namespace {

void record_values(const RedexStep& st, std::map<Role, std::vector<Name>>& out) {
  const RedexStep* s = &st;
  while (s->rule == "choice" && s->inner) s = s->inner.get();
  if ((s->rule != "fail" && s->rule != "succ") || !s->owner || s->assigned.empty()) return;
  std::vector<Name> vals;
  for (auto& [b, v] : s->assigned) vals.push_back(v);
  out[*s->owner] = vals;
}

template <class Rng>
size_t pick(Rng& rng, size_t n) {
  return std::uniform_int_distribution<size_t>(0, n - 1)(rng);
}

}  // namespace

Trace run(const Proc& p, const FailurePolicy& policy, std::uint64_t schedulerSeed, size_t budget,
          const std::optional<TypedContext>& typed) {
  Trace t;
  t.initial = p;
  Proc cur = canonicalize(p);
  std::mt19937_64 sched(schedulerSeed);
  std::mt19937_64 faults(std::holds_alternative<Probabilistic>(policy)
                             ? std::get<Probabilistic>(policy).seed
                             : schedulerSeed);
  std::optional<SessionEnv> delta;
  if (typed) {
    delta = typed->delta;
    t.envTrace.emplace();
  }
  size_t scriptPos = 0;

  for (;;) {
    auto steps = enabled_steps(cur);
    if (steps.empty()) {
      t.verdict = is<PEnd>(cur) ? Verdict::Terminated : Verdict::Stuck;
      break;
    }
    if (t.steps.size() >= budget) {
      t.verdict = Verdict::BudgetExceeded;
      break;
    }
    std::vector<size_t> fails, others;
    for (size_t i = 0; i < steps.size(); ++i) (is_fail(steps[i]) ? fails : others).push_back(i);

    std::optional<size_t> chosen;
    auto never = [&] {
      if (!others.empty()) chosen = others[pick(sched, others.size())];
    };
    std::visit(overloaded{
                   [&](const NeverFail&) { never(); },
                   [&](const AlwaysOffer&) { chosen = pick(sched, steps.size()); },
                   [&](const Probabilistic& pr) {
                     std::bernoulli_distribution roll(pr.p);
                     for (size_t i : fails)
                       if (roll(faults)) {
                         chosen = i;
                         break;
                       }
                     if (!chosen) never();
                     if (!chosen && !fails.empty()) chosen = fails[pick(sched, fails.size())];
                   },
                   [&](const Scripted& sc) {
                     if (scriptPos >= sc.selectors.size()) return never();
                     const auto& sel = sc.selectors[scriptPos];
                     for (size_t i = 0; i < steps.size() && !chosen; ++i)
                       if (label_matches(sel, steps[i].label)) chosen = i;
                     if (chosen) ++scriptPos;
                     else t.note = "script entry " + std::to_string(scriptPos + 1) + " '" + sel +
                                   "' matches no enabled step";
                   },
               },
               policy);
    if (!chosen) {
      if (t.note.empty()) t.note = "only fail steps remain";
      t.verdict = Verdict::Stuck;
      break;
    }
    const RedexStep& st = steps[*chosen];
    if (delta && t.envTrace) {
      try {
        auto es = matching_env_step(typed->gamma, *delta, st);
        delta = es.result;
        t.envTrace->push_back(std::move(es));
      } catch (const NoMatchingEnvStep& e) {
        t.note = std::string("environment trace lost: ") + e.what();
        t.envTrace.reset();
      }
    }
    record_values(st, t.finalValues);
    t.steps.push_back(st);
    cur = st.result;
  }
  t.final = cur;
  if (t.verdict == Verdict::Terminated && t.envTrace && delta && !delta->empty())
    t.note = "process ended but the environment still holds " + print(*delta);
  return t;
}

std::string trace_json(const Trace& t) {
  using nlohmann::json;
  json j;
  j["initial"] = print(t.initial);
  j["final"] = print(t.final);
  j["verdict"] = to_string(t.verdict);
  if (!t.note.empty()) j["note"] = t.note;
  json steps = json::array();
  for (auto& s : t.steps) {
    json e;
    e["rule"] = s.rule;
    e["label"] = s.label;
    json pos = json::array();
    for (auto& p : s.position) pos.push_back(to_string(p));
    e["position"] = pos;
    json sub = json::object();
    for (auto& [k, v] : s.binding) sub[k.id] = v.id;
    e["substitution"] = sub;
    steps.push_back(e);
  }
  j["steps"] = steps;
  json fv = json::object();
  for (auto& [r, vs] : t.finalValues) {
    json a = json::array();
    for (auto& v : vs) a.push_back(v.id);
    fv[r.id] = a;
  }
  j["finalValues"] = fv;
  if (t.envTrace) {
    json env = json::array();
    for (auto& e : *t.envTrace) env.push_back({{"rule", e.rule}, {"base", e.base}, {"detail", e.detail}});
    j["envTrace"] = env;
  }
  return j.dump(2);
}

// ---------- exhaustive exploration ----------

namespace {

bool has_unguarded_opt(const Proc& q) {
  return std::visit(overloaded{
                        [](const POpt&) { return true; },
                        [](const PPar& x) { return has_unguarded_opt(x.left) || has_unguarded_opt(x.right); },
                        [](const PRes& x) { return has_unguarded_opt(x.body); },
                        [](const PChoice& x) { return has_unguarded_opt(x.left) || has_unguarded_opt(x.right); },
                        [](const PRec& x) { return has_unguarded_opt(x.body); },
                        [](const auto&) { return false; },
                    },
                    q->v);
}

}  // namespace

ReductionGraph explore(const Proc& p, bool includeFail, size_t unfoldBudget, size_t maxStates) {
  ReductionGraph g;
  g.unfoldBudget = unfoldBudget;
  std::vector<size_t> unfolds;  // fewest unfoldings needed to reach each state
  std::deque<std::pair<size_t, Proc>> queue;

  auto intern = [&](const Proc& q, size_t u) -> std::optional<size_t> {
    std::string key = state_key(q);
    if (auto it = g.ids.find(key); it != g.ids.end()) {
      unfolds[it->second] = std::min(unfolds[it->second], u);
      return it->second;
    }
    if (g.states.size() >= maxStates) {
      g.complete = false;
      return std::nullopt;
    }
    size_t id = g.states.size();
    g.ids.emplace(key, id);
    g.states.push_back(std::move(key));
    unfolds.push_back(u);
    queue.emplace_back(id, q);
    return id;
  };

  Proc start = canonicalize(p);
  intern(start, 0);
  std::vector<bool> isEnd;
  while (!queue.empty()) {
    auto [id, q] = std::move(queue.front());
    queue.pop_front();
    if (isEnd.size() <= id) isEnd.resize(id + 1, false);
    isEnd[id] = is<PEnd>(q);
    auto steps = enabled_steps(q);
    if (steps.empty()) {
      g.terminals.insert(id);
      (isEnd[id] ? g.endTerminals : g.stuckTerminals) += 1;
      continue;
    }
    bool anyFail = false, anyOther = false;
    for (auto& st : steps) {
      bool f = is_fail(st);
      anyFail |= f;
      anyOther |= !f;
      if (f && !includeFail) continue;
      size_t u = unfolds[id] + static_cast<size_t>(st.unfolds);
      if (u > unfoldBudget)
        throw BudgetExceeded("state " + std::to_string(id) + " needs " + std::to_string(u) +
                             " recursion unfoldings (budget " + std::to_string(unfoldBudget) + ")");
      auto to = intern(st.result, u);
      if (!to) continue;
      g.edges.push_back(GraphEdge{id, *to, st.rule, st.label, f});
    }
    if (!includeFail && !anyOther) g.blocked.insert(id);
    if (includeFail && has_unguarded_opt(q) && !anyFail) ++g.optStatesWithoutFailEdge;
  }
  isEnd.resize(g.states.size(), false);

  // reliance: a fail-free path from the start to End
  std::vector<std::vector<size_t>> adj(g.states.size());
  for (auto& e : g.edges)
    if (!e.fail) adj[e.from].push_back(e.to);
  std::vector<bool> seen(g.states.size(), false);
  std::deque<size_t> bfs{0};
  seen[0] = true;
  while (!bfs.empty()) {
    size_t s = bfs.front();
    bfs.pop_front();
    if (isEnd[s]) {
      g.relianceToEnd = true;
      break;
    }
    for (size_t t : adj[s])
      if (!seen[t]) {
        seen[t] = true;
        bfs.push_back(t);
      }
  }
  return g;
}

std::optional<std::vector<RedexStep>> fail_free_path(const Proc& p, size_t maxStates) {
  struct Frame {
    Proc state;
    std::vector<RedexStep> steps;
    size_t next = 0;
  };
  std::unordered_set<std::string> seen;
  std::vector<Frame> stack;
  auto push = [&](const Proc& q) {
    auto steps = enabled_steps(q);
    std::erase_if(steps, [](const RedexStep& st) { return is_fail(st); });
    stack.push_back(Frame{q, std::move(steps)});
  };
  Proc start = canonicalize(p);
  seen.insert(state_key(start));
  push(start);
  while (!stack.empty()) {
    Frame& top = stack.back();
    if (is<PEnd>(top.state)) {
      std::vector<RedexStep> path;
      for (size_t i = 0; i + 1 < stack.size(); ++i) path.push_back(stack[i].steps[stack[i].next - 1]);
      return path;
    }
    if (top.next == top.steps.size()) {
      stack.pop_back();
      continue;
    }
    Proc to = top.steps[top.next++].result;
    if (!seen.insert(state_key(to)).second) continue;
    if (seen.size() > maxStates) return std::nullopt;
    push(to);
  }
  return std::nullopt;
}

std::string graph_report_json(const ReductionGraph& g) {
  nlohmann::json j;
  j["states"] = g.states.size();
  j["edges"] = g.edges.size();
  j["terminals"] = g.terminals.size();
  j["endTerminals"] = g.endTerminals;
  j["stuckTerminals"] = g.stuckTerminals;
  j["blocked"] = g.blocked.size();
  j["complete"] = g.complete;
  j["verdict"] = !g.complete ? "inconclusive" : g.allTerminalsEnd() ? "all-terminals-end" : "stuck-states";
  j["relianceToEnd"] = g.relianceToEnd;
  j["optStatesWithoutFailEdge"] = g.optStatesWithoutFailEdge;
  j["unfoldBudget"] = g.unfoldBudget;
  return j.dump(2);
}

std::set<std::map<Role, std::vector<Name>>> terminal_outcomes(const Proc& p, bool includeFail,
                                                             size_t maxNodes) {
  using Values = std::map<Role, std::vector<Name>>;
  std::set<Values> out;
  std::set<std::pair<std::string, Values>> seen;
  std::vector<std::pair<Proc, Values>> stack{{canonicalize(p), {}}};
  while (!stack.empty()) {
    auto [q, vals] = std::move(stack.back());
    stack.pop_back();
    if (!seen.emplace(state_key(q), vals).second) continue;
    if (seen.size() > maxNodes) throw BudgetExceeded("outcome enumeration exceeded node budget");
    bool moved = false;
    for (auto& st : enabled_steps(q)) {
      if (!includeFail && is_fail(st)) continue;
      Values next = vals;
      record_values(st, next);
      stack.emplace_back(st.result, std::move(next));
      moved = true;
    }
    if (!moved) out.insert(vals);
  }
  return out;
}

SubjectReductionReport check_subject_reduction(const GlobalEnv& gamma, const Proc& p,
                                               const SessionEnv& delta, size_t samples,
                                               size_t depth, std::uint64_t seed) {
  SubjectReductionReport rep;
  std::mt19937_64 rng(seed);
  if (auto err = typecheck(gamma, p, delta)) {
    rep.violations.push_back({{}, "initial triple is not typable: " + to_string(*err)});
    return rep;
  }
  for (size_t w = 0; w < samples; ++w) {
    ++rep.walks;
    Proc cur = canonicalize(p);
    SessionEnv d = delta;
    std::vector<std::string> labels;
    for (size_t k = 0; k < depth; ++k) {
      auto steps = enabled_steps(cur);
      if (steps.empty()) {
        if (is<PEnd>(cur) && !d.empty())
          rep.violations.push_back({labels, "process ended with non-empty environment " + print(d)});
        break;
      }
      const RedexStep& st = steps[pick(rng, steps.size())];
      labels.push_back(st.label);
      ++rep.steps;
      try {
        d = matching_env(gamma, cur, d, st);
      } catch (const NoMatchingEnvStep& e) {
        rep.violations.push_back({labels, e.what()});
        break;
      }
      if (auto err = typecheck(gamma, st.result, d)) {
        rep.violations.push_back({labels, to_string(*err)});
        break;
      }
      cur = st.result;
    }
  }
  return rep;
}

}  // namespace optsession
