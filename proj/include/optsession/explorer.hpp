#pragma once

#include "optsession/env.hpp"
#include "optsession/envreduction.hpp"
#include "optsession/reduction.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

namespace optsession {

struct NeverFail {};
struct AlwaysOffer {};
// Each scheduling round, every enabled fail step fires independently with probability p.
struct Probabilistic {
  double p = 0.0;
  std::uint64_t seed = 0;
};
// Step-label selectors taken in order; '*' matches any run of characters. Once the script is
// used up the run continues as NeverFail.
struct Scripted {
  std::vector<std::string> selectors;
};
using FailurePolicy = std::variant<NeverFail, AlwaysOffer, Probabilistic, Scripted>;

FailurePolicy parse_policy(const std::string& spec, const std::vector<std::string>& script = {});
bool label_matches(const std::string& selector, const std::string& label);

struct TypedContext {
  GlobalEnv gamma;
  SessionEnv delta;
};

enum class Verdict { Terminated, Stuck, BudgetExceeded };
std::string to_string(Verdict v);

struct Trace {
  Proc initial;
  std::vector<RedexStep> steps;
  Proc final;
  std::optional<std::vector<EnvStep>> envTrace;  // one entry per process step when typed
  Verdict verdict = Verdict::Stuck;
  std::string note;
  std::map<Role, std::vector<Name>> finalValues;  // last values assigned by a block of the owner
};

Trace run(const Proc& p, const FailurePolicy& policy, std::uint64_t schedulerSeed, size_t budget,
          const std::optional<TypedContext>& typed = {});
std::string trace_json(const Trace& t);

struct GraphEdge {
  size_t from, to;
  std::string rule;
  std::string label;
  bool fail = false;
};

struct ReductionGraph {
  std::vector<std::string> states;  // state keys, index = state id
  std::unordered_map<std::string, size_t> ids;
  std::vector<GraphEdge> edges;
  std::set<size_t> terminals;  // no enabled step at all
  std::set<size_t> blocked;    // without fail edges: only fail steps were enabled
  size_t unfoldBudget = 0;
  bool complete = true;        // false when maxStates cut the search short

  size_t endTerminals = 0;
  size_t stuckTerminals = 0;   // non-End terminals: counterexamples to progress
  bool relianceToEnd = false;  // some fail-free path reaches End
  size_t optStatesWithoutFailEdge = 0;  // only meaningful with fail edges
  bool allTerminalsEnd() const { return stuckTerminals == 0 && !terminals.empty(); }
};

struct BudgetExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Breadth-first over canonical states. Throws BudgetExceeded when reaching a state needs more
// recursion unfoldings than unfoldBudget.
ReductionGraph explore(const Proc& p, bool includeFail, size_t unfoldBudget = 0,
                       size_t maxStates = 2'000'000);
std::string graph_report_json(const ReductionGraph& g);

// A fail-free run from p to End, found depth-first; nullopt when none exists among the first
// maxStates states visited.
std::optional<std::vector<RedexStep>> fail_free_path(const Proc& p, size_t maxStates = 2'000'000);

// Distinct final-value maps over all maximal runs (small fixtures only).
std::set<std::map<Role, std::vector<Name>>> terminal_outcomes(const Proc& p, bool includeFail,
                                                             size_t maxNodes = 100000);

struct SubjectReductionViolation {
  std::vector<std::string> trace;  // labels up to and including the offending step
  std::string message;
};
struct SubjectReductionReport {
  size_t walks = 0;
  size_t steps = 0;
  std::vector<SubjectReductionViolation> violations;
  bool ok() const { return violations.empty(); }
};

SubjectReductionReport check_subject_reduction(const GlobalEnv& gamma, const Proc& p,
                                               const SessionEnv& delta, size_t samples,
                                               size_t depth, std::uint64_t seed);

}  // namespace optsession
