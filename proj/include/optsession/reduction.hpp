#pragma once

#include "optsession/syntax.hpp"

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace optsession {

// One application of a reduction rule.
struct RedexStep {
  std::string rule;  // comS choice comC subs join fail succ cSO cCO jO
  // Redex sites in canonicalize(source): both partners for communications, the block for
  // fail/succ, the Decl for subs, the Choice for choice.
  std::vector<Path> position;
  std::vector<Proc> redexes;  // the terms found at those sites
  Proc result;                // canonical
  Subst binding;              // substitution applied to the unguarded continuation
  std::string label;          // human-readable, also used by scripted schedules
  std::optional<Role> owner;  // fail/succ: the block owner
  std::vector<std::pair<Name, Name>> assigned;  // fail/succ: binder -> value
  std::shared_ptr<const RedexStep> inner;       // choice: the step of the chosen side
  int unfolds = 0;                              // recursion unfoldings performed first
};

struct StaleStep : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Normal form modulo structural congruence: Par flattened and sorted, End units dropped,
// restrictions hoisted as far out as scope allows and unused ones removed, Choice sides sorted.
Proc canonicalize(const Proc& p);
// Identity of a state: canonical form printed after renaming bound names.
std::string state_key(const Proc& p);

std::vector<RedexStep> enabled_steps(const Proc& p);
// Re-derives the step on p; throws StaleStep when it is no longer enabled there.
Proc apply_step(const Proc& p, const RedexStep& step);

bool is_fail(const RedexStep& s);  // fail, or a choice whose inner step is a fail

}  // namespace optsession
