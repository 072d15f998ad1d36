#pragma once

#include "optsession/env.hpp"
#include "optsession/syntax.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace optsession {

// Rule ids: I O N C R S Pa S1 S2 J P New OptE Opt Rec, plus UnknownChannel and UnknownProtocol.
struct TypeError {
  std::string rule;
  std::string location;  // process path, see to_string(Path)
  std::string expected;  // the failed premise
  std::string found;
};
std::string to_string(const TypeError& e);

struct CheckOptions {
  bool subsessions = true;          // enables New/J/P
  size_t maxSplitCandidates = 4096;  // per Par node
};

// Γ ⊢ P ▷ Δ. nullopt means the judgement is derivable.
std::optional<TypeError> typecheck(const GlobalEnv& gamma, const Proc& p, const SessionEnv& delta,
                                   const CheckOptions& opts = {});

// Every way of distributing Δ over parallel components that respects which component uses which
// endpoint. Return kinds go to the component holding an unguarded optend of that owner.
// Throws EnvError(SplitAmbiguous) for an endpoint nobody uses and EnvError(SplitImpossible) when
// some Par component of a type has no compatible user.
std::vector<std::vector<SessionEnv>> split_candidates(const std::vector<Proc>& parts,
                                                      const SessionEnv& delta,
                                                      const GlobalEnv& gamma = {},
                                                      size_t cap = 4096);

// First candidate for a binary split. With gamma, the first one under which both sides typecheck.
std::pair<SessionEnv, SessionEnv> split_delta(const Proc& p1, const Proc& p2,
                                              const SessionEnv& delta);
std::pair<SessionEnv, SessionEnv> split_delta(const GlobalEnv& gamma, const Proc& p1,
                                              const Proc& p2, const SessionEnv& delta,
                                              const CheckOptions& opts = {});

}  // namespace optsession
