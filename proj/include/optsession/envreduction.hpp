#pragma once

#include "optsession/env.hpp"
#include "optsession/reduction.hpp"
#include "optsession/typecheck.hpp"

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace optsession {

struct EnvStep {
  std::string rule;  // outermost rule: comS' choice' comC' par subs' join' opt' optCom fail' succ'
  std::string base;  // the axiom at the leaves (comS' comC' subs' join' fail' succ')
  SessionEnv result;
  std::string detail;
};

// Every single-rule step of Δ. Protocols are needed to name the internal roles of a call whose
// protocol is not otherwise known; fresh sub-session names come from `freshNames` when given.
std::vector<EnvStep> env_steps(const SessionEnv& d, const ProtocolEnv& protocols = {},
                               const std::vector<Name>& freshNames = {});

// Total type size, plus one per open invitation, plus the projected size of every pending call.
// Every env step lowers it.
size_t env_potential(const SessionEnv& d, const ProtocolEnv& protocols = {});

struct NoMatchingEnvStep : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Δ' with Δ ⟼ Δ' and Γ ⊢ P' ▷ Δ', where P' is the result of `step` on p.
SessionEnv matching_env(const GlobalEnv& gamma, const Proc& p, const SessionEnv& delta,
                        const RedexStep& step, const CheckOptions& opts = {});
// The same, reporting which environment rule produced Δ′.
EnvStep matching_env_step(const GlobalEnv& gamma, const SessionEnv& delta, const RedexStep& step,
                          const CheckOptions& opts = {});

enum class CoherenceLevel { Coherent, InitiallyCoherent, WeaklyCoherent, Incoherent };
std::string to_string(CoherenceLevel l);

struct CoherenceVerdict {
  CoherenceLevel level = CoherenceLevel::Incoherent;
  std::vector<std::string> witnesses;
};

struct SearchBudgetExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Obstacles to coherence: open invitations and unmatched counterparts.
std::vector<std::string> coherence_witnesses(const SessionEnv& d, bool allowExternal);
bool is_coherent(const SessionEnv& d);

// Shortest-effort search for a coherent environment reachable within `bound` steps.
// nullopt when the bounded closure is exhausted; throws SearchBudgetExceeded when it is not.
std::optional<std::vector<EnvStep>> find_coherent_successor(const SessionEnv& d, size_t bound,
                                                            const ProtocolEnv& protocols = {},
                                                            size_t maxStates = 200000);

// `provenance` maps session names to the global types they were built from. The weak-coherence
// search bound defaults to |Δ| + 16.
CoherenceVerdict classify_coherence(const SessionEnv& d,
                                    const std::optional<std::map<Name, Global>>& provenance = {},
                                    std::optional<size_t> bound = {},
                                    const ProtocolEnv& protocols = {});

}  // namespace optsession
