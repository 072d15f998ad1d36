#pragma once

#include "optsession/projection.hpp"
#include "optsession/syntax.hpp"

#include <map>
#include <optional>
#include <stdexcept>
#include <string>

namespace optsession {

enum class Mode { Plain, External, Internal };

struct EndpointKey {
  Name session;
  Role role;
  auto operator<=>(const EndpointKey&) const = default;
};

struct Assignment {
  Mode mode = Mode::Plain;
  Local type;
};

struct ReturnKinds {
  Role role;
  std::vector<Kind> kinds;
  bool operator==(const ReturnKinds&) const = default;
};

// Δ. Assignments of type End are never stored.
struct SessionEnv {
  std::map<EndpointKey, Assignment> assignments;
  std::optional<ReturnKinds> returnKinds;

  void put(const EndpointKey& k, Mode m, const Local& t);
  void erase(const EndpointKey& k) { assignments.erase(k); }
  const Assignment* find(const EndpointKey& k) const;
  bool empty() const { return assignments.empty() && !returnKinds; }
  size_t type_size() const;  // number of type nodes over all assignments
};

std::string print(const SessionEnv& d);
std::string print_endpoint(const EndpointKey& k, Mode m);
// Key that ignores value names and Par order inside types.
std::string env_key(const SessionEnv& d);
bool env_equiv(const SessionEnv& a, const SessionEnv& b);

struct EnvError : std::runtime_error {
  enum class Code { DuplicateReturnKinds, ModeMismatch, SplitAmbiguous, SplitImpossible };
  Code code;
  EnvError(Code c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

SessionEnv merge_env(const SessionEnv& d1, const SessionEnv& d2);

struct SharedChan {
  Local type;
  Role role;
};

// Γ.
struct GlobalEnv {
  std::map<Name, SharedChan> sharedChans;
  ProtocolEnv protocols;
  std::map<Name, Global> sessions;
  std::map<Name, Kind> values;  // kinds of literal values
};

struct InitialEnv {
  GlobalEnv gamma;
  SessionEnv delta;
};

// Γ maps aᵢ to (projection, pᵢ) and the session to g; Δ holds ⟨s⟩[pᵢ] for each role.
InitialEnv build_initial_env(const Global& g, const std::vector<Role>& roles,
                             const std::vector<Name>& invitationChans,
                             const Name& session = Name{"s"});

}  // namespace optsession
