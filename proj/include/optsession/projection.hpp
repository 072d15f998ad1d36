#pragma once

#include "optsession/syntax.hpp"

#include <map>
#include <set>
#include <stdexcept>

namespace optsession {

struct ProtocolDef {
  std::vector<Role> internal;
  std::vector<Param> args;
  std::vector<Role> external;
  Global body;
};

// Extended by copy; lookups of absent protocols fail.
class ProtocolEnv {
 public:
  ProtocolEnv extended(const Name& proto, ProtocolDef def) const;
  const ProtocolDef& at(const Name& proto) const;
  bool contains(const Name& proto) const { return entries_.count(proto) > 0; }
  const std::map<Name, ProtocolDef>& entries() const { return entries_; }

 private:
  std::map<Name, ProtocolDef> entries_;
};

struct UnknownProtocol : std::runtime_error {
  explicit UnknownProtocol(const Name& n)
      : std::runtime_error("unknown protocol '" + n.id + "'"), proto(n) {}
  Name proto;
};

struct NonProjectable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Global restrict(const Global& g, const Role& r);
// Variant for sub-terms whose Calls refer to protocols declared further out.
Global restrict(const Global& g, const Role& r, const std::set<Name>& declared);
Local project(const Global& g, const ProtocolEnv& env, const Role& r);
Local project(const Global& g, const Role& r);

// Collects every Decl reachable in g (used to seed environments for sub-session bodies).
ProtocolEnv declared_protocols(const Global& g, ProtocolEnv base = {});

}  // namespace optsession
