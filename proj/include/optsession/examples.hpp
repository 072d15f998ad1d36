#pragma once

#include "optsession/env.hpp"
#include "optsession/parser.hpp"
#include "optsession/syntax.hpp"

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace optsession {

struct Fixture {
  std::string name;
  Global global;
  std::map<Role, Local> perRoleLocals;
  Proc process;
  GlobalEnv gamma;
  SessionEnv delta;
  std::string notes;
  // Step-label selectors replaying a documented execution; empty when there is none.
  std::vector<std::string> schedule;
};

struct InvalidFixtureArgs : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Initial values v_{i,0}; default 0 for p1 and 1 for everybody else.
std::vector<std::string> default_initial_values(int n);

Fixture gen_unreliable_link(const Role& src, const Name& v, const Role& trg, const Name& d);
Fixture gen_rc(int n, std::vector<std::string> initial = {});
Fixture gen_rc_subsessions(int n, std::vector<std::string> initial = {});
Fixture gen_rc_nested_opt(int n, std::vector<std::string> initial = {});

// Building blocks, exposed for golden tests.
Role rc_role(int i);
Global gen_rc_global(int n);
Global gen_rc_subsessions_global(int n);
Global gen_rc_nested_opt_global(int n);
Global unreliable_link(const Role& src, const Name& v, const Role& trg, const Name& d,
                       Global cont);

// Surface form of a fixture: global G, process P, one gamma entry per invitation channel and
// literal value, delta D, and local T_<role> per role. The schedule is kept as comment lines.
SourceFile to_source(const Fixture& f);
std::string fixture_text(const Fixture& f);

// Γ and Δ for a source file. Invite entries take the projection of `global` onto their role;
// every session named in Δ is bound to `global`. Without `delta`, Δ holds ⟨s⟩[r] per invite.
InitialEnv load_context(const SourceFile& src, const std::string& global,
                        const std::optional<std::string>& delta = {},
                        const Name& session = Name{"s"});

// Fixtures by CLI name: link, rc, rc-sub, rc-nest.
Fixture fixture_by_name(const std::string& name, int n);

}  // namespace optsession
