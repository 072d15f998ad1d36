#include "optsession/env.hpp"

#include "optsession/printer.hpp"

#include <functional>

namespace optsession {

void SessionEnv::put(const EndpointKey& k, Mode m, const Local& t) {
  if (par_components(t).empty()) {
    assignments.erase(k);
    return;
  }
  assignments[k] = Assignment{m, t};
}

const Assignment* SessionEnv::find(const EndpointKey& k) const {
  auto it = assignments.find(k);
  return it == assignments.end() ? nullptr : &it->second;
}

namespace {
size_t local_size(const Local& t) {
  return std::visit(overloaded{
                        [](const LGet& x) {
                          size_t n = 1;
                          for (auto& b : x.branches) n += local_size(b.cont);
                          return n;
                        },
                        [](const LSend& x) {
                          size_t n = 1;
                          for (auto& b : x.branches) n += local_size(b.cont);
                          return n;
                        },
                        [](const LOpt& x) { return 1 + local_size(x.body) + local_size(x.cont); },
                        [](const LCall& x) { return 1 + local_size(x.cont); },
                        [](const LEnt& x) { return 1 + local_size(x.cont); },
                        [](const LReq& x) { return 1 + local_size(x.cont); },
                        [](const LChoice& x) { return 1 + local_size(x.left) + local_size(x.right); },
                        [](const LPar& x) { return local_size(x.left) + local_size(x.right); },
                        [](const LRec& x) { return 1 + local_size(x.body); },
                        [](const auto&) { return size_t{0}; },
                    },
                    t->v);
}
}  // namespace

size_t SessionEnv::type_size() const {
  size_t n = 0;
  for (auto& [k, a] : assignments) n += local_size(a.type);
  return n;
}

std::string print_endpoint(const EndpointKey& k, Mode m) {
  switch (m) {
    case Mode::External: return "<" + k.session.id + ">[" + k.role.id + "]";
    case Mode::Internal: return "~" + k.session.id + "[" + k.role.id + "]";
    case Mode::Plain: break;
  }
  return k.session.id + "[" + k.role.id + "]";
}

std::string print(const SessionEnv& d) {
  std::string out = "{";
  bool first = true;
  for (auto& [k, a] : d.assignments) {
    out += (first ? " " : "; ") + print_endpoint(k, a.mode) + " : " + print(a.type);
    first = false;
  }
  if (d.returnKinds) {
    out += (first ? " " : "; ") + std::string("ov ") + d.returnKinds->role.id + "(";
    for (size_t i = 0; i < d.returnKinds->kinds.size(); ++i)
      out += (i ? ", " : "") + to_string(d.returnKinds->kinds[i]);
    out += ")";
    first = false;
  }
  return out + (first ? "}" : " }");
}

std::string env_key(const SessionEnv& d) {
  std::string out;
  for (auto& [k, a] : d.assignments)
    out += print_endpoint(k, a.mode) + ":" + erased_key(a.type) + ";";
  if (d.returnKinds) {
    out += "ov " + d.returnKinds->role.id + "(";
    for (auto& kd : d.returnKinds->kinds) out += to_string(kd) + ",";
    out += ")";
  }
  return out;
}

bool env_equiv(const SessionEnv& a, const SessionEnv& b) { return env_key(a) == env_key(b); }

SessionEnv merge_env(const SessionEnv& d1, const SessionEnv& d2) {
  SessionEnv out = d1;
  if (d2.returnKinds) {
    if (d1.returnKinds)
      throw EnvError(EnvError::Code::DuplicateReturnKinds,
                     "both environments hold return kinds (" + d1.returnKinds->role.id + ", " +
                         d2.returnKinds->role.id + ")");
    out.returnKinds = d2.returnKinds;
  }
  for (auto& [k, a] : d2.assignments) {
    auto it = out.assignments.find(k);
    if (it == out.assignments.end()) {
      out.assignments.emplace(k, a);
      continue;
    }
    if (it->second.mode != a.mode)
      throw EnvError(EnvError::Code::ModeMismatch,
                     "endpoint " + k.session.id + "[" + k.role.id + "] used with different modes");
    it->second.type = l::par(it->second.type, a.type);
  }
  return out;
}

InitialEnv build_initial_env(const Global& g, const std::vector<Role>& roles,
                             const std::vector<Name>& invitationChans, const Name& session) {
  if (roles.size() != invitationChans.size())
    throw std::invalid_argument("one invitation channel per role is required");
  InitialEnv env;
  env.gamma.protocols = declared_protocols(g);
  env.gamma.sessions[session] = g;
  for (size_t i = 0; i < roles.size(); ++i) {
    Local t = project(g, env.gamma.protocols, roles[i]);
    env.gamma.sharedChans[invitationChans[i]] = SharedChan{t, roles[i]};
    env.delta.put(EndpointKey{session, roles[i]}, Mode::External, t);
  }
  return env;
}

}  // namespace optsession
