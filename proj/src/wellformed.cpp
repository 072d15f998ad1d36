#include "optsession/wellformed.hpp"

#include "optsession/printer.hpp"
#include "optsession/projection.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <tuple>

namespace optsession {

namespace {

std::string describe(const Global& t) {
  return std::visit(overloaded{
                        [](const GCom& x) { return "com(" + x.from.id + "->" + x.to.id + ")"; },
                        [](const GOpt& x) {
                          std::string s = "opt[";
                          for (size_t i = 0; i < x.parts.size(); ++i)
                            s += (i ? "," : "") + x.parts[i].role.id;
                          return s + "]";
                        },
                        [](const GDecl& x) { return "let(" + x.proto.id + ")"; },
                        [](const GCall& x) { return "call(" + x.proto.id + ")"; },
                        [](const GChoice& x) { return "choice(" + x.chooser.id + ")"; },
                        [](const GPar&) { return std::string("par"); },
                        [](const GRec& x) { return "mu(" + x.var.id + ")"; },
                        [](const GVar& x) { return x.var.id; },
                        [](const GEnd&) { return std::string("end"); },
                    },
                    t->v);
}

// Visits every node with its location path.
void walk(const Global& t, const std::string& loc,
          const std::function<void(const Global&, const std::string&)>& f) {
  std::string here = loc + "/" + describe(t);
  f(t, here);
  std::visit(overloaded{
                 [&](const GCom& x) {
                   for (size_t i = 0; i < x.branches.size(); ++i)
                     walk(x.branches[i].cont, here + "." + x.branches[i].label.id, f);
                 },
                 [&](const GOpt& x) {
                   walk(x.body, here + ".body", f);
                   walk(x.cont, here, f);
                 },
                 [&](const GDecl& x) {
                   walk(x.body, here + ".body", f);
                   walk(x.cont, here, f);
                 },
                 [&](const GCall& x) { walk(x.cont, here, f); },
                 [&](const GChoice& x) {
                   walk(x.left, here + ".left", f);
                   walk(x.right, here + ".right", f);
                 },
                 [&](const GPar& x) {
                   walk(x.left, here + ".0", f);
                   walk(x.right, here + ".1", f);
                 },
                 [&](const GRec& x) { walk(x.body, here, f); },
                 [&](const auto&) {},
             },
             t->v);
}

bool is_val(const Kind& k) { return k.tag == Kind::Tag::Val; }

struct Kinder {
  WfReport report;

  void role_slot(const Role& r, const KindEnv& env, const std::string& loc) {
    auto it = env.find(r.id);
    if (it != env.end() && it->second.tag != Kind::Tag::Role)
      report.add({"kind.role-slot", loc,
                  "'" + r.id + "' has kind " + to_string(it->second) + " but occupies a role slot"});
  }
  void payload(const Param& prm, KindEnv& env, const std::string& loc) {
    if (!is_val(prm.kind))
      report.add({"kind.payload", loc,
                  "'" + prm.name.id + "' has kind " + to_string(prm.kind) + ", not a value sort"});
    env[prm.name.id] = prm.kind;
  }

  void go(const Global& t, KindEnv env, const std::string& loc) {
    std::string here = loc + "/" + describe(t);
    std::visit(
        overloaded{
            [&](const GCom& x) {
              role_slot(x.from, env, here);
              role_slot(x.to, env, here);
              for (auto& b : x.branches) {
                KindEnv inner = env;
                for (auto& prm : b.params) payload(prm, inner, here);
                go(b.cont, inner, here + "." + b.label.id);
              }
            },
            [&](const GOpt& x) {
              KindEnv after = env;
              for (auto& pt : x.parts) {
                role_slot(pt.role, env, here);
                for (auto& d : pt.defaults) payload(d, after, here);
              }
              go(x.body, env, here + ".body");
              go(x.cont, after, here);
            },
            [&](const GDecl& x) {
              std::vector<Kind> ks;
              KindEnv inner = env;
              for (auto& r : x.internal) {
                ks.push_back(Kind::role());
                inner[r.id] = Kind::role();
              }
              for (auto& r : x.external) inner[r.id] = Kind::role();
              for (auto& a : x.args) {
                payload(a, inner, here);
                ks.push_back(a.kind);
              }
              Kind declared = Kind::arrow(ks, Kind::protocol());
              auto it = env.find(x.proto.id);
              if (it != env.end() && !(it->second == declared))
                report.add({"kind.protocol", here,
                            "protocol '" + x.proto.id + "' bound with kind " +
                                to_string(it->second) + ", expected " + to_string(declared)});
              go(x.body, inner, here + ".body");
              KindEnv after = env;
              after[x.proto.id] = declared;
              go(x.cont, after, here);
            },
            [&](const GCall& x) {
              role_slot(x.caller, env, here);
              for (auto& r : x.roles) role_slot(r, env, here);
              auto it = env.find(x.proto.id);
              if (it == env.end()) {
                report.add({"kind.protocol", here, "protocol '" + x.proto.id + "' is not declared"});
              } else if (it->second.tag != Kind::Tag::Arrow ||
                         it->second.result->tag != Kind::Tag::Protocol) {
                report.add({"kind.protocol", here,
                            "'" + x.proto.id + "' has kind " + to_string(it->second) +
                                ", not a protocol"});
              } else {
                const auto& ps = it->second.params;
                size_t nRoles = static_cast<size_t>(std::count_if(
                    ps.begin(), ps.end(), [](auto& k) { return k.tag == Kind::Tag::Role; }));
                if (nRoles != x.roles.size() || ps.size() != nRoles + x.args.size()) {
                  report.add({"kind.call-args", here,
                              "call of '" + x.proto.id + "' has " + std::to_string(x.roles.size()) +
                                  " roles and " + std::to_string(x.args.size()) +
                                  " arguments, protocol kind is " + to_string(it->second)});
                } else {
                  for (size_t i = 0; i < x.args.size(); ++i) {
                    auto a = env.find(x.args[i].id);
                    const Kind& want = ps[nRoles + i];
                    if (a == env.end())
                      report.add({"kind.call-args", here,
                                  "argument '" + x.args[i].id + "' has no kind"});
                    else if (!(a->second == want))
                      report.add({"kind.call-args", here,
                                  "argument '" + x.args[i].id + "' has kind " +
                                      to_string(a->second) + ", expected " + to_string(want)});
                  }
                }
              }
              go(x.cont, env, here);
            },
            [&](const GChoice& x) {
              role_slot(x.chooser, env, here);
              go(x.left, env, here + ".left");
              go(x.right, env, here + ".right");
            },
            [&](const GPar& x) {
              go(x.left, env, here + ".0");
              go(x.right, env, here + ".1");
            },
            [&](const GRec& x) { go(x.body, env, here); },
            [&](const auto&) {},
        },
        t->v);
  }
};

// Roles bound by sub-session constructs anywhere inside t.
std::set<Role> introduced_roles(const Global& t) {
  std::set<Role> out;
  walk(t, "", [&](const Global& n, const std::string&) {
    if (auto* d = std::get_if<GDecl>(&n->v)) {
      out.insert(d->internal.begin(), d->internal.end());
      out.insert(d->external.begin(), d->external.end());
    } else if (auto* c = std::get_if<GCall>(&n->v)) {
      out.insert(c->roles.begin(), c->roles.end());
    }
  });
  return out;
}

std::set<Name> all_declared(const Global& t) {
  std::set<Name> out;
  walk(t, "", [&](const Global& n, const std::string&) {
    if (auto* d = std::get_if<GDecl>(&n->v)) out.insert(d->proto);
  });
  return out;
}

std::string role_list(const std::set<Role>& rs) {
  std::string s;
  for (auto& r : rs) s += (s.empty() ? "" : ", ") + r.id;
  return s;
}

using Triple = std::tuple<std::string, std::string, std::string>;

std::set<Triple> triples(const Global& t) {
  std::set<Triple> out;
  walk(t, "", [&](const Global& n, const std::string&) {
    if (auto* c = std::get_if<GCom>(&n->v))
      for (auto& b : c->branches) out.insert({c->from.id, c->to.id, b.label.id});
  });
  return out;
}

}  // namespace

WfReport check_kinding(const Global& g, const KindEnv& env) {
  Kinder k;
  k.go(g, env, "");
  return k.report;
}

WfReport check_projectable(const Global& g) {
  WfReport rep;
  auto declared = all_declared(g);
  auto agree = [&](const Global& a, const Global& b, const Role& r) {
    try {
      return print(restrict(a, r, declared)) == print(restrict(b, r, declared));
    } catch (const UnknownProtocol&) {
      return false;
    }
  };
  walk(g, "", [&](const Global& n, const std::string& loc) {
    std::visit(
        overloaded{
            [&](const GChoice& x) {
              for (auto& r : roles_of(n)) {
                if (r == x.chooser) continue;
                if (!agree(x.left, x.right, r))
                  rep.add({"proj.choice-agreement", loc,
                           "branches restrict differently on role '" + r.id + "'"});
              }
            },
            [&](const GCom& x) {
              if (x.branches.size() < 2) return;
              for (auto& r : roles_of(n)) {
                if (r == x.from || r == x.to) continue;
                for (size_t i = 1; i < x.branches.size(); ++i)
                  if (!agree(x.branches[0].cont, x.branches[i].cont, r))
                    rep.add({"proj.branch-agreement", loc,
                             "branches '" + x.branches[0].label.id + "' and '" +
                                 x.branches[i].label.id + "' restrict differently on role '" +
                                 r.id + "'"});
              }
            },
            [&](const GPar& x) {
              std::set<Role> shared;
              auto a = roles_of(x.left), b = roles_of(x.right);
              std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                                    std::inserter(shared, shared.begin()));
              if (!shared.empty())
                rep.add({"proj.par-shared-role", loc,
                         "parallel components share role(s) " + role_list(shared)});
            },
            [&](const GOpt& x) {
              std::set<Role> allowed = introduced_roles(x.body);
              for (auto& pt : x.parts) allowed.insert(pt.role);
              std::set<Role> stray;
              for (auto& r : roles_of(x.body))
                if (!allowed.count(r)) stray.insert(r);
              if (!stray.empty())
                rep.add({"proj.opt-roles", loc,
                         "role(s) " + role_list(stray) + " in the block body are not participants"});
            },
            [&](const GDecl& x) {
              std::set<Role> allowed = introduced_roles(x.body);
              allowed.insert(x.internal.begin(), x.internal.end());
              allowed.insert(x.external.begin(), x.external.end());
              std::set<Role> stray;
              for (auto& r : roles_of(x.body))
                if (!allowed.count(r)) stray.insert(r);
              if (!stray.empty())
                rep.add({"proj.let-roles", loc,
                         "role(s) " + role_list(stray) + " in protocol '" + x.proto.id +
                             "' are neither internal nor external"});
            },
            [&](const auto&) {},
        },
        n->v);
  });
  return rep;
}

WfReport check_linearity(const Global& g) {
  WfReport rep;
  walk(g, "", [&](const Global& n, const std::string& loc) {
    auto* x = std::get_if<GPar>(&n->v);
    if (!x) return;
    auto a = triples(x->left), b = triples(x->right);
    for (auto& t : a) {
      if (!b.count(t)) continue;
      rep.add({"linearity", loc,
               "both components contain " + std::get<0>(t) + " -> " + std::get<1>(t) + " : " +
                   std::get<2>(t)});
    }
  });
  return rep;
}

WfReport check_wellformed(const Global& g, const KindEnv& env) {
  WfReport rep = check_kinding(g, env);
  rep.merge(check_projectable(g));
  rep.merge(check_linearity(g));
  return rep;
}

}  // namespace optsession
