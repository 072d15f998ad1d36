#include "optsession/envreduction.hpp"

#include "optsession/printer.hpp"
#include "optsession/projection.hpp"

#include <algorithm>
#include <climits>
#include <queue>
#include <unordered_set>

namespace optsession {

std::string to_string(CoherenceLevel l) {
  switch (l) {
    case CoherenceLevel::Coherent: return "coherent";
    case CoherenceLevel::InitiallyCoherent: return "initiallyCoherent";
    case CoherenceLevel::WeaklyCoherent: return "weaklyCoherent";
    case CoherenceLevel::Incoherent: break;
  }
  return "incoherent";
}

namespace {

Local unfold(Local t) {
  for (int i = 0; i < 16 && is<LRec>(t); ++i) {
    const auto& r = std::get<LRec>(t->v);
    t = substitute_var(r.body, r.var, t);
  }
  return t;
}

// A position inside an endpoint's type. Path elements: Par component index; after an Opt, the
// index of a component of its body; after a Choice, the side and then a component index.
struct Site {
  EndpointKey key;
  Path path;
  Local node;
  std::vector<std::vector<Role>> optParts;  // enclosing blocks, outermost first
  bool inChoice = false;
};

void collect_sites(const EndpointKey& key, const Local& t, const Path& prefix,
                   std::vector<std::vector<Role>> parts, bool inChoice, std::vector<Site>& out) {
  auto comps = par_components(t);
  for (size_t i = 0; i < comps.size(); ++i) {
    Local u = unfold(comps[i]);
    Path p = prefix;
    p.push_back(static_cast<int>(i));
    if (auto* o = std::get_if<LOpt>(&u->v)) {
      out.push_back(Site{key, p, u, parts, inChoice});
      auto inner = parts;
      inner.push_back(o->parts);
      collect_sites(key, o->body, p, inner, inChoice, out);
    } else if (auto* c = std::get_if<LChoice>(&u->v)) {
      Path l = p, r = p;
      l.push_back(0);
      r.push_back(1);
      collect_sites(key, c->left, l, parts, true, out);
      collect_sites(key, c->right, r, parts, true, out);
    } else {
      out.push_back(Site{key, p, u, parts, inChoice});
    }
  }
}

struct Edit {
  Path path;
  Local by;
};

std::optional<Local> replace_many(const Local& t, const std::vector<Edit>& edits, size_t off) {
  auto comps = par_components(t);
  std::map<int, std::vector<Edit>> groups;
  for (auto& e : edits) groups[e.path.at(off)].push_back(e);
  for (auto& [idx, es] : groups) {
    if (idx < 0 || static_cast<size_t>(idx) >= comps.size()) return std::nullopt;
    Local u = unfold(comps[static_cast<size_t>(idx)]);
    bool here = std::any_of(es.begin(), es.end(), [&](auto& e) { return e.path.size() == off + 1; });
    if (here) {
      if (es.size() != 1) return std::nullopt;
      comps[static_cast<size_t>(idx)] = es.front().by;
    } else if (auto* o = std::get_if<LOpt>(&u->v)) {
      auto body = replace_many(o->body, es, off + 1);
      if (!body) return std::nullopt;
      comps[static_cast<size_t>(idx)] = l::opt(o->parts, *body, o->binders, o->cont);
    } else if (auto* c = std::get_if<LChoice>(&u->v)) {
      int side = es.front().path.at(off + 1);
      for (auto& e : es)
        if (e.path.at(off + 1) != side) return std::nullopt;
      auto chosen = replace_many(side == 0 ? c->left : c->right, es, off + 2);
      if (!chosen) return std::nullopt;
      comps[static_cast<size_t>(idx)] = *chosen;
    } else {
      return std::nullopt;
    }
  }
  return l::par(comps);
}

bool same_role_set(std::vector<Role> a, std::vector<Role> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return a == b;
}

struct SiteEdit {
  const Site* site;
  Local by;
};

std::optional<SessionEnv> apply_edits(const SessionEnv& d, const std::vector<SiteEdit>& edits) {
  std::map<EndpointKey, std::vector<Edit>> per;
  for (auto& e : edits) per[e.site->key].push_back(Edit{e.site->path, e.by});
  SessionEnv out = d;
  for (auto& [key, es] : per) {
    const Assignment* a = d.find(key);
    if (!a) return std::nullopt;
    auto t = replace_many(a->type, es, 0);
    if (!t) return std::nullopt;
    Mode m = a->mode;
    out.erase(key);
    out.put(key, m, *t);
  }
  return out;
}

std::string wrapper(const std::vector<const Site*>& sites, const SessionEnv& d,
                    const std::string& base) {
  for (auto* s : sites)
    if (s->inChoice) return "choice'";
  if (sites.size() == 2 && !sites[0]->optParts.empty() && !sites[1]->optParts.empty() &&
      same_role_set(sites[0]->optParts.front(), sites[1]->optParts.front()))
    return "optCom";
  for (auto* s : sites)
    if (!s->optParts.empty()) return "opt'";
  for (auto* s : sites)
    if (auto* a = d.find(s->key); a && par_components(a->type).size() > 1) return "par";
  return base;
}

std::string site_str(const Site& s) {
  return s.key.session.id + "[" + s.key.role.id + "]@" + to_string(s.path);
}

std::vector<Role> internal_roles(const LCall& c, const ProtocolEnv& protocols) {
  if (protocols.contains(c.proto)) return protocols.at(c.proto).internal;
  std::vector<Role> out;
  for (auto& r : roles_of(c.body))
    if (std::find(c.external.begin(), c.external.end(), r) == c.external.end()) out.push_back(r);
  return out;
}

Global instantiate_call(const LCall& c) {
  Subst s;
  for (size_t i = 0; i < c.argBinders.size() && i < c.argVals.size(); ++i)
    s[c.argBinders[i].name] = c.argVals[i];
  return substitute(c.body, s);
}

ProtocolEnv with_declared(const ProtocolEnv& base, const Global& g) {
  return declared_protocols(g, base);
}

struct Filter {
  std::set<std::string> bases;              // empty: all
  std::optional<Name> session;              // comS'/subs': session of the sites
  std::optional<Name> liftSession;          // comC'/join': session of the lifted entry
  std::optional<EndpointKey> from, to;      // comS'/join' endpoints
  std::optional<std::string> label;         // comS'
  std::optional<Role> owner;                // fail'/succ'
  std::optional<std::vector<Role>> parts;   // fail'/succ'
};

bool wants(const Filter& f, const std::string& base) {
  return f.bases.empty() || f.bases.count(base);
}

std::vector<EnvStep> steps_impl(const SessionEnv& d, const ProtocolEnv& protocols,
                                const std::vector<Name>& freshNames, const Filter& f) {
  std::vector<Site> sites;
  for (auto& [key, a] : d.assignments)
    if (a.mode == Mode::Plain) collect_sites(key, a.type, {}, {}, false, sites);

  std::vector<EnvStep> out;
  auto push = [&](std::string base, std::vector<const Site*> ss, std::optional<SessionEnv> r,
                  std::string detail) {
    if (!r) return;
    out.push_back(EnvStep{wrapper(ss, d, base), std::move(base), std::move(*r), std::move(detail)});
  };

  if (wants(f, "comS'")) {
    for (auto& a : sites) {
      auto* s = std::get_if<LSend>(&a.node->v);
      if (!s) continue;
      if (f.from && !(a.key == *f.from)) continue;
      for (auto& b : sites) {
        auto* g = std::get_if<LGet>(&b.node->v);
        if (!g || b.key.session != a.key.session || b.key.role != s->to || g->from != a.key.role ||
            a.key == b.key)
          continue;
        if (f.to && !(b.key == *f.to)) continue;
        for (auto& sb : s->branches) {
          if (f.label && sb.label.id != *f.label) continue;
          auto gb = std::find_if(g->branches.begin(), g->branches.end(),
                                 [&](auto& x) { return x.label == sb.label; });
          if (gb == g->branches.end() || gb->params.size() != sb.params.size()) continue;
          push("comS'", {&a, &b}, apply_edits(d, {{&a, sb.cont}, {&b, gb->cont}}),
               site_str(a) + " -> " + site_str(b) + ":" + sb.label.id);
        }
      }
    }
  }

  if (wants(f, "comC'")) {
    for (auto& [key, a] : d.assignments) {
      if (a.mode != Mode::External) continue;
      if (f.liftSession && key.session != *f.liftSession) continue;
      SessionEnv r = d;
      r.erase(key);
      r.put(key, Mode::Plain, a.type);
      out.push_back(EnvStep{"comC'", "comC'", r, print_endpoint(key, Mode::External)});
    }
  }

  if (wants(f, "subs'")) {
    std::set<Name> taken;
    for (auto& [key, a] : d.assignments) taken.insert(key.session);
    for (auto& a : sites) {
      auto* c = std::get_if<LCall>(&a.node->v);
      if (!c) continue;
      if (f.session && a.key.session != *f.session) continue;
      std::vector<Name> names = freshNames;
      if (names.empty()) names.push_back(taken.count(Name{"k"}) ? fresh_name(Name{"k"}, taken) : Name{"k"});
      for (auto& k : names) {
        if (taken.count(k)) continue;
        auto r = apply_edits(d, {{&a, c->cont}});
        if (!r) continue;
        Global G = instantiate_call(*c);
        ProtocolEnv env = with_declared(protocols, G);
        try {
          for (auto& role : internal_roles(*c, protocols))
            r->put(EndpointKey{k, role}, Mode::Internal, project(G, env, role));
          for (auto& role : c->external)
            r->put(EndpointKey{k, role}, Mode::External, project(G, env, role));
        } catch (const std::exception&) {
          continue;
        }
        push("subs'", {&a}, r, site_str(a) + " new " + k.id);
      }
    }
  }

  if (wants(f, "join'")) {
    for (auto& a : sites) {
      auto* q = std::get_if<LReq>(&a.node->v);
      if (!q) continue;
      if (f.from && !(a.key == *f.from)) continue;
      for (auto& b : sites) {
        auto* e = std::get_if<LEnt>(&b.node->v);
        if (!e || b.key.session != a.key.session || b.key.role != q->invitee ||
            e->inviter != a.key.role || e->asRole != q->forRole || e->proto != q->proto || &a == &b)
          continue;
        for (auto& [ikey, ia] : d.assignments) {
          if (ia.mode != Mode::Internal || ikey.role != q->forRole) continue;
          if (f.liftSession && ikey.session != *f.liftSession) continue;
          auto r = apply_edits(d, {{&a, q->cont}, {&b, e->cont}});
          if (!r) continue;
          r->erase(ikey);
          r->put(ikey, Mode::Plain, ia.type);
          push("join'", {&a, &b}, r, site_str(a) + " ~ " + site_str(b) + " lifts ~" + ikey.session.id);
        }
      }
    }
  }

  for (auto& a : sites) {
    auto* o = std::get_if<LOpt>(&a.node->v);
    if (!o) continue;
    if (f.owner && a.key.role != *f.owner) continue;
    if (f.parts && !same_role_set(*f.parts, o->parts)) continue;
    if (wants(f, "fail'")) {
      auto r = apply_edits(d, {{&a, o->cont}});
      push("fail'", {&a}, r, site_str(a));
      // The discarded body may own a whole sub-session; guess one session at a time.
      if (r) {
        std::set<Name> others;
        for (auto& [key, x] : r->assignments)
          if (key.session != a.key.session) others.insert(key.session);
        for (auto& k : others) {
          SessionEnv dropped = *r;
          for (auto& [key, x] : r->assignments)
            if (key.session == k) dropped.erase(key);
          push("fail'", {&a}, dropped, site_str(a) + " drops " + k.id);
        }
      }
    }
    if (wants(f, "succ'") && par_components(o->body).empty())
      push("succ'", {&a}, apply_edits(d, {{&a, o->cont}}), site_str(a));
  }
  return out;
}

size_t local_weight(const Local& t, const ProtocolEnv& protocols, int depth);

size_t call_weight(const LCall& c, const ProtocolEnv& protocols, int depth) {
  if (depth > 8) return 1;
  Global G = instantiate_call(c);
  ProtocolEnv env = with_declared(protocols, G);
  size_t w = 1;
  try {
    for (auto& r : internal_roles(c, protocols)) w += 1 + local_weight(project(G, env, r), env, depth + 1);
    for (auto& r : c.external) w += 1 + local_weight(project(G, env, r), env, depth + 1);
  } catch (const std::exception&) {
  }
  return w;
}

size_t local_weight(const Local& t, const ProtocolEnv& protocols, int depth) {
  return std::visit(
      overloaded{
          [&](const LGet& x) {
            size_t n = 1;
            for (auto& b : x.branches) n += local_weight(b.cont, protocols, depth);
            return n;
          },
          [&](const LSend& x) {
            size_t n = 1;
            for (auto& b : x.branches) n += local_weight(b.cont, protocols, depth);
            return n;
          },
          [&](const LOpt& x) {
            return 1 + local_weight(x.body, protocols, depth) + local_weight(x.cont, protocols, depth);
          },
          [&](const LCall& x) {
            return 1 + call_weight(x, protocols, depth) + local_weight(x.cont, protocols, depth);
          },
          [&](const LEnt& x) { return 1 + local_weight(x.cont, protocols, depth); },
          [&](const LReq& x) { return 1 + local_weight(x.cont, protocols, depth); },
          [&](const LChoice& x) {
            return 1 + local_weight(x.left, protocols, depth) + local_weight(x.right, protocols, depth);
          },
          [&](const LPar& x) {
            return local_weight(x.left, protocols, depth) + local_weight(x.right, protocols, depth);
          },
          [&](const LRec& x) { return 1 + local_weight(x.body, protocols, depth); },
          [&](const auto&) { return size_t{0}; },
      },
      t->v);
}

// ---------- matching ----------

void used_endpoints(const Proc& q, std::set<EndpointKey>& out) {
  std::visit(overloaded{
                 [&](const PSend& x) {
                   out.insert({x.session, x.from});
                   used_endpoints(x.cont, out);
                 },
                 [&](const PGet& x) {
                   out.insert({x.session, x.to});
                   for (auto& b : x.branches) used_endpoints(b.cont, out);
                 },
                 [&](const PReq& x) {
                   out.insert({x.session, x.inviter});
                   out.insert({x.sub, x.asRole});
                   used_endpoints(x.cont, out);
                 },
                 [&](const PEnt& x) {
                   out.insert({x.session, x.invitee});
                   used_endpoints(x.cont, out);
                 },
                 [&](const POpt& x) {
                   used_endpoints(x.body, out);
                   used_endpoints(x.cont, out);
                 },
                 [&](const PPar& x) {
                   used_endpoints(x.left, out);
                   used_endpoints(x.right, out);
                 },
                 [&](const PChoice& x) {
                   used_endpoints(x.left, out);
                   used_endpoints(x.right, out);
                 },
                 [&](const PRes& x) { used_endpoints(x.body, out); },
                 [&](const PRec& x) { used_endpoints(x.body, out); },
                 [&](const PIn& x) { used_endpoints(x.cont, out); },
                 [&](const POut& x) { used_endpoints(x.cont, out); },
                 [&](const PDecl& x) { used_endpoints(x.cont, out); },
                 [&](const auto&) {},
             },
             q->v);
}

Filter filter_for(const RedexStep& step, const GlobalEnv& gamma, std::vector<Name>& fresh) {
  Filter f;
  const RedexStep* s = &step;
  while (s->rule == "choice" && s->inner) s = s->inner.get();
  const std::string& r = s->rule;
  if (r == "comS" || r == "cSO") {
    const auto& x = std::get<PSend>(s->redexes.at(0)->v);
    f.bases = {"comS'"};
    f.from = EndpointKey{x.session, x.from};
    f.to = EndpointKey{x.session, x.to};
    f.label = x.label.id;
  } else if (r == "comC" || r == "cCO") {
    const auto& x = std::get<POut>(s->redexes.at(0)->v);
    f.bases = {"comC'"};
    if (!x.payload.empty()) f.liftSession = x.payload.front();
    (void)gamma;
  } else if (r == "subs") {
    const auto& x = std::get<PDecl>(s->redexes.at(0)->v);
    f.bases = {"subs'"};
    f.session = x.parent;
    fresh = {x.session};
  } else if (r == "join" || r == "jO") {
    const auto& x = std::get<PReq>(s->redexes.at(0)->v);
    f.bases = {"join'"};
    f.from = EndpointKey{x.session, x.inviter};
    f.liftSession = x.sub;
  } else if (r == "fail" || r == "succ") {
    const auto& x = std::get<POpt>(s->redexes.at(0)->v);
    f.bases = {"fail'"};
    if (r == "succ") f.bases.insert("succ'");
    f.owner = x.owner;
    f.parts = x.parts;
  }
  return f;
}

}  // namespace

std::vector<EnvStep> env_steps(const SessionEnv& d, const ProtocolEnv& protocols,
                               const std::vector<Name>& freshNames) {
  return steps_impl(d, protocols, freshNames, Filter{});
}

size_t env_potential(const SessionEnv& d, const ProtocolEnv& protocols) {
  size_t n = 0;
  for (auto& [k, a] : d.assignments) {
    n += local_weight(a.type, protocols, 0);
    if (a.mode != Mode::Plain) n += 1;
  }
  return n;
}

EnvStep matching_env_step(const GlobalEnv& gamma, const SessionEnv& delta, const RedexStep& step,
                          const CheckOptions& opts) {
  std::vector<Name> fresh;
  Filter f = filter_for(step, gamma, fresh);
  // A finished sub-session may leave entries behind after the process forgot its name, so the
  // name can come back from a new (subs). Such entries are renamed apart first.
  SessionEnv d = delta;
  for (auto& k : fresh) {
    std::set<Name> avoid = all_names(step.result);
    for (auto& [key, a] : delta.assignments) avoid.insert(key.session);
    Name other = fresh_name(k, avoid);
    for (auto& [key, a] : delta.assignments)
      if (key.session == k) {
        d.erase(key);
        d.put(EndpointKey{other, key.role}, a.mode, a.type);
      }
  }
  auto cands = steps_impl(d, gamma.protocols, fresh, f);

  // (fail') also discards what the aborted block's content was typed with.
  const RedexStep* s = &step;
  while (s->rule == "choice" && s->inner) s = s->inner.get();
  if (s->rule == "fail") {
    const auto& o = std::get<POpt>(s->redexes.at(0)->v);
    std::set<EndpointKey> used;
    used_endpoints(o.body, used);
    size_t plain = cands.size();
    for (size_t i = 0; i < plain; ++i) {
      EnvStep c = cands[i];
      bool changed = false;
      for (auto& k : used) {
        // the block's own endpoint carries the continuation
        if (k.role == o.owner || !c.result.find(k)) continue;
        c.result.erase(k);
        c.detail += " drops " + k.session.id + "[" + k.role.id + "]";
        changed = true;
      }
      if (changed) cands.push_back(std::move(c));
    }
  }
  // (succ') is the special case of (fail') that names the success
  if (s->rule == "succ")
    std::stable_partition(cands.begin(), cands.end(), [](auto& c) { return c.base == "succ'"; });
  for (auto& c : cands)
    if (!typecheck(gamma, step.result, c.result, opts)) return c;
  throw NoMatchingEnvStep("no environment step matches '" + step.label + "' (" +
                          std::to_string(cands.size()) + " candidates)");
}

SessionEnv matching_env(const GlobalEnv& gamma, const Proc&, const SessionEnv& delta,
                        const RedexStep& step, const CheckOptions& opts) {
  return matching_env_step(gamma, delta, step, opts).result;
}

// ---------- coherence ----------

namespace {

struct Tally {
  std::map<std::string, long> comms;                               // +send -get
  std::map<std::string, std::map<std::string, long>> blocks;       // parts -> role -> count
  std::map<std::string, long> invites;                             // +req -ent
};

void tally(const Name& s, const Role& r, const Local& t, Tally& out, int depth = 0) {
  if (depth > 64) return;
  std::visit(overloaded{
                 [&](const LSend& x) {
                   std::string ls;
                   std::vector<std::string> v;
                   for (auto& b : x.branches) v.push_back(b.label.id);
                   std::sort(v.begin(), v.end());
                   for (auto& l : v) ls += l + ",";
                   out.comms[s.id + " " + r.id + "->" + x.to.id + " {" + ls + "}"] += 1;
                   for (auto& b : x.branches) tally(s, r, b.cont, out, depth + 1);
                 },
                 [&](const LGet& x) {
                   std::string ls;
                   std::vector<std::string> v;
                   for (auto& b : x.branches) v.push_back(b.label.id);
                   std::sort(v.begin(), v.end());
                   for (auto& l : v) ls += l + ",";
                   out.comms[s.id + " " + x.from.id + "->" + r.id + " {" + ls + "}"] -= 1;
                   for (auto& b : x.branches) tally(s, r, b.cont, out, depth + 1);
                 },
                 [&](const LOpt& x) {
                   auto ps = x.parts;
                   std::sort(ps.begin(), ps.end());
                   auto& m = out.blocks[s.id + " opt[" + join_roles(ps) + "]"];
                   for (auto& q : ps) m[q.id] += 0;
                   m[r.id] += 1;
                   tally(s, r, x.body, out, depth + 1);
                   tally(s, r, x.cont, out, depth + 1);
                 },
                 [&](const LCall& x) { tally(s, r, x.cont, out, depth + 1); },
                 [&](const LReq& x) {
                   out.invites[s.id + " " + r.id + "->" + x.invitee.id + " as " + x.forRole.id] += 1;
                   tally(s, r, x.cont, out, depth + 1);
                 },
                 [&](const LEnt& x) {
                   out.invites[s.id + " " + x.inviter.id + "->" + r.id + " as " + x.asRole.id] -= 1;
                   tally(s, r, x.cont, out, depth + 1);
                 },
                 // projection gives non-choosers the left branch
                 [&](const LChoice& x) { tally(s, r, x.left, out, depth + 1); },
                 [&](const LPar& x) {
                   tally(s, r, x.left, out, depth + 1);
                   tally(s, r, x.right, out, depth + 1);
                 },
                 [&](const LRec& x) { tally(s, r, x.body, out, depth + 1); },
                 [&](const auto&) {},
             },
             t->v);
}

}  // namespace

namespace {

struct Assessment {
  std::vector<std::string> witnesses;
  size_t magnitude = 0;  // how far from balanced, used to steer the search
};

Assessment assess(const SessionEnv& d, bool allowExternal) {
  Assessment out;
  auto& w = out.witnesses;
  Tally t;
  for (auto& [key, a] : d.assignments) {
    if (a.mode == Mode::Internal)
      w.push_back("open internal invitation " + print_endpoint(key, a.mode));
    if (a.mode == Mode::External && !allowExternal)
      w.push_back("open external invitation " + print_endpoint(key, a.mode));
    tally(key.session, key.role, a.type, t);
  }
  out.magnitude = w.size();
  for (auto& [k, n] : t.comms)
    if (n != 0) {
      w.push_back("unmatched communication " + k + ": " +
                  (n > 0 ? std::to_string(n) + " send(s) without receiver"
                         : std::to_string(-n) + " receive(s) without sender"));
      out.magnitude += static_cast<size_t>(std::labs(n));
    }
  for (auto& [k, m] : t.blocks) {
    long lo = LONG_MAX, hi = 0;
    for (auto& [r, n] : m) {
      lo = std::min(lo, n);
      hi = std::max(hi, n);
    }
    if (lo != hi) {
      std::string counts;
      for (auto& [r, n] : m) counts += (counts.empty() ? "" : ", ") + r + ":" + std::to_string(n);
      w.push_back("unmatched optional block " + k + " (" + counts + ")");
      for (auto& [r, n] : m) out.magnitude += static_cast<size_t>(hi - n);
    }
  }
  for (auto& [k, n] : t.invites)
    if (n != 0) {
      w.push_back("unmatched invitation " + k);
      out.magnitude += static_cast<size_t>(std::labs(n));
    }
  if (d.returnKinds) {
    w.push_back("return kinds present");
    ++out.magnitude;
  }
  return out;
}

}  // namespace

std::vector<std::string> coherence_witnesses(const SessionEnv& d, bool allowExternal) {
  return assess(d, allowExternal).witnesses;
}

bool is_coherent(const SessionEnv& d) { return coherence_witnesses(d, false).empty(); }

std::optional<std::vector<EnvStep>> find_coherent_successor(const SessionEnv& d, size_t bound,
                                                            const ProtocolEnv& protocols,
                                                            size_t maxStates) {
  struct Node {
    size_t score;
    size_t depth;
    size_t id;
  };
  struct Entry {
    SessionEnv env;
    long parent;
    EnvStep via;
  };
  auto score = [](const SessionEnv& e) { return assess(e, false).magnitude; };
  // greedy: closest to balanced first, then deepest; interleavings of independent steps make
  // breadth-first orders hopeless
  auto cmp = [](const Node& a, const Node& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.depth != b.depth) return a.depth < b.depth;
    return a.id > b.id;
  };
  std::priority_queue<Node, std::vector<Node>, decltype(cmp)> open(cmp);
  std::vector<Entry> nodes;
  std::unordered_set<std::string> seen;
  nodes.push_back(Entry{d, -1, {}});
  seen.insert(env_key(d));
  open.push(Node{score(d), 0, 0});
  bool truncated = false;
  while (!open.empty()) {
    Node n = open.top();
    open.pop();
    if (n.score == 0) {
      std::vector<EnvStep> path;
      for (long i = static_cast<long>(n.id); nodes[static_cast<size_t>(i)].parent >= 0;
           i = nodes[static_cast<size_t>(i)].parent)
        path.push_back(nodes[static_cast<size_t>(i)].via);
      std::reverse(path.begin(), path.end());
      return path;
    }
    if (n.depth >= bound) {
      truncated = true;
      continue;
    }
    SessionEnv cur = nodes[n.id].env;
    for (auto& st : env_steps(cur, protocols)) {
      if (!seen.insert(env_key(st.result)).second) continue;
      if (nodes.size() >= maxStates)
        throw SearchBudgetExceeded("coherence search exceeded " + std::to_string(maxStates) +
                                   " environments");
      size_t sc = score(st.result);
      nodes.push_back(Entry{st.result, static_cast<long>(n.id), st});
      open.push(Node{sc, n.depth + 1, nodes.size() - 1});
    }
  }
  if (truncated)
    throw SearchBudgetExceeded("no coherent environment within " + std::to_string(bound) +
                               " steps; closure not exhausted");
  return std::nullopt;
}

CoherenceVerdict classify_coherence(const SessionEnv& d,
                                    const std::optional<std::map<Name, Global>>& provenance,
                                    std::optional<size_t> bound, const ProtocolEnv& protocols) {
  CoherenceVerdict v;
  auto strict = coherence_witnesses(d, false);
  if (strict.empty()) {
    v.level = CoherenceLevel::Coherent;
    return v;
  }
  auto relaxed = coherence_witnesses(d, true);
  if (relaxed.empty()) {
    v.level = CoherenceLevel::InitiallyCoherent;
    v.witnesses = strict;
    return v;
  }
  v.witnesses = relaxed;
  if (provenance) {
    // Environment steps never create external invitations on a session that already runs,
    // so such entries cannot stem from a coherent ancestor.
    for (auto& [key, a] : d.assignments)
      if (a.mode == Mode::External && provenance->count(key.session)) {
        v.level = CoherenceLevel::Incoherent;
        v.witnesses.push_back("external invitation " + print_endpoint(key, a.mode) +
                              " next to unmatched parts");
        return v;
      }
  }
  size_t b = bound ? *bound : d.type_size() + 16;
  auto path = find_coherent_successor(d, b, protocols);
  v.level = path ? CoherenceLevel::WeaklyCoherent : CoherenceLevel::Incoherent;
  return v;
}

}  // namespace optsession
