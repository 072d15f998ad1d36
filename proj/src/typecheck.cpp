#include "optsession/typecheck.hpp"

#include "optsession/printer.hpp"
#include "optsession/projection.hpp"

#include <algorithm>
#include <functional>

namespace optsession {

std::string to_string(const TypeError& e) {
  return "rule " + e.rule + " at " + e.location + ": expected " + e.expected + ", found " + e.found;
}

namespace {

using Result = std::optional<TypeError>;

Local unfold(Local t) {
  for (int i = 0; i < 16 && is<LRec>(t); ++i) {
    const auto& r = std::get<LRec>(t->v);
    t = substitute_var(r.body, r.var, t);
  }
  return t;
}

// Readings of a component under (S2): choices are resolved to either side, recursion unfolded.
void resolutions(const Local& t, std::vector<Local>& out) {
  Local u = unfold(t);
  if (auto* c = std::get_if<LChoice>(&u->v)) {
    resolutions(c->left, out);
    resolutions(c->right, out);
    return;
  }
  out.push_back(u);
}

struct Pick {
  Local chosen;
  std::vector<Local> others;  // the remaining Par components of the endpoint
};

std::vector<Pick> picks(const Local& type, const std::function<bool(const Local&)>& pred) {
  std::vector<Pick> out;
  auto comps = par_components(type);
  for (size_t i = 0; i < comps.size(); ++i) {
    std::vector<Local> rs;
    resolutions(comps[i], rs);
    for (auto& r : rs) {
      auto sub = par_components(r);
      for (size_t j = 0; j < sub.size(); ++j) {
        Local u = unfold(sub[j]);
        if (!pred(u)) continue;
        Pick pk{u, {}};
        for (size_t k = 0; k < comps.size(); ++k)
          if (k != i) pk.others.push_back(comps[k]);
        for (size_t k = 0; k < sub.size(); ++k)
          if (k != j) pk.others.push_back(sub[k]);
        out.push_back(std::move(pk));
      }
    }
  }
  return out;
}

void set_comps(SessionEnv& d, const EndpointKey& k, Mode m, const std::vector<Local>& comps) {
  d.erase(k);
  d.put(k, m, l::par(comps));
}

// Adds t at k, composing in parallel with an existing assignment of the same mode.
bool add(SessionEnv& d, const EndpointKey& k, Mode m, const Local& t) {
  if (auto* a = d.find(k)) {
    if (a->mode != m) return false;
    d.put(k, m, l::par(a->type, t));
    return true;
  }
  d.put(k, m, t);
  return true;
}

std::string sorted_roles(std::vector<Role> rs) {
  std::sort(rs.begin(), rs.end());
  return join_roles(rs);
}

bool same_role_set(const std::vector<Role>& a, const std::vector<Role>& b) {
  return sorted_roles(a) == sorted_roles(b) && a.size() == b.size();
}

std::string kinds_str(const std::vector<Kind>& ks) {
  std::string s = "(";
  for (size_t i = 0; i < ks.size(); ++i) s += (i ? ", " : "") + to_string(ks[i]);
  return s + ")";
}

std::string labels_of(const std::vector<PBranch>& bs) {
  std::vector<std::string> ls;
  for (auto& b : bs) ls.push_back(b.label.id);
  std::sort(ls.begin(), ls.end());
  std::string s;
  for (auto& l : ls) s += (s.empty() ? "" : ",") + l;
  return "{" + s + "}";
}
std::string labels_of(const std::vector<LBranch>& bs) {
  std::vector<std::string> ls;
  for (auto& b : bs) ls.push_back(b.label.id);
  std::sort(ls.begin(), ls.end());
  std::string s;
  for (auto& l : ls) s += (s.empty() ? "" : ",") + l;
  return "{" + s + "}";
}

Path child(const Path& at, int i) {
  Path p = at;
  p.push_back(i);
  return p;
}

// ---------- endpoint usage shapes, for splitting ----------

std::string opt_shape(const std::vector<Role>& parts, const std::string& body) {
  return "O:" + sorted_roles(parts) + "/" + body;
}

bool shape_compat(const std::string& a, const std::string& b) {
  if (a == "*" || b == "*" || a == b) return true;
  if (a.rfind("O:", 0) == 0 && b.rfind("O:", 0) == 0) {
    auto sa = a.find('/'), sb = b.find('/');
    if (a.substr(0, sa) != b.substr(0, sb)) return false;
    return shape_compat(a.substr(sa + 1), b.substr(sb + 1));
  }
  return false;
}

bool any_compat(const std::vector<std::string>& xs, const std::vector<std::string>& ys) {
  for (auto& x : xs)
    for (auto& y : ys)
      if (shape_compat(x, y)) return true;
  return false;
}

std::vector<std::string> type_shapes(const Local& t, Mode mode) {
  if (mode == Mode::External) return {"X"};
  if (mode == Mode::Internal) return {"I"};
  Local u = unfold(t);
  return std::visit(
      overloaded{
          [](const LSend& x) {
            std::vector<std::string> out;
            for (auto& b : x.branches) out.push_back("S:" + x.to.id + ":" + b.label.id);
            return out;
          },
          [](const LGet& x) {
            return std::vector<std::string>{"G:" + x.from.id + ":" + labels_of(x.branches)};
          },
          [](const LOpt& x) {
            std::vector<std::string> out;
            for (auto& c : par_components(x.body))
              for (auto& s : type_shapes(c, Mode::Plain)) out.push_back(opt_shape(x.parts, s));
            if (out.empty()) out.push_back(opt_shape(x.parts, "*"));
            return out;
          },
          [](const LCall&) { return std::vector<std::string>{"C"}; },
          [](const LEnt& x) {
            return std::vector<std::string>{"E:" + x.asRole.id + ":" + x.inviter.id};
          },
          [](const LReq& x) {
            return std::vector<std::string>{"Q:" + x.forRole.id + ":" + x.invitee.id};
          },
          [](const LPar& x) {
            auto a = type_shapes(x.left, Mode::Plain);
            auto b = type_shapes(x.right, Mode::Plain);
            a.insert(a.end(), b.begin(), b.end());
            return a;
          },
          [](const auto&) { return std::vector<std::string>{"*"}; },
      },
      u->v);
}

// Every action of q on endpoint e, in pre-order.
struct ShapeScan {
  const EndpointKey& e;
  Mode mode;
  const std::map<Name, SharedChan>& shared;
  std::vector<std::string> found;

  void scan(const Proc& q) {
    std::visit(
        overloaded{
            [&](const PIn& x) { scan(x.cont); },
            [&](const POut& x) {
              if (mode == Mode::External &&
                  std::find(x.payload.begin(), x.payload.end(), e.session) != x.payload.end()) {
                auto it = shared.find(x.chan);
                if (it == shared.end() || it->second.role == e.role) found.push_back("X");
              }
              scan(x.cont);
            },
            [&](const PGet& x) {
              if (mode == Mode::Plain && x.session == e.session && x.to == e.role)
                found.push_back("G:" + x.from.id + ":" + labels_of(x.branches));
              for (auto& b : x.branches) scan(b.cont);
            },
            [&](const PSend& x) {
              if (mode == Mode::Plain && x.session == e.session && x.from == e.role)
                found.push_back("S:" + x.to.id + ":" + x.label.id);
              scan(x.cont);
            },
            [&](const POpt& x) {
              if (mode == Mode::Plain && x.owner == e.role) {
                ShapeScan inner{e, mode, shared, {}};
                inner.scan(x.body);
                found.push_back(
                    opt_shape(x.parts, inner.found.empty() ? "*" : inner.found.front()));
              }
              scan(x.body);
              scan(x.cont);
            },
            [&](const POptEnd&) {},
            [&](const PDecl& x) {
              if (mode == Mode::Plain && x.parent == e.session) found.push_back("C");
              scan(x.cont);
            },
            [&](const PEnt& x) {
              if (mode == Mode::Plain && x.session == e.session && x.invitee == e.role)
                found.push_back("E:" + x.asRole.id + ":" + x.inviter.id);
              scan(x.cont);
            },
            [&](const PReq& x) {
              if (mode == Mode::Plain && x.session == e.session && x.inviter == e.role)
                found.push_back("Q:" + x.asRole.id + ":" + x.invitee.id);
              if (mode == Mode::Internal && x.sub == e.session && x.asRole == e.role)
                found.push_back("I");
              scan(x.cont);
            },
            [&](const PRes& x) { scan(x.body); },
            [&](const PChoice& x) {
              scan(x.left);
              scan(x.right);
            },
            [&](const PPar& x) {
              scan(x.left);
              scan(x.right);
            },
            [&](const PRec& x) { scan(x.body); },
            [&](const PVar&) { found.push_back("*"); },
            [&](const PEnd&) {},
        },
        q->v);
  }
};

// An optend of this owner not nested in another block's body.
bool has_unguarded_optend(const Proc& q, const Role& owner) {
  return std::visit(
      overloaded{
          [&](const POptEnd& x) { return x.owner == owner; },
          [&](const POpt& x) { return has_unguarded_optend(x.cont, owner); },
          [&](const PGet& x) {
            return std::any_of(x.branches.begin(), x.branches.end(),
                               [&](auto& b) { return has_unguarded_optend(b.cont, owner); });
          },
          [&](const PChoice& x) {
            return has_unguarded_optend(x.left, owner) || has_unguarded_optend(x.right, owner);
          },
          [&](const PPar& x) {
            return has_unguarded_optend(x.left, owner) || has_unguarded_optend(x.right, owner);
          },
          [&](const PRes& x) { return has_unguarded_optend(x.body, owner); },
          [&](const PRec& x) { return has_unguarded_optend(x.body, owner); },
          [&](const PVar&) { return false; },
          [&](const PEnd&) { return false; },
          [&](const auto& x) { return has_unguarded_optend(x.cont, owner); },
      },
      q->v);
}

struct Slot {
  EndpointKey key;
  Mode mode;
  Local comp;
  std::vector<size_t> users;
};

std::vector<std::vector<SessionEnv>> split_impl(const std::vector<Proc>& parts,
                                                const SessionEnv& d,
                                                const std::map<Name, SharedChan>& shared,
                                                std::optional<size_t> ovTo, size_t cap) {
  const size_t m = parts.size();
  std::vector<Slot> slots;
  for (auto& [key, a] : d.assignments) {
    std::vector<std::vector<std::string>> shapes(m), firsts(m);
    std::vector<size_t> users;
    for (size_t i = 0; i < m; ++i) {
      ShapeScan sc{key, a.mode, shared, {}};
      sc.scan(parts[i]);
      shapes[i] = sc.found;
      if (!sc.found.empty()) {
        users.push_back(i);
        firsts[i] = {sc.found.front()};
      }
    }
    if (users.empty())
      throw EnvError(EnvError::Code::SplitAmbiguous,
                     "endpoint " + print_endpoint(key, a.mode) + " : " + print(a.type) +
                         " is used by no parallel component");
    for (auto& c : par_components(a.type)) {
      Slot sl{key, a.mode, c, {}};
      if (users.size() == 1) {
        sl.users = users;
      } else {
        auto ts = type_shapes(c, a.mode);
        for (size_t u : users)
          if (any_compat(ts, firsts[u])) sl.users.push_back(u);
        for (size_t u : users)
          if (std::find(sl.users.begin(), sl.users.end(), u) == sl.users.end() &&
              any_compat(ts, shapes[u]))
            sl.users.push_back(u);
        if (sl.users.empty())
          throw EnvError(EnvError::Code::SplitImpossible,
                         "no parallel component can use " + print_endpoint(key, a.mode) + " : " +
                             print(c));
      }
      slots.push_back(std::move(sl));
    }
  }

  size_t ovIdx = 0;
  if (d.returnKinds) {
    if (ovTo) {
      ovIdx = *ovTo;
    } else {
      std::vector<size_t> holders;
      for (size_t i = 0; i < m; ++i)
        if (has_unguarded_optend(parts[i], d.returnKinds->role)) holders.push_back(i);
      if (holders.size() > 1)
        throw EnvError(EnvError::Code::DuplicateReturnKinds,
                       std::to_string(holders.size()) + " parallel components end the block of " +
                           d.returnKinds->role.id);
      if (!holders.empty()) ovIdx = holders.front();
    }
  }

  std::vector<std::vector<SessionEnv>> out;
  std::vector<size_t> choice(slots.size(), 0);
  std::function<void(size_t)> dfs = [&](size_t k) {
    if (out.size() >= cap) return;
    if (k == slots.size()) {
      std::vector<SessionEnv> envs(m);
      for (size_t s = 0; s < slots.size(); ++s)
        add(envs[choice[s]], slots[s].key, slots[s].mode, slots[s].comp);
      if (d.returnKinds) envs[ovIdx].returnKinds = d.returnKinds;
      out.push_back(std::move(envs));
      return;
    }
    for (size_t u : slots[k].users) {
      choice[k] = u;
      dfs(k + 1);
    }
  };
  dfs(0);
  return out;
}

void flatten_par(const Proc& q, const Path& at, std::vector<Proc>& parts, std::vector<Path>& paths) {
  if (auto* x = std::get_if<PPar>(&q->v)) {
    flatten_par(x->left, child(at, 0), parts, paths);
    flatten_par(x->right, child(at, 1), parts, paths);
    return;
  }
  if (is<PEnd>(q)) return;
  parts.push_back(q);
  paths.push_back(at);
}

bool declares(const Proc& q, const Name& k) {
  return std::visit(
      overloaded{
          [&](const PDecl& x) { return x.session == k || declares(x.cont, k); },
          [&](const PGet& x) {
            return std::any_of(x.branches.begin(), x.branches.end(),
                               [&](auto& b) { return declares(b.cont, k); });
          },
          [&](const POpt& x) { return declares(x.body, k) || declares(x.cont, k); },
          [&](const PChoice& x) { return declares(x.left, k) || declares(x.right, k); },
          [&](const PPar& x) { return declares(x.left, k) || declares(x.right, k); },
          [&](const PRes& x) { return declares(x.body, k); },
          [&](const PRec& x) { return declares(x.body, k); },
          [&](const POptEnd&) { return false; },
          [&](const PVar&) { return false; },
          [&](const PEnd&) { return false; },
          [&](const auto& x) { return declares(x.cont, k); },
      },
      q->v);
}

bool used_as_channel(const Proc& q, const Name& a) {
  return std::visit(
      overloaded{
          [&](const PIn& x) { return x.chan == a || used_as_channel(x.cont, a); },
          [&](const POut& x) { return x.chan == a || used_as_channel(x.cont, a); },
          [&](const PGet& x) {
            return std::any_of(x.branches.begin(), x.branches.end(),
                               [&](auto& b) { return used_as_channel(b.cont, a); });
          },
          [&](const POpt& x) { return used_as_channel(x.body, a) || used_as_channel(x.cont, a); },
          [&](const PChoice& x) {
            return used_as_channel(x.left, a) || used_as_channel(x.right, a);
          },
          [&](const PPar& x) { return used_as_channel(x.left, a) || used_as_channel(x.right, a); },
          [&](const PRes& x) { return used_as_channel(x.body, a); },
          [&](const PRec& x) { return used_as_channel(x.body, a); },
          [&](const PDecl& x) {
            return std::find(x.chans.begin(), x.chans.end(), a) != x.chans.end() ||
                   used_as_channel(x.cont, a);
          },
          [&](const POptEnd&) { return false; },
          [&](const PVar&) { return false; },
          [&](const PEnd&) { return false; },
          [&](const auto& x) { return used_as_channel(x.cont, a); },
      },
      q->v);
}

struct Ctx {
  std::map<Name, SharedChan> shared;
  std::map<Name, Global> sessions;
  std::set<Name> pending;  // restricted names awaiting their Decl
  std::map<Name, Kind> values;
  std::map<ProcVar, std::string> recs;
};

class Checker {
 public:
  Checker(const GlobalEnv& g, const CheckOptions& o) : gamma_(g), opts_(o) {}

  Result check(const Proc& p, const SessionEnv& d, const Ctx& ctx, const Path& at) {
    return std::visit(
        overloaded{
            [&](const PEnd&) { return end(d, at); },
            [&](const POptEnd& x) { return optend(x, d, ctx, at); },
            [&](const PIn& x) { return in(x, d, ctx, at); },
            [&](const POut& x) { return out(x, d, ctx, at); },
            [&](const PGet& x) { return get(x, d, ctx, at); },
            [&](const PSend& x) { return send(x, d, ctx, at); },
            [&](const POpt& x) { return opt(x, d, ctx, at); },
            [&](const PDecl& x) { return decl(x, d, ctx, at); },
            [&](const PEnt& x) { return ent(x, d, ctx, at); },
            [&](const PReq& x) { return req(x, d, ctx, at); },
            [&](const PRes& x) { return res(x, d, ctx, at); },
            [&](const PChoice& x) { return choice(x, d, ctx, at); },
            [&](const PPar&) { return par(p, d, ctx, at); },
            [&](const PRec& x) {
              Ctx c = ctx;
              c.recs[x.var] = env_key(d);
              return check(x.body, d, c, child(at, 0));
            },
            [&](const PVar& x) -> Result {
              auto it = ctx.recs.find(x.var);
              if (it == ctx.recs.end())
                return err("Rec", at, "process variable " + x.var.id + " bound by rec", "free");
              if (it->second != env_key(d))
                return err("Rec", at, "the environment recorded at rec " + x.var.id, print(d));
              return std::nullopt;
            },
        },
        p->v);
  }

 private:
  const GlobalEnv& gamma_;
  const CheckOptions& opts_;

  static TypeError err(std::string rule, const Path& at, std::string expected, std::string found) {
    return TypeError{std::move(rule), to_string(at), std::move(expected), std::move(found)};
  }

  // Keeps the failure that got furthest into the term.
  static void keep(Result& best, const Result& e) {
    if (!e) return;
    if (!best || std::count(e->location.begin(), e->location.end(), '/') >
                     std::count(best->location.begin(), best->location.end(), '/'))
      best = e;
  }

  std::optional<Kind> kind_of(const Name& n, const Ctx& ctx) const {
    if (auto it = ctx.values.find(n); it != ctx.values.end()) return it->second;
    if (auto it = gamma_.values.find(n); it != gamma_.values.end()) return it->second;
    return std::nullopt;
  }

  std::string kinds_of(const std::vector<Name>& ns, const Ctx& ctx) const {
    std::string s = "(";
    for (size_t i = 0; i < ns.size(); ++i) {
      auto k = kind_of(ns[i], ctx);
      s += (i ? ", " : "") + ns[i].id + ":" + (k ? to_string(*k) : "?");
    }
    return s + ")";
  }

  bool kinds_match(const std::vector<Name>& ns, const std::vector<Kind>& ks, const Ctx& ctx) const {
    if (ns.size() != ks.size()) return false;
    for (size_t i = 0; i < ns.size(); ++i) {
      auto k = kind_of(ns[i], ctx);
      if (!k || !(*k == ks[i])) return false;
    }
    return true;
  }

  std::set<Name> taken(const SessionEnv& d, const Ctx& ctx) const {
    std::set<Name> s;
    for (auto& [k, a] : d.assignments) s.insert(k.session);
    for (auto& [n, c] : ctx.shared) s.insert(n);
    for (auto& [n, g] : ctx.sessions) s.insert(n);
    s.insert(ctx.pending.begin(), ctx.pending.end());
    return s;
  }

  // Renames a binder that would collide with a name already in the environments.
  std::pair<Name, Proc> fresh_binder(const Name& b, const Proc& scope, const SessionEnv& d,
                                     const Ctx& ctx) const {
    auto avoid = taken(d, ctx);
    if (!avoid.count(b)) return {b, scope};
    auto all = all_names(scope);
    avoid.insert(all.begin(), all.end());
    Name nb = fresh_name(b, avoid);
    return {nb, substitute(scope, Subst{{b, nb}})};
  }

  Global instantiate(const ProtocolDef& def, const std::vector<Name>& args) const {
    Subst s;
    for (size_t i = 0; i < def.args.size() && i < args.size(); ++i) s[def.args[i].name] = args[i];
    return substitute(def.body, s);
  }

  Result end(const SessionEnv& d, const Path& at) const {
    if (d.returnKinds)
      return err("Opt", at,
                 "return kinds " + d.returnKinds->role.id + ":OV" + kinds_str(d.returnKinds->kinds) +
                     " consumed by an optend",
                 "0 with the block's return values never produced");
    if (!d.assignments.empty()) return err("N", at, "empty session environment", print(d));
    return std::nullopt;
  }

  Result optend(const POptEnd& x, const SessionEnv& d, const Ctx& ctx, const Path& at) const {
    if (!d.assignments.empty())
      return err("OptE", at, "no session assignments besides the return kinds", print(d));
    if (!d.returnKinds)
      return err("OptE", at, x.owner.id + ":OV(S) in the environment",
                 "no enclosing block expects return values");
    if (d.returnKinds->role != x.owner)
      return err("OptE", at, "return kinds owned by " + x.owner.id,
                 "owned by " + d.returnKinds->role.id);
    if (!kinds_match(x.values, d.returnKinds->kinds, ctx))
      return err("OptE", at, "|- v : S with S = " + kinds_str(d.returnKinds->kinds),
                 kinds_of(x.values, ctx));
    return std::nullopt;
  }

  Result in(const PIn& x, const SessionEnv& d, const Ctx& ctx, const Path& at) {
    auto it = ctx.shared.find(x.chan);
    if (it == ctx.shared.end())
      return err("UnknownChannel", at, "Gamma(" + x.chan.id + ") = T@r", "no entry");
    if (x.binders.size() != 1)
      return err("I", at, "exactly one received session name",
                 std::to_string(x.binders.size()) + " binders");
    auto [b, cont] = fresh_binder(x.binders[0], x.cont, d, ctx);
    SessionEnv d2 = d;
    if (!add(d2, EndpointKey{b, it->second.role}, Mode::Plain, it->second.type))
      return err("I", at, "fresh endpoint " + b.id + "[" + it->second.role.id + "]", print(d));
    return check(cont, d2, ctx, child(at, 0));
  }

  Result out(const POut& x, const SessionEnv& d, const Ctx& ctx, const Path& at) {
    auto it = ctx.shared.find(x.chan);
    if (it == ctx.shared.end())
      return err("UnknownChannel", at, "Gamma(" + x.chan.id + ") = T@r", "no entry");
    if (x.payload.size() != 1)
      return err("O", at, "exactly one session name sent",
                 std::to_string(x.payload.size()) + " names");
    EndpointKey key{x.payload[0], it->second.role};
    const Assignment* a = d.find(key);
    std::string want = "<" + key.session.id + ">[" + key.role.id + "] : " + print(it->second.type);
    if (!a || a->mode != Mode::External) return err("O", at, want, print(d));
    SessionEnv d2 = d;
    std::string target = erased_key(it->second.type);
    if (erased_key(a->type) == target) {
      d2.erase(key);
    } else {
      auto comps = par_components(a->type);
      auto pos = std::find_if(comps.begin(), comps.end(),
                              [&](auto& c) { return erased_key(c) == target; });
      if (pos == comps.end()) return err("O", at, want, print(a->type));
      comps.erase(pos);
      set_comps(d2, key, Mode::External, comps);
    }
    return check(x.cont, d2, ctx, child(at, 0));
  }

  Result get(const PGet& x, const SessionEnv& d, const Ctx& ctx, const Path& at) {
    EndpointKey key{x.session, x.to};
    const Assignment* a = d.find(key);
    std::string want = x.session.id + "[" + x.to.id + "] : " + x.from.id + "?" + labels_of(x.branches);
    if (!a || a->mode != Mode::Plain)
      return err("C", at, want, a ? print_endpoint(key, a->mode) : "no assignment");
    std::string labels = labels_of(x.branches);
    auto ps = picks(a->type, [&](const Local& t) {
      auto* g = std::get_if<LGet>(&t->v);
      return g && g->from == x.from && labels_of(g->branches) == labels;
    });
    if (ps.empty()) return err("C", at, want, print(a->type));
    Result best;
    for (auto& pk : ps) {
      const auto& lg = std::get<LGet>(pk.chosen->v);
      bool ok = true;
      for (size_t i = 0; i < x.branches.size() && ok; ++i) {
        const auto& pb = x.branches[i];
        auto tb = std::find_if(lg.branches.begin(), lg.branches.end(),
                               [&](auto& b) { return b.label == pb.label; });
        if (pb.binders.size() != tb->params.size()) {
          keep(best, err("C", child(at, static_cast<int>(i)),
                         std::to_string(tb->params.size()) + " binders for label " + pb.label.id,
                         std::to_string(pb.binders.size())));
          ok = false;
          break;
        }
        Ctx c = ctx;
        for (size_t j = 0; j < pb.binders.size(); ++j) c.values[pb.binders[j]] = tb->params[j].kind;
        SessionEnv d2 = d;
        set_comps(d2, key, Mode::Plain, pk.others);
        add(d2, key, Mode::Plain, tb->cont);
        Result r = check(pb.cont, d2, c, child(at, static_cast<int>(i)));
        if (r) {
          keep(best, r);
          ok = false;
        }
      }
      if (ok) return std::nullopt;
    }
    return best;
  }

  Result send(const PSend& x, const SessionEnv& d, const Ctx& ctx, const Path& at) {
    EndpointKey key{x.session, x.from};
    const Assignment* a = d.find(key);
    std::string want = x.session.id + "[" + x.from.id + "] : " + x.to.id + "!{" + x.label.id + "...}";
    if (!a || a->mode != Mode::Plain)
      return err("S", at, want, a ? print_endpoint(key, a->mode) : "no assignment");
    auto ps = picks(a->type, [&](const Local& t) {
      auto* s = std::get_if<LSend>(&t->v);
      return s && s->to == x.to &&
             std::any_of(s->branches.begin(), s->branches.end(),
                         [&](auto& b) { return b.label == x.label; });
    });
    if (ps.empty()) return err("S", at, want, print(a->type));
    Result best;
    for (auto& pk : ps) {
      const auto& ls = std::get<LSend>(pk.chosen->v);
      auto tb = std::find_if(ls.branches.begin(), ls.branches.end(),
                             [&](auto& b) { return b.label == x.label; });
      std::vector<Kind> ks;
      for (auto& prm : tb->params) ks.push_back(prm.kind);
      if (!kinds_match(x.payload, ks, ctx)) {
        keep(best, err("S", at, "|- v : S with S = " + kinds_str(ks), kinds_of(x.payload, ctx)));
        continue;
      }
      SessionEnv d2 = d;
      set_comps(d2, key, Mode::Plain, pk.others);
      add(d2, key, Mode::Plain, tb->cont);
      Result r = check(x.cont, d2, ctx, child(at, 0));
      if (!r) return std::nullopt;
      keep(best, r);
    }
    return best;
  }

  Result opt(const POpt& x, const SessionEnv& d, const Ctx& ctx, const Path& at) {
    if (std::find(x.parts.begin(), x.parts.end(), x.owner) == x.parts.end())
      return err("Opt", at, "owner " + x.owner.id + " among the participants",
                 "participants " + join_roles(x.parts));
    if (x.binders.size() != x.defaults.size())
      return err("Opt", at, "one default per binder",
                 std::to_string(x.binders.size()) + " binders, " +
                     std::to_string(x.defaults.size()) + " defaults");
    // The enclosing block's return obligation may not reach the body.
    if (d.returnKinds && d.returnKinds->role != x.owner &&
        has_unguarded_optend(x.body, d.returnKinds->role))
      return err("Opt", at,
                 "no return kinds in the block's environment, the body may not produce " +
                     d.returnKinds->role.id + ":OV" + kinds_str(d.returnKinds->kinds),
                 "an optend of " + d.returnKinds->role.id + " inside the block of " + x.owner.id);
    SessionEnv base = d;
    auto outer = base.returnKinds;
    base.returnKinds.reset();
    Result best;
    bool any = false;
    for (auto& [key, a] : base.assignments) {
      if (key.role != x.owner || a.mode != Mode::Plain) continue;
      auto ps = picks(a.type, [&](const Local& t) {
        auto* o = std::get_if<LOpt>(&t->v);
        return o && same_role_set(o->parts, x.parts);
      });
      for (auto& pk : ps) {
        any = true;
        const auto& lo = std::get<LOpt>(pk.chosen->v);
        std::vector<Kind> S;
        for (auto& prm : lo.binders) S.push_back(prm.kind);
        if (x.binders.size() != S.size()) {
          keep(best, err("Opt", at, std::to_string(S.size()) + " block binders as in the type",
                         std::to_string(x.binders.size())));
          continue;
        }
        if (!kinds_match(x.defaults, S, ctx)) {
          keep(best, err("Opt", at, "|- v : S for the defaults, S = " + kinds_str(S),
                         kinds_of(x.defaults, ctx)));
          continue;
        }
        SessionEnv rest = base;
        set_comps(rest, key, Mode::Plain, pk.others);
        std::vector<std::vector<SessionEnv>> cands;
        try {
          cands = split_impl({x.body, x.cont}, rest, ctx.shared, std::nullopt,
                             opts_.maxSplitCandidates);
        } catch (const EnvError& e) {
          keep(best, err("Opt", at, "a split of the environment between block and continuation",
                         e.what()));
          continue;
        }
        Ctx cc = ctx;
        for (size_t i = 0; i < x.binders.size(); ++i) cc.values[x.binders[i]] = S[i];
        for (auto& cand : cands) {
          SessionEnv db = cand[0];
          add(db, key, Mode::Plain, lo.body);
          db.returnKinds = ReturnKinds{x.owner, S};
          SessionEnv dc = cand[1];
          add(dc, key, Mode::Plain, lo.cont);
          dc.returnKinds = outer;
          Result r = check(x.body, db, ctx, child(at, 0));
          if (!r) r = check(x.cont, dc, cc, child(at, 1));
          if (!r) return std::nullopt;
          keep(best, r);
        }
      }
    }
    if (!any)
      return err("Opt", at,
                 "an endpoint of " + x.owner.id + " typed opt[" + sorted_roles(x.parts) +
                     "] (participants equal as sets)",
                 print(d));
    return best;
  }

  Result need_subsessions(const Path& at, const char* rule) const {
    if (opts_.subsessions) return std::nullopt;
    return err(rule, at, "the sub-session system (--subsessions)", "plain system");
  }

  Result decl(const PDecl& x, const SessionEnv& d, const Ctx& ctx, const Path& at) {
    if (auto e = need_subsessions(at, "New")) return e;
    Result best;
    bool any = false;
    for (auto& [key, a] : d.assignments) {
      if (key.session != x.parent || a.mode != Mode::Plain) continue;
      auto ps = picks(a.type, [](const Local& t) { return is<LCall>(t); });
      for (auto& pk : ps) {
        any = true;
        const auto& lc = std::get<LCall>(pk.chosen->v);
        if (!gamma_.protocols.contains(lc.proto)) {
          keep(best, err("UnknownProtocol", at, "Gamma(" + lc.proto.id + ") defined", "no entry"));
          continue;
        }
        const ProtocolDef& def = gamma_.protocols.at(lc.proto);
        std::vector<Kind> ks;
        for (auto& prm : def.args) ks.push_back(prm.kind);
        if (!kinds_match(x.args, ks, ctx)) {
          keep(best, err("New", at, "|- v : S with S = " + kinds_str(ks), kinds_of(x.args, ctx)));
          continue;
        }
        if (x.external != lc.external || x.external != def.external) {
          keep(best, err("New", at, "external roles " + join_roles(def.external),
                         join_roles(x.external)));
          continue;
        }
        Global G = instantiate(def, x.args);
        Ctx c = ctx;
        if (ctx.pending.count(x.session)) {
          c.pending.erase(x.session);
          c.sessions[x.session] = G;
        } else if (auto it = ctx.sessions.find(x.session); it != ctx.sessions.end()) {
          if (!type_equiv(it->second, G)) {
            keep(best, err("New", at, "Gamma(" + x.session.id + ") = " + print(G),
                           print(it->second)));
            continue;
          }
        } else {
          keep(best, err("New", at, "Gamma(" + x.session.id + ") = " + print(G), "no entry"));
          continue;
        }
        if (x.chans.size() != def.external.size()) {
          keep(best, err("New", at, std::to_string(def.external.size()) + " invitation channels",
                         std::to_string(x.chans.size())));
          continue;
        }
        bool chansOk = true;
        for (size_t i = 0; i < x.chans.size() && chansOk; ++i) {
          Local want = project(G, gamma_.protocols, def.external[i]);
          auto it = ctx.shared.find(x.chans[i]);
          if (it == ctx.shared.end() || it->second.role != def.external[i] ||
              !type_equiv(it->second.type, want)) {
            keep(best, err("New", at,
                           "Gamma(" + x.chans[i].id + ") = " + print(want) + "@" +
                               def.external[i].id,
                           it == ctx.shared.end() ? "no entry"
                                                  : print(it->second.type) + "@" +
                                                        it->second.role.id));
            chansOk = false;
          }
        }
        if (!chansOk) continue;
        SessionEnv d2 = d;
        set_comps(d2, key, Mode::Plain, pk.others);
        add(d2, key, Mode::Plain, lc.cont);
        bool fresh = true;
        for (auto& r : def.internal)
          fresh = fresh &&
                  add(d2, EndpointKey{x.session, r}, Mode::Internal, project(G, gamma_.protocols, r));
        for (auto& r : def.external)
          fresh = fresh &&
                  add(d2, EndpointKey{x.session, r}, Mode::External, project(G, gamma_.protocols, r));
        if (!fresh) {
          keep(best, err("New", at, "fresh endpoints for " + x.session.id, print(d)));
          continue;
        }
        Result r = check(x.cont, d2, c, child(at, 0));
        if (!r) return std::nullopt;
        keep(best, r);
      }
    }
    if (!any) return err("New", at, "an endpoint of " + x.parent.id + " typed call", print(d));
    return best;
  }

  Result ent(const PEnt& x, const SessionEnv& d, const Ctx& ctx, const Path& at) {
    if (auto e = need_subsessions(at, "J")) return e;
    EndpointKey key{x.session, x.invitee};
    const Assignment* a = d.find(key);
    std::string want = x.session.id + "[" + x.invitee.id + "] : ent as " + x.asRole.id + " from " +
                       x.inviter.id;
    if (!a || a->mode != Mode::Plain)
      return err("J", at, want, a ? print_endpoint(key, a->mode) : "no assignment");
    auto ps = picks(a->type, [&](const Local& t) {
      auto* e = std::get_if<LEnt>(&t->v);
      return e && e->asRole == x.asRole && e->inviter == x.inviter;
    });
    if (ps.empty()) return err("J", at, want, print(a->type));
    Result best;
    for (auto& pk : ps) {
      const auto& le = std::get<LEnt>(pk.chosen->v);
      if (!gamma_.protocols.contains(le.proto)) {
        keep(best, err("UnknownProtocol", at, "Gamma(" + le.proto.id + ") defined", "no entry"));
        continue;
      }
      Global G = instantiate(gamma_.protocols.at(le.proto), le.args);
      Local t3 = project(G, gamma_.protocols, x.asRole);
      auto [b, cont] = fresh_binder(x.binder, x.cont, d, ctx);
      SessionEnv d2 = d;
      set_comps(d2, key, Mode::Plain, pk.others);
      add(d2, key, Mode::Plain, le.cont);
      add(d2, EndpointKey{b, x.asRole}, Mode::Plain, t3);
      Result r = check(cont, d2, ctx, child(at, 0));
      if (!r) return std::nullopt;
      keep(best, r);
    }
    return best;
  }

  Result req(const PReq& x, const SessionEnv& d, const Ctx& ctx, const Path& at) {
    if (auto e = need_subsessions(at, "P")) return e;
    EndpointKey key{x.session, x.inviter};
    const Assignment* a = d.find(key);
    std::string want = x.session.id + "[" + x.inviter.id + "] : req " + x.asRole.id + " to " +
                       x.invitee.id;
    if (!a || a->mode != Mode::Plain)
      return err("P", at, want, a ? print_endpoint(key, a->mode) : "no assignment");
    auto ps = picks(a->type, [&](const Local& t) {
      auto* q = std::get_if<LReq>(&t->v);
      return q && q->forRole == x.asRole && q->invitee == x.invitee;
    });
    if (ps.empty()) return err("P", at, want, print(a->type));
    Result best;
    for (auto& pk : ps) {
      const auto& lq = std::get<LReq>(pk.chosen->v);
      if (!gamma_.protocols.contains(lq.proto)) {
        keep(best, err("UnknownProtocol", at, "Gamma(" + lq.proto.id + ") defined", "no entry"));
        continue;
      }
      Global G = instantiate(gamma_.protocols.at(lq.proto), lq.args);
      Local t3 = project(G, gamma_.protocols, x.asRole);
      EndpointKey sub{x.sub, x.asRole};
      SessionEnv d2 = d;
      set_comps(d2, key, Mode::Plain, pk.others);
      add(d2, key, Mode::Plain, lq.cont);
      const Assignment* inv = d2.find(sub);
      std::string wantInv = "~" + x.sub.id + "[" + x.asRole.id + "] : " + print(t3);
      if (!inv || inv->mode != Mode::Internal) {
        keep(best, err("P", at, wantInv, inv ? print_endpoint(sub, inv->mode) : "no assignment"));
        continue;
      }
      std::string target = erased_key(t3);
      if (erased_key(inv->type) == target) {
        d2.erase(sub);
      } else {
        auto comps = par_components(inv->type);
        auto pos = std::find_if(comps.begin(), comps.end(),
                                [&](auto& c) { return erased_key(c) == target; });
        if (pos == comps.end()) {
          keep(best, err("P", at, wantInv, print(inv->type)));
          continue;
        }
        comps.erase(pos);
        set_comps(d2, sub, Mode::Internal, comps);
      }
      Result r = check(x.cont, d2, ctx, child(at, 0));
      if (!r) return std::nullopt;
      keep(best, r);
    }
    return best;
  }

  Result res(const PRes& x, const SessionEnv& d, const Ctx& ctx, const Path& at) {
    // (R) leaves Δ alone: after (subs) the environment already holds endpoints of the bound name.
    const Name& b = x.binder;
    const Proc& body = x.body;
    Ctx c = ctx;
    c.shared.erase(b);
    c.sessions.erase(b);
    c.pending.erase(b);
    if (declares(body, b)) {
      c.pending.insert(b);
      return check(body, d, c, child(at, 0));
    }
    if (!used_as_channel(body, b)) return check(body, d, c, child(at, 0));
    // Channel type by back-tracking over what could be sent on it.
    std::vector<SharedChan> cands;
    std::set<std::string> seen;
    auto consider = [&](const Local& t, const Role& r) {
      if (seen.insert(r.id + "|" + erased_key(t)).second) cands.push_back(SharedChan{t, r});
    };
    for (auto& [k, a] : d.assignments)
      if (a.mode == Mode::External) {
        consider(a.type, k.role);
        for (auto& comp : par_components(a.type)) consider(comp, k.role);
      }
    for (auto& [n, sc] : ctx.shared) consider(sc.type, sc.role);
    if (cands.empty())
      return err("R", at, "a type T@r for restricted channel " + b.id, "no candidate");
    Result best;
    for (auto& cand : cands) {
      c.shared[b] = cand;
      Result r = check(body, d, c, child(at, 0));
      if (!r) return std::nullopt;
      keep(best, r);
    }
    return best;
  }

  Result choice(const PChoice& x, const SessionEnv& d, const Ctx& ctx, const Path& at,
                int depth = 0) {
    Result best;
    bool any = false;
    for (auto& [key, a] : d.assignments) {
      if (a.mode != Mode::Plain) continue;
      auto comps = par_components(a.type);
      for (size_t i = 0; i < comps.size(); ++i) {
        Local u = unfold(comps[i]);
        auto* c = std::get_if<LChoice>(&u->v);
        if (!c) continue;
        any = true;
        std::vector<Local> others;
        for (size_t k = 0; k < comps.size(); ++k)
          if (k != i) others.push_back(comps[k]);
        auto with = [&](const Local& side) {
          SessionEnv d2 = d;
          auto cs = others;
          cs.push_back(side);
          set_comps(d2, key, Mode::Plain, cs);
          return d2;
        };
        // (S1)
        Result r = check(x.left, with(c->left), ctx, child(at, 0));
        if (!r) r = check(x.right, with(c->right), ctx, child(at, 1));
        if (!r) return std::nullopt;
        keep(best, r);
        // (S2) then retry
        if (depth < 8) {
          for (const Local& side : {c->left, c->right}) {
            Result r2 = choice(x, with(side), ctx, at, depth + 1);
            if (!r2) return std::nullopt;
            keep(best, r2);
          }
        }
      }
    }
    if (!any) return err("S1", at, "an endpoint typed T1 + T2", print(d));
    return best;
  }

  Result par(const Proc& p, const SessionEnv& d, const Ctx& ctx, const Path& at) {
    std::vector<Proc> parts;
    std::vector<Path> paths;
    flatten_par(p, at, parts, paths);
    if (parts.empty()) return end(d, at);
    if (parts.size() == 1) return check(parts[0], d, ctx, paths[0]);
    std::vector<std::vector<SessionEnv>> cands;
    try {
      cands = split_impl(parts, d, ctx.shared, std::nullopt, opts_.maxSplitCandidates);
    } catch (const EnvError& e) {
      return err("Pa", at, "a split of the environment over the parallel components", e.what());
    }
    std::map<std::pair<size_t, std::string>, Result> memo;
    Result best;
    for (auto& cand : cands) {
      bool ok = true;
      for (size_t i = 0; i < parts.size() && ok; ++i) {
        auto mk = std::make_pair(i, env_key(cand[i]));
        auto it = memo.find(mk);
        if (it == memo.end()) it = memo.emplace(mk, check(parts[i], cand[i], ctx, paths[i])).first;
        if (it->second) {
          keep(best, it->second);
          ok = false;
        }
      }
      if (ok) return std::nullopt;
    }
    return best;
  }
};

Ctx initial_ctx(const GlobalEnv& g) {
  Ctx c;
  c.shared = g.sharedChans;
  c.sessions = g.sessions;
  return c;
}

}  // namespace

std::optional<TypeError> typecheck(const GlobalEnv& gamma, const Proc& p, const SessionEnv& delta,
                                   const CheckOptions& opts) {
  Checker ch(gamma, opts);
  return ch.check(freshen_binders(p), delta, initial_ctx(gamma), Path{});
}

std::vector<std::vector<SessionEnv>> split_candidates(const std::vector<Proc>& parts,
                                                      const SessionEnv& delta,
                                                      const GlobalEnv& gamma, size_t cap) {
  if (parts.empty()) return {};
  return split_impl(parts, delta, gamma.sharedChans, std::nullopt, cap);
}

std::pair<SessionEnv, SessionEnv> split_delta(const Proc& p1, const Proc& p2,
                                              const SessionEnv& delta) {
  auto cands = split_impl({p1, p2}, delta, {}, std::nullopt, 1);
  return {cands.front()[0], cands.front()[1]};
}

std::pair<SessionEnv, SessionEnv> split_delta(const GlobalEnv& gamma, const Proc& p1,
                                              const Proc& p2, const SessionEnv& delta,
                                              const CheckOptions& opts) {
  auto cands = split_impl({p1, p2}, delta, gamma.sharedChans, std::nullopt,
                          opts.maxSplitCandidates);
  for (auto& c : cands)
    if (!typecheck(gamma, p1, c[0], opts) && !typecheck(gamma, p2, c[1], opts))
      return {c[0], c[1]};
  throw EnvError(EnvError::Code::SplitImpossible, "no split types both components");
}

}  // namespace optsession
