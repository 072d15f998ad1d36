#include "optsession/examples.hpp"

#include "optsession/projection.hpp"

#include <fmt/format.h>

#include <functional>

namespace optsession {

namespace {

const Kind kV = Kind::val("V");
const Label kC{"c"};
const Label kBc{"bc"};
const Name kS{"s"};

Name val(int i, int j) { return Name{fmt::format("v{}_{}", i, j)}; }
Name chan(int i) { return Name{fmt::format("a{}", i)}; }
Role trg(int j) { return Role{fmt::format("trg_{}", j)}; }
const Role kSrc{"src"};

// Participant i's value after round j in the process; round i does not update it.
struct Values {
  std::vector<std::string> initial;
  Name cur(int i, int j) const {
    if (j == i) return cur(i, i - 1);
    if (j == 0) return Name{initial.at(static_cast<size_t>(i - 1))};
    return val(i, j);
  }
};

void require_n(int n, std::vector<std::string>& initial) {
  if (n < 2) throw InvalidFixtureArgs("rotating coordinators need n >= 2");
  if (initial.empty()) initial = default_initial_values(n);
  if (initial.size() != static_cast<size_t>(n))
    throw InvalidFixtureArgs(fmt::format("expected {} initial values, got {}", n, initial.size()));
}

std::vector<Role> roles_upto(int n) {
  std::vector<Role> out;
  for (int i = 1; i <= n; ++i) out.push_back(rc_role(i));
  return out;
}

// Each participant first learns the session on its invitation channel.
Proc with_init(int n, const std::function<Proc(int)>& body) {
  std::vector<Proc> parts;
  for (int i = 1; i <= n; ++i) {
    parts.push_back(p::out(chan(i), {kS}, p::end()));
    parts.push_back(p::in(chan(i), {kS}, body(i)));
  }
  return p::par(parts);
}

void finish(Fixture& f, int n, const std::vector<std::string>& initial) {
  std::vector<Name> chans;
  for (int i = 1; i <= n; ++i) chans.push_back(chan(i));
  auto env = build_initial_env(f.global, roles_upto(n), chans, kS);
  f.gamma = env.gamma;
  f.delta = env.delta;
  for (auto& v : initial) f.gamma.values[Name{v}] = kV;
  for (auto& r : roles_upto(n)) f.perRoleLocals[r] = project(f.global, f.gamma.protocols, r);
}

}  // namespace

std::vector<std::string> default_initial_values(int n) {
  std::vector<std::string> out;
  for (int i = 1; i <= n; ++i) out.push_back(i == 1 ? "0" : "1");
  return out;
}

Role rc_role(int i) { return Role{fmt::format("p{}", i)}; }

Global unreliable_link(const Role& src, const Name& v, const Role& trg, const Name& d,
                       Global cont) {
  return g::opt({GOptPart{src, {}}, GOptPart{trg, {Param{d, kV}}}},
                g::com1(src, trg, kC, {Param{v, kV}}, g::end()), std::move(cont));
}

Fixture gen_unreliable_link(const Role& src, const Name& v, const Role& trg, const Name& d) {
  if (src == trg) throw InvalidFixtureArgs("sender and receiver of a link must differ");
  Fixture f;
  f.name = "unreliable-link";
  f.global = unreliable_link(src, v, trg, d, g::end());
  Name y{"y"};
  Proc sender = p::opt(src, {src, trg}, p::send(kS, src, trg, kC, {v}, p::optend(src, {})), {}, {},
                       p::end());
  Proc receiver = p::opt(trg, {src, trg},
                         p::get1(kS, src, trg, kC, {y}, p::optend(trg, {y})), {Name{"x"}}, {d},
                         p::end());
  f.process = p::par({p::out(Name{"a1"}, {kS}, p::end()), p::in(Name{"a1"}, {kS}, sender),
                      p::out(Name{"a2"}, {kS}, p::end()), p::in(Name{"a2"}, {kS}, receiver)});
  auto env = build_initial_env(f.global, {src, trg}, {Name{"a1"}, Name{"a2"}}, kS);
  f.gamma = env.gamma;
  f.delta = env.delta;
  f.gamma.values[v] = kV;
  f.gamma.values[d] = kV;
  f.perRoleLocals[src] = project(f.global, src);
  f.perRoleLocals[trg] = project(f.global, trg);
  f.notes = "one message over a link that may lose it; the receiver falls back to its default";
  f.schedule = {"comC*", "comC*", "cSO*", "succ*", "succ*"};
  return f;
}

// ---------- flat rotating coordinators ----------

Global gen_rc_global(int n) {
  if (n < 2) throw InvalidFixtureArgs("rotating coordinators need n >= 2");
  std::vector<Global> links;
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j)
      if (j != i) links.push_back(unreliable_link(rc_role(i), val(i, i - 1), rc_role(j), val(j, i - 1), g::end()));
  return g::seq(links, g::end());
}

namespace {

Proc rc_receive(int i, int j, const Values& vs, Proc cont) {
  Name x = val(j, j - 1);
  Proc body = p::get1(kS, rc_role(j), rc_role(i), kC, {x}, p::optend(rc_role(i), {x}));
  return p::opt(rc_role(i), {rc_role(i), rc_role(j)}, body, {vs.cur(i, j)}, {vs.cur(i, j - 1)},
                std::move(cont));
}

Proc rc_send(int i, int j, const Values& vs) {
  Proc body = p::send(kS, rc_role(i), rc_role(j), kC, {vs.cur(i, i - 1)}, p::optend(rc_role(i), {}));
  return p::opt(rc_role(i), {rc_role(i), rc_role(j)}, body, {}, {}, p::end());
}

Proc rc_participant(int i, int n, const Values& vs) {
  Proc later = p::end();
  for (int j = n; j > i; --j) later = rc_receive(i, j, vs, later);
  std::vector<Proc> round;
  for (int j = 1; j <= n; ++j)
    if (j != i) round.push_back(rc_send(i, j, vs));
  round.push_back(later);
  Proc rest = p::par(round);
  for (int j = i - 1; j >= 1; --j) rest = rc_receive(i, j, vs, rest);
  return rest;
}

}  // namespace

Fixture gen_rc(int n, std::vector<std::string> initial) {
  require_n(n, initial);
  Values vs{initial};
  Fixture f;
  f.name = fmt::format("rc-{}", n);
  f.global = gen_rc_global(n);
  f.process = with_init(n, [&](int i) { return rc_participant(i, n, vs); });
  finish(f, n, initial);
  f.notes = "flat rotating coordinators; v_{i,i} reuses v_{i,i-1}";
  if (n == 3) {
    // 3 (comC), p1 reaches p3 (3), p1 crashes and p2 gives up on it (5), round 2 (3), round 3 (4).
    f.schedule = {"comC a1<s>",           "comC a2<s>",           "comC a3<s>",
                  "cSO s:p1->p3:c",       "succ p1[p1,p3]",       "succ p3[p3,p1]",
                  "fail p1[p1,p2]",       "fail p1[p1,p2]",       "fail p1[p1,p3]",
                  "fail p2[p2,p1]",       "fail p2[p2,p1]",       "cSO s:p2->p3:c",
                  "succ p2[p2,p3]",       "succ p3[p3,p2]",       "fail p3[p3,p1]",
                  "cSO s:p3->p2:c",       "succ p3[p3,p2]",       "succ p2[p2,p3]"};
  }
  return f;
}

// ---------- one sub-session per round ----------

namespace {

// Participant i of round j's sub-session: src when i == j, else trg_i for i < j and trg_{i-1}.
Role round_role(int i, int j) {
  if (i == j) return kSrc;
  return i < j ? trg(i) : trg(i - 1);
}

}  // namespace

Global gen_rc_subsessions_global(int n) {
  if (n < 2) throw InvalidFixtureArgs("rotating coordinators need n >= 2");
  Name vsrc{"v_src"};
  std::vector<Global> links;
  std::vector<Role> internal{kSrc};
  for (int j = 1; j < n; ++j) {
    links.push_back(unreliable_link(kSrc, vsrc, trg(j), vsrc, g::end()));
    internal.push_back(trg(j));
  }
  Global round = g::seq(links, g::end());
  Name proto{fmt::format("R{}", n)};
  Global calls = g::end();
  for (int i = n; i >= 1; --i) {
    std::vector<Role> order{rc_role(i)};
    for (int j = 1; j <= n; ++j)
      if (j != i) order.push_back(rc_role(j));
    calls = g::call(rc_role(i), proto, order, {val(i, i - 1)}, calls);
  }
  return g::decl(proto, internal, {Param{vsrc, kV}}, {}, round, calls);
}

namespace {

Proc rcs_receive(int i, int j, const Values& vs, Proc cont) {
  Role r = round_role(i, j);
  Name x{"x"}, y{"y"};
  Proc body = p::get1(x, kSrc, r, kC, {y}, p::optend(r, {y}));
  Proc block = p::opt(r, {r, kSrc}, body, {vs.cur(i, j)}, {vs.cur(i, j - 1)}, std::move(cont));
  return p::ent(kS, rc_role(j), rc_role(i), r, x, block);
}

Proc rcs_coordinator(int i, int n, const Values& vs, Proc later) {
  Name k{"k"}, x{"x"};
  std::vector<Proc> sends;
  for (int j = 1; j < n; ++j)
    sends.push_back(p::opt(kSrc, {kSrc, trg(j)},
                           p::send(x, kSrc, trg(j), kC, {vs.cur(i, i - 1)}, p::optend(kSrc, {})),
                           {}, {}, p::end()));
  std::vector<Proc> parts{p::ent(kS, rc_role(i), rc_role(i), kSrc, x, p::par(sends)),
                          p::req(kS, rc_role(i), rc_role(i), kSrc, k, p::end())};
  for (int j = 1; j <= n; ++j)
    if (j != i) parts.push_back(p::req(kS, rc_role(i), rc_role(j), round_role(j, i), k, p::end()));
  parts.push_back(std::move(later));
  return p::res(k, p::decl(k, kS, {vs.cur(i, i - 1)}, {}, {}, p::par(parts)));
}

Proc rcs_participant(int i, int n, const Values& vs) {
  Proc later = p::end();
  for (int j = n; j > i; --j) later = rcs_receive(i, j, vs, later);
  Proc rest = rcs_coordinator(i, n, vs, later);
  for (int j = i - 1; j >= 1; --j) rest = rcs_receive(i, j, vs, rest);
  return rest;
}

}  // namespace

Fixture gen_rc_subsessions(int n, std::vector<std::string> initial) {
  require_n(n, initial);
  Values vs{initial};
  Fixture f;
  f.name = fmt::format("rc-subsessions-{}", n);
  f.global = gen_rc_subsessions_global(n);
  f.process = with_init(n, [&](int i) { return rcs_participant(i, n, vs); });
  finish(f, n, initial);
  f.notes =
      "one sub-session per round; later rounds sit inside the call's continuation so that the "
      "process matches the projected call type; receiver defaults are the last own value";
  if (n == 3) {
    f.schedule = {
        "comC a1<s>", "comC a2<s>", "comC a3<s>",
        // round 1: p1 opens k and everybody joins
        "subs *", "join s:p1->p1 as src *", "join s:p1->p2 as trg_1 *", "join s:p1->p3 as trg_2 *",
        "cSO *:src->trg_2:c", "succ src[src,trg_2]", "succ trg_2[trg_2,src]",
        // p1 crashes
        "fail src[src,trg_1]", "fail trg_1[trg_1,src]",
        // round 2
        "subs *", "join s:p2->p2 as src *", "join s:p2->p1 as trg_1 *", "join s:p2->p3 as trg_2 *",
        "fail trg_1[trg_1,src]", "fail src[src,trg_1]",
        "cSO *:src->trg_2:c", "succ src[src,trg_2]", "succ trg_2[trg_2,src]",
        // round 3
        "subs *", "join s:p3->p3 as src *", "join s:p3->p1 as trg_1 *", "join s:p3->p2 as trg_2 *",
        "fail trg_1[trg_1,src]", "fail src[src,trg_1]",
        "cSO *:src->trg_2:c", "succ src[src,trg_2]", "succ trg_2[trg_2,src]"};
  }
  return f;
}

// ---------- sub-sessions inside optional blocks ----------

Global gen_rc_nested_opt_global(int n) {
  if (n < 2) throw InvalidFixtureArgs("rotating coordinators need n >= 2");
  Name valn{"val"};
  Role trgr{"trg"};
  Name proto{"C"};
  Global gc = g::com1(kSrc, trgr, kBc, {Param{valn, kV}}, g::end());
  std::vector<Global> blocks;
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j)
      if (j != i)
        blocks.push_back(g::opt({GOptPart{rc_role(i), {}}, GOptPart{rc_role(j), {Param{val(j, i - 1), kV}}}},
                                g::call(rc_role(i), proto, {rc_role(i), rc_role(j)}, {val(i, i - 1)}, g::end()),
                                g::end()));
  return g::decl(proto, {kSrc, trgr}, {Param{valn, kV}}, {}, gc, g::seq(blocks, g::end()));
}

namespace {

const Role kTrg{"trg"};

Proc rcn_receive(int i, int j, const Values& vs, Proc cont) {
  Name x{"x"}, v{"v"};
  Proc body = p::ent(kS, rc_role(j), rc_role(i), kTrg, x,
                     p::get1(x, kSrc, kTrg, kBc, {v}, p::optend(rc_role(i), {v})));
  return p::opt(rc_role(i), {rc_role(i), rc_role(j)}, body, {vs.cur(i, j)}, {vs.cur(i, j - 1)},
                std::move(cont));
}

Proc rcn_call(int i, int j, const Values& vs) {
  Name k{"k"}, z{"z"};
  Proc inner = p::par({p::req(kS, rc_role(i), rc_role(i), kSrc, k, p::end()),
                       p::req(kS, rc_role(i), rc_role(j), kTrg, k, p::end()),
                       p::ent(kS, rc_role(i), rc_role(i), kSrc, z,
                              p::send(z, kSrc, kTrg, kBc, {vs.cur(i, i - 1)}, p::optend(rc_role(i), {})))});
  return p::res(k, p::opt(rc_role(i), {rc_role(i), rc_role(j)},
                          p::decl(k, kS, {vs.cur(i, i - 1)}, {}, {}, inner), {}, {}, p::end()));
}

Proc rcn_participant(int i, int n, const Values& vs) {
  Proc later = p::end();
  for (int j = n; j > i; --j) later = rcn_receive(i, j, vs, later);
  std::vector<Proc> round;
  for (int j = 1; j <= n; ++j)
    if (j != i) round.push_back(rcn_call(i, j, vs));
  round.push_back(later);
  Proc rest = p::par(round);
  for (int j = i - 1; j >= 1; --j) rest = rcn_receive(i, j, vs, rest);
  return rest;
}

}  // namespace

Fixture gen_rc_nested_opt(int n, std::vector<std::string> initial) {
  require_n(n, initial);
  Values vs{initial};
  Fixture f;
  f.name = fmt::format("rc-nested-opt-{}", n);
  f.global = gen_rc_nested_opt_global(n);
  f.process = with_init(n, [&](int i) { return rcn_participant(i, n, vs); });
  finish(f, n, initial);
  f.notes = "each broadcast message is its own sub-session wrapped in an optional block";
  if (n == 3) {
    f.schedule = {"comC a1<s>", "comC a2<s>", "comC a3<s>",
                  // p1 opens both sub-sessions and reaches p3 through the second
                  "subs *", "subs *", "jO s:p1->p3 as trg <k'>", "join s:p1->p1 as src <k'>",
                  "cSO k':src->trg:bc", "succ p1[p1,p3]", "succ p3[p3,p1]",
                  // p1 crashes; p2 gives up on round 1
                  "fail p1[p1,p2]", "fail p1[p1,p2]", "fail p2[p2,p1]", "fail p1[p1,p3]",
                  // round 2: p2 gives up on p1 and reaches p3
                  "fail p2[p2,p1]", "subs *", "jO s:p2->p3 as trg *", "join s:p2->p2 as src *",
                  "cSO *:src->trg:bc", "succ p2[p2,p3]", "succ p3[p3,p2]",
                  // round 3
                  "fail p3[p3,p1]", "subs *", "jO s:p3->p2 as trg *", "join s:p3->p3 as src *",
                  "cSO *:src->trg:bc", "succ p3[p3,p2]", "succ p2[p2,p3]"};
  }
  return f;
}

}  // namespace optsession

namespace optsession {

SourceFile to_source(const Fixture& f) {
  using S = Declaration::Sort;
  SourceFile src;
  src.decls.push_back({S::GlobalType, "G", f.global, 0});
  for (auto& [r, t] : f.perRoleLocals) src.decls.push_back({S::LocalType, "T_" + r.id, t, 0});
  src.decls.push_back({S::Process, "P", f.process, 0});
  for (auto& [a, sc] : f.gamma.sharedChans)
    src.decls.push_back({S::GammaEntry, a.id, GammaEntryDecl{GammaEntryDecl::Form::Invite, {}, sc.role}, 0});
  for (auto& [v, k] : f.gamma.values)
    src.decls.push_back({S::GammaEntry, v.id, GammaEntryDecl{GammaEntryDecl::Form::Value, k, {}}, 0});
  std::vector<DeltaEntryDecl> es;
  for (auto& [key, a] : f.delta.assignments) {
    DeltaEntryDecl e;
    e.mode = a.mode == Mode::External   ? DeltaEntryDecl::Mode::External
             : a.mode == Mode::Internal ? DeltaEntryDecl::Mode::Internal
                                        : DeltaEntryDecl::Mode::Plain;
    e.session = key.session;
    e.role = key.role;
    e.type = a.type;
    es.push_back(std::move(e));
  }
  if (f.delta.returnKinds) {
    DeltaEntryDecl e;
    e.mode = DeltaEntryDecl::Mode::ReturnKinds;
    e.role = f.delta.returnKinds->role;
    e.kinds = f.delta.returnKinds->kinds;
    es.push_back(std::move(e));
  }
  src.decls.push_back({S::DeltaEntry, "D", es, 0});
  return src;
}

std::string fixture_text(const Fixture& f) {
  std::string out = "-- " + f.name + "\n";
  if (!f.notes.empty()) out += "-- " + f.notes + "\n";
  for (auto& sel : f.schedule) out += "-- schedule: " + sel + "\n";
  return out + print(to_source(f));
}

InitialEnv load_context(const SourceFile& src, const std::string& global,
                        const std::optional<std::string>& delta, const Name& session) {
  Global g = src.global(global);
  InitialEnv env;
  env.gamma.protocols = declared_protocols(g);
  env.gamma.sessions[session] = g;
  for (auto& d : src.decls) {
    if (d.sort != Declaration::Sort::GammaEntry) continue;
    auto& ge = std::get<GammaEntryDecl>(d.body);
    if (ge.form == GammaEntryDecl::Form::Value) {
      env.gamma.values[Name{d.name}] = ge.kind;
    } else {
      Local t = project(g, env.gamma.protocols, ge.role);
      env.gamma.sharedChans[Name{d.name}] = SharedChan{t, ge.role};
      if (!delta) env.delta.put(EndpointKey{session, ge.role}, Mode::External, t);
    }
  }
  if (delta) {
    for (auto& e : src.delta(*delta)) {
      if (e.mode == DeltaEntryDecl::Mode::ReturnKinds) {
        if (env.delta.returnKinds)
          throw EnvError(EnvError::Code::DuplicateReturnKinds, "more than one ov entry");
        env.delta.returnKinds = ReturnKinds{e.role, e.kinds};
        continue;
      }
      Mode m = e.mode == DeltaEntryDecl::Mode::External   ? Mode::External
               : e.mode == DeltaEntryDecl::Mode::Internal ? Mode::Internal
                                                          : Mode::Plain;
      env.delta.put(EndpointKey{e.session, e.role}, m, e.type);
      if (!env.gamma.sessions.count(e.session) && m != Mode::Internal) env.gamma.sessions[e.session] = g;
    }
  }
  return env;
}

Fixture fixture_by_name(const std::string& name, int n) {
  if (name == "link") return gen_unreliable_link(Role{"p1"}, Name{"v1"}, Role{"p2"}, Name{"v2"});
  if (name == "rc") return gen_rc(n);
  if (name == "rc-sub") return gen_rc_subsessions(n);
  if (name == "rc-nest") return gen_rc_nested_opt(n);
  throw InvalidFixtureArgs("unknown fixture '" + name + "'");
}

}  // namespace optsession
