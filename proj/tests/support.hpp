#pragma once

#include "optsession/env.hpp"
#include "optsession/examples.hpp"
#include "optsession/syntax.hpp"

#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace optsession::testkit {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct FixtureSpec {
  std::string file;  // under FIXTURE_DIR
  std::string family;
  int n;
};

inline const std::vector<FixtureSpec>& shipped_fixtures() {
  static const std::vector<FixtureSpec> all = {
      {"link.ost", "link", 2},       {"rc2.ost", "rc", 2},           {"rc3.ost", "rc", 3},
      {"rc4.ost", "rc", 4},          {"rc5.ost", "rc", 5},           {"rc_sub2.ost", "rc-sub", 2},
      {"rc_sub3.ost", "rc-sub", 3},  {"rc_nest2.ost", "rc-nest", 2}, {"rc_nest3.ost", "rc-nest", 3},
  };
  return all;
}

// Rewrites the idx-th Opt of q (pre-order).
inline Proc rewrite_opt(const Proc& q, int idx, const std::function<Proc(const POpt&)>& fn) {
  std::function<Proc(const Proc&)> go = [&](const Proc& t) -> Proc {
    if (auto* o = std::get_if<POpt>(&t->v))
      if (idx-- == 0) return fn(*o);
    auto kids = children(t);
    if (kids.empty()) return t;
    for (auto& c : kids) c = go(c);
    return with_children(t, kids);
  };
  return go(q);
}

inline Proc strip_optends(const Proc& q) {
  if (is<POptEnd>(q)) return p::end();
  auto kids = children(q);
  if (kids.empty()) return q;
  for (auto& c : kids) c = strip_optends(c);
  return with_children(q, kids);
}

// ---------- random terms ----------

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  int below(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }
  bool coin() { return below(2) == 0; }
  template <class T>
  const T& pick(const std::vector<T>& xs) { return xs[static_cast<size_t>(below(static_cast<int>(xs.size())))]; }

  Role role() { return pick(std::vector<Role>{Role{"p"}, Role{"q"}, Role{"r"}, Role{"t"}}); }
  Name name() { return pick(std::vector<Name>{Name{"x"}, Name{"y"}, Name{"z"}, Name{"s"}, Name{"a"}}); }
  Label label() { return pick(std::vector<Label>{Label{"c"}, Label{"d"}, Label{"ok"}}); }
  Kind kind() { return coin() ? Kind::val("V") : Kind::val("W"); }
  std::vector<Name> names(int max) {
    std::vector<Name> out(static_cast<size_t>(below(max + 1)));
    for (auto& n : out) n = name();
    return out;
  }
  std::vector<Param> params(int max) {
    std::vector<Param> out(static_cast<size_t>(below(max + 1)));
    for (auto& p : out) p = Param{name(), kind()};
    return out;
  }
  std::vector<Role> two_roles() {
    Role a = role(), b = role();
    while (b == a) b = role();
    return {a, b};
  }

  Proc proc(int depth) {
    if (depth <= 0) return below(3) == 0 ? p::optend(role(), names(2)) : p::end();
    switch (below(14)) {
      case 0: return p::end();
      case 1: return p::in(name(), names(2), proc(depth - 1));
      case 2: return p::out(name(), names(2), proc(depth - 1));
      case 3: {
        std::vector<PBranch> bs;
        for (int i = 0, k = 1 + below(2); i < k; ++i) bs.push_back({label(), names(2), proc(depth - 1)});
        auto rs = two_roles();
        return p::get(name(), rs[0], rs[1], bs);
      }
      case 4: {
        auto rs = two_roles();
        return p::send(name(), rs[0], rs[1], label(), names(2), proc(depth - 1));
      }
      case 5: {
        auto parts = two_roles();
        std::vector<Name> bs = names(2), ds;
        for (size_t i = 0; i < bs.size(); ++i) ds.push_back(name());
        return p::opt(parts[below(2)], parts, proc(depth - 1), bs, ds, proc(depth - 1));
      }
      case 6: return p::optend(role(), names(2));
      case 7: {
        std::vector<Name> chans = names(2);
        std::vector<Role> ext;
        for (size_t i = 0; i < chans.size(); ++i) ext.push_back(role());
        return p::decl(name(), name(), names(2), chans, ext, proc(depth - 1));
      }
      case 8: return p::ent(name(), role(), role(), role(), name(), proc(depth - 1));
      case 9: return p::req(name(), role(), role(), role(), name(), proc(depth - 1));
      case 10: return p::res(name(), proc(depth - 1));
      case 11: return p::choice(proc(depth - 1), proc(depth - 1));
      case 12: return p::par(proc(depth - 1), proc(depth - 1));
      default: {
        ProcVar x{coin() ? "X" : "Y"};
        return p::rec(x, coin() ? p::var(x) : proc(depth - 1));
      }
    }
  }

  Global global(int depth) {
    if (depth <= 0) return g::end();
    switch (below(8)) {
      case 0: return g::end();
      case 1:
      case 2: {
        auto rs = two_roles();
        std::vector<GBranch> bs;
        for (int i = 0, k = 1 + below(2); i < k; ++i) bs.push_back({label(), params(2), global(depth - 1)});
        return g::com(rs[0], rs[1], bs);
      }
      case 3: {
        auto rs = two_roles();
        return g::opt({GOptPart{rs[0], params(1)}, GOptPart{rs[1], params(1)}}, global(depth - 1),
                      global(depth - 1));
      }
      case 4: return g::choice(global(depth - 1), role(), global(depth - 1));
      case 5: return g::par(global(depth - 1), global(depth - 1));
      case 6: {
        auto rs = two_roles();
        return g::decl(Name{"R"}, rs, params(1), {}, global(depth - 1), global(depth - 1));
      }
      default: {
        TypeVar t{"t"};
        return g::rec(t, coin() ? g::var(t) : global(depth - 1));
      }
    }
  }

  Local local(int depth) {
    if (depth <= 0) return l::end();
    switch (below(6)) {
      case 0: return l::send1(role(), label(), params(1), local(depth - 1));
      case 1: return l::get1(role(), label(), params(1), local(depth - 1));
      case 2: return l::opt(two_roles(), local(depth - 1), params(1), local(depth - 1));
      case 3: return l::choice(local(depth - 1), local(depth - 1));
      case 4: return l::req(Name{"R"}, role(), names(1), role(), local(depth - 1));
      default: return l::ent(Name{"R"}, role(), names(1), role(), local(depth - 1));
    }
  }

  // Small key pool so that random environments overlap often.
  SessionEnv env(Mode mode) {
    SessionEnv d;
    for (int i = 0, k = below(4); i < k; ++i) {
      EndpointKey key{pick(std::vector<Name>{Name{"s"}, Name{"k"}}), role()};
      Local t = local(2);
      if (auto* a = d.find(key)) t = l::par(a->type, t);
      d.put(key, mode, t);
    }
    return d;
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace optsession::testkit
