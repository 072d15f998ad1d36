#include "optsession/syntax.hpp"

#include "optsession/printer.hpp"

#include <algorithm>
#include <functional>

namespace optsession {

bool Kind::operator==(const Kind& o) const {
  if (tag != o.tag) return false;
  switch (tag) {
    case Tag::Val: return sort == o.sort;
    case Tag::Arrow: return params == o.params && *result == *o.result;
    default: return true;
  }
}

SyntaxError::SyntaxError(const std::string& msg, int ln, int col, std::vector<std::string> exp)
    : std::runtime_error(msg), line(ln), column(col), expected(std::move(exp)) {}

// ---------- constructors ----------
namespace g {
Global end() {
  static const Global e = std::make_shared<const GlobalNode>(GlobalNode{GEnd{}});
  return e;
}
Global var(TypeVar t) { return std::make_shared<const GlobalNode>(GlobalNode{GVar{std::move(t)}}); }
Global rec(TypeVar t, Global body) {
  return std::make_shared<const GlobalNode>(GlobalNode{GRec{std::move(t), std::move(body)}});
}
Global par(Global a, Global b) {
  return std::make_shared<const GlobalNode>(GlobalNode{GPar{std::move(a), std::move(b)}});
}
Global par(const std::vector<Global>& parts) {
  if (parts.empty()) return end();
  Global acc = parts.back();
  for (size_t i = parts.size() - 1; i-- > 0;) acc = par(parts[i], acc);
  return acc;
}
Global com(Role from, Role to, std::vector<GBranch> branches) {
  return std::make_shared<const GlobalNode>(
      GlobalNode{GCom{std::move(from), std::move(to), std::move(branches)}});
}
Global com1(Role from, Role to, Label lab, std::vector<Param> params, Global cont) {
  return com(std::move(from), std::move(to),
             {GBranch{std::move(lab), std::move(params), std::move(cont)}});
}
Global opt(std::vector<GOptPart> parts, Global body, Global cont) {
  return std::make_shared<const GlobalNode>(
      GlobalNode{GOpt{std::move(parts), std::move(body), std::move(cont)}});
}
Global decl(Name proto, std::vector<Role> internal, std::vector<Param> args,
            std::vector<Role> external, Global body, Global cont) {
  return std::make_shared<const GlobalNode>(
      GlobalNode{GDecl{std::move(proto), std::move(internal), std::move(args), std::move(external),
                       std::move(body), std::move(cont)}});
}
Global call(Role caller, Name proto, std::vector<Role> roles, std::vector<Name> args,
            Global cont) {
  return std::make_shared<const GlobalNode>(GlobalNode{GCall{
      std::move(caller), std::move(proto), std::move(roles), std::move(args), std::move(cont)}});
}
Global choice(Global a, Role chooser, Global b) {
  return std::make_shared<const GlobalNode>(
      GlobalNode{GChoice{std::move(a), std::move(chooser), std::move(b)}});
}
Global with_cont(const Global& block, Global cont) {
  return std::visit(
      overloaded{
          [&](const GOpt& x) { return opt(x.parts, x.body, cont); },
          [&](const GDecl& x) {
            return decl(x.proto, x.internal, x.args, x.external, x.body, cont);
          },
          [&](const GCall& x) { return call(x.caller, x.proto, x.roles, x.args, cont); },
          [&](const GCom& x) {
            auto bs = x.branches;
            for (auto& b : bs) b.cont = cont;
            return com(x.from, x.to, bs);
          },
          [&](const auto&) -> Global { throw std::invalid_argument("with_cont: not a prefix"); },
      },
      block->v);
}
Global seq(const std::vector<Global>& blocks, Global last) {
  Global acc = std::move(last);
  for (size_t i = blocks.size(); i-- > 0;) acc = with_cont(blocks[i], acc);
  return acc;
}
}  // namespace g

namespace l {
Local end() {
  static const Local e = std::make_shared<const LocalNode>(LocalNode{LEnd{}});
  return e;
}
Local var(TypeVar t) { return std::make_shared<const LocalNode>(LocalNode{LVar{std::move(t)}}); }
Local rec(TypeVar t, Local body) {
  return std::make_shared<const LocalNode>(LocalNode{LRec{std::move(t), std::move(body)}});
}
Local par(Local a, Local b) {
  if (is<LEnd>(a)) return b;
  if (is<LEnd>(b)) return a;
  return std::make_shared<const LocalNode>(LocalNode{LPar{std::move(a), std::move(b)}});
}
Local par(const std::vector<Local>& parts) {
  std::vector<Local> live;
  for (auto& x : parts)
    if (!is<LEnd>(x)) live.push_back(x);
  if (live.empty()) return end();
  Local acc = live.back();
  for (size_t i = live.size() - 1; i-- > 0;)
    acc = std::make_shared<const LocalNode>(LocalNode{LPar{live[i], acc}});
  return acc;
}
Local get(Role from, std::vector<LBranch> branches) {
  return std::make_shared<const LocalNode>(LocalNode{LGet{std::move(from), std::move(branches)}});
}
Local send(Role to, std::vector<LBranch> branches) {
  return std::make_shared<const LocalNode>(LocalNode{LSend{std::move(to), std::move(branches)}});
}
Local get1(Role from, Label lab, std::vector<Param> params, Local cont) {
  return get(std::move(from), {LBranch{std::move(lab), std::move(params), std::move(cont)}});
}
Local send1(Role to, Label lab, std::vector<Param> params, Local cont) {
  return send(std::move(to), {LBranch{std::move(lab), std::move(params), std::move(cont)}});
}
Local opt(std::vector<Role> parts, Local body, std::vector<Param> binders, Local cont) {
  return std::make_shared<const LocalNode>(
      LocalNode{LOpt{std::move(parts), std::move(body), std::move(binders), std::move(cont)}});
}
Local call(Name proto, Global body, std::vector<Name> argVals, std::vector<Param> argBinders,
           std::vector<Role> external, Local cont) {
  return std::make_shared<const LocalNode>(
      LocalNode{LCall{std::move(proto), std::move(body), std::move(argVals), std::move(argBinders),
                      std::move(external), std::move(cont)}});
}
Local ent(Name proto, Role asRole, std::vector<Name> args, Role inviter, Local cont) {
  return std::make_shared<const LocalNode>(LocalNode{LEnt{
      std::move(proto), std::move(asRole), std::move(args), std::move(inviter), std::move(cont)}});
}
Local req(Name proto, Role forRole, std::vector<Name> args, Role invitee, Local cont) {
  return std::make_shared<const LocalNode>(LocalNode{LReq{
      std::move(proto), std::move(forRole), std::move(args), std::move(invitee), std::move(cont)}});
}
Local choice(Local a, Local b) {
  return std::make_shared<const LocalNode>(LocalNode{LChoice{std::move(a), std::move(b)}});
}
}  // namespace l

namespace p {
Proc end() {
  static const Proc e = std::make_shared<const ProcNode>(ProcNode{PEnd{}});
  return e;
}
Proc var(ProcVar x) { return std::make_shared<const ProcNode>(ProcNode{PVar{std::move(x)}}); }
Proc rec(ProcVar x, Proc body) {
  return std::make_shared<const ProcNode>(ProcNode{PRec{std::move(x), std::move(body)}});
}
Proc par(Proc a, Proc b) {
  return std::make_shared<const ProcNode>(ProcNode{PPar{std::move(a), std::move(b)}});
}
Proc par(const std::vector<Proc>& parts) {
  if (parts.empty()) return end();
  Proc acc = parts.back();
  for (size_t i = parts.size() - 1; i-- > 0;) acc = par(parts[i], acc);
  return acc;
}
Proc choice(Proc a, Proc b) {
  return std::make_shared<const ProcNode>(ProcNode{PChoice{std::move(a), std::move(b)}});
}
Proc in(Name chan, std::vector<Name> binders, Proc cont) {
  return std::make_shared<const ProcNode>(
      ProcNode{PIn{std::move(chan), std::move(binders), std::move(cont)}});
}
Proc out(Name chan, std::vector<Name> payload, Proc cont) {
  return std::make_shared<const ProcNode>(
      ProcNode{POut{std::move(chan), std::move(payload), std::move(cont)}});
}
Proc get(Name s, Role from, Role to, std::vector<PBranch> branches) {
  return std::make_shared<const ProcNode>(
      ProcNode{PGet{std::move(s), std::move(from), std::move(to), std::move(branches)}});
}
Proc get1(Name s, Role from, Role to, Label lab, std::vector<Name> binders, Proc cont) {
  return get(std::move(s), std::move(from), std::move(to),
             {PBranch{std::move(lab), std::move(binders), std::move(cont)}});
}
Proc send(Name s, Role from, Role to, Label lab, std::vector<Name> payload, Proc cont) {
  return std::make_shared<const ProcNode>(ProcNode{PSend{std::move(s), std::move(from),
                                                         std::move(to), std::move(lab),
                                                         std::move(payload), std::move(cont)}});
}
Proc opt(Role owner, std::vector<Role> parts, Proc body, std::vector<Name> binders,
         std::vector<Name> defaults, Proc cont) {
  return std::make_shared<const ProcNode>(
      ProcNode{POpt{std::move(owner), std::move(parts), std::move(body), std::move(binders),
                    std::move(defaults), std::move(cont)}});
}
Proc optend(Role owner, std::vector<Name> values) {
  return std::make_shared<const ProcNode>(ProcNode{POptEnd{std::move(owner), std::move(values)}});
}
Proc decl(Name k, Name parent, std::vector<Name> args, std::vector<Name> chans,
          std::vector<Role> external, Proc cont) {
  return std::make_shared<const ProcNode>(
      ProcNode{PDecl{std::move(k), std::move(parent), std::move(args), std::move(chans),
                     std::move(external), std::move(cont)}});
}
Proc ent(Name s, Role inviter, Role invitee, Role asRole, Name binder, Proc cont) {
  return std::make_shared<const ProcNode>(
      ProcNode{PEnt{std::move(s), std::move(inviter), std::move(invitee), std::move(asRole),
                    std::move(binder), std::move(cont)}});
}
Proc req(Name s, Role inviter, Role invitee, Role asRole, Name sub, Proc cont) {
  return std::make_shared<const ProcNode>(
      ProcNode{PReq{std::move(s), std::move(inviter), std::move(invitee), std::move(asRole),
                    std::move(sub), std::move(cont)}});
}
Proc res(Name x, Proc body) {
  return std::make_shared<const ProcNode>(ProcNode{PRes{std::move(x), std::move(body)}});
}
Proc res(const std::vector<Name>& xs, Proc body) {
  for (size_t i = xs.size(); i-- > 0;) body = res(xs[i], body);
  return body;
}
}  // namespace p

// ---------- free names ----------
namespace {

void fn_into(const Proc& q, std::set<Name>& out);

void fn_minus(const Proc& q, const std::vector<Name>& bound, std::set<Name>& out) {
  std::set<Name> inner;
  fn_into(q, inner);
  for (auto& b : bound) inner.erase(b);
  out.insert(inner.begin(), inner.end());
}

void fn_into(const Proc& q, std::set<Name>& out) {
  std::visit(overloaded{
                 [&](const PIn& x) {
                   out.insert(x.chan);
                   fn_minus(x.cont, x.binders, out);
                 },
                 [&](const POut& x) {
                   out.insert(x.chan);
                   out.insert(x.payload.begin(), x.payload.end());
                   fn_into(x.cont, out);
                 },
                 [&](const PGet& x) {
                   out.insert(x.session);
                   for (auto& b : x.branches) fn_minus(b.cont, b.binders, out);
                 },
                 [&](const PSend& x) {
                   out.insert(x.session);
                   out.insert(x.payload.begin(), x.payload.end());
                   fn_into(x.cont, out);
                 },
                 [&](const POpt& x) {
                   fn_into(x.body, out);
                   out.insert(x.defaults.begin(), x.defaults.end());
                   fn_minus(x.cont, x.binders, out);
                 },
                 [&](const POptEnd& x) { out.insert(x.values.begin(), x.values.end()); },
                 [&](const PDecl& x) {
                   out.insert(x.session);
                   out.insert(x.parent);
                   out.insert(x.args.begin(), x.args.end());
                   out.insert(x.chans.begin(), x.chans.end());
                   fn_into(x.cont, out);
                 },
                 [&](const PEnt& x) {
                   out.insert(x.session);
                   fn_minus(x.cont, {x.binder}, out);
                 },
                 [&](const PReq& x) {
                   out.insert(x.session);
                   out.insert(x.sub);
                   fn_into(x.cont, out);
                 },
                 [&](const PRes& x) { fn_minus(x.body, {x.binder}, out); },
                 [&](const PChoice& x) {
                   fn_into(x.left, out);
                   fn_into(x.right, out);
                 },
                 [&](const PPar& x) {
                   fn_into(x.left, out);
                   fn_into(x.right, out);
                 },
                 [&](const PRec& x) { fn_into(x.body, out); },
                 [&](const PVar&) {},
                 [&](const PEnd&) {},
             },
             q->v);
}

void all_into(const Proc& q, std::set<Name>& out) {
  fn_into(q, out);
  std::visit(overloaded{
                 [&](const PIn& x) {
                   out.insert(x.binders.begin(), x.binders.end());
                   all_into(x.cont, out);
                 },
                 [&](const PGet& x) {
                   for (auto& b : x.branches) {
                     out.insert(b.binders.begin(), b.binders.end());
                     all_into(b.cont, out);
                   }
                 },
                 [&](const POpt& x) {
                   out.insert(x.binders.begin(), x.binders.end());
                   all_into(x.body, out);
                   all_into(x.cont, out);
                 },
                 [&](const PEnt& x) {
                   out.insert(x.binder);
                   all_into(x.cont, out);
                 },
                 [&](const PRes& x) {
                   out.insert(x.binder);
                   all_into(x.body, out);
                 },
                 [&](const POut& x) { all_into(x.cont, out); },
                 [&](const PSend& x) { all_into(x.cont, out); },
                 [&](const PDecl& x) { all_into(x.cont, out); },
                 [&](const PReq& x) { all_into(x.cont, out); },
                 [&](const PChoice& x) {
                   all_into(x.left, out);
                   all_into(x.right, out);
                 },
                 [&](const PPar& x) {
                   all_into(x.left, out);
                   all_into(x.right, out);
                 },
                 [&](const PRec& x) { all_into(x.body, out); },
                 [&](const auto&) {},
             },
             q->v);
}

}  // namespace

std::set<Name> free_names(const Proc& q) {
  std::set<Name> out;
  fn_into(q, out);
  return out;
}

std::set<Name> all_names(const Proc& q) {
  std::set<Name> out;
  all_into(q, out);
  return out;
}

std::set<ProcVar> free_proc_vars(const Proc& q) {
  std::set<ProcVar> out;
  std::function<void(const Proc&, std::set<ProcVar>)> go = [&](const Proc& t,
                                                               std::set<ProcVar> bound) {
    std::visit(overloaded{
                   [&](const PVar& x) {
                     if (!bound.count(x.var)) out.insert(x.var);
                   },
                   [&](const PRec& x) {
                     bound.insert(x.var);
                     go(x.body, bound);
                   },
                   [&](const PIn& x) { go(x.cont, bound); },
                   [&](const POut& x) { go(x.cont, bound); },
                   [&](const PGet& x) {
                     for (auto& b : x.branches) go(b.cont, bound);
                   },
                   [&](const PSend& x) { go(x.cont, bound); },
                   [&](const POpt& x) {
                     go(x.body, bound);
                     go(x.cont, bound);
                   },
                   [&](const PDecl& x) { go(x.cont, bound); },
                   [&](const PEnt& x) { go(x.cont, bound); },
                   [&](const PReq& x) { go(x.cont, bound); },
                   [&](const PRes& x) { go(x.body, bound); },
                   [&](const PChoice& x) {
                     go(x.left, bound);
                     go(x.right, bound);
                   },
                   [&](const PPar& x) {
                     go(x.left, bound);
                     go(x.right, bound);
                   },
                   [&](const PEnd&) {},
                   [&](const POptEnd&) {},
               },
               t->v);
  };
  go(q, {});
  return out;
}

std::set<Role> roles_of(const Global& gt) {
  std::set<Role> out;
  std::function<void(const Global&)> go = [&](const Global& t) {
    std::visit(overloaded{
                   [&](const GCom& x) {
                     out.insert(x.from);
                     out.insert(x.to);
                     for (auto& b : x.branches) go(b.cont);
                   },
                   [&](const GOpt& x) {
                     for (auto& pt : x.parts) out.insert(pt.role);
                     go(x.body);
                     go(x.cont);
                   },
                   [&](const GDecl& x) { go(x.cont); },
                   [&](const GCall& x) {
                     out.insert(x.caller);
                     out.insert(x.roles.begin(), x.roles.end());
                     go(x.cont);
                   },
                   [&](const GChoice& x) {
                     out.insert(x.chooser);
                     go(x.left);
                     go(x.right);
                   },
                   [&](const GPar& x) {
                     go(x.left);
                     go(x.right);
                   },
                   [&](const GRec& x) { go(x.body); },
                   [&](const auto&) {},
               },
               t->v);
  };
  go(gt);
  return out;
}

std::set<Role> roles_of(const Local& lt) {
  std::set<Role> out;
  std::function<void(const Local&)> go = [&](const Local& t) {
    std::visit(overloaded{
                   [&](const LGet& x) {
                     out.insert(x.from);
                     for (auto& b : x.branches) go(b.cont);
                   },
                   [&](const LSend& x) {
                     out.insert(x.to);
                     for (auto& b : x.branches) go(b.cont);
                   },
                   [&](const LOpt& x) {
                     out.insert(x.parts.begin(), x.parts.end());
                     go(x.body);
                     go(x.cont);
                   },
                   [&](const LCall& x) { go(x.cont); },
                   [&](const LEnt& x) {
                     out.insert(x.inviter);
                     go(x.cont);
                   },
                   [&](const LReq& x) {
                     out.insert(x.invitee);
                     go(x.cont);
                   },
                   [&](const LChoice& x) {
                     go(x.left);
                     go(x.right);
                   },
                   [&](const LPar& x) {
                     go(x.left);
                     go(x.right);
                   },
                   [&](const LRec& x) { go(x.body); },
                   [&](const auto&) {},
               },
               t->v);
  };
  go(lt);
  return out;
}

std::set<Name> value_names(const Global& gt) {
  std::set<Name> out;
  std::function<void(const Global&)> go = [&](const Global& t) {
    std::visit(overloaded{
                   [&](const GCom& x) {
                     for (auto& b : x.branches) {
                       for (auto& prm : b.params) out.insert(prm.name);
                       go(b.cont);
                     }
                   },
                   [&](const GOpt& x) {
                     for (auto& pt : x.parts)
                       for (auto& d : pt.defaults) out.insert(d.name);
                     go(x.body);
                     go(x.cont);
                   },
                   [&](const GDecl& x) { go(x.cont); },
                   [&](const GCall& x) {
                     out.insert(x.args.begin(), x.args.end());
                     go(x.cont);
                   },
                   [&](const GChoice& x) {
                     go(x.left);
                     go(x.right);
                   },
                   [&](const GPar& x) {
                     go(x.left);
                     go(x.right);
                   },
                   [&](const GRec& x) { go(x.body); },
                   [&](const auto&) {},
               },
               t->v);
  };
  go(gt);
  return out;
}

// ---------- substitution ----------
Name fresh_name(const Name& base, const std::set<Name>& avoid) {
  Name cand{base.id + "'"};
  while (avoid.count(cand)) cand.id += "'";
  return cand;
}

namespace {

Name subst_name(const Subst& s, const Name& n) {
  auto it = s.find(n);
  return it == s.end() ? n : it->second;
}
std::vector<Name> subst_name(const Subst& s, const std::vector<Name>& ns) {
  std::vector<Name> out;
  out.reserve(ns.size());
  for (auto& n : ns) out.push_back(subst_name(s, n));
  return out;
}

// Prepares a scope with binders: drops shadowed keys and renames binders that would capture.
struct Scope {
  Subst inner;
  std::vector<Name> binders;
};

Scope enter(const Subst& s, const std::vector<Name>& binders, const Proc& body) {
  Scope sc{s, binders};
  for (auto& b : binders) sc.inner.erase(b);
  if (sc.inner.empty()) return sc;
  std::set<Name> fv = free_names(body);
  std::set<Name> ranges;
  for (auto& [k, v] : sc.inner)
    if (fv.count(k)) ranges.insert(v);
  std::set<Name> avoid = all_names(body);
  for (auto& [k, v] : sc.inner) {
    avoid.insert(k);
    avoid.insert(v);
  }
  avoid.insert(binders.begin(), binders.end());
  for (auto& b : sc.binders) {
    if (!ranges.count(b)) continue;
    Name nb = fresh_name(b, avoid);
    avoid.insert(nb);
    sc.inner[b] = nb;
    b = nb;
  }
  return sc;
}

Proc subst(const Proc& q, const Subst& s) {
  if (s.empty()) return q;
  return std::visit(
      overloaded{
          [&](const PIn& x) {
            auto sc = enter(s, x.binders, x.cont);
            return p::in(subst_name(s, x.chan), sc.binders, subst(x.cont, sc.inner));
          },
          [&](const POut& x) {
            return p::out(subst_name(s, x.chan), subst_name(s, x.payload), subst(x.cont, s));
          },
          [&](const PGet& x) {
            std::vector<PBranch> bs;
            for (auto& b : x.branches) {
              auto sc = enter(s, b.binders, b.cont);
              bs.push_back(PBranch{b.label, sc.binders, subst(b.cont, sc.inner)});
            }
            return p::get(subst_name(s, x.session), x.from, x.to, bs);
          },
          [&](const PSend& x) {
            return p::send(subst_name(s, x.session), x.from, x.to, x.label, subst_name(s, x.payload),
                           subst(x.cont, s));
          },
          [&](const POpt& x) {
            auto sc = enter(s, x.binders, x.cont);
            return p::opt(x.owner, x.parts, subst(x.body, s), sc.binders, subst_name(s, x.defaults),
                          subst(x.cont, sc.inner));
          },
          [&](const POptEnd& x) { return p::optend(x.owner, subst_name(s, x.values)); },
          [&](const PDecl& x) {
            return p::decl(subst_name(s, x.session), subst_name(s, x.parent), subst_name(s, x.args),
                           subst_name(s, x.chans), x.external, subst(x.cont, s));
          },
          [&](const PEnt& x) {
            auto sc = enter(s, std::vector<Name>{x.binder}, x.cont);
            return p::ent(subst_name(s, x.session), x.inviter, x.invitee, x.asRole, sc.binders[0],
                          subst(x.cont, sc.inner));
          },
          [&](const PReq& x) {
            return p::req(subst_name(s, x.session), x.inviter, x.invitee, x.asRole, subst_name(s, x.sub),
                          subst(x.cont, s));
          },
          [&](const PRes& x) {
            auto sc = enter(s, std::vector<Name>{x.binder}, x.body);
            return p::res(sc.binders[0], subst(x.body, sc.inner));
          },
          [&](const PChoice& x) { return p::choice(subst(x.left, s), subst(x.right, s)); },
          [&](const PPar& x) { return p::par(subst(x.left, s), subst(x.right, s)); },
          [&](const PRec& x) { return p::rec(x.var, subst(x.body, s)); },
          [&](const PVar&) { return q; },
          [&](const PEnd&) { return q; },
      },
      q->v);
}

}  // namespace

Proc substitute(const Proc& q, const Subst& s) {
  Subst live;
  for (auto& [k, v] : s)
    if (k != v) live.emplace(k, v);
  return subst(q, live);
}

Proc substitute_var(const Proc& q, const ProcVar& xv, const Proc& by) {
  return std::visit(
      overloaded{
          [&](const PVar& x) { return x.var == xv ? by : q; },
          [&](const PRec& x) { return x.var == xv ? q : p::rec(x.var, substitute_var(x.body, xv, by)); },
          [&](const PIn& x) { return p::in(x.chan, x.binders, substitute_var(x.cont, xv, by)); },
          [&](const POut& x) { return p::out(x.chan, x.payload, substitute_var(x.cont, xv, by)); },
          [&](const PGet& x) {
            auto bs = x.branches;
            for (auto& b : bs) b.cont = substitute_var(b.cont, xv, by);
            return p::get(x.session, x.from, x.to, bs);
          },
          [&](const PSend& x) {
            return p::send(x.session, x.from, x.to, x.label, x.payload,
                           substitute_var(x.cont, xv, by));
          },
          [&](const POpt& x) {
            return p::opt(x.owner, x.parts, substitute_var(x.body, xv, by), x.binders, x.defaults,
                          substitute_var(x.cont, xv, by));
          },
          [&](const PDecl& x) {
            return p::decl(x.session, x.parent, x.args, x.chans, x.external,
                           substitute_var(x.cont, xv, by));
          },
          [&](const PEnt& x) {
            return p::ent(x.session, x.inviter, x.invitee, x.asRole, x.binder,
                          substitute_var(x.cont, xv, by));
          },
          [&](const PReq& x) {
            return p::req(x.session, x.inviter, x.invitee, x.asRole, x.sub,
                          substitute_var(x.cont, xv, by));
          },
          [&](const PRes& x) { return p::res(x.binder, substitute_var(x.body, xv, by)); },
          [&](const PChoice& x) {
            return p::choice(substitute_var(x.left, xv, by), substitute_var(x.right, xv, by));
          },
          [&](const PPar& x) {
            return p::par(substitute_var(x.left, xv, by), substitute_var(x.right, xv, by));
          },
          [&](const auto&) { return q; },
      },
      q->v);
}

Global substitute(const Global& gt, const Subst& s) {
  if (s.empty()) return gt;
  auto params = [&](std::vector<Param> ps) {
    for (auto& prm : ps) prm.name = subst_name(s, prm.name);
    return ps;
  };
  return std::visit(
      overloaded{
          [&](const GCom& x) {
            auto bs = x.branches;
            for (auto& b : bs) {
              b.params = params(b.params);
              b.cont = substitute(b.cont, s);
            }
            return g::com(x.from, x.to, bs);
          },
          [&](const GOpt& x) {
            auto ps = x.parts;
            for (auto& pt : ps) pt.defaults = params(pt.defaults);
            return g::opt(ps, substitute(x.body, s), substitute(x.cont, s));
          },
          // Protocol bodies are closed over their own arguments.
          [&](const GDecl& x) {
            return g::decl(x.proto, x.internal, x.args, x.external, x.body, substitute(x.cont, s));
          },
          [&](const GCall& x) {
            return g::call(x.caller, x.proto, x.roles, subst_name(s, x.args), substitute(x.cont, s));
          },
          [&](const GChoice& x) {
            return g::choice(substitute(x.left, s), x.chooser, substitute(x.right, s));
          },
          [&](const GPar& x) { return g::par(substitute(x.left, s), substitute(x.right, s)); },
          [&](const GRec& x) { return g::rec(x.var, substitute(x.body, s)); },
          [&](const auto&) { return gt; },
      },
      gt->v);
}

Local substitute(const Local& t, const Subst& s) {
  if (s.empty()) return t;
  auto params = [&](std::vector<Param> ps) {
    for (auto& prm : ps) prm.name = subst_name(s, prm.name);
    return ps;
  };
  auto branches = [&](std::vector<LBranch> bs) {
    for (auto& b : bs) {
      b.params = params(b.params);
      b.cont = substitute(b.cont, s);
    }
    return bs;
  };
  return std::visit(
      overloaded{
          [&](const LGet& x) { return l::get(x.from, branches(x.branches)); },
          [&](const LSend& x) { return l::send(x.to, branches(x.branches)); },
          [&](const LOpt& x) {
            return l::opt(x.parts, substitute(x.body, s), params(x.binders), substitute(x.cont, s));
          },
          [&](const LCall& x) {
            return l::call(x.proto, x.body, subst_name(s, x.argVals), x.argBinders, x.external,
                           substitute(x.cont, s));
          },
          [&](const LEnt& x) {
            return l::ent(x.proto, x.asRole, subst_name(s, x.args), x.inviter, substitute(x.cont, s));
          },
          [&](const LReq& x) {
            return l::req(x.proto, x.forRole, subst_name(s, x.args), x.invitee, substitute(x.cont, s));
          },
          [&](const LChoice& x) { return l::choice(substitute(x.left, s), substitute(x.right, s)); },
          [&](const LPar& x) {
            return std::make_shared<const LocalNode>(
                LocalNode{LPar{substitute(x.left, s), substitute(x.right, s)}});
          },
          [&](const LRec& x) { return l::rec(x.var, substitute(x.body, s)); },
          [&](const auto&) { return t; },
      },
      t->v);
}

Local substitute_var(const Local& t, const TypeVar& xv, const Local& by) {
  auto branches = [&](std::vector<LBranch> bs) {
    for (auto& b : bs) b.cont = substitute_var(b.cont, xv, by);
    return bs;
  };
  return std::visit(
      overloaded{
          [&](const LVar& x) { return x.var == xv ? by : t; },
          [&](const LRec& x) { return x.var == xv ? t : l::rec(x.var, substitute_var(x.body, xv, by)); },
          [&](const LGet& x) { return l::get(x.from, branches(x.branches)); },
          [&](const LSend& x) { return l::send(x.to, branches(x.branches)); },
          [&](const LOpt& x) {
            return l::opt(x.parts, substitute_var(x.body, xv, by), x.binders,
                          substitute_var(x.cont, xv, by));
          },
          [&](const LCall& x) {
            return l::call(x.proto, x.body, x.argVals, x.argBinders, x.external,
                           substitute_var(x.cont, xv, by));
          },
          [&](const LEnt& x) {
            return l::ent(x.proto, x.asRole, x.args, x.inviter, substitute_var(x.cont, xv, by));
          },
          [&](const LReq& x) {
            return l::req(x.proto, x.forRole, x.args, x.invitee, substitute_var(x.cont, xv, by));
          },
          [&](const LChoice& x) {
            return l::choice(substitute_var(x.left, xv, by), substitute_var(x.right, xv, by));
          },
          [&](const LPar& x) {
            return std::make_shared<const LocalNode>(
                LocalNode{LPar{substitute_var(x.left, xv, by), substitute_var(x.right, xv, by)}});
          },
          [&](const LEnd&) { return t; },
      },
      t->v);
}

Global substitute_var(const Global& gt, const TypeVar& xv, const Global& by) {
  return std::visit(
      overloaded{
          [&](const GVar& x) { return x.var == xv ? by : gt; },
          [&](const GRec& x) {
            return x.var == xv ? gt : g::rec(x.var, substitute_var(x.body, xv, by));
          },
          [&](const GCom& x) {
            auto bs = x.branches;
            for (auto& b : bs) b.cont = substitute_var(b.cont, xv, by);
            return g::com(x.from, x.to, bs);
          },
          [&](const GOpt& x) {
            return g::opt(x.parts, substitute_var(x.body, xv, by), substitute_var(x.cont, xv, by));
          },
          [&](const GDecl& x) {
            return g::decl(x.proto, x.internal, x.args, x.external, x.body,
                           substitute_var(x.cont, xv, by));
          },
          [&](const GCall& x) {
            return g::call(x.caller, x.proto, x.roles, x.args, substitute_var(x.cont, xv, by));
          },
          [&](const GChoice& x) {
            return g::choice(substitute_var(x.left, xv, by), x.chooser,
                             substitute_var(x.right, xv, by));
          },
          [&](const GPar& x) {
            return g::par(substitute_var(x.left, xv, by), substitute_var(x.right, xv, by));
          },
          [&](const GEnd&) { return gt; },
      },
      gt->v);
}

// ---------- alpha normalisation ----------
namespace {

struct Renamer {
  // Maps each binder occurrence to a new name; `next` yields the replacement.
  std::function<Name(const Name&)> next;

  std::vector<Name> bind(const std::vector<Name>& bs, Subst& s) {
    std::vector<Name> out;
    for (auto& b : bs) {
      Name nb = next(b);
      s[b] = nb;
      out.push_back(nb);
    }
    return out;
  }

  Proc go(const Proc& q, const Subst& s) {
    return std::visit(
        overloaded{
            [&](const PIn& x) {
              Subst in = s;
              auto bs = bind(x.binders, in);
              return p::in(subst_name(s, x.chan), bs, go(x.cont, in));
            },
            [&](const POut& x) {
              return p::out(subst_name(s, x.chan), subst_name(s, x.payload), go(x.cont, s));
            },
            [&](const PGet& x) {
              std::vector<PBranch> bs;
              for (auto& b : x.branches) {
                Subst in = s;
                auto nbs = bind(b.binders, in);
                bs.push_back(PBranch{b.label, nbs, go(b.cont, in)});
              }
              return p::get(subst_name(s, x.session), x.from, x.to, bs);
            },
            [&](const PSend& x) {
              return p::send(subst_name(s, x.session), x.from, x.to, x.label, subst_name(s, x.payload),
                             go(x.cont, s));
            },
            [&](const POpt& x) {
              auto body = go(x.body, s);
              Subst in = s;
              auto bs = bind(x.binders, in);
              return p::opt(x.owner, x.parts, body, bs, subst_name(s, x.defaults), go(x.cont, in));
            },
            [&](const POptEnd& x) { return p::optend(x.owner, subst_name(s, x.values)); },
            [&](const PDecl& x) {
              return p::decl(subst_name(s, x.session), subst_name(s, x.parent), subst_name(s, x.args),
                             subst_name(s, x.chans), x.external, go(x.cont, s));
            },
            [&](const PEnt& x) {
              Subst in = s;
              auto bs = bind(std::vector<Name>{x.binder}, in);
              return p::ent(subst_name(s, x.session), x.inviter, x.invitee, x.asRole, bs[0],
                            go(x.cont, in));
            },
            [&](const PReq& x) {
              return p::req(subst_name(s, x.session), x.inviter, x.invitee, x.asRole, subst_name(s, x.sub),
                            go(x.cont, s));
            },
            [&](const PRes& x) {
              Subst in = s;
              auto bs = bind(std::vector<Name>{x.binder}, in);
              return p::res(bs[0], go(x.body, in));
            },
            [&](const PChoice& x) { return p::choice(go(x.left, s), go(x.right, s)); },
            [&](const PPar& x) { return p::par(go(x.left, s), go(x.right, s)); },
            [&](const PRec& x) { return p::rec(x.var, go(x.body, s)); },
            [&](const auto&) { return q; },
        },
        q->v);
  }
};

}  // namespace

Proc alpha_normalize(const Proc& q) {
  int counter = 0;
  Renamer r{[&](const Name&) { return Name{"%" + std::to_string(counter++)}; }};
  return r.go(q, {});
}

bool alpha_eq(const Proc& a, const Proc& b) {
  return print(alpha_normalize(a)) == print(alpha_normalize(b));
}
bool alpha_eq(const Local& a, const Local& b) { return print(a) == print(b); }
bool alpha_eq(const Global& a, const Global& b) { return print(a) == print(b); }

Proc freshen_binders(const Proc& q) {
  std::set<Name> used = free_names(q);
  Renamer r{[&](const Name& b) {
    Name nb = used.count(b) ? fresh_name(b, used) : b;
    while (used.count(nb)) nb = fresh_name(nb, used);
    used.insert(nb);
    return nb;
  }};
  return r.go(q, {});
}

// ---------- Par components ----------
std::vector<Proc> par_components(const Proc& q) {
  std::vector<Proc> out;
  std::function<void(const Proc&)> go = [&](const Proc& t) {
    if (auto* x = std::get_if<PPar>(&t->v)) {
      go(x->left);
      go(x->right);
    } else if (!is<PEnd>(t)) {
      out.push_back(t);
    }
  };
  go(q);
  return out;
}

std::vector<Local> par_components(const Local& t) {
  std::vector<Local> out;
  std::function<void(const Local&)> go = [&](const Local& x) {
    if (auto* pp = std::get_if<LPar>(&x->v)) {
      go(pp->left);
      go(pp->right);
    } else if (!is<LEnd>(x)) {
      out.push_back(x);
    }
  };
  go(t);
  return out;
}

std::vector<Global> par_components(const Global& gt) {
  std::vector<Global> out;
  std::function<void(const Global&)> go = [&](const Global& x) {
    if (auto* pp = std::get_if<GPar>(&x->v)) {
      go(pp->left);
      go(pp->right);
    } else if (!is<GEnd>(x)) {
      out.push_back(x);
    }
  };
  go(gt);
  return out;
}

std::string erased_key(const Local& t) { return print(t, PrintOptions{true, true}); }
std::string erased_key(const Global& gt) { return print(gt, PrintOptions{true, true}); }

bool type_equiv(const Local& a, const Local& b) { return erased_key(a) == erased_key(b); }
bool type_equiv(const Global& a, const Global& b) { return erased_key(a) == erased_key(b); }

}  // namespace optsession

namespace optsession {

std::string to_string(const Path& path) {
  if (path.empty()) return "root";
  std::string out;
  for (size_t i = 0; i < path.size(); ++i) out += (i ? "." : "") + std::to_string(path[i]);
  return out;
}

std::vector<Proc> children(const Proc& q) {
  return std::visit(
      overloaded{
          [](const PIn& x) { return std::vector<Proc>{x.cont}; },
          [](const POut& x) { return std::vector<Proc>{x.cont}; },
          [](const PGet& x) {
            std::vector<Proc> out;
            for (auto& b : x.branches) out.push_back(b.cont);
            return out;
          },
          [](const PSend& x) { return std::vector<Proc>{x.cont}; },
          [](const POpt& x) { return std::vector<Proc>{x.body, x.cont}; },
          [](const PDecl& x) { return std::vector<Proc>{x.cont}; },
          [](const PEnt& x) { return std::vector<Proc>{x.cont}; },
          [](const PReq& x) { return std::vector<Proc>{x.cont}; },
          [](const PRes& x) { return std::vector<Proc>{x.body}; },
          [](const PChoice& x) { return std::vector<Proc>{x.left, x.right}; },
          [](const PPar& x) { return std::vector<Proc>{x.left, x.right}; },
          [](const PRec& x) { return std::vector<Proc>{x.body}; },
          [](const auto&) { return std::vector<Proc>{}; },
      },
      q->v);
}

Proc with_children(const Proc& q, const std::vector<Proc>& k) {
  return std::visit(
      overloaded{
          [&](const PIn& x) { return p::in(x.chan, x.binders, k.at(0)); },
          [&](const POut& x) { return p::out(x.chan, x.payload, k.at(0)); },
          [&](const PGet& x) {
            auto bs = x.branches;
            for (size_t i = 0; i < bs.size(); ++i) bs[i].cont = k.at(i);
            return p::get(x.session, x.from, x.to, bs);
          },
          [&](const PSend& x) { return p::send(x.session, x.from, x.to, x.label, x.payload, k.at(0)); },
          [&](const POpt& x) {
            return p::opt(x.owner, x.parts, k.at(0), x.binders, x.defaults, k.at(1));
          },
          [&](const PDecl& x) {
            return p::decl(x.session, x.parent, x.args, x.chans, x.external, k.at(0));
          },
          [&](const PEnt& x) {
            return p::ent(x.session, x.inviter, x.invitee, x.asRole, x.binder, k.at(0));
          },
          [&](const PReq& x) {
            return p::req(x.session, x.inviter, x.invitee, x.asRole, x.sub, k.at(0));
          },
          [&](const PRes& x) { return p::res(x.binder, k.at(0)); },
          [&](const PChoice&) { return p::choice(k.at(0), k.at(1)); },
          [&](const PPar&) { return p::par(k.at(0), k.at(1)); },
          [&](const PRec& x) { return p::rec(x.var, k.at(0)); },
          [&](const auto&) { return q; },
      },
      q->v);
}

Proc subterm(const Proc& q, const Path& path) {
  Proc cur = q;
  for (int i : path) cur = children(cur).at(static_cast<size_t>(i));
  return cur;
}

Proc replace_at(const Proc& q, const Path& path, const Proc& by) {
  if (path.empty()) return by;
  auto kids = children(q);
  auto idx = static_cast<size_t>(path.front());
  kids.at(idx) = replace_at(kids[idx], Path(path.begin() + 1, path.end()), by);
  return with_children(q, kids);
}

}  // namespace optsession
