#pragma once

#include <compare>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace optsession {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Distinct identifier namespaces. Equality is by string.
struct Name {
  std::string id;
  auto operator<=>(const Name&) const = default;
};
struct Role {
  std::string id;
  auto operator<=>(const Role&) const = default;
};
struct Label {
  std::string id;
  auto operator<=>(const Label&) const = default;
};
struct ProcVar {
  std::string id;
  auto operator<=>(const ProcVar&) const = default;
};
struct TypeVar {
  std::string id;
  auto operator<=>(const TypeVar&) const = default;
};

struct Kind {
  enum class Tag { Role, Val, Protocol, Arrow };
  Tag tag = Tag::Val;
  std::string sort;  // Val only
  std::vector<Kind> params;  // Arrow only
  std::shared_ptr<const Kind> result;  // Arrow only

  static Kind role() { return Kind{Tag::Role, {}, {}, nullptr}; }
  static Kind val(std::string s) { return Kind{Tag::Val, std::move(s), {}, nullptr}; }
  static Kind protocol() { return Kind{Tag::Protocol, {}, {}, nullptr}; }
  static Kind arrow(std::vector<Kind> ps, Kind r) {
    return Kind{Tag::Arrow, {}, std::move(ps), std::make_shared<const Kind>(std::move(r))};
  }
  bool operator==(const Kind& o) const;
};
std::string to_string(const Kind& k);

struct Param {
  Name name;
  Kind kind;
  bool operator==(const Param&) const = default;
};

// ---------- global types ----------
struct GlobalNode;
using Global = std::shared_ptr<const GlobalNode>;

struct GBranch {
  Label label;
  std::vector<Param> params;
  Global cont;
};
struct GCom {
  Role from, to;
  std::vector<GBranch> branches;
};
struct GOptPart {
  Role role;
  std::vector<Param> defaults;
};
struct GOpt {
  std::vector<GOptPart> parts;
  Global body, cont;
};
struct GDecl {
  Name proto;
  std::vector<Role> internal;
  std::vector<Param> args;
  std::vector<Role> external;
  Global body, cont;
};
struct GCall {
  Role caller;
  Name proto;
  std::vector<Role> roles;
  std::vector<Name> args;
  Global cont;
};
struct GChoice {
  Global left;
  Role chooser;
  Global right;
};
struct GPar {
  Global left, right;
};
struct GRec {
  TypeVar var;
  Global body;
};
struct GVar {
  TypeVar var;
};
struct GEnd {};

struct GlobalNode {
  std::variant<GCom, GOpt, GDecl, GCall, GChoice, GPar, GRec, GVar, GEnd> v;
};

namespace g {
Global end();
Global var(TypeVar t);
Global rec(TypeVar t, Global body);
Global par(Global a, Global b);
Global par(const std::vector<Global>& parts);  // right nested, End when empty
Global seq(const std::vector<Global>& blocks, Global last);
Global com(Role from, Role to, std::vector<GBranch> branches);
Global com1(Role from, Role to, Label l, std::vector<Param> params, Global cont);
Global opt(std::vector<GOptPart> parts, Global body, Global cont);
Global decl(Name proto, std::vector<Role> internal, std::vector<Param> args,
            std::vector<Role> external, Global body, Global cont);
Global call(Role caller, Name proto, std::vector<Role> roles, std::vector<Name> args, Global cont);
Global choice(Global l, Role chooser, Global r);
Global with_cont(const Global& block, Global cont);  // replace the continuation of a prefix
}  // namespace g

// ---------- local types ----------
struct LocalNode;
using Local = std::shared_ptr<const LocalNode>;

struct LBranch {
  Label label;
  std::vector<Param> params;
  Local cont;
};
struct LGet {
  Role from;
  std::vector<LBranch> branches;
};
struct LSend {
  Role to;
  std::vector<LBranch> branches;
};
struct LOpt {
  std::vector<Role> parts;
  Local body;
  std::vector<Param> binders;
  Local cont;
};
struct LCall {
  Name proto;
  Global body;
  std::vector<Name> argVals;
  std::vector<Param> argBinders;
  std::vector<Role> external;
  Local cont;
};
struct LEnt {
  Name proto;
  Role asRole;
  std::vector<Name> args;
  Role inviter;
  Local cont;
};
struct LReq {
  Name proto;
  Role forRole;
  std::vector<Name> args;
  Role invitee;
  Local cont;
};
struct LChoice {
  Local left, right;
};
struct LPar {
  Local left, right;
};
struct LRec {
  TypeVar var;
  Local body;
};
struct LVar {
  TypeVar var;
};
struct LEnd {};

struct LocalNode {
  std::variant<LGet, LSend, LOpt, LCall, LEnt, LReq, LChoice, LPar, LRec, LVar, LEnd> v;
};

namespace l {
Local end();
Local var(TypeVar t);
Local rec(TypeVar t, Local body);
Local par(Local a, Local b);  // drops End operands
Local par(const std::vector<Local>& parts);
Local get(Role from, std::vector<LBranch> branches);
Local send(Role to, std::vector<LBranch> branches);
Local get1(Role from, Label lab, std::vector<Param> params, Local cont);
Local send1(Role to, Label lab, std::vector<Param> params, Local cont);
Local opt(std::vector<Role> parts, Local body, std::vector<Param> binders, Local cont);
Local call(Name proto, Global body, std::vector<Name> argVals, std::vector<Param> argBinders,
           std::vector<Role> external, Local cont);
Local ent(Name proto, Role asRole, std::vector<Name> args, Role inviter, Local cont);
Local req(Name proto, Role forRole, std::vector<Name> args, Role invitee, Local cont);
Local choice(Local a, Local b);
}  // namespace l

// ---------- processes ----------
struct ProcNode;
using Proc = std::shared_ptr<const ProcNode>;

struct PBranch {
  Label label;
  std::vector<Name> binders;
  Proc cont;
};
struct PIn {
  Name chan;
  std::vector<Name> binders;
  Proc cont;
};
struct POut {
  Name chan;
  std::vector<Name> payload;
  Proc cont;
};
struct PGet {
  Name session;
  Role from, to;
  std::vector<PBranch> branches;
};
struct PSend {
  Name session;
  Role from, to;
  Label label;
  std::vector<Name> payload;
  Proc cont;
};
struct POpt {
  Role owner;
  std::vector<Role> parts;
  Proc body;
  std::vector<Name> binders;
  std::vector<Name> defaults;
  Proc cont;
};
struct POptEnd {
  Role owner;
  std::vector<Name> values;
};
struct PDecl {
  Name session;  // the new sub-session k
  Name parent;
  std::vector<Name> args;
  std::vector<Name> chans;
  std::vector<Role> external;
  Proc cont;
};
struct PEnt {
  Name session;
  Role inviter, invitee, asRole;
  Name binder;
  Proc cont;
};
struct PReq {
  Name session;
  Role inviter, invitee, asRole;
  Name sub;
  Proc cont;
};
struct PRes {
  Name binder;
  Proc body;
};
struct PChoice {
  Proc left, right;
};
struct PPar {
  Proc left, right;
};
struct PRec {
  ProcVar var;
  Proc body;
};
struct PVar {
  ProcVar var;
};
struct PEnd {};

struct ProcNode {
  std::variant<PIn, POut, PGet, PSend, POpt, POptEnd, PDecl, PEnt, PReq, PRes, PChoice, PPar, PRec,
               PVar, PEnd>
      v;
};

namespace p {
Proc end();
Proc var(ProcVar x);
Proc rec(ProcVar x, Proc body);
Proc par(Proc a, Proc b);
Proc par(const std::vector<Proc>& parts);  // right nested, End when empty
Proc choice(Proc a, Proc b);
Proc in(Name chan, std::vector<Name> binders, Proc cont);
Proc out(Name chan, std::vector<Name> payload, Proc cont);
Proc get(Name s, Role from, Role to, std::vector<PBranch> branches);
Proc get1(Name s, Role from, Role to, Label lab, std::vector<Name> binders, Proc cont);
Proc send(Name s, Role from, Role to, Label lab, std::vector<Name> payload, Proc cont);
Proc opt(Role owner, std::vector<Role> parts, Proc body, std::vector<Name> binders,
         std::vector<Name> defaults, Proc cont);
Proc optend(Role owner, std::vector<Name> values);
Proc decl(Name k, Name parent, std::vector<Name> args, std::vector<Name> chans,
          std::vector<Role> external, Proc cont);
Proc ent(Name s, Role inviter, Role invitee, Role asRole, Name binder, Proc cont);
Proc req(Name s, Role inviter, Role invitee, Role asRole, Name sub, Proc cont);
Proc res(Name x, Proc body);
Proc res(const std::vector<Name>& xs, Proc body);
}  // namespace p

template <class T>
bool is(const Proc& q) {
  return std::holds_alternative<T>(q->v);
}
template <class T>
bool is(const Local& t) {
  return std::holds_alternative<T>(t->v);
}
template <class T>
bool is(const Global& t) {
  return std::holds_alternative<T>(t->v);
}

// ---------- names, substitution, alpha equivalence ----------
using Subst = std::map<Name, Name>;

std::set<Name> free_names(const Proc& q);
std::set<Name> all_names(const Proc& q);  // free and bound
std::set<ProcVar> free_proc_vars(const Proc& q);
std::set<Role> roles_of(const Global& g);  // free roles; Decl bodies have their own scope
std::set<Role> roles_of(const Local& t);
std::set<Name> value_names(const Global& g);

// Capture-avoiding: bound names that would capture a substituted value are renamed.
Proc substitute(const Proc& q, const Subst& s);
Proc substitute_var(const Proc& q, const ProcVar& x, const Proc& by);
// Types have no value binders that matter for substitution: every occurrence is replaced.
Global substitute(const Global& gt, const Subst& s);
Local substitute(const Local& t, const Subst& s);
Local substitute_var(const Local& t, const TypeVar& x, const Local& by);
Global substitute_var(const Global& gt, const TypeVar& x, const Global& by);

Name fresh_name(const Name& base, const std::set<Name>& avoid);

// Renames bound names to canonical placeholders, in pre-order.
Proc alpha_normalize(const Proc& q);
bool alpha_eq(const Proc& a, const Proc& b);
bool alpha_eq(const Local& a, const Local& b);
bool alpha_eq(const Global& a, const Global& b);

// Renames every binder so that bound names are pairwise distinct and distinct from free names.
Proc freshen_binders(const Proc& q);

// Flattened Par components (End dropped).
std::vector<Proc> par_components(const Proc& q);
std::vector<Local> par_components(const Local& t);
std::vector<Global> par_components(const Global& gt);

// Type equality that ignores value names and Par association/order.
bool type_equiv(const Local& a, const Local& b);
bool type_equiv(const Global& a, const Global& b);
std::string erased_key(const Local& t);
std::string erased_key(const Global& gt);

// Child-index path into a process term. Children: Par left/right; Res body; Opt body then cont;
// prefix continuation; Get branches in order; Choice left/right; Rec body.
using Path = std::vector<int>;
std::string to_string(const Path& path);
std::vector<Proc> children(const Proc& q);
Proc subterm(const Proc& q, const Path& path);
Proc replace_at(const Proc& q, const Path& path, const Proc& by);
Proc with_children(const Proc& q, const std::vector<Proc>& kids);

struct SyntaxError : std::runtime_error {
  int line = 0, column = 0;
  std::vector<std::string> expected;
  SyntaxError(const std::string& msg, int ln, int col, std::vector<std::string> exp);
};

}  // namespace optsession
