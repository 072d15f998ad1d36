#include "optsession/printer.hpp"

#include <algorithm>
#include <sstream>

namespace optsession {

std::string join_roles(const std::vector<Role>& rs, const char* sep) {
  std::string out;
  for (size_t i = 0; i < rs.size(); ++i) out += (i ? sep : "") + rs[i].id;
  return out;
}

std::string join_names(const std::vector<Name>& ns, const char* sep) {
  std::string out;
  for (size_t i = 0; i < ns.size(); ++i) out += (i ? sep : "") + ns[i].id;
  return out;
}

std::string to_string(const Kind& k) {
  switch (k.tag) {
    case Kind::Tag::Role: return "Role";
    case Kind::Tag::Protocol: return "Proto";
    case Kind::Tag::Val: return k.sort;
    case Kind::Tag::Arrow: {
      std::string s = "(";
      for (size_t i = 0; i < k.params.size(); ++i) s += (i ? ", " : "") + to_string(k.params[i]);
      return s + ") -> " + to_string(*k.result);
    }
  }
  return "?";
}

std::string print(const Param& prm) { return prm.name.id + ":" + to_string(prm.kind); }

namespace {

struct Printer {
  PrintOptions o;

  std::string nm(const Name& n) const { return o.eraseValues ? "_" : n.id; }
  std::string names(const std::vector<Name>& ns) const {
    std::string out;
    for (size_t i = 0; i < ns.size(); ++i) out += (i ? ", " : "") + nm(ns[i]);
    return out;
  }
  std::string params(const std::vector<Param>& ps) const {
    std::string out;
    for (size_t i = 0; i < ps.size(); ++i)
      out += (i ? ", " : "") + nm(ps[i].name) + ":" + to_string(ps[i].kind);
    return out;
  }
  static std::string roles(const std::vector<Role>& rs) { return join_roles(rs, ", "); }

  // Par printing: right-nested chains print flat, left-nested operands get parentheses.
  template <class Node, class ParT, class F>
  std::string par_chain(const Node& root, F&& atom) const {
    std::vector<Node> items;
    Node cur = root;
    while (auto* pp = std::get_if<ParT>(&cur->v)) {
      items.push_back(pp->left);
      cur = pp->right;
    }
    items.push_back(cur);
    std::vector<std::string> parts;
    for (auto& it : items) {
      bool nestedPar = std::holds_alternative<ParT>(it->v);
      parts.push_back(nestedPar ? "(" + atom(it, true) + ")" : atom(it, false));
    }
    std::string out;
    for (size_t i = 0; i < parts.size(); ++i) out += (i ? " | " : "") + parts[i];
    return out;
  }

  template <class Node, class ParT, class F>
  std::string sorted_par(const Node& root, F&& atom) const {
    std::vector<Node> comps = par_components(root);
    std::vector<std::string> parts;
    for (auto& c : comps) parts.push_back(atom(c, false));
    std::sort(parts.begin(), parts.end());
    if (parts.empty()) return "";
    std::string out;
    for (size_t i = 0; i < parts.size(); ++i) out += (i ? " | " : "") + parts[i];
    return out;
  }

  // ---- global ----
  std::string gtop(const Global& t) const {
    if (is<GPar>(t)) {
      if (o.sortPar) {
        auto s = sorted_par<Global, GPar>(t, [&](const Global& x, bool) { return g1(x); });
        return s.empty() ? "end" : s;
      }
      return par_chain<Global, GPar>(t, [&](const Global& x, bool nested) {
        return nested ? gtop(x) : g1(x);
      });
    }
    return g1(t);
  }
  std::string gcont(const Global& c) const {
    if (is<GEnd>(c)) return "";
    return ". " + g1(c);
  }
  std::string g1(const Global& t) const {
    return std::visit(
        overloaded{
            [&](const GEnd&) -> std::string { return "end"; },
            [&](const GVar& x) -> std::string { return x.var.id; },
            [&](const GRec& x) -> std::string { return "mu " + x.var.id + ". " + g1(x.body); },
            [&](const GPar&) -> std::string { return "(" + gtop(t) + ")"; },
            [&](const GCom& x) -> std::string {
              std::string s = x.from.id + " -> " + x.to.id + " : { ";
              for (size_t i = 0; i < x.branches.size(); ++i) {
                auto& b = x.branches[i];
                s += (i ? ", " : "") + b.label.id + "(" + params(b.params) + ")";
                s += is<GEnd>(b.cont) ? "" : ". " + g1(b.cont);
              }
              return s + " }";
            },
            [&](const GOpt& x) -> std::string {
              std::string s = "opt[";
              for (size_t i = 0; i < x.parts.size(); ++i) {
                s += (i ? ", " : "") + x.parts[i].role.id;
                if (!x.parts[i].defaults.empty()) s += "(" + params(x.parts[i].defaults) + ")";
              }
              s += "]{ " + gtop(x.body) + " }";
              auto c = gcont(x.cont);
              return c.empty() ? s : s + " " + c;
            },
            [&](const GDecl& x) -> std::string {
              std::string s = "let " + x.proto.id + "[" + roles(x.internal) + "](" +
                              params(x.args) + ")[" + roles(x.external) + "]{ " + gtop(x.body) +
                              " }";
              auto c = gcont(x.cont);
              return c.empty() ? s : s + " " + c;
            },
            [&](const GCall& x) -> std::string {
              std::string s = "call " + x.caller.id + " " + x.proto.id + "[" + roles(x.roles) +
                              "](" + names(x.args) + ")";
              auto c = gcont(x.cont);
              return c.empty() ? s : s + " " + c;
            },
            [&](const GChoice& x) -> std::string {
              return "choice " + x.chooser.id + " { " + gtop(x.left) + " } or { " +
                     gtop(x.right) + " }";
            },
        },
        t->v);
  }

  // ---- local ----
  std::string ltop(const Local& t) const {
    if (is<LPar>(t)) {
      if (o.sortPar) {
        auto s = sorted_par<Local, LPar>(t, [&](const Local& x, bool) { return l1(x); });
        return s.empty() ? "end" : s;
      }
      return par_chain<Local, LPar>(t, [&](const Local& x, bool nested) {
        return nested ? ltop(x) : l1(x);
      });
    }
    return l1(t);
  }
  std::string lcont(const Local& c) const {
    if (is<LEnd>(c)) return "";
    if (o.sortPar && is<LPar>(c) && par_components(c).empty()) return "";
    return ". " + l1(c);
  }
  std::string lbranches(const std::vector<LBranch>& bs) const {
    std::vector<std::string> items;
    for (auto& b : bs) {
      std::string s = b.label.id + "(" + params(b.params) + ")";
      auto c = lcont(b.cont);
      items.push_back(c.empty() ? s : s + c);
    }
    if (o.sortPar) std::sort(items.begin(), items.end());
    std::string out = "{ ";
    for (size_t i = 0; i < items.size(); ++i) out += (i ? ", " : "") + items[i];
    return out + " }";
  }
  std::string with(std::string s, const Local& c) const {
    auto k = lcont(c);
    return k.empty() ? s : s + " " + k;
  }
  std::string l1(const Local& t) const {
    return std::visit(
        overloaded{
            [&](const LEnd&) -> std::string { return "end"; },
            [&](const LVar& x) -> std::string { return x.var.id; },
            [&](const LRec& x) -> std::string { return "mu " + x.var.id + ". " + l1(x.body); },
            [&](const LPar&) -> std::string {
              if (o.sortPar && par_components(t).empty()) return "end";
              return "(" + ltop(t) + ")";
            },
            [&](const LGet& x) -> std::string { return x.from.id + " ? " + lbranches(x.branches); },
            [&](const LSend& x) -> std::string { return x.to.id + " ! " + lbranches(x.branches); },
            [&](const LOpt& x) -> std::string {
              std::string s = "opt[" + roles(x.parts) + "]{ " + ltop(x.body) + " }";
              if (!x.binders.empty()) s += " (" + params(x.binders) + ")";
              return with(s, x.cont);
            },
            [&](const LCall& x) -> std::string {
              std::string s = "call " + x.proto.id + " { " +
                              Printer{o}.gtop(x.body) + " }(" + names(x.argVals) + ")(" +
                              params(x.argBinders) + ")[" + roles(x.external) + "]";
              return with(s, x.cont);
            },
            [&](const LEnt& x) -> std::string {
              return with("ent " + x.proto.id + " as " + x.asRole.id + "(" + names(x.args) +
                              ") from " + x.inviter.id,
                          x.cont);
            },
            [&](const LReq& x) -> std::string {
              return with("req " + x.proto.id + " as " + x.forRole.id + "(" + names(x.args) +
                              ") to " + x.invitee.id,
                          x.cont);
            },
            [&](const LChoice& x) -> std::string {
              std::string a = ltop(x.left), b = ltop(x.right);
              if (o.sortPar && b < a) std::swap(a, b);
              return "choice { " + a + " } or { " + b + " }";
            },
        },
        t->v);
  }

  // ---- process ----
  static std::string pnames(const std::vector<Name>& ns) { return join_names(ns, ", "); }

  std::string ptop(const Proc& q) const {
    if (is<PPar>(q)) {
      if (o.sortPar) {
        auto s = sorted_par<Proc, PPar>(q, [&](const Proc& x, bool) { return p1(x); });
        return s.empty() ? "0" : s;
      }
      return par_chain<Proc, PPar>(q, [&](const Proc& x, bool nested) {
        return nested ? ptop(x) : p1(x);
      });
    }
    return p1(q);
  }
  std::string pwith(std::string s, const Proc& c) const {
    if (is<PEnd>(c)) return s;
    return s + ". " + p1(c);
  }
  std::string p1(const Proc& q) const {
    return std::visit(
        overloaded{
            [&](const PEnd&) -> std::string { return "0"; },
            [&](const PVar& x) -> std::string { return x.var.id; },
            [&](const PRec& x) -> std::string { return "rec " + x.var.id + ". " + p1(x.body); },
            [&](const PPar&) -> std::string {
              if (o.sortPar && par_components(q).empty()) return "0";
              return "(" + ptop(q) + ")";
            },
            [&](const PChoice& x) -> std::string {
              std::string a = ptop(x.left), b = ptop(x.right);
              if (o.sortPar && b < a) std::swap(a, b);
              return "choice { " + a + " } or { " + b + " }";
            },
            [&](const PIn& x) -> std::string {
              return pwith(x.chan.id + "(" + pnames(x.binders) + ")", x.cont);
            },
            [&](const POut& x) -> std::string {
              return pwith(x.chan.id + "<" + pnames(x.payload) + ">", x.cont);
            },
            [&](const PGet& x) -> std::string {
              std::vector<std::string> items;
              for (auto& b : x.branches)
                items.push_back(pwith(b.label.id + "(" + pnames(b.binders) + ")", b.cont));
              if (o.sortPar) std::sort(items.begin(), items.end());
              std::string s = x.session.id + "[" + x.from.id + " -> " + x.to.id + "] ? { ";
              for (size_t i = 0; i < items.size(); ++i) s += (i ? ", " : "") + items[i];
              return s + " }";
            },
            [&](const PSend& x) -> std::string {
              return pwith(x.session.id + "[" + x.from.id + " -> " + x.to.id + "] ! " +
                               x.label.id + "<" + pnames(x.payload) + ">",
                           x.cont);
            },
            [&](const POpt& x) -> std::string {
              std::string s = "opt[" + x.owner.id + "; " + roles(x.parts) + "]{ " + ptop(x.body) +
                              " }";
              if (x.defaults.empty() && x.binders.empty()) return pwith(s, x.cont);
              s += " (";
              for (size_t i = 0; i < x.binders.size(); ++i) {
                s += (i ? ", " : "") + x.binders[i].id + " = ";
                s += i < x.defaults.size() ? x.defaults[i].id : "?";
              }
              return s + ") <- (" + ptop(x.cont) + ")";
            },
            [&](const POptEnd& x) -> std::string {
              return "optend " + x.owner.id + "<" + pnames(x.values) + ">";
            },
            [&](const PDecl& x) -> std::string {
              return pwith("call " + x.session.id + " <- " + x.parent.id + "(" + pnames(x.args) +
                               ")[" + pnames(x.chans) + "][" + roles(x.external) + "]",
                           x.cont);
            },
            [&](const PEnt& x) -> std::string {
              return pwith("ent " + x.session.id + "[" + x.inviter.id + " -> " + x.invitee.id +
                               " as " + x.asRole.id + "](" + x.binder.id + ")",
                           x.cont);
            },
            [&](const PReq& x) -> std::string {
              return pwith("req " + x.session.id + "[" + x.inviter.id + " -> " + x.invitee.id +
                               " as " + x.asRole.id + "]<" + x.sub.id + ">",
                           x.cont);
            },
            [&](const PRes& x) -> std::string { return "new " + x.binder.id + ". " + p1(x.body); },
        },
        q->v);
  }
};

}  // namespace

std::string print(const Global& g, PrintOptions opts) { return Printer{opts}.gtop(g); }
std::string print(const Local& t, PrintOptions opts) { return Printer{opts}.ltop(t); }
std::string print(const Proc& q, PrintOptions opts) { return Printer{opts}.ptop(q); }

}  // namespace optsession
