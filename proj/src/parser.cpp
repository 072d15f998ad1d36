#include "optsession/parser.hpp"

#include "optsession/printer.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace optsession {

namespace {

const std::set<std::string> kKeywords = {
    "opt", "optend", "call", "ent",  "req",   "let",    "mu",    "rec",   "end",
    "new", "choice", "or",   "as",   "from",  "to",     "global", "local", "process",
    "gamma", "delta", "invite", "ov"};

struct Token {
  enum class Kind { Ident, Punct, Eof };
  Kind kind;
  std::string text;
  int line, col;
};

std::vector<Token> lex(const std::string& src) {
  static const char* twoChar[] = {"->", "<-"};
  static const std::string single = ";,.|()[]{}<>:!?=~";
  std::vector<Token> out;
  int line = 1, col = 1;
  size_t i = 0;
  auto adv = [&](size_t n) {
    for (size_t k = 0; k < n; ++k) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };
  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      adv(1);
      continue;
    }
    if (c == '-' && i + 1 < src.size() && src[i + 1] == '-') {
      while (i < src.size() && src[i] != '\n') adv(1);
      continue;
    }
    bool matched = false;
    for (auto* tc : twoChar) {
      if (src.compare(i, 2, tc) == 0) {
        out.push_back({Token::Kind::Punct, tc, line, col});
        adv(2);
        matched = true;
        break;
      }
    }
    if (matched) continue;
    if (single.find(c) != std::string::npos) {
      out.push_back({Token::Kind::Punct, std::string(1, c), line, col});
      adv(1);
      continue;
    }
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
      int l0 = line, c0 = col;
      size_t j = i;
      while (j < src.size() &&
             (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_' || src[j] == '\''))
        ++j;
      out.push_back({Token::Kind::Ident, src.substr(i, j - i), l0, c0});
      adv(j - i);
      continue;
    }
    throw SyntaxError("unexpected character '" + std::string(1, c) + "'", line, col, {});
  }
  out.push_back({Token::Kind::Eof, "<eof>", line, col});
  return out;
}

class Parser {
 public:
  explicit Parser(const std::string& src) : toks_(lex(src)) {}

  // ---- helpers ----
  const Token& peek(size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  bool at(const std::string& t, size_t k = 0) const {
    auto& tk = peek(k);
    return tk.kind != Token::Kind::Eof && tk.text == t;
  }
  bool at_ident(size_t k = 0) const {
    auto& tk = peek(k);
    return tk.kind == Token::Kind::Ident && !kKeywords.count(tk.text);
  }
  bool at_eof() const { return peek().kind == Token::Kind::Eof; }

  [[noreturn]] void fail(std::vector<std::string> expected) const {
    auto& tk = peek();
    std::string msg = "unexpected '" + tk.text + "', expected ";
    for (size_t i = 0; i < expected.size(); ++i)
      msg += (i ? (i + 1 == expected.size() ? " or " : ", ") : "") + expected[i];
    throw SyntaxError(msg, tk.line, tk.col, std::move(expected));
  }
  void expect(const std::string& t) {
    if (!at(t)) fail({"'" + t + "'"});
    ++pos_;
  }
  bool accept(const std::string& t) {
    if (!at(t)) return false;
    ++pos_;
    return true;
  }
  std::string ident() {
    if (!at_ident()) fail({"identifier"});
    return toks_[pos_++].text;
  }

  template <class T, class F>
  std::vector<T> list(const std::string& close, F&& item) {
    std::vector<T> out;
    if (at(close)) return out;
    out.push_back(item());
    while (accept(",")) out.push_back(item());
    return out;
  }
  std::vector<Name> names(const std::string& close) {
    return list<Name>(close, [&] { return Name{ident()}; });
  }
  std::vector<Role> roles(const std::string& close) {
    return list<Role>(close, [&] { return Role{ident()}; });
  }

  Kind kind() {
    if (accept("(")) {
      auto ps = list<Kind>(")", [&] { return kind(); });
      expect(")");
      expect("->");
      return Kind::arrow(std::move(ps), kind());
    }
    auto id = ident();
    if (id == "Role") return Kind::role();
    if (id == "Proto") return Kind::protocol();
    return Kind::val(id);
  }
  std::vector<Param> params(const std::string& close) {
    return list<Param>(close, [&] {
      Name n{ident()};
      expect(":");
      return Param{n, kind()};
    });
  }

  // ---- global types ----
  Global gtop() {
    Global first = g1();
    if (!at("|")) return first;
    ++pos_;
    return g::par(first, gtop());
  }
  Global gcont() {
    if (accept(".")) return g1();
    return g::end();
  }
  Global g1() {
    if (accept("(")) {
      auto inner = gtop();
      expect(")");
      return inner;
    }
    if (accept("end")) return g::end();
    if (accept("mu")) {
      TypeVar t{ident()};
      expect(".");
      return g::rec(t, g1());
    }
    if (accept("opt")) {
      expect("[");
      auto parts = list<GOptPart>("]", [&] {
        GOptPart pt{Role{ident()}, {}};
        if (accept("(")) {
          pt.defaults = params(")");
          expect(")");
        }
        return pt;
      });
      expect("]");
      expect("{");
      auto body = gtop();
      expect("}");
      return g::opt(parts, body, gcont());
    }
    if (accept("let")) {
      Name proto{ident()};
      expect("[");
      auto internal = roles("]");
      expect("]");
      expect("(");
      auto args = params(")");
      expect(")");
      expect("[");
      auto external = roles("]");
      expect("]");
      expect("{");
      auto body = gtop();
      expect("}");
      return g::decl(proto, internal, args, external, body, gcont());
    }
    if (accept("call")) {
      Role caller{ident()};
      Name proto{ident()};
      expect("[");
      auto rs = roles("]");
      expect("]");
      expect("(");
      auto args = names(")");
      expect(")");
      return g::call(caller, proto, rs, args, gcont());
    }
    if (accept("choice")) {
      Role chooser{ident()};
      expect("{");
      auto a = gtop();
      expect("}");
      expect("or");
      expect("{");
      auto b = gtop();
      expect("}");
      return g::choice(a, chooser, b);
    }
    if (at_ident() && at("->", 1)) {
      Role from{ident()};
      expect("->");
      Role to{ident()};
      expect(":");
      expect("{");
      auto bs = list<GBranch>("}", [&] {
        Label lab{ident()};
        expect("(");
        auto ps = params(")");
        expect(")");
        return GBranch{lab, ps, gcont()};
      });
      if (bs.empty()) fail({"label"});
      expect("}");
      return g::com(from, to, bs);
    }
    if (at_ident()) return g::var(TypeVar{ident()});
    fail({"'end'", "'opt'", "'let'", "'call'", "'choice'", "'mu'", "'('", "role", "type variable"});
  }

  // ---- local types ----
  Local ltop() {
    Local first = l1();
    if (!at("|")) return first;
    ++pos_;
    return std::make_shared<const LocalNode>(LocalNode{LPar{first, ltop()}});
  }
  Local lcont() {
    if (accept(".")) return l1();
    return l::end();
  }
  std::vector<LBranch> lbranches() {
    expect("{");
    auto bs = list<LBranch>("}", [&] {
      Label lab{ident()};
      expect("(");
      auto ps = params(")");
      expect(")");
      return LBranch{lab, ps, lcont()};
    });
    if (bs.empty()) fail({"label"});
    expect("}");
    return bs;
  }
  Local l1() {
    if (accept("(")) {
      auto inner = ltop();
      expect(")");
      return inner;
    }
    if (accept("end")) return l::end();
    if (accept("mu")) {
      TypeVar t{ident()};
      expect(".");
      return l::rec(t, l1());
    }
    if (accept("opt")) {
      expect("[");
      auto rs = roles("]");
      expect("]");
      expect("{");
      auto body = ltop();
      expect("}");
      std::vector<Param> bs;
      if (accept("(")) {
        bs = params(")");
        expect(")");
      }
      return l::opt(rs, body, bs, lcont());
    }
    if (accept("call")) {
      Name proto{ident()};
      expect("{");
      auto body = gtop();
      expect("}");
      expect("(");
      auto vals = names(")");
      expect(")");
      expect("(");
      auto binders = params(")");
      expect(")");
      expect("[");
      auto ext = roles("]");
      expect("]");
      return l::call(proto, body, vals, binders, ext, lcont());
    }
    if (at("ent") || at("req")) {
      bool isEnt = at("ent");
      ++pos_;
      Name proto{ident()};
      expect("as");
      Role r{ident()};
      expect("(");
      auto args = names(")");
      expect(")");
      expect(isEnt ? "from" : "to");
      Role other{ident()};
      auto cont = lcont();
      return isEnt ? l::ent(proto, r, args, other, cont) : l::req(proto, r, args, other, cont);
    }
    if (accept("choice")) {
      expect("{");
      auto a = ltop();
      expect("}");
      expect("or");
      expect("{");
      auto b = ltop();
      expect("}");
      return l::choice(a, b);
    }
    if (at_ident() && at("!", 1)) {
      Role to{ident()};
      expect("!");
      return l::send(to, lbranches());
    }
    if (at_ident() && at("?", 1)) {
      Role from{ident()};
      expect("?");
      return l::get(from, lbranches());
    }
    if (at_ident()) return l::var(TypeVar{ident()});
    fail({"'end'", "'opt'", "'call'", "'ent'", "'req'", "'choice'", "'mu'", "'('", "role",
          "type variable"});
  }

  // ---- processes ----
  Proc ptop() {
    Proc first = p1();
    if (!at("|")) return first;
    ++pos_;
    return p::par(first, ptop());
  }
  Proc pcont() {
    if (accept(".")) return p1();
    return p::end();
  }
  Proc p1() {
    if (accept("(")) {
      auto inner = ptop();
      expect(")");
      return inner;
    }
    if (accept("opt")) return popt();
    if (accept("optend")) {
      Role owner{ident()};
      expect("<");
      auto vs = names(">");
      expect(">");
      return p::optend(owner, vs);
    }
    if (accept("call")) {
      Name k{ident()};
      expect("<-");
      Name parent{ident()};
      expect("(");
      auto args = names(")");
      expect(")");
      expect("[");
      auto chans = names("]");
      expect("]");
      expect("[");
      auto ext = roles("]");
      expect("]");
      return p::decl(k, parent, args, chans, ext, pcont());
    }
    if (at("ent") || at("req")) {
      bool isEnt = at("ent");
      ++pos_;
      Name s{ident()};
      expect("[");
      Role r1{ident()};
      expect("->");
      Role r2{ident()};
      expect("as");
      Role r3{ident()};
      expect("]");
      expect(isEnt ? "(" : "<");
      Name x{ident()};
      expect(isEnt ? ")" : ">");
      auto cont = pcont();
      return isEnt ? p::ent(s, r1, r2, r3, x, cont) : p::req(s, r1, r2, r3, x, cont);
    }
    if (accept("new")) {
      Name x{ident()};
      expect(".");
      return p::res(x, p1());
    }
    if (accept("rec")) {
      ProcVar x{ident()};
      expect(".");
      return p::rec(x, p1());
    }
    if (accept("choice")) {
      expect("{");
      auto a = ptop();
      expect("}");
      expect("or");
      expect("{");
      auto b = ptop();
      expect("}");
      return p::choice(a, b);
    }
    if (at_ident()) {
      if (peek().text == "0" && !at("(", 1) && !at("<", 1) && !at("[", 1)) {
        ++pos_;
        return p::end();
      }
      std::string id = ident();
      if (accept("(")) {
        auto bs = names(")");
        expect(")");
        return p::in(Name{id}, bs, pcont());
      }
      if (accept("<")) {
        auto vs = names(">");
        expect(">");
        return p::out(Name{id}, vs, pcont());
      }
      if (accept("[")) {
        Role r1{ident()};
        expect("->");
        Role r2{ident()};
        expect("]");
        if (accept("?")) {
          expect("{");
          auto bs = list<PBranch>("}", [&] {
            Label lab{ident()};
            expect("(");
            auto xs = names(")");
            expect(")");
            return PBranch{lab, xs, pcont()};
          });
          if (bs.empty()) fail({"label"});
          expect("}");
          return p::get(Name{id}, r1, r2, bs);
        }
        if (accept("!")) {
          Label lab{ident()};
          expect("<");
          auto vs = names(">");
          expect(">");
          return p::send(Name{id}, r1, r2, lab, vs, pcont());
        }
        fail({"'?'", "'!'"});
      }
      return p::var(ProcVar{id});
    }
    fail({"'0'", "'opt'", "'optend'", "'call'", "'ent'", "'req'", "'new'", "'rec'", "'choice'",
          "'('", "channel", "session", "process variable"});
  }

  Proc popt() {
    expect("[");
    const Token ownerTok = peek();
    Role owner{ident()};
    expect(";");
    auto parts = roles("]");
    expect("]");
    if (std::find(parts.begin(), parts.end(), owner) == parts.end()) {
      throw SyntaxError("opt owner '" + owner.id + "' is not among its participants [" +
                            join_roles(parts, ", ") + "]",
                        ownerTok.line, ownerTok.col, {"participant role"});
    }
    expect("{");
    auto body = ptop();
    expect("}");
    if (accept("(")) {
      std::vector<Name> binders, defaults;
      if (!at(")")) {
        do {
          binders.push_back(Name{ident()});
          expect("=");
          defaults.push_back(Name{ident()});
        } while (accept(","));
      }
      expect(")");
      expect("<-");
      expect("(");
      auto cont = ptop();
      expect(")");
      return p::opt(owner, parts, body, binders, defaults, cont);
    }
    return p::opt(owner, parts, body, {}, {}, pcont());
  }

  // ---- source files ----
  SourceFile source() {
    SourceFile f;
    while (!at_eof()) {
      int line = peek().line;
      if (accept("global")) {
        auto n = ident();
        expect("=");
        auto body = gtop();
        expect(";");
        f.decls.push_back({Declaration::Sort::GlobalType, n, body, line});
      } else if (accept("local")) {
        auto n = ident();
        expect("=");
        auto body = ltop();
        expect(";");
        f.decls.push_back({Declaration::Sort::LocalType, n, body, line});
      } else if (accept("process")) {
        auto n = ident();
        expect("=");
        auto body = ptop();
        expect(";");
        f.decls.push_back({Declaration::Sort::Process, n, body, line});
      } else if (accept("gamma")) {
        auto n = ident();
        expect(":");
        GammaEntryDecl ge;
        if (accept("invite")) {
          ge.form = GammaEntryDecl::Form::Invite;
          ge.role = Role{ident()};
        } else {
          ge.kind = kind();
        }
        expect(";");
        f.decls.push_back({Declaration::Sort::GammaEntry, n, ge, line});
      } else if (accept("delta")) {
        auto n = ident();
        expect("=");
        expect("{");
        std::vector<DeltaEntryDecl> es;
        if (!at("}")) {
          do {
            es.push_back(delta_entry());
          } while (accept(";") && !at("}"));
        }
        expect("}");
        expect(";");
        f.decls.push_back({Declaration::Sort::DeltaEntry, n, es, line});
      } else {
        fail({"'global'", "'local'", "'process'", "'gamma'", "'delta'"});
      }
    }
    return f;
  }

  DeltaEntryDecl delta_entry() {
    DeltaEntryDecl e;
    if (accept("ov")) {
      e.mode = DeltaEntryDecl::Mode::ReturnKinds;
      e.role = Role{ident()};
      expect("(");
      e.kinds = list<Kind>(")", [&] { return kind(); });
      expect(")");
      return e;
    }
    if (accept("<")) {
      e.mode = DeltaEntryDecl::Mode::External;
      e.session = Name{ident()};
      expect(">");
    } else if (accept("~")) {
      e.mode = DeltaEntryDecl::Mode::Internal;
      e.session = Name{ident()};
    } else {
      e.session = Name{ident()};
    }
    expect("[");
    e.role = Role{ident()};
    expect("]");
    expect(":");
    e.type = ltop();
    return e;
  }

  void finish() {
    if (!at_eof()) fail({"end of input"});
  }

 private:
  std::vector<Token> toks_;
  size_t pos_ = 0;
};

}  // namespace

Global parse_global(const std::string& text) {
  Parser ps(text);
  auto r = ps.gtop();
  ps.finish();
  return r;
}
Local parse_local(const std::string& text) {
  Parser ps(text);
  auto r = ps.ltop();
  ps.finish();
  return r;
}
Proc parse_process(const std::string& text) {
  Parser ps(text);
  auto r = ps.ptop();
  ps.finish();
  return r;
}
Kind parse_kind(const std::string& text) {
  Parser ps(text);
  auto r = ps.kind();
  ps.finish();
  return r;
}
SourceFile parse_source(const std::string& text) {
  Parser ps(text);
  return ps.source();
}

const Declaration* SourceFile::find(Declaration::Sort s, const std::string& name) const {
  for (auto& d : decls)
    if (d.sort == s && d.name == name) return &d;
  return nullptr;
}

Global SourceFile::global(const std::string& name) const {
  auto* d = find(Declaration::Sort::GlobalType, name);
  if (!d) throw std::invalid_argument("no global type named '" + name + "'");
  return std::get<Global>(d->body);
}

Proc SourceFile::process(const std::string& name) const {
  auto* d = find(Declaration::Sort::Process, name);
  if (!d) throw std::invalid_argument("no process named '" + name + "'");
  return std::get<Proc>(d->body);
}

std::vector<DeltaEntryDecl> SourceFile::delta(const std::string& name) const {
  auto* d = find(Declaration::Sort::DeltaEntry, name);
  if (!d) throw std::invalid_argument("no delta named '" + name + "'");
  return std::get<std::vector<DeltaEntryDecl>>(d->body);
}

std::string print(const SourceFile& f) {
  std::string out;
  for (auto& d : f.decls) {
    switch (d.sort) {
      case Declaration::Sort::GlobalType:
        out += "global " + d.name + " = " + print(std::get<Global>(d.body)) + ";\n";
        break;
      case Declaration::Sort::LocalType:
        out += "local " + d.name + " = " + print(std::get<Local>(d.body)) + ";\n";
        break;
      case Declaration::Sort::Process:
        out += "process " + d.name + " = " + print(std::get<Proc>(d.body)) + ";\n";
        break;
      case Declaration::Sort::GammaEntry: {
        auto& ge = std::get<GammaEntryDecl>(d.body);
        out += "gamma " + d.name + " : " +
               (ge.form == GammaEntryDecl::Form::Invite ? "invite " + ge.role.id
                                                        : to_string(ge.kind)) +
               ";\n";
        break;
      }
      case Declaration::Sort::DeltaEntry: {
        out += "delta " + d.name + " = {";
        auto& es = std::get<std::vector<DeltaEntryDecl>>(d.body);
        for (size_t i = 0; i < es.size(); ++i) {
          auto& e = es[i];
          out += i ? ";\n  " : "\n  ";
          switch (e.mode) {
            case DeltaEntryDecl::Mode::ReturnKinds: {
              out += "ov " + e.role.id + "(";
              for (size_t k = 0; k < e.kinds.size(); ++k)
                out += (k ? ", " : "") + to_string(e.kinds[k]);
              out += ")";
              continue;
            }
            case DeltaEntryDecl::Mode::External: out += "<" + e.session.id + ">"; break;
            case DeltaEntryDecl::Mode::Internal: out += "~" + e.session.id; break;
            case DeltaEntryDecl::Mode::Plain: out += e.session.id; break;
          }
          out += "[" + e.role.id + "] : " + print(e.type);
        }
        out += es.empty() ? "};\n" : "\n};\n";
        break;
      }
    }
  }
  return out;
}

}  // namespace optsession
