#include "optsession/projection.hpp"

#include <algorithm>
#include <set>

namespace optsession {

ProtocolEnv ProtocolEnv::extended(const Name& proto, ProtocolDef def) const {
  ProtocolEnv copy = *this;
  copy.entries_[proto] = std::move(def);
  return copy;
}

const ProtocolDef& ProtocolEnv::at(const Name& proto) const {
  auto it = entries_.find(proto);
  if (it == entries_.end()) throw UnknownProtocol(proto);
  return it->second;
}

namespace {

bool participates(const GOpt& o, const Role& r) {
  return std::any_of(o.parts.begin(), o.parts.end(), [&](auto& pt) { return pt.role == r; });
}

Global restrict_in(const Global& gt, const Role& r, const std::set<Name>& declared) {
  return std::visit(
      overloaded{
          [&](const GDecl& x) {
            auto inner = declared;
            inner.insert(x.proto);
            return g::decl(x.proto, x.internal, x.args, x.external, x.body,
                           restrict_in(x.cont, r, inner));
          },
          [&](const GCall& x) {
            if (!declared.count(x.proto)) throw UnknownProtocol(x.proto);
            bool keep = x.caller == r || std::find(x.roles.begin(), x.roles.end(), r) != x.roles.end();
            auto cont = restrict_in(x.cont, r, declared);
            return keep ? g::call(x.caller, x.proto, x.roles, x.args, cont) : cont;
          },
          [&](const GCom& x) {
            if (r == x.from || r == x.to) {
              auto bs = x.branches;
              for (auto& b : bs) b.cont = restrict_in(b.cont, r, declared);
              return g::com(x.from, x.to, bs);
            }
            return restrict_in(x.branches.front().cont, r, declared);
          },
          [&](const GOpt& x) {
            if (participates(x, r))
              return g::opt(x.parts, restrict_in(x.body, r, declared),
                            restrict_in(x.cont, r, declared));
            return restrict_in(x.cont, r, declared);
          },
          [&](const GChoice& x) {
            return g::choice(restrict_in(x.left, r, declared), x.chooser,
                             restrict_in(x.right, r, declared));
          },
          [&](const GPar& x) {
            return g::par(restrict_in(x.left, r, declared), restrict_in(x.right, r, declared));
          },
          [&](const GRec& x) { return g::rec(x.var, restrict_in(x.body, r, declared)); },
          [&](const auto&) { return gt; },
      },
      gt->v);
}

Local proj(const Global& gt, const ProtocolEnv& env, const Role& r) {
  return std::visit(
      overloaded{
          [&](const GEnd&) { return l::end(); },
          [&](const GVar& x) { return l::var(x.var); },
          [&](const GRec& x) { return l::rec(x.var, proj(x.body, env, r)); },
          [&](const GDecl& x) {
            auto inner = env.extended(x.proto, ProtocolDef{x.internal, x.args, x.external, x.body});
            return proj(x.cont, inner, r);
          },
          [&](const GCall& x) -> Local {
            const auto& def = env.at(x.proto);
            auto cont = proj(x.cont, env, r);
            auto pos = std::find(x.roles.begin(), x.roles.end(), r);
            bool invited = pos != x.roles.end();
            if (r == x.caller) {
              std::vector<Local> parts;
              for (size_t i = 0; i < x.roles.size() && i < def.internal.size(); ++i)
                parts.push_back(l::req(x.proto, def.internal[i], x.args, x.roles[i], l::end()));
              if (invited) {
                auto idx = static_cast<size_t>(pos - x.roles.begin());
                parts.push_back(l::ent(x.proto, def.internal.at(idx), x.args, x.caller, l::end()));
              }
              parts.push_back(cont);
              return l::call(x.proto, def.body, x.args, def.args, def.external, l::par(parts));
            }
            if (invited) {
              auto idx = static_cast<size_t>(pos - x.roles.begin());
              return l::ent(x.proto, def.internal.at(idx), x.args, x.caller, cont);
            }
            return cont;
          },
          [&](const GCom& x) -> Local {
            auto branches = [&] {
              std::vector<LBranch> bs;
              for (auto& b : x.branches)
                bs.push_back(LBranch{b.label, b.params, proj(b.cont, env, r)});
              return bs;
            };
            if (r == x.from) return l::send(x.to, branches());
            if (r == x.to) return l::get(x.from, branches());
            return proj(x.branches.front().cont, env, r);
          },
          [&](const GOpt& x) -> Local {
            std::vector<Role> rs;
            for (auto& pt : x.parts) rs.push_back(pt.role);
            auto it = std::find_if(x.parts.begin(), x.parts.end(),
                                   [&](auto& pt) { return pt.role == r; });
            auto cont = proj(x.cont, env, r);
            if (it == x.parts.end()) return cont;
            auto body = proj(x.body, env, r);
            if (!it->defaults.empty()) return l::opt(rs, body, it->defaults, cont);
            return l::par(l::opt(rs, body, {}, l::end()), cont);
          },
          [&](const GChoice& x) -> Local {
            if (r == x.chooser) return l::choice(proj(x.left, env, r), proj(x.right, env, r));
            return proj(x.left, env, r);
          },
          [&](const GPar& x) -> Local {
            auto inL = roles_of(x.left).count(r) > 0;
            auto inR = roles_of(x.right).count(r) > 0;
            if (inL && inR)
              throw NonProjectable("role '" + r.id + "' occurs in both components of a Par");
            if (inL) return proj(x.left, env, r);
            if (inR) return proj(x.right, env, r);
            return l::end();
          },
      },
      gt->v);
}

}  // namespace

Global restrict(const Global& g, const Role& r) { return restrict_in(g, r, {}); }
Global restrict(const Global& g, const Role& r, const std::set<Name>& declared) {
  return restrict_in(g, r, declared);
}

Local project(const Global& g, const ProtocolEnv& env, const Role& r) { return proj(g, env, r); }
Local project(const Global& g, const Role& r) { return proj(g, ProtocolEnv{}, r); }

ProtocolEnv declared_protocols(const Global& gt, ProtocolEnv base) {
  std::visit(overloaded{
                 [&](const GDecl& x) {
                   base = base.extended(x.proto, ProtocolDef{x.internal, x.args, x.external, x.body});
                   base = declared_protocols(x.body, base);
                   base = declared_protocols(x.cont, base);
                 },
                 [&](const GCom& x) {
                   for (auto& b : x.branches) base = declared_protocols(b.cont, base);
                 },
                 [&](const GOpt& x) {
                   base = declared_protocols(x.body, base);
                   base = declared_protocols(x.cont, base);
                 },
                 [&](const GCall& x) { base = declared_protocols(x.cont, base); },
                 [&](const GChoice& x) {
                   base = declared_protocols(x.left, base);
                   base = declared_protocols(x.right, base);
                 },
                 [&](const GPar& x) {
                   base = declared_protocols(x.left, base);
                   base = declared_protocols(x.right, base);
                 },
                 [&](const GRec& x) { base = declared_protocols(x.body, base); },
                 [&](const auto&) {},
             },
             gt->v);
  return base;
}

}  // namespace optsession
