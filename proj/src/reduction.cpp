#include "optsession/reduction.hpp"

#include "optsession/printer.hpp"

#include <algorithm>
#include <functional>
#include <unordered_map>

namespace optsession {

namespace {

int tag_of(const Proc& q) { return static_cast<int>(q->v.index()); }

// Terms are immutable and heavily shared between neighbouring states, so results are cached by
// node identity. Each entry holds its key alive; the tables are dropped when they grow large.
template <class V>
struct NodeCache {
  std::unordered_map<const ProcNode*, std::pair<Proc, V>> table;
  const V* find(const Proc& q) const {
    auto it = table.find(q.get());
    return it == table.end() ? nullptr : &it->second.second;
  }
  void put(const Proc& q, V v) {
    if (table.size() > 400'000) table.clear();
    table.insert_or_assign(q.get(), std::pair{q, std::move(v)});
  }
};

std::string sort_key_uncached(const Proc& c, const std::vector<Name>& soupBinders) {
  Subst hide;
  for (auto& b : soupBinders) hide[b] = Name{"_"};
  Proc shown = hide.empty() ? c : substitute(c, hide);
  std::string k = std::to_string(tag_of(c));
  if (k.size() < 2) k = "0" + k;
  return k + print(alpha_normalize(shown));
}

std::string sort_key(const Proc& c, const std::vector<Name>& soupBinders) {
  // Only binders that occur free in c change its key.
  std::vector<Name> relevant;
  if (!soupBinders.empty()) {
    auto fn = free_names(c);
    for (auto& b : soupBinders)
      if (fn.count(b)) relevant.push_back(b);
  }
  if (!relevant.empty()) return sort_key_uncached(c, relevant);
  thread_local NodeCache<std::string> cache;
  if (auto* k = cache.find(c)) return *k;
  auto k = sort_key_uncached(c, {});
  cache.put(c, k);
  return k;
}

struct Soup {
  std::vector<Name> binders;
  std::vector<Proc> comps;
};

void gather(const Proc& t, Soup& s, std::set<Name>& used) {
  std::visit(overloaded{
                 [&](const PPar& x) {
                   gather(x.left, s, used);
                   gather(x.right, s, used);
                 },
                 [&](const PRes& x) {
                   Name b = x.binder;
                   Proc body = x.body;
                   if (used.count(b)) {
                     auto avoid = used;
                     auto inner = all_names(body);
                     avoid.insert(inner.begin(), inner.end());
                     Name nb = fresh_name(b, avoid);
                     body = substitute(body, Subst{{b, nb}});
                     b = nb;
                   }
                   used.insert(b);
                   s.binders.push_back(b);
                   gather(body, s, used);
                 },
                 [&](const PEnd&) {},
                 [&](const auto&) { s.comps.push_back(t); },
             },
             t->v);
}

Proc canon(const Proc& q);

// Flattens a maximal Par/Res cluster, canonicalizes its components and sorts them.
Proc normalize_soup(const Proc& q) {
  Soup s;
  std::set<Name> used = free_names(q);
  gather(q, s, used);
  {
    std::vector<Proc> canonical;
    for (auto& c : s.comps) {
      Proc k = canon(c);  // keeps the outer constructor, so never a Par or Res
      if (!is<PEnd>(k)) canonical.push_back(k);
    }
    s.comps = std::move(canonical);
  }
  std::vector<std::pair<std::string, Proc>> keyed;
  for (auto& c : s.comps) keyed.emplace_back(sort_key(c, s.binders), c);
  std::stable_sort(keyed.begin(), keyed.end(),
                   [](auto& a, auto& b) { return a.first < b.first; });
  std::vector<Proc> comps;
  for (auto& [k, c] : keyed) comps.push_back(c);

  std::vector<std::pair<size_t, Name>> live;
  for (auto& b : s.binders) {
    for (size_t i = 0; i < comps.size(); ++i)
      if (free_names(comps[i]).count(b)) {
        live.emplace_back(i, b);
        break;
      }
  }
  std::sort(live.begin(), live.end());
  Proc out = p::par(comps);
  for (auto it = live.rbegin(); it != live.rend(); ++it) out = p::res(it->second, out);
  return out;
}

Proc canon_uncached(const Proc& q) {
  if (is<PPar>(q) || is<PRes>(q)) return normalize_soup(q);
  auto kids = children(q);
  bool same = true;
  for (auto& k : kids) {
    Proc ck = canon(k);
    same &= ck == k;
    k = std::move(ck);
  }
  Proc r = kids.empty() || same ? q : with_children(q, kids);
  if (auto* c = std::get_if<PChoice>(&r->v)) {
    if (sort_key(c->right, {}) < sort_key(c->left, {})) return p::choice(c->right, c->left);
  }
  return r;
}

Proc canon(const Proc& q) {
  thread_local NodeCache<Proc> cache;
  if (auto* r = cache.find(q)) return *r;
  Proc r = canon_uncached(q);
  cache.put(q, r);
  if (r != q) cache.put(r, r);
  return r;
}

// ---------- unguarded threads ----------

struct Frame {
  enum class Kind { Res, Opt } kind;
  size_t depth;  // path length at the frame
  Name name;     // Res
  int opt = -1;  // Opt: index into Scan::opts
};

struct OptSite {
  Path path;
  const POpt* node;
  Proc term;
};

struct Thread {
  Path path;
  Proc term;
  std::vector<Frame> frames;
  std::vector<int> optStack;
};

struct Scan {
  std::vector<OptSite> opts;
  std::vector<Thread> threads;
  std::vector<Thread> optThreads;  // blocks themselves, for fail/succ
  bool hasRec = false;

  void go(const Proc& t, const Path& path, std::vector<Frame> frames, std::vector<int> stack) {
    std::visit(overloaded{
                   [&](const PPar& x) {
                     go(x.left, with(path, 0), frames, stack);
                     go(x.right, with(path, 1), frames, stack);
                   },
                   [&](const PRes& x) {
                     frames.push_back(Frame{Frame::Kind::Res, path.size(), x.binder, -1});
                     go(x.body, with(path, 0), frames, stack);
                   },
                   [&](const POpt& x) {
                     int id = static_cast<int>(opts.size());
                     opts.push_back(OptSite{path, &x, t});
                     optThreads.push_back(Thread{path, t, frames, stack});
                     frames.push_back(Frame{Frame::Kind::Opt, path.size(), {}, id});
                     stack.push_back(id);
                     go(x.body, with(path, 0), frames, stack);
                   },
                   [&](const PEnd&) {},
                   [&](const PRec&) {
                     hasRec = true;
                     threads.push_back(Thread{path, t, frames, stack});
                   },
                   [&](const auto&) { threads.push_back(Thread{path, t, frames, stack}); },
               },
               t->v);
  }

  static Path with(const Path& p, int i) {
    Path q = p;
    q.push_back(i);
    return q;
  }
};

size_t common_prefix(const Path& a, const Path& b) {
  size_t n = 0;
  while (n < a.size() && n < b.size() && a[n] == b[n]) ++n;
  return n;
}

bool same_role_set(std::vector<Role> a, std::vector<Role> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return a == b;
}

Subst zip(const std::vector<Name>& from, const std::vector<Name>& to) {
  Subst s;
  for (size_t i = 0; i < from.size() && i < to.size(); ++i) s[from[i]] = to[i];
  return s;
}

std::string roles_str(const std::vector<Role>& rs) { return "[" + join_roles(rs) + "]"; }

enum class Placement { Same, Blocks, None };

struct PairInfo {
  Placement where = Placement::None;
  const POpt* optA = nullptr;
  const POpt* optB = nullptr;
};

// Decides whether two threads may interact, and under which family of rules.
PairInfo classify(const Scan& sc, const Thread& a, const Thread& b,
                  const std::vector<Name>& sentByA) {
  PairInfo info;
  size_t lca = common_prefix(a.path, b.path);
  auto belowBinds = [&](const Thread& t, const Name& n) {
    return std::any_of(t.frames.begin(), t.frames.end(), [&](const Frame& f) {
      return f.kind == Frame::Kind::Res && f.depth >= lca && f.name == n;
    });
  };
  if (a.optStack == b.optStack) {
    for (auto& n : sentByA)
      if (belowBinds(a, n)) return info;
    info.where = Placement::Same;
    return info;
  }
  if (a.optStack.empty() || b.optStack.empty()) return info;
  int oa = a.optStack.back(), ob = b.optStack.back();
  if (std::find(b.optStack.begin(), b.optStack.end(), oa) != b.optStack.end()) return info;
  if (std::find(a.optStack.begin(), a.optStack.end(), ob) != a.optStack.end()) return info;
  // Between a block and its thread only parallel composition; restrictions there must not
  // bind anything the thread uses.
  auto cleanInside = [&](const Thread& t) {
    size_t optDepth = sc.opts[static_cast<size_t>(t.optStack.back())].path.size();
    auto fn = free_names(t.term);
    for (auto& f : t.frames)
      if (f.kind == Frame::Kind::Res && f.depth > optDepth && fn.count(f.name)) return false;
    return true;
  };
  if (!cleanInside(a) || !cleanInside(b)) return info;
  for (auto& n : sentByA)
    if (belowBinds(a, n)) return info;  // no scope extrusion out of a block
  info.optA = sc.opts[static_cast<size_t>(oa)].node;
  info.optB = sc.opts[static_cast<size_t>(ob)].node;
  if (!same_role_set(info.optA->parts, info.optB->parts)) return info;
  info.where = Placement::Blocks;
  return info;
}

// A block owner has to be the communicating role whenever that role takes part in the block.
bool owner_ok(const POpt* o, const Role& r) {
  if (std::find(o->parts.begin(), o->parts.end(), r) == o->parts.end()) return true;
  return o->owner == r;
}

Proc finish(const Proc& src, const std::vector<std::pair<Path, Proc>>& edits) {
  Proc r = src;
  for (auto& [path, by] : edits) r = replace_at(r, path, by);
  return canon(r);
}

std::vector<RedexStep> steps_of(const Proc& c, int unfolds);

Proc unfold_recs(const Proc& c, const Scan& sc) {
  Proc r = c;
  for (auto& t : sc.threads)
    if (auto* x = std::get_if<PRec>(&t.term->v))
      r = replace_at(r, t.path, substitute_var(x->body, x->var, t.term));
  return canon(r);
}

std::vector<RedexStep> steps_of(const Proc& c, int unfolds) {
  Scan sc;
  sc.go(c, {}, {}, {});
  if (sc.hasRec && unfolds == 0) return steps_of(unfold_recs(c, sc), 1);

  std::vector<RedexStep> out;
  auto emit = [&](RedexStep s) {
    s.unfolds = unfolds;
    out.push_back(std::move(s));
  };

  const auto& ts = sc.threads;
  for (size_t i = 0; i < ts.size(); ++i) {
    for (size_t j = 0; j < ts.size(); ++j) {
      if (i == j) continue;
      const Thread& a = ts[i];
      const Thread& b = ts[j];
      // session communication: a sends, b receives
      if (auto* s = std::get_if<PSend>(&a.term->v)) {
        auto* g = std::get_if<PGet>(&b.term->v);
        if (!g || g->session != s->session || g->from != s->from || g->to != s->to) continue;
        auto br = std::find_if(g->branches.begin(), g->branches.end(),
                               [&](auto& x) { return x.label == s->label; });
        if (br == g->branches.end() || br->binders.size() != s->payload.size()) continue;
        auto info = classify(sc, a, b, s->payload);
        if (info.where == Placement::None) continue;
        if (info.where == Placement::Blocks &&
            !(owner_ok(info.optA, s->from) && owner_ok(info.optB, s->to)))
          continue;
        RedexStep st;
        st.rule = info.where == Placement::Same ? "comS" : "cSO";
        st.position = {a.path, b.path};
        st.redexes = {a.term, b.term};
        st.binding = zip(br->binders, s->payload);
        st.label = st.rule + " " + s->session.id + ":" + s->from.id + "->" + s->to.id + ":" +
                   s->label.id;
        st.result = finish(c, {{a.path, s->cont}, {b.path, substitute(br->cont, st.binding)}});
        emit(std::move(st));
      } else if (auto* o = std::get_if<POut>(&a.term->v)) {
        auto* in = std::get_if<PIn>(&b.term->v);
        if (!in || in->chan != o->chan || in->binders.size() != o->payload.size()) continue;
        auto info = classify(sc, a, b, o->payload);
        if (info.where == Placement::None) continue;
        RedexStep st;
        st.rule = info.where == Placement::Same ? "comC" : "cCO";
        st.position = {a.path, b.path};
        st.redexes = {a.term, b.term};
        st.binding = zip(in->binders, o->payload);
        st.label = st.rule + " " + o->chan.id + "<" + join_names(o->payload) + ">";
        st.result = finish(c, {{a.path, o->cont}, {b.path, substitute(in->cont, st.binding)}});
        emit(std::move(st));
      } else if (auto* q = std::get_if<PReq>(&a.term->v)) {
        auto* e = std::get_if<PEnt>(&b.term->v);
        if (!e || e->session != q->session || e->inviter != q->inviter ||
            e->invitee != q->invitee || e->asRole != q->asRole)
          continue;
        auto info = classify(sc, a, b, {q->sub});
        if (info.where == Placement::None) continue;
        if (info.where == Placement::Blocks &&
            !(owner_ok(info.optA, q->inviter) && owner_ok(info.optB, q->invitee)))
          continue;
        RedexStep st;
        st.rule = info.where == Placement::Same ? "join" : "jO";
        st.position = {a.path, b.path};
        st.redexes = {a.term, b.term};
        st.binding = Subst{{e->binder, q->sub}};
        st.label = st.rule + " " + q->session.id + ":" + q->inviter.id + "->" + q->invitee.id +
                   " as " + q->asRole.id + " <" + q->sub.id + ">";
        st.result = finish(c, {{a.path, q->cont}, {b.path, substitute(e->cont, st.binding)}});
        emit(std::move(st));
      }
    }
  }

  for (auto& t : ts) {
    if (auto* d = std::get_if<PDecl>(&t.term->v)) {
      std::vector<Proc> parts{d->cont};
      for (auto& ch : d->chans) parts.push_back(p::out(ch, {d->session}, p::end()));
      RedexStep st;
      st.rule = "subs";
      st.position = {t.path};
      st.redexes = {t.term};
      st.label = "subs " + d->session.id + "<-" + d->parent.id;
      st.result = finish(c, {{t.path, p::par(parts)}});
      emit(std::move(st));
    } else if (auto* ch = std::get_if<PChoice>(&t.term->v)) {
      for (const Proc& side : {ch->left, ch->right}) {
        for (auto& inner : steps_of(canon(side), unfolds)) {
          RedexStep st;
          st.rule = "choice";
          st.position = {t.path};
          st.redexes = {t.term};
          st.label = "choice(" + inner.label + ")";
          st.result = finish(c, {{t.path, inner.result}});
          st.inner = std::make_shared<const RedexStep>(inner);
          emit(std::move(st));
        }
      }
    }
  }

  for (auto& t : sc.optThreads) {
    const auto& o = std::get<POpt>(t.term->v);
    std::string where = o.owner.id + roles_str(o.parts);
    {
      RedexStep st;
      st.rule = "fail";
      st.position = {t.path};
      st.redexes = {t.term};
      st.binding = zip(o.binders, o.defaults);
      st.owner = o.owner;
      for (size_t k = 0; k < o.binders.size(); ++k) st.assigned.emplace_back(o.binders[k], o.defaults[k]);
      st.label = "fail " + where;
      st.result = finish(c, {{t.path, substitute(o.cont, st.binding)}});
      emit(std::move(st));
    }
    auto* e = std::get_if<POptEnd>(&o.body->v);
    if (e && e->owner == o.owner && e->values.size() == o.binders.size()) {
      RedexStep st;
      st.rule = "succ";
      st.position = {t.path};
      st.redexes = {t.term};
      st.binding = zip(o.binders, e->values);
      st.owner = o.owner;
      for (size_t k = 0; k < o.binders.size(); ++k) st.assigned.emplace_back(o.binders[k], e->values[k]);
      st.label = "succ " + where;
      st.result = finish(c, {{t.path, substitute(o.cont, st.binding)}});
      emit(std::move(st));
    }
  }
  return out;
}

}  // namespace

Proc canonicalize(const Proc& p) { return canon(p); }

std::string state_key(const Proc& p) { return print(alpha_normalize(canon(p))); }

std::vector<RedexStep> enabled_steps(const Proc& p) { return steps_of(canon(p), 0); }

Proc apply_step(const Proc& p, const RedexStep& step) {
  for (auto& s : enabled_steps(p))
    if (s.rule == step.rule && s.position == step.position && s.label == step.label)
      return s.result;
  throw StaleStep("step '" + step.label + "' is not enabled at " +
                  (step.position.empty() ? std::string("/") : to_string(step.position.front())));
}

bool is_fail(const RedexStep& s) {
  if (s.rule == "fail") return true;
  return s.rule == "choice" && s.inner && is_fail(*s.inner);
}

}  // namespace optsession
