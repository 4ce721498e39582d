#include <angerona/core.hpp>

#include <algorithm>
#include <cassert>
#include <functional>
#include <map>
#include <unordered_map>
#include <unordered_set>

namespace angerona {

NegativeCycle::NegativeCycle(std::vector<std::string> preds)
    : std::runtime_error("negative cycle through predicates: " + [&] {
        std::string s;
        for (const auto& p : preds) {
          if (!s.empty()) s += " -> ";
          s += p;
        }
        return s;
      }()),
      cycle(std::move(preds)) {}

namespace {

// First-occurrence order of the variables in head, then body.
std::vector<std::string> rule_var_tuple(const Rule& r) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  auto add = [&](const Atom& a) {
    for (const auto& t : a.args)
      if (t.is_var() && seen.insert(t.name).second) out.push_back(t.name);
  };
  add(r.head);
  for (const auto& l : r.body) add(l.atom);
  return out;
}

Atom switch_atom(const std::string& pred, const std::vector<std::string>& vars) {
  Atom a;
  a.pred = pred;
  for (const auto& v : vars) a.args.push_back(mk_var(v));
  return a;
}

// Signature under which probabilistic rules share a switch class: head,
// constraints, and positional body (pred, args) ignoring literal signs.
std::string class_signature(const Rule& r) {
  std::string s = to_string(r.head) + "|";
  for (const auto& c : r.cstr)
    s += c.lhs.name + (c.eq ? "=" : "!") + c.rhs.name + ";";
  s += "|";
  for (const auto& l : r.body) s += to_string(l.atom) + ";";
  return s;
}

struct SwitchNamer {
  const std::map<std::string, int>& taken;
  std::string fresh(const std::string& base) {
    std::string name = base;
    while (taken.count(name)) name += "_";
    return name;
  }
};

void add_prob_atom(CoreProgram& core, const GroundAtom& a, const Rat& v) {
  if (core.facts.count(a)) return;  // already certain
  if (v == 0) return;
  if (v == 1) {
    core.probAtoms.erase(a);
    core.facts.insert(a);
    return;
  }
  auto it = core.probAtoms.find(a);
  if (it == core.probAtoms.end()) {
    core.probAtoms.emplace(a, v);
    return;
  }
  // Duplicate probabilistic ground atoms merge into one with adjusted
  // probability 1-(1-v1)(1-v2).
  Rat merged = 1 - (1 - it->second) * (1 - v);
  if (merged == 1) {
    core.probAtoms.erase(it);
    core.facts.insert(a);
  } else {
    it->second = merged;
  }
}

// Chain coefficients for an annotated disjunction: p_i = v_i / (1 - sum_{j<i} v_j).
std::vector<Rat> chain_coefficients(const std::vector<Rat>& v, int line) {
  std::vector<Rat> out;
  Rat consumed = 0;
  for (const auto& vi : v) {
    Rat rest = 1 - consumed;
    if (rest == 0) {
      if (vi != 0)
        throw ValidationError(
            "annotated disjunction at line " + std::to_string(line) +
            ": coefficients before a non-zero disjunct already sum to 1");
      out.push_back(0);
      continue;
    }
    out.push_back(vi / rest);
    consumed += vi;
  }
  return out;
}

// Relaxed fixpoint used only to find the tuples that instantiate switch
// atoms: all probabilistic atoms are treated as present, switch-predicate
// literals as unconstrained, and negative literals are ignored.
struct LazyGrounder {
  const std::set<std::string>& switch_preds;
  std::set<GroundAtom> atoms;
  std::map<std::string, std::vector<GroundAtom>> by_pred;

  void add(const GroundAtom& a) {
    if (atoms.insert(a).second) by_pred[a.pred].push_back(a);
  }

  bool match(const Atom& pat, const GroundAtom& g,
             std::map<std::string, std::string>& env) const {
    std::vector<std::pair<std::string, std::string>> bound;
    for (size_t i = 0; i < pat.args.size(); ++i) {
      const Term& t = pat.args[i];
      if (!t.is_var()) {
        if (t.name != g.args[i]) goto undo;
        continue;
      }
      if (auto it = env.find(t.name); it != env.end()) {
        if (it->second != g.args[i]) goto undo;
      } else {
        env[t.name] = g.args[i];
        bound.emplace_back(t.name, g.args[i]);
      }
    }
    return true;
  undo:
    for (auto& [k, _] : bound) env.erase(k);
    return false;
  }

  bool cstr_ok(const Rule& r, const std::map<std::string, std::string>& env) const {
    for (const auto& c : r.cstr) {
      auto val = [&](const Term& t) -> const std::string* {
        if (!t.is_var()) return &t.name;
        auto it = env.find(t.name);
        return it == env.end() ? nullptr : &it->second;
      };
      const std::string* l = val(c.lhs);
      const std::string* rr = val(c.rhs);
      if (!l || !rr) return false;  // constraints over unbound vars: reject
      if (c.eq != (*l == *rr)) return false;
    }
    return true;
  }

  template <class F>
  void groundings(const Rule& r, F&& on_env) const {
    std::vector<const Atom*> pos;
    for (const auto& l : r.body)
      if (l.positive && !switch_preds.count(l.atom.pred)) pos.push_back(&l.atom);
    std::map<std::string, std::string> env;
    std::function<void(size_t)> rec = [&](size_t i) {
      if (i == pos.size()) {
        if (cstr_ok(r, env)) on_env(env);
        return;
      }
      auto it = by_pred.find(pos[i]->pred);
      if (it == by_pred.end()) return;
      for (const auto& g : it->second) {
        std::map<std::string, std::string> saved = env;
        if (match(*pos[i], g, env)) {
          rec(i + 1);
          env = saved;
        }
      }
    };
    rec(0);
  }
};

}  // namespace

CoreProgram desugar(const Program& p) {
  CoreProgram core;
  core.domain = p.domain;
  core.arity = p.arity;
  for (const auto& [pred, _] : p.arity) core.originalPreds.insert(pred);

  SwitchNamer namer{core.arity};
  std::set<std::string> switch_preds;
  std::set<std::string> non_evidence_preds;

  // Probabilistic-rule classes keyed by sign-insensitive signature.
  struct ProbRule {
    Rule rule;
    Rat prob;
    std::string sw;  // switch predicate name
  };
  std::map<std::string, std::vector<ProbRule>> classes;
  std::vector<std::string> class_order;
  int prob_rule_idx = 0;
  int ad_idx = 0;

  struct PendingSwitch {
    std::string pred;
    Rat prob;
    std::vector<std::string> vars;  // tuple shape; empty vars = emit directly
    Rule source;                    // rule whose groundings realize the tuple
  };
  std::vector<PendingSwitch> pending;

  auto note_pred = [&](const std::string& pr) { non_evidence_preds.insert(pr); };

  for (const auto& st : p.statements) {
    switch (st.kind) {
      case Statement::Kind::ProbAtom:
        add_prob_atom(core, to_ground(st.atom), st.prob);
        note_pred(st.atom.pred);
        break;

      case Statement::Kind::Evidence:
        core.evidence.emplace_back(to_ground(st.atom), st.evidence_value);
        break;

      case Statement::Kind::Rule: {
        note_pred(st.rule.head.pred);
        for (const auto& l : st.rule.body) note_pred(l.atom.pred);
        if (!st.rule.annotation || *st.rule.annotation == 1) {
          Rule r = st.rule;
          r.annotation.reset();
          core.rules.push_back(std::move(r));
          break;
        }
        if (*st.rule.annotation == 0) break;  // never fires
        ++prob_rule_idx;
        std::string sig = class_signature(st.rule);
        auto it = classes.find(sig);
        if (it == classes.end()) {
          class_order.push_back(sig);
          it = classes.emplace(sig, std::vector<ProbRule>{}).first;
        }
        std::string sw = namer.fresh("sw" + std::to_string(prob_rule_idx));
        Rule r = st.rule;
        r.annotation.reset();
        it->second.push_back({std::move(r), *st.rule.annotation, sw});
        break;
      }

      case Statement::Kind::Disjunction: {
        ++ad_idx;
        for (const auto& d : st.disjuncts) note_pred(d.atom.pred);
        for (const auto& l : st.rule.body) note_pred(l.atom.pred);
        // Drop zero-coefficient disjuncts; the chain over the remaining ones
        // yields the same marginals.
        std::vector<Disjunct> ds;
        for (const auto& d : st.disjuncts)
          if (d.prob != 0) ds.push_back(d);
        if (ds.empty()) break;
        std::vector<Rat> vs;
        for (const auto& d : ds) vs.push_back(d.prob);
        std::vector<Rat> chain = chain_coefficients(vs, st.line);

        bool has_body = !st.rule.body.empty() || !st.rule.cstr.empty();
        std::vector<std::string> sw_names;
        for (size_t j = 0; j < ds.size(); ++j)
          sw_names.push_back(namer.fresh("adsw" + std::to_string(ad_idx) + "_" +
                                         std::to_string(j + 1)));

        if (!has_body) {
          // Appendix-A form: switch j carries the arguments of disjunct j.
          for (size_t j = 0; j < ds.size(); ++j) {
            GroundAtom swa{sw_names[j], to_ground(ds[j].atom).args};
            core.arity[sw_names[j]] = (int)swa.args.size();
            switch_preds.insert(sw_names[j]);
            if (chain[j] == 0) continue;
            add_prob_atom(core, swa, chain[j]);
            Rule r;
            r.head = ds[j].atom;
            for (size_t t = 0; t < j; ++t) {
              if (chain[t] == 0) continue;
              Atom neg{sw_names[t], to_atom(to_ground(ds[t].atom)).args};
              r.body.push_back({false, std::move(neg)});
            }
            r.body.push_back({true, Atom{sw_names[j], to_atom(to_ground(ds[j].atom)).args}});
            core.rules.push_back(std::move(r));
          }
          break;
        }

        // Disjunction head over a body: switches range over the rule's
        // variable tuple, instantiated lazily per realized grounding.
        Rule proto = st.rule;
        proto.head = ds[0].atom;
        std::vector<std::string> xs = rule_var_tuple(proto);
        for (size_t j = 0; j < ds.size(); ++j) {
          core.arity[sw_names[j]] = (int)xs.size();
          switch_preds.insert(sw_names[j]);
          if (chain[j] == 0) continue;
          Rule r;
          r.head = ds[j].atom;
          r.body = st.rule.body;
          r.cstr = st.rule.cstr;
          for (size_t t = 0; t < j; ++t) {
            if (chain[t] == 0) continue;
            r.body.push_back({false, switch_atom(sw_names[t], xs)});
          }
          r.body.push_back({true, switch_atom(sw_names[j], xs)});
          pending.push_back({sw_names[j], chain[j], xs, r});
          core.rules.push_back(std::move(r));
        }
        break;
      }
    }
  }

  // Emit probabilistic-rule classes with switch saturation so that rule
  // domination can merge each class into a single kernel later.
  for (const auto& sig : class_order) {
    const auto& members = classes[sig];
    if (members.size() > 12)
      throw ValidationError(
          "more than 12 probabilistic rules share the head/body signature '" +
          to_string(members[0].rule.head) + "'; switch saturation would blow up");
    std::vector<std::string> xs = rule_var_tuple(members[0].rule);
    for (size_t i = 0; i < members.size(); ++i) {
      const auto& m = members[i];
      core.arity[m.sw] = (int)xs.size();
      switch_preds.insert(m.sw);
      size_t patterns = size_t{1} << i;
      for (size_t mask = 0; mask < patterns; ++mask) {
        Rule r = m.rule;
        for (size_t t = 0; t < i; ++t)
          r.body.push_back({(mask >> t) & 1 ? true : false,
                            switch_atom(members[t].sw, xs)});
        r.body.push_back({true, switch_atom(m.sw, xs)});
        core.rules.push_back(std::move(r));
      }
      pending.push_back({m.sw, m.prob, xs, members[i].rule});
    }
  }

  // Validate evidence predicates.
  for (const auto& [atom, _] : core.evidence)
    if (!non_evidence_preds.count(atom.pred))
      throw ValidationError("evidence on predicate '" + atom.pred +
                            "' which does not appear in the program");

  // Instantiate switch atoms over the tuples realized by the relaxed
  // grounding (not eagerly over dom^k).
  if (!pending.empty()) {
    LazyGrounder lg{switch_preds, {}, {}};
    for (const auto& a : core.facts) lg.add(a);
    for (const auto& [a, _] : core.probAtoms) lg.add(a);

    // Check every switch tuple variable is bound by non-switch positives or
    // equality constraints; otherwise the rule cannot be grounded lazily.
    for (const auto& ps : pending) {
      std::set<std::string> bound;
      for (const auto& l : ps.source.body)
        if (l.positive && !switch_preds.count(l.atom.pred))
          for (const auto& t : l.atom.args)
            if (t.is_var()) bound.insert(t.name);
      for (const auto& c : ps.source.cstr)
        if (c.eq && c.lhs.is_var() && !c.rhs.is_var()) bound.insert(c.lhs.name);
      for (const auto& v : ps.vars)
        if (!bound.count(v))
          throw ValidationError(
              "variable " + v + " in probabilistic rule '" +
              print_rule(ps.source) +
              "' is not bound by a positive body literal");
    }

    bool changed = true;
    while (changed) {
      changed = false;
      for (const auto& r : core.rules) {
        lg.groundings(r, [&](const std::map<std::string, std::string>& env) {
          GroundAtom h;
          h.pred = r.head.pred;
          for (const auto& t : r.head.args)
            h.args.push_back(t.is_var() ? env.at(t.name) : t.name);
          if (!lg.atoms.count(h)) {
            lg.add(h);
            changed = true;
          }
        });
      }
    }
    for (const auto& ps : pending) {
      lg.groundings(ps.source, [&](const std::map<std::string, std::string>& env) {
        GroundAtom swa;
        swa.pred = ps.pred;
        for (const auto& v : ps.vars) swa.args.push_back(env.at(v));
        add_prob_atom(core, swa, ps.prob);
      });
    }
  }

  return core;
}

std::optional<std::map<std::string, int>> try_stratify(const CoreProgram& p) {
  // Predicate graph with weight 1 on negative edges, 0 on positive ones.
  std::vector<std::string> preds;
  std::map<std::string, int> id;
  auto intern = [&](const std::string& s) {
    auto [it, fresh] = id.emplace(s, (int)preds.size());
    if (fresh) preds.push_back(s);
    return it->second;
  };
  for (const auto& [pr, _] : p.arity) intern(pr);
  struct Edge {
    int from, to, w;
  };
  std::vector<Edge> edges;
  for (const auto& r : p.rules) {
    int h = intern(r.head.pred);
    for (const auto& l : r.body)
      edges.push_back({intern(l.atom.pred), h, l.positive ? 0 : 1});
  }

  // Tarjan SCC.
  int n = (int)preds.size();
  std::vector<std::vector<std::pair<int, int>>> adj(n);
  for (const auto& e : edges) adj[e.from].push_back({e.to, e.w});
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
  std::vector<bool> onstack(n, false);
  std::vector<int> stck;
  int counter = 0, ncomp = 0;
  std::function<void(int)> dfs = [&](int v) {
    index[v] = low[v] = counter++;
    stck.push_back(v);
    onstack[v] = true;
    for (auto [w, _] : adj[v]) {
      if (index[w] == -1) {
        dfs(w);
        low[v] = std::min(low[v], low[w]);
      } else if (onstack[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      for (;;) {
        int w = stck.back();
        stck.pop_back();
        onstack[w] = false;
        comp[w] = ncomp;
        if (w == v) break;
      }
      ++ncomp;
    }
  };
  for (int v = 0; v < n; ++v)
    if (index[v] == -1) dfs(v);

  for (const auto& e : edges)
    if (comp[e.from] == comp[e.to] && e.w == 1) return std::nullopt;

  // Longest path over the condensation. Tarjan numbers components in reverse
  // topological order, so decreasing id order visits sources first. Edges
  // within a component all have weight 0, so members share a value.
  std::vector<std::vector<int>> members(ncomp);
  for (int v = 0; v < n; ++v) members[comp[v]].push_back(v);
  std::vector<int> mu(n, 0);
  for (int c = ncomp - 1; c >= 0; --c) {
    int best = 0;
    for (const auto& e : edges)
      if (comp[e.to] == c && comp[e.from] != c)
        best = std::max(best, mu[e.from] + e.w);
    for (int v : members[c]) mu[v] = best;
  }

  std::map<std::string, int> out;
  for (int v = 0; v < n; ++v) out[preds[v]] = mu[v];
  return out;
}

std::map<std::string, int> stratify(const CoreProgram& p) {
  auto mu = try_stratify(p);
  if (mu) return *mu;
  // Recompute the offending component for the error message.
  std::map<std::string, std::vector<std::pair<std::string, bool>>> adj;
  for (const auto& r : p.rules)
    for (const auto& l : r.body)
      adj[l.atom.pred].push_back({r.head.pred, l.positive});
  // Find a predicate on a negative cycle: DFS from each negative edge source.
  for (const auto& r : p.rules) {
    for (const auto& l : r.body) {
      if (l.positive) continue;
      // Path from head back to the negated predicate?
      std::set<std::string> seen;
      std::vector<std::string> path{r.head.pred};
      std::function<bool(const std::string&)> reach = [&](const std::string& at) -> bool {
        if (at == l.atom.pred) return true;
        if (!seen.insert(at).second) return false;
        for (auto& [nxt, _] : adj[at]) {
          path.push_back(nxt);
          if (reach(nxt)) return true;
          path.pop_back();
        }
        return false;
      };
      if (reach(r.head.pred)) throw NegativeCycle(path);
    }
  }
  throw NegativeCycle({"<unknown>"});
}

}  // namespace angerona
