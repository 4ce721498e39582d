#include <angerona/grounder.hpp>

#include <algorithm>
#include <functional>
#include <unordered_map>

namespace angerona {

namespace {

struct Db {
  std::vector<GroundAtom> atomOf;
  std::map<GroundAtom, int> idOf;
  std::map<std::string, std::vector<int>> byPred;
  // (pred, position) -> value -> atom ids
  std::map<std::pair<std::string, int>, std::unordered_map<std::string, std::vector<int>>>
      posIndex;

  int add(const GroundAtom& a) {
    auto it = idOf.find(a);
    if (it != idOf.end()) return -1;
    int id = (int)atomOf.size();
    atomOf.push_back(a);
    idOf.emplace(a, id);
    byPred[a.pred].push_back(id);
    for (int i = 0; i < (int)a.args.size(); ++i)
      posIndex[{a.pred, i}][a.args[i]].push_back(id);
    return id;
  }

  const std::vector<int>* candidates(const Atom& pat,
                                     const std::map<std::string, std::string>& env) const {
    // Most selective bound position, if any.
    const std::vector<int>* best = nullptr;
    for (int i = 0; i < (int)pat.args.size(); ++i) {
      const Term& t = pat.args[i];
      std::string val;
      if (!t.is_var())
        val = t.name;
      else if (auto it = env.find(t.name); it != env.end())
        val = it->second;
      else
        continue;
      auto idx = posIndex.find({pat.pred, i});
      if (idx == posIndex.end()) return nullptr;
      auto vit = idx->second.find(val);
      if (vit == idx->second.end()) return nullptr;
      if (!best || vit->second.size() < best->size()) best = &vit->second;
    }
    if (best) return best;
    auto it = byPred.find(pat.pred);
    return it == byPred.end() ? nullptr : &it->second;
  }
};

using Env = std::map<std::string, std::string>;

bool match(const Atom& pat, const GroundAtom& g, Env& env,
           std::vector<std::string>& newly) {
  for (size_t i = 0; i < pat.args.size(); ++i) {
    const Term& t = pat.args[i];
    if (!t.is_var()) {
      if (t.name != g.args[i]) return false;
      continue;
    }
    auto it = env.find(t.name);
    if (it != env.end()) {
      if (it->second != g.args[i]) return false;
    } else {
      env[t.name] = g.args[i];
      newly.push_back(t.name);
    }
  }
  return true;
}

void unbind(Env& env, const std::vector<std::string>& newly) {
  for (const auto& v : newly) env.erase(v);
}

GroundAtom instantiate(const Atom& a, const Env& env) {
  GroundAtom g;
  g.pred = a.pred;
  g.args.reserve(a.args.size());
  for (const auto& t : a.args) {
    if (t.is_var()) {
      auto it = env.find(t.name);
      if (it == env.end())
        throw ValidationError("unbound variable " + t.name + " in " + to_string(a));
      g.args.push_back(it->second);
    } else {
      g.args.push_back(t.name);
    }
  }
  return g;
}

struct RulePlan {
  const Rule* rule;
  int index;
  std::vector<const Atom*> positives;   // join order = body order
  std::vector<int> positivePos;         // body index per positive literal
};

// Applies var=const bindings, then checks every constraint is decidable.
bool apply_constraints(const Rule& r, Env& env) {
  for (const auto& c : r.cstr) {
    if (c.eq && c.lhs.is_var() && !c.rhs.is_var()) {
      auto it = env.find(c.lhs.name);
      if (it == env.end())
        env[c.lhs.name] = c.rhs.name;
      else if (it->second != c.rhs.name)
        return false;
    }
  }
  for (const auto& c : r.cstr) {
    auto val = [&](const Term& t) -> const std::string* {
      if (!t.is_var()) return &t.name;
      auto it = env.find(t.name);
      return it == env.end() ? nullptr : &it->second;
    };
    const std::string* l = val(c.lhs);
    const std::string* rr = val(c.rhs);
    if (!l || !rr)
      throw ValidationError("constraint over unbound variable in rule '" +
                            print_rule(r) + "'");
    if (c.eq != (*l == *rr)) return false;
  }
  return true;
}

}  // namespace

GroundingResult relaxed_ground(const CoreProgram& p) {
  // Negation-guardedness makes the relaxed grounding well-defined.
  for (const auto& r : p.rules) {
    std::set<std::string> pos;
    for (const auto& l : r.body)
      if (l.positive)
        for (const auto& t : l.atom.args)
          if (t.is_var()) pos.insert(t.name);
    for (const auto& c : r.cstr)
      if (c.eq && c.lhs.is_var() && !c.rhs.is_var()) pos.insert(c.lhs.name);
    for (const auto& l : r.body)
      if (!l.positive)
        for (const auto& t : l.atom.args)
          if (t.is_var() && !pos.count(t.name))
            throw ValidationError("rule '" + print_rule(r) +
                                  "' is not negation-guarded (variable " +
                                  t.name + ")");
  }

  Db db;
  std::vector<int> delta;
  for (const auto& a : p.facts) {
    int id = db.add(a);
    if (id >= 0) delta.push_back(id);
  }
  for (const auto& [a, _] : p.probAtoms) {
    int id = db.add(a);
    if (id >= 0) delta.push_back(id);
  }

  std::vector<RulePlan> plans;
  for (int i = 0; i < (int)p.rules.size(); ++i) {
    RulePlan plan{&p.rules[i], i, {}, {}};
    for (int j = 0; j < (int)p.rules[i].body.size(); ++j) {
      if (p.rules[i].body[j].positive) {
        plan.positives.push_back(&p.rules[i].body[j].atom);
        plan.positivePos.push_back(j);
      }
    }
    plans.push_back(std::move(plan));
  }

  std::vector<std::set<GroundRule>> instances(p.rules.size());

  auto emit = [&](const RulePlan& plan, Env& env, std::vector<int>& newDelta) {
    if (!apply_constraints(*plan.rule, env)) return;
    GroundRule gr;
    gr.ruleIndex = plan.index;
    gr.head = instantiate(plan.rule->head, env);
    gr.body.reserve(plan.rule->body.size());
    for (const auto& l : plan.rule->body)
      gr.body.emplace_back(instantiate(l.atom, env), l.positive);
    // Internal consistency: no atom both positive and negative.
    for (size_t i = 0; i < gr.body.size(); ++i)
      for (size_t j = i + 1; j < gr.body.size(); ++j)
        if (gr.body[i].first == gr.body[j].first &&
            gr.body[i].second != gr.body[j].second)
          return;
    if (!instances[plan.index].insert(gr).second) return;
    int id = db.add(gr.head);
    if (id >= 0) newDelta.push_back(id);
  };

  // Join the remaining positive literals (skipping `fixed`), then emit.
  std::function<void(const RulePlan&, size_t, int, Env&, std::vector<int>&)> join =
      [&](const RulePlan& plan, size_t j, int fixed, Env& env,
          std::vector<int>& newDelta) {
        if (j == plan.positives.size()) {
          Env scratch = env;
          emit(plan, scratch, newDelta);
          return;
        }
        if ((int)j == fixed) {
          join(plan, j + 1, fixed, env, newDelta);
          return;
        }
        const Atom& pat = *plan.positives[j];
        const std::vector<int>* cands = db.candidates(pat, env);
        if (!cands) return;
        // The db may grow while we recurse (emit adds head atoms), which can
        // reallocate index vectors; iterate over a snapshot.
        std::vector<int> snapshot(*cands);
        for (size_t k = 0; k < snapshot.size(); ++k) {
          GroundAtom g = db.atomOf[snapshot[k]];  // copy: db may reallocate
          std::vector<std::string> newly;
          if (match(pat, g, env, newly)) {
            join(plan, j + 1, fixed, env, newDelta);
            unbind(env, newly);
          }
        }
      };

  // Rules with no positive literals fire once.
  {
    std::vector<int> newDelta;
    for (const auto& plan : plans) {
      if (plan.positives.empty()) {
        Env env;
        emit(plan, env, newDelta);
      }
    }
    for (int id : newDelta) delta.push_back(id);
  }

  while (!delta.empty()) {
    std::vector<int> newDelta;
    for (int atomIdx : delta) {
      GroundAtom ga = db.atomOf[atomIdx];  // copy: db may reallocate
      for (const auto& plan : plans) {
        for (size_t j = 0; j < plan.positives.size(); ++j) {
          if (plan.positives[j]->pred != ga.pred) continue;
          Env env;
          std::vector<std::string> newly;
          if (!match(*plan.positives[j], ga, env, newly)) continue;
          join(plan, 0, (int)j, env, newDelta);
        }
      }
    }
    delta = std::move(newDelta);
  }

  GroundingResult out;
  for (const auto& a : db.atomOf) out.atoms.insert(a);
  out.ruleInstances.resize(p.rules.size());
  for (size_t i = 0; i < instances.size(); ++i)
    out.ruleInstances[i].assign(instances[i].begin(), instances[i].end());
  return out;
}

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) {
    for (int i = 0; i < n; ++i) parent[i] = i;
  }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  // Returns false if x and y were already connected.
  bool unite(int x, int y) {
    int a = find(x), b = find(y);
    if (a == b) return false;
    parent[a] = b;
    return true;
  }
};

}  // namespace

GroundGraph ground_graph(const CoreProgram& p, const GroundingResult& g) {
  GroundGraph gg;
  auto intern = [&](const GroundAtom& a) {
    auto [it, fresh] = gg.atomId.emplace(a, (int)gg.atoms.size());
    if (fresh) {
      gg.atoms.push_back(a);
      gg.parents.emplace_back();
    }
    return it->second;
  };

  // Atoms used by any instance (head or body).
  for (size_t r = 0; r < g.ruleInstances.size(); ++r) {
    for (size_t i = 0; i < g.ruleInstances[r].size(); ++i) {
      const GroundRule& inst = g.ruleInstances[r][i];
      int h = intern(inst.head);
      for (size_t j = 0; j < inst.body.size(); ++j) {
        int b = intern(inst.body[j].first);
        gg.positions.push_back({(int)r, (int)i, (int)j, b, h});
        gg.parents[h].push_back(b);
      }
    }
  }
  // Facts and probabilistic atoms always have nodes.
  for (const auto& a : p.facts) intern(a);
  for (const auto& [a, _] : p.probAtoms) intern(a);

  int n = (int)gg.atoms.size() + (int)gg.positions.size();
  UnionFind uf(n);
  gg.undirectedAcyclic = true;
  for (size_t k = 0; k < gg.positions.size(); ++k) {
    int posNode = (int)gg.atoms.size() + (int)k;
    if (!uf.unite(gg.positions[k].fromAtom, posNode)) gg.undirectedAcyclic = false;
    if (!uf.unite(posNode, gg.positions[k].headAtom)) gg.undirectedAcyclic = false;
  }
  return gg;
}

std::set<GroundAtom> GroundGraph::ancestors_of(
    const std::vector<GroundAtom>& seeds) const {
  std::set<GroundAtom> out;
  std::vector<int> work;
  for (const auto& s : seeds) {
    out.insert(s);
    auto it = atomId.find(s);
    if (it != atomId.end()) work.push_back(it->second);
  }
  std::set<int> seen(work.begin(), work.end());
  while (!work.empty()) {
    int at = work.back();
    work.pop_back();
    out.insert(atoms[at]);
    for (int parent : parents[at])
      if (seen.insert(parent).second) work.push_back(parent);
  }
  return out;
}

}  // namespace angerona
