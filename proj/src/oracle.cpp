#include <angerona/oracle.hpp>

#include <algorithm>
#include <cstdlib>
#include <functional>

namespace angerona {

int world_limit_from_env() {
  if (const char* env = std::getenv("ANGERONA_WORLD_LIMIT")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  return kDefaultWorldLimit;
}

Oracle::Oracle(const CoreProgram& p)
    : program_(&p), grounding_(relaxed_ground(p)), graph_(ground_graph(p, grounding_)) {
  for (const auto& [a, v] : p.probAtoms) {
    probIndex_.emplace(a, (int)probAtoms_.size());
    probAtoms_.push_back(a);
    probs_.push_back(v);
  }

  for (const auto& a : p.facts) factIds_.push_back(graph_.atomId.at(a));
  for (const auto& a : probAtoms_) probAtomIds_.push_back(graph_.atomId.at(a));

  for (const auto& perRule : grounding_.ruleInstances) {
    for (const auto& gr : perRule) {
      Instance inst;
      inst.head = graph_.atomId.at(gr.head);
      for (const auto& [a, pos] : gr.body)
        inst.body.emplace_back(graph_.atomId.at(a), pos);
      instances_.push_back(std::move(inst));
    }
  }

  // SCC condensation of the ground atom graph; negative edges inside a
  // component mean the instance set is not locally stratified.
  int n = (int)graph_.atoms.size();
  std::vector<std::vector<int>> adj(n);
  for (const auto& inst : instances_)
    for (const auto& [b, _] : inst.body) adj[b].push_back(inst.head);

  std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
  std::vector<char> onstack(n, 0);
  std::vector<int> stck;
  int counter = 0, ncomp = 0;
  // Iterative Tarjan; ground graphs may be deep.
  struct Frame {
    int v;
    size_t next;
  };
  for (int root = 0; root < n; ++root) {
    if (index[root] != -1) continue;
    std::vector<Frame> frames{{root, 0}};
    index[root] = low[root] = counter++;
    stck.push_back(root);
    onstack[root] = 1;
    while (!frames.empty()) {
      Frame& f = frames.back();
      if (f.next < adj[f.v].size()) {
        int w = adj[f.v][f.next++];
        if (index[w] == -1) {
          index[w] = low[w] = counter++;
          stck.push_back(w);
          onstack[w] = 1;
          frames.push_back({w, 0});
        } else if (onstack[w]) {
          low[f.v] = std::min(low[f.v], index[w]);
        }
      } else {
        int v = f.v;
        frames.pop_back();
        if (!frames.empty())
          low[frames.back().v] = std::min(low[frames.back().v], low[v]);
        if (low[v] == index[v]) {
          for (;;) {
            int w = stck.back();
            stck.pop_back();
            onstack[w] = 0;
            comp[w] = ncomp;
            if (w == v) break;
          }
          ++ncomp;
        }
      }
    }
  }

  for (const auto& inst : instances_)
    for (const auto& [b, positive] : inst.body)
      if (!positive && comp[b] == comp[inst.head])
        throw NotLocallyStratified(
            "negation inside a ground dependency cycle at atom " +
            to_string(graph_.atoms[inst.head]));

  // Tarjan component ids are reverse-topological; evaluate high ids first.
  strata_.assign(ncomp, {});
  for (int i = 0; i < (int)instances_.size(); ++i)
    strata_[comp[instances_[i].head]].push_back(i);
  std::reverse(strata_.begin(), strata_.end());
}

void Oracle::evaluate(std::vector<char>& truth) const {
  for (const auto& stratum : strata_) {
    bool changed = true;
    while (changed) {
      changed = false;
      for (int i : stratum) {
        const Instance& inst = instances_[i];
        if (truth[inst.head]) continue;
        bool fires = true;
        for (const auto& [b, positive] : inst.body) {
          if (positive != (bool)truth[b]) {
            // Negative literals refer to lower components, whose truth is
            // final by the time this stratum runs.
            fires = false;
            break;
          }
        }
        if (fires) {
          truth[inst.head] = 1;
          changed = true;
        }
      }
    }
  }
}

World Oracle::wfm(const World& chosen) const {
  std::vector<char> truth(graph_.atoms.size(), 0);
  for (int id : factIds_) truth[id] = 1;
  for (size_t i = 0; i < probAtoms_.size(); ++i)
    if (chosen.count(probAtoms_[i])) truth[probAtomIds_[i]] = 1;
  evaluate(truth);
  World out;
  for (size_t i = 0; i < truth.size(); ++i)
    if (truth[i]) out.insert(graph_.atoms[i]);
  return out;
}

bool Oracle::atom_true(const std::vector<char>& truth, const GroundAtom& a) const {
  auto it = graph_.atomId.find(a);
  return it != graph_.atomId.end() && truth[it->second];
}

WorldDistribution Oracle::distribution(std::optional<std::set<std::string>> preds,
                                       int worldLimit) const {
  if ((int)probAtoms_.size() > worldLimit)
    throw TooManyWorlds("program has " + std::to_string(probAtoms_.size()) +
                        " probabilistic atoms; limit is " +
                        std::to_string(worldLimit));
  const std::set<std::string>& filter = preds ? *preds : program_->originalPreds;

  WorldDistribution dist;
  Rat evidenceMass = 0;
  size_t count = size_t{1} << probAtoms_.size();
  std::vector<char> truth;
  for (size_t mask = 0; mask < count; ++mask) {
    truth.assign(graph_.atoms.size(), 0);
    for (int id : factIds_) truth[id] = 1;
    Rat prob = 1;
    for (size_t i = 0; i < probAtoms_.size(); ++i) {
      if ((mask >> i) & 1) {
        truth[probAtomIds_[i]] = 1;
        prob *= probs_[i];
      } else {
        prob *= 1 - probs_[i];
      }
    }
    evaluate(truth);
    bool ok = true;
    for (const auto& [a, v] : program_->evidence)
      if (atom_true(truth, a) != v) {
        ok = false;
        break;
      }
    if (!ok) continue;
    evidenceMass += prob;
    World w;
    for (size_t i = 0; i < truth.size(); ++i)
      if (truth[i] && filter.count(graph_.atoms[i].pred))
        w.insert(graph_.atoms[i]);
    dist[w] += prob;
  }
  if (!program_->evidence.empty()) {
    if (evidenceMass == 0) throw ZeroEvidence("program evidence has probability 0");
    for (auto& [_, v] : dist) v /= evidenceMass;
  }
  return dist;
}

Rat Oracle::query_prob(const GroundAtom& target, bool positive,
                       const std::vector<std::pair<GroundAtom, bool>>& extra,
                       int worldLimit) const {
  std::vector<std::pair<GroundAtom, bool>> evidence(program_->evidence);
  evidence.insert(evidence.end(), extra.begin(), extra.end());

  // Only probabilistic ancestors of the involved atoms can influence the
  // query; everything else integrates out to 1.
  std::vector<GroundAtom> seeds{target};
  for (const auto& [a, _] : evidence) seeds.push_back(a);
  std::set<GroundAtom> relevant = graph_.ancestors_of(seeds);

  std::vector<int> chosenIdx;
  for (size_t i = 0; i < probAtoms_.size(); ++i)
    if (relevant.count(probAtoms_[i])) chosenIdx.push_back((int)i);
  if ((int)chosenIdx.size() > worldLimit)
    throw TooManyWorlds("query involves " + std::to_string(chosenIdx.size()) +
                        " probabilistic atoms; limit is " +
                        std::to_string(worldLimit));

  Rat massEvidence = 0, massBoth = 0;
  size_t count = size_t{1} << chosenIdx.size();
  std::vector<char> truth;
  for (size_t mask = 0; mask < count; ++mask) {
    truth.assign(graph_.atoms.size(), 0);
    for (int id : factIds_) truth[id] = 1;
    Rat prob = 1;
    for (size_t k = 0; k < chosenIdx.size(); ++k) {
      int i = chosenIdx[k];
      if ((mask >> k) & 1) {
        truth[probAtomIds_[i]] = 1;
        prob *= probs_[i];
      } else {
        prob *= 1 - probs_[i];
      }
    }
    evaluate(truth);
    bool ok = true;
    for (const auto& [a, v] : evidence)
      if (atom_true(truth, a) != v) {
        ok = false;
        break;
      }
    if (!ok) continue;
    massEvidence += prob;
    if (atom_true(truth, target) == positive) massBoth += prob;
  }
  if (massEvidence == 0)
    throw ZeroEvidence("evidence has probability 0 for query " + to_string(target));
  return massBoth / massEvidence;
}

World wfm(const CoreProgram& p, const World& chosen) { return Oracle(p).wfm(chosen); }

WorldDistribution distribution(const CoreProgram& p,
                               std::optional<std::set<std::string>> preds,
                               int worldLimit) {
  return Oracle(p).distribution(std::move(preds), worldLimit);
}

Rat query_prob(const CoreProgram& p, const GroundAtom& target, bool positive,
               const std::vector<std::pair<GroundAtom, bool>>& extra,
               int worldLimit) {
  return Oracle(p).query_prob(target, positive, extra, worldLimit);
}

}  // namespace angerona
