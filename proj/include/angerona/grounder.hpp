#pragma once

#include <angerona/core.hpp>

#include <map>
#include <set>
#include <string>
#include <vector>

namespace angerona {

struct GroundRule {
  int ruleIndex = -1;  // index into CoreProgram::rules
  GroundAtom head;
  std::vector<std::pair<GroundAtom, bool>> body;  // (atom, positive)

  auto operator<=>(const GroundRule&) const = default;
};

struct GroundingResult {
  std::set<GroundAtom> atoms;                        // ground(p)
  std::vector<std::vector<GroundRule>> ruleInstances;  // per rule, sorted
};

// Least fixpoint treating all probabilistic atoms as present and negative
// literals as free (consistency-filtered). Throws ValidationError when a rule
// is not negation-guarded or a variable cannot be bound.
GroundingResult relaxed_ground(const CoreProgram& p);

struct GroundGraph {
  std::vector<GroundAtom> atoms;
  std::map<GroundAtom, int> atomId;

  // One node per (rule, instance, body position); edges atom -> position node
  // -> head atom.
  struct PositionNode {
    int rule = 0;
    int inst = 0;
    int pos = 0;
    int fromAtom = 0;
    int headAtom = 0;
  };
  std::vector<PositionNode> positions;

  // Derivation parents per atom (atoms occurring in bodies of instances whose
  // head is the atom), for ancestor closures.
  std::vector<std::vector<int>> parents;

  bool undirectedAcyclic = true;

  std::set<GroundAtom> ancestors_of(const std::vector<GroundAtom>& seeds) const;
};

GroundGraph ground_graph(const CoreProgram& p, const GroundingResult& g);

}  // namespace angerona
