#pragma once

#include <angerona/ast.hpp>

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace angerona {

// Core form: ground probabilistic atoms, certain facts, plain rules, evidence.
struct CoreProgram {
  std::map<GroundAtom, Rat> probAtoms;  // 0 < v < 1, duplicates merged
  std::set<GroundAtom> facts;           // certain ground atoms (v = 1)
  std::vector<Rule> rules;              // no annotations
  std::vector<std::pair<GroundAtom, bool>> evidence;

  std::set<std::string> domain;
  std::map<std::string, int> arity;
  // Predicates of the source program, before switch predicates were added.
  std::set<std::string> originalPreds;

  bool is_original(const std::string& pred) const {
    return originalPreds.count(pred) != 0;
  }
};

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NegativeCycle : std::runtime_error {
  std::vector<std::string> cycle;
  explicit NegativeCycle(std::vector<std::string> preds);
};

// Desugars probabilistic rules and annotated disjunctions into switch atoms
// plus plain rules, merges duplicate probabilistic atoms, and instantiates
// switch atoms for the tuples realized by the relaxed grounding.
//
// Probabilistic rules that agree on head, constraints and positional body
// (pred, args) up to literal signs share a switch-atom class; member i of a
// class is emitted with every sign pattern over the class's earlier switches
// so that rule domination can later merge the class into one kernel rule.
CoreProgram desugar(const Program& p);

// Max-weight-path stratification (weight 1 per negative edge). Throws
// NegativeCycle when a dependency cycle crosses a negative edge.
std::map<std::string, int> stratify(const CoreProgram& p);

// As stratify(), but returns nullopt instead of throwing.
std::optional<std::map<std::string, int>> try_stratify(const CoreProgram& p);

}  // namespace angerona
