#pragma once

#include <angerona/grounder.hpp>

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace angerona {

struct TooManyWorlds : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ZeroEvidence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotLocallyStratified : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr int kDefaultWorldLimit = 24;

// Reads ANGERONA_WORLD_LIMIT, falling back to the default cap.
int world_limit_from_env();

using World = std::set<GroundAtom>;
using WorldDistribution = std::map<World, Rat>;

// Ground-truth semantics by explicit enumeration of probabilistic
// assignments, with exact rational arithmetic. The well-founded model of each
// grounded instance is computed by a ground-level stratified fixpoint (SCC
// condensation of the ground dependency graph), which agrees with the
// predicate-level stratification whenever the latter exists.
class Oracle {
 public:
  explicit Oracle(const CoreProgram& p);

  const CoreProgram& program() const { return *program_; }
  const GroundingResult& grounding() const { return grounding_; }
  const GroundGraph& graph() const { return graph_; }

  // Probabilistic atoms in enumeration order (lexicographic).
  const std::vector<GroundAtom>& prob_atoms() const { return probAtoms_; }

  // WFM of instance(p, f); `chosen` lists the probabilistic atoms mapped to
  // true (atoms outside prob(p) are ignored).
  World wfm(const World& chosen) const;

  // Joint distribution over worlds restricted to `preds` (default: the
  // original predicates). Conditions on the program's own evidence.
  WorldDistribution distribution(
      std::optional<std::set<std::string>> preds = std::nullopt,
      int worldLimit = kDefaultWorldLimit) const;

  // Exact conditional probability of a ground literal given the program
  // evidence plus `extra`. Enumeration is restricted to the probabilistic
  // ancestors of the involved atoms.
  Rat query_prob(const GroundAtom& target, bool positive,
                 const std::vector<std::pair<GroundAtom, bool>>& extra = {},
                 int worldLimit = kDefaultWorldLimit) const;

 private:
  struct Instance {
    int head;
    std::vector<std::pair<int, bool>> body;  // (atom id, positive)
  };

  bool atom_true(const std::vector<char>& truth, const GroundAtom& a) const;
  void evaluate(std::vector<char>& truth) const;  // in: initial facts; out: WFM

  const CoreProgram* program_;
  GroundingResult grounding_;
  GroundGraph graph_;
  std::vector<GroundAtom> probAtoms_;
  std::vector<Rat> probs_;
  std::map<GroundAtom, int> probIndex_;

  std::vector<Instance> instances_;
  std::vector<int> factIds_;
  std::vector<int> probAtomIds_;           // ids in graph_ order of probAtoms_
  std::vector<std::vector<int>> strata_;   // instance indices per component,
                                           // topological order
};

// Convenience wrappers matching the operation names.
World wfm(const CoreProgram& p, const World& chosen);
WorldDistribution distribution(const CoreProgram& p,
                               std::optional<std::set<std::string>> preds = std::nullopt,
                               int worldLimit = kDefaultWorldLimit);
Rat query_prob(const CoreProgram& p, const GroundAtom& target, bool positive,
               const std::vector<std::pair<GroundAtom, bool>>& extra = {},
               int worldLimit = kDefaultWorldLimit);

}  // namespace angerona
