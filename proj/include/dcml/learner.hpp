#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dcml/distributions.hpp"
#include "dcml/engine.hpp"
#include "dcml/relational.hpp"

namespace dcml {

struct LearnParams {
  double epsilon = 0.0;     // minimum score gain for a split
  int max_depth = 4;        // tests per path
  int max_body = 6;         // entity atom plus tests
  std::size_t proofs = 0;   // proofs per example; 0 picks 1 or 20 from the data
  std::uint64_t seed = 0;
  unsigned threads = 1;
  bool complete_data = false;  // unit weights, one deterministic proof
  bool respect_rank = true;
  FitOptions fit;
};

// A candidate test literal instantiated from a mode declaration. Every test
// reads values reachable from the head entity, so its outcome is a function
// of that entity in a given world.
struct Refinement {
  std::size_t mode_index = 0;
  std::string aggregator;  // "none" or an aggregator name
  std::string attribute;
  std::optional<std::string> link;
  std::string link_modes;
  std::vector<std::string> link_types;  // empty when the link is untyped
  int attribute_position = -1;
  bool discrete = false;  // outcome is a label
  std::vector<Value> domain;
  std::string key;  // canonical text used for de-duplication and ties

  // The literal at path position `slot`, its value bound to `value` (a
  // variable or constant). Local variable names carry the slot number.
  Term literal(const Term& head_var, int slot, const Term& value) const;
  // Variable holding the outcome at a given slot (V<k> or Y<k>).
  Term value_var(int slot) const;
};

// Candidate tests for `target` that are not already on `path`.
std::vector<Refinement> refinements(const std::string& target, const BiasSpec& bias,
                                    const std::vector<std::string>& path_keys = {},
                                    bool respect_rank = true);

// Training facts with a fixed set of sampled worlds. Outcomes of heads and
// tests are computed once per entity and world and cached.
class TrainingSet {
 public:
  TrainingSet(Program facts, const LearnParams& params);

  const KnowledgeBase& kb() const { return *kb_; }
  std::size_t n_worlds() const { return worlds_.size(); }
  bool deterministic() const { return deterministic_; }

  // Entities satisfying entity(E), in proof order.
  const std::vector<Term>& entities(const std::string& entity_pred);
  // Outcome per [entity * n_worlds + world]; nullopt when undefined.
  using Outcomes = std::vector<std::optional<Value>>;
  const Outcomes& head_outcomes(const std::string& attribute, const std::string& entity_pred);
  const Outcomes& test_outcomes(const Refinement& r, const std::string& entity_pred);

 private:
  std::unique_ptr<KnowledgeBase> kb_;
  struct World {
    PartialWorld w;
    Rng rng;
  };
  std::vector<World> worlds_;
  bool deterministic_ = true;
  std::map<std::string, std::vector<Term>> entities_;
  std::map<std::string, Outcomes> cache_;
};

struct DltNode;

struct DltBranch {
  enum class Kind : std::uint8_t { Value, Success, Fail };
  Kind kind = Kind::Fail;
  Value value;  // Value branches only
  std::unique_ptr<DltNode> node;
};

struct DltNode {
  std::optional<std::size_t> test;  // index into Dlt::tests when split
  std::vector<DltBranch> branches;
  std::optional<Leaf> leaf;           // absent for split nodes and empty branches
  bool prior = false;                 // fallback leaf of an attribute without examples
  std::vector<std::size_t> features;  // tests whose values feed the leaf model
  std::size_t n_examples = 0;         // distinct substitutions reaching the node
  double leaf_score = 0.0;            // score as a single clause
  double score = 0.0;                 // leaf_score, or the sum over branches
  double expected_ll = 0.0;
};

struct Dlt {
  std::string target;
  std::string entity;  // entity predicate of the head
  std::string type;    // entity type of the head
  AttrKind kind = AttrKind::Continuous;
  std::vector<Value> domain;
  std::vector<Refinement> tests;  // candidate tests; nodes refer to them by index
  std::unique_ptr<DltNode> root;

  std::size_t leaf_count(bool nonempty_only = true) const;
};

// Score of one clause: 2 E - k ln n.
double bic_score(double expected_ll, std::size_t n_params, std::size_t n_examples);

// Example rows of a node: (entity, world) pairs with positive proof weight.
struct ExampleRow {
  std::size_t entity = 0;
  std::size_t world = 0;
};

struct LeafFit {
  FitResult fit;
  std::size_t n_examples = 0;
  double score = 0.0;
};

// Fits one leaf on the rows with features taken from the given tests.
LeafFit fit_leaf(TrainingSet& data, const Dlt& tree, const std::vector<ExampleRow>& rows,
                 const std::vector<std::size_t>& feature_tests, const LearnParams& params);

// Score of splitting rows on test `t`: sum of branch scores, empty branches
// contributing zero. Fills the branch partitions when requested.
double score_refinement(TrainingSet& data, const Dlt& tree, std::size_t t,
                        const std::vector<ExampleRow>& rows,
                        const std::vector<std::size_t>& feature_tests, const LearnParams& params,
                        std::vector<std::vector<ExampleRow>>* partition = nullptr);

Dlt induce_dlt(const std::string& target, TrainingSet& data, const BiasSpec& bias,
               const LearnParams& params);

std::vector<Clause> dlt_to_clauses(const Dlt& tree);

struct JmpModel {
  Program program;
  std::vector<Dlt> trees;  // rank order
  std::string report() const;
};

// Training facts for a bundle: relational facts, observed attributes and
// the background clauses of the bias.
Program training_program(const TableBundle& data, const BiasSpec& bias);

JmpModel learn_jmp(const TableBundle& data, const BiasSpec& bias, const LearnParams& params);
JmpModel learn_jmp(const Program& facts, const BiasSpec& bias, const LearnParams& params);

// Learned rules applied to other tables: the tables' relational facts plus
// every rule of the program; ground facts stored in the program are dropped.
Program program_for_tables(const Program& learned, const TableBundle& tables);

// True when every test literal in the clause body matches a mode for its head.
bool bias_conform(const Clause& c, const BiasSpec& bias);

}  // namespace dcml
