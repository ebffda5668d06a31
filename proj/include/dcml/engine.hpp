#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <type_traits>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "dcml/distributions.hpp"
#include "dcml/syntax.hpp"

namespace dcml {

// ---------------------------------------------------------------- compiled form

struct CNode {
  Term::Kind kind = Term::Kind::Sym;
  std::uint32_t id = 0;  // local variable index, symbol, or functor
  double num = 0.0;
  std::vector<const CNode*> kids;
};

enum class LitKind : std::uint8_t { True, Call, Bind, Eq, Neg, Conj, Aggr, Linear, Logistic, Softmax };
enum class AggKind : std::uint8_t { Avg, Sum, Max, Min, Mod, Count };

struct CLit {
  LitKind kind = LitKind::True;
  AggKind agg = AggKind::Count;
  const CNode* a = nullptr;
  const CNode* b = nullptr;
  const CNode* c = nullptr;
  std::uint64_t pred = 0;
  std::vector<CLit> sub;
};

struct CClause {
  const CNode* head = nullptr;
  const CNode* dist = nullptr;  // distributional clauses only
  std::vector<CLit> body;
  std::uint32_t nvars = 0;
  std::size_t source = 0;  // index into Program::clauses
};

// An occurrence of a value-binding atom inside a distributional clause body,
// with the relational atoms that ground it.
struct RvOccurrence {
  std::size_t clause = 0;
  const CNode* rv = nullptr;
  std::vector<const CLit*> guard;
};

struct PredIndex {
  std::vector<std::uint32_t> all;
  std::vector<std::unordered_map<SymId, std::vector<std::uint32_t>>> by_arg;
  std::vector<std::vector<std::uint32_t>> wild;  // clauses not indexable on that arg
};

class KnowledgeBase {
 public:
  explicit KnowledgeBase(Program p);
  const Program& program() const { return program_; }
  const std::vector<CClause>& relational() const { return rel_; }
  const std::vector<CClause>& distributional() const { return dcs_; }
  const PredIndex* rel_index(std::uint64_t key) const;
  const PredIndex* dc_index(std::uint64_t key) const;
  // (clause, occurrence) pairs reading the given attribute
  const std::vector<std::pair<std::uint32_t, std::uint32_t>>* occurrences(std::uint64_t key) const;
  const std::vector<RvOccurrence>& clause_occurrences(std::size_t dc) const { return occ_by_clause_[dc]; }

 private:
  Program program_;
  std::deque<CNode> nodes_;
  std::vector<CClause> rel_, dcs_;
  std::unordered_map<std::uint64_t, PredIndex> rel_index_, dc_index_;
  std::vector<std::vector<RvOccurrence>> occ_by_clause_;
  std::unordered_map<std::uint64_t, std::vector<std::pair<std::uint32_t, std::uint32_t>>> occ_;
};

std::uint64_t pred_key(SymId functor, std::size_t arity);

// Goal compiled outside a knowledge base (queries).
struct CompiledGoal {
  std::deque<CNode> nodes;
  std::vector<CLit> lits;
  std::uint32_t nvars = 0;
  std::vector<std::pair<SymId, std::uint32_t>> vars;  // name -> local index
};
CompiledGoal compile_goal(const std::vector<Term>& goal);

// Compact byte key of a ground term; decode_key inverts it.
std::string ground_key(const Term& t);
Term decode_key(const std::string& key);

// ---------------------------------------------------------------- worlds

struct EvidenceItem {
  Term rv;
  Value value;
  bool interventional = false;  // value fixed without weighting
};

struct PartialWorld {
  struct Entry {
    bool defined = false;
    Value value;
    long clause = -1;  // defining distributional clause, -1 if none or fixed
    bool evidence = false;
    bool pending = false;  // evidence weight not yet applied (seen under negation)
    double pending_logw = 0.0;
    bool in_progress = false;
    bool continuous = false;  // drawn from a continuous distribution
  };
  std::unordered_map<std::string, Entry> memo;
  std::vector<std::string> order;  // keys in the order they were assigned
  std::unordered_set<std::string> derived;  // ground atoms from forward chaining
  std::unordered_map<std::string, EvidenceItem> evidence;
  std::vector<std::string> evidence_order;
  double log_we = 0.0;  // log evidence weight
  bool query_holds = false;

  void add_evidence(const EvidenceItem& e);
  std::optional<Value> value_of(const Term& rv) const;
  double evidence_weight() const;
  void clear();
};

// ---------------------------------------------------------------- prover

struct ProveOptions {
  bool strict = true;   // detect two clauses defining one random variable
  bool lazy = true;     // sample undefined random variables on demand
  std::size_t max_depth = 20000;
};

// Non-owning callable reference; avoids std::function allocations in the solver.
class FnRef {
 public:
  template <class F, class = std::enable_if_t<!std::is_same_v<std::decay_t<F>, FnRef>>>
  FnRef(F&& f) : obj_(const_cast<void*>(static_cast<const void*>(&f))),
                 cb_([](void* o) -> bool { return (*static_cast<std::remove_reference_t<F>*>(o))(); }) {}
  bool operator()() const { return cb_(obj_); }

 private:
  void* obj_;
  bool (*cb_)(void*);
};

class Prover {
 public:
  Prover(const KnowledgeBase& kb, PartialWorld& world, Rng& rng, ProveOptions opt = {});

  // First solution of a goal; fills answer with bindings of the goal's variables.
  bool prove(const std::vector<Term>& goal, Substitution* answer = nullptr);
  bool prove(const CompiledGoal& goal, Substitution* answer = nullptr);
  // Enumerate all solutions; callback returns true to stop.
  void solutions(const CompiledGoal& goal, const std::function<bool(const Substitution&)>& on);

  // Value of a ground random variable in this world, sampling lazily.
  std::optional<Value> rv_value(const Term& rv);
  // Distribution the program assigns to rv in this world, if any.
  std::optional<Distribution> rv_distribution(const Term& rv);
  // Apply every evidence item (interventional first) to the world weight.
  void apply_evidence();

  // Forward chaining support: fire all clauses once.
  bool forward_round();

  struct Ref {
    const CNode* n = nullptr;
    std::uint32_t env = 0;
  };

 private:
  struct Goal {
    const CLit* lit;
    std::uint32_t env;
    const Goal* next;
  };
  using Cont = FnRef;

  Ref deref(Ref r) const;
  bool unify(Ref a, Ref b);
  bool occurs(std::uint32_t slot, Ref t) const;
  void bind(std::uint32_t slot, Ref t);
  void undo(std::size_t mark);
  std::uint32_t alloc(std::uint32_t n);
  void release(std::uint32_t base);
  void encode(Ref r, std::string& out) const;
  Term to_term(Ref r) const;
  std::optional<Value> to_value(Ref r) const;
  double number_at(Ref r, const char* what) const;
  const CNode* value_node(const Value& v);
  const CNode* arena_term(const Term& t);
  bool try_encode(Ref r, std::string& out) const;
  bool equal(Ref a, Ref b) const;

  bool solve(const Goal* g, Cont k);
  bool solve_list(const std::vector<CLit>& lits, std::uint32_t env, const Goal* tail, Cont k);
  bool solve_ptrs(const std::vector<const CLit*>& lits, std::size_t i, std::uint32_t env, Cont k);
  bool call(const CLit& l, std::uint32_t env, const Goal* next, Cont k);
  bool stat_model(const CLit& l, std::uint32_t env, const Goal* next, Cont k);
  std::optional<Value> rv_value(Ref rv);
  std::optional<Value> rv_value_key(const std::string& key, Ref rv);
  std::optional<Distribution> define(Ref rv, long* clause);
  Distribution eval_dist(Ref d) const;
  const std::vector<std::uint32_t>* candidates(const PredIndex& idx, Ref goal,
                                               std::vector<std::uint32_t>& scratch) const;

  const KnowledgeBase& kb_;
  PartialWorld& world_;
  Rng& rng_;
  ProveOptions opt_;
  std::vector<Ref> bind_;
  std::vector<std::uint32_t> trail_;
  std::deque<CNode> arena_;
  int neg_depth_ = 0;
  std::size_t depth_ = 0;
  const char* stack_base_ = nullptr;

  friend class DependencyGraph;
  friend std::optional<Value> eval_aggregate(const Term&, PartialWorld&, const KnowledgeBase&, Rng&);
};

std::optional<Value> aggregate_values(AggKind kind, const std::vector<Value>& values);

// ---------------------------------------------------------------- operations

PartialWorld forward_sample_world(const KnowledgeBase& kb, Rng& rng, int max_rounds = 1000,
                                  const std::vector<EvidenceItem>& forced = {});
PartialWorld forward_sample_world(const Program& p, Rng& rng, int max_rounds = 1000,
                                  const std::vector<EvidenceItem>& forced = {});

bool prove(const std::vector<Term>& goal, PartialWorld& world, const KnowledgeBase& kb, Rng& rng,
           Substitution* answer = nullptr);

std::optional<Value> eval_aggregate(const Term& agg, PartialWorld& world, const KnowledgeBase& kb, Rng& rng);

struct ProofRecord {
  std::vector<double> features;  // bindings of the requested variables (NaN if unbound)
  std::optional<Value> head_value;
  double weight = 0.0;
};

// N independent proofs of ?- h ~= H, body (after theta); Eq.-3 weights.
std::vector<ProofRecord> sample_weighted_proofs(const Term& head, const std::vector<Term>& body,
                                                const Substitution& theta, const KnowledgeBase& kb,
                                                std::size_t n, std::uint64_t seed,
                                                const std::vector<Term>& feature_vars = {},
                                                const std::vector<EvidenceItem>& evidence = {});

struct EstimateOptions {
  std::size_t n_samples = 1000;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  bool strict = true;
};

struct Estimate {
  double probability = 0.0;          // boolean queries
  std::vector<std::pair<Value, double>> labels;  // discrete predictive distribution
  bool continuous = false;
  double mean = 0.0, variance = 0.0;  // continuous predictive distribution
  double defined_mass = 0.0;          // weighted fraction of samples where the variable exists
  std::size_t n_samples = 0;
  double effective_evidence_weight = 0.0;  // Kish effective sample size

  // most probable label, or the mean for continuous variables
  std::optional<Value> mode() const;
};

Estimate estimate_conditional(const KnowledgeBase& kb, const std::vector<Term>& query,
                              const std::vector<EvidenceItem>& evidence, const EstimateOptions& opt);
Estimate estimate_predictive(const KnowledgeBase& kb, const Term& rv,
                             const std::vector<EvidenceItem>& evidence, const EstimateOptions& opt);
// log p(rv = x | evidence); continuous variables give a log density.
double estimate_log_prob(const KnowledgeBase& kb, const Term& rv, const Value& x,
                         const std::vector<EvidenceItem>& evidence, const EstimateOptions& opt);

// ---------------------------------------------------------------- relevance

// Ground parent/child edges between random variables, built lazily from the
// clause bodies (value bindings and aggregation inner goals).
class DependencyGraph {
 public:
  explicit DependencyGraph(const KnowledgeBase& kb);
  const std::vector<std::string>& parents(const std::string& key);
  const std::vector<std::string>& children(const std::string& key);

 private:
  const KnowledgeBase& kb_;
  std::unordered_map<std::string, std::vector<std::string>> parents_, children_;
};

struct RelevantEvidence {
  std::vector<EvidenceItem> observational;   // needs the variable's own distribution
  std::vector<EvidenceItem> interventional;  // only its value matters
  std::vector<EvidenceItem> all() const;
};

RelevantEvidence relevant_evidence(DependencyGraph& g, const std::vector<Term>& query_rvs,
                                   const std::vector<EvidenceItem>& evidence);
RelevantEvidence relevant_evidence(const Term& query_rv, const std::vector<EvidenceItem>& evidence,
                                   const KnowledgeBase& kb);

}  // namespace dcml
