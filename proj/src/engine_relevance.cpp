#include <deque>
#include <unordered_set>

#include "dcml/engine.hpp"

namespace dcml {

namespace {

// Shared empty world for relational-only proofs.
struct RelationalProver {
  PartialWorld world;
  Rng rng{0};
  Prover prover;
  explicit RelationalProver(const KnowledgeBase& kb) : prover(kb, world, rng, ProveOptions{false, false, 20000}) {}
};

}  // namespace

DependencyGraph::DependencyGraph(const KnowledgeBase& kb) : kb_(kb) {}

const std::vector<std::string>& DependencyGraph::parents(const std::string& key) {
  auto it = parents_.find(key);
  if (it != parents_.end()) return it->second;
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  Term rv = decode_key(key);
  RelationalProver rp(kb_);
  Prover& p = rp.prover;
  Prover::Ref target{p.arena_term(rv), 0};
  const PredIndex* idx = kb_.dc_index(pred_key(rv.id, rv.arity()));
  if (idx) {
    for (std::uint32_t ci : idx->all) {
      const CClause& c = kb_.distributional()[ci];
      for (const RvOccurrence& o : kb_.clause_occurrences(ci)) {
        std::uint32_t base = p.alloc(c.nvars);
        std::size_t mark = p.trail_.size();
        if (p.unify(Prover::Ref{c.head, base}, target)) {
          p.solve_ptrs(o.guard, 0, base, [&] {
            std::string k;
            if (p.try_encode(Prover::Ref{o.rv, base}, k) && seen.insert(k).second) out.push_back(std::move(k));
            return false;
          });
        }
        p.undo(mark);
        p.release(base);
      }
    }
  }
  return parents_.emplace(key, std::move(out)).first->second;
}

const std::vector<std::string>& DependencyGraph::children(const std::string& key) {
  auto it = children_.find(key);
  if (it != children_.end()) return it->second;
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  Term rv = decode_key(key);
  RelationalProver rp(kb_);
  Prover& p = rp.prover;
  Prover::Ref target{p.arena_term(rv), 0};
  if (const auto* occ = kb_.occurrences(pred_key(rv.id, rv.arity()))) {
    for (auto [ci, oi] : *occ) {
      const CClause& c = kb_.distributional()[ci];
      const RvOccurrence& o = kb_.clause_occurrences(ci)[oi];
      std::uint32_t base = p.alloc(c.nvars);
      std::size_t mark = p.trail_.size();
      if (p.unify(Prover::Ref{o.rv, base}, target)) {
        p.solve_ptrs(o.guard, 0, base, [&] {
          std::string k;
          if (p.try_encode(Prover::Ref{c.head, base}, k) && seen.insert(k).second) out.push_back(std::move(k));
          return false;
        });
      }
      p.undo(mark);
      p.release(base);
    }
  }
  return children_.emplace(key, std::move(out)).first->second;
}

std::vector<EvidenceItem> RelevantEvidence::all() const {
  std::vector<EvidenceItem> out = interventional;
  out.insert(out.end(), observational.begin(), observational.end());
  return out;
}

// Bayes-ball: a ball passed from a child may go up through unobserved nodes and
// bounce down; from a parent it passes down through unobserved nodes and
// bounces back up off observed ones.
RelevantEvidence relevant_evidence(DependencyGraph& g, const std::vector<Term>& query_rvs,
                                   const std::vector<EvidenceItem>& evidence) {
  std::unordered_map<std::string, std::size_t> observed;
  for (std::size_t i = 0; i < evidence.size(); ++i) observed[ground_key(evidence[i].rv)] = i;
  struct Mark {
    bool visited = false, top = false, bottom = false;
  };
  std::unordered_map<std::string, Mark> marks;
  std::deque<std::pair<std::string, bool>> schedule;  // (node, arrived from a child)
  for (const auto& q : query_rvs) schedule.emplace_back(ground_key(q), true);
  while (!schedule.empty()) {
    auto [node, from_child] = schedule.front();
    schedule.pop_front();
    Mark& m = marks[node];
    m.visited = true;
    bool obs = observed.count(node) > 0;
    if (from_child && !obs) {
      if (!m.top) {
        m.top = true;
        for (const auto& p : g.parents(node)) schedule.emplace_back(p, true);
      }
      if (!marks[node].bottom) {
        marks[node].bottom = true;
        for (const auto& c : g.children(node)) schedule.emplace_back(c, false);
      }
    } else if (!from_child) {
      if (obs) {
        if (!m.top) {
          m.top = true;
          for (const auto& p : g.parents(node)) schedule.emplace_back(p, true);
        }
      } else if (!m.bottom) {
        m.bottom = true;
        for (const auto& c : g.children(node)) schedule.emplace_back(c, false);
      }
    }
  }
  RelevantEvidence out;
  for (const auto& e : evidence) {
    auto it = marks.find(ground_key(e.rv));
    if (it == marks.end() || !it->second.visited) continue;
    EvidenceItem item = e;
    if (it->second.top && !e.interventional) {
      out.observational.push_back(item);
    } else {
      item.interventional = true;
      out.interventional.push_back(item);
    }
  }
  return out;
}

RelevantEvidence relevant_evidence(const Term& query_rv, const std::vector<EvidenceItem>& evidence,
                                   const KnowledgeBase& kb) {
  DependencyGraph g(kb);
  return relevant_evidence(g, {query_rv}, evidence);
}

}  // namespace dcml
