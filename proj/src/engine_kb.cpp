#include <cmath>
#include <cstring>
#include <map>

#include "dcml/engine.hpp"

namespace dcml {

std::uint64_t pred_key(SymId functor, std::size_t arity) {
  return (static_cast<std::uint64_t>(functor) << 8) | static_cast<std::uint64_t>(arity & 0xff);
}

namespace {

struct Compiler {
  std::deque<CNode>& nodes;
  std::map<SymId, std::uint32_t> vars;

  const CNode* term(const Term& t) {
    CNode n;
    n.kind = t.kind;
    switch (t.kind) {
      case Term::Kind::Var: {
        auto [it, fresh] = vars.emplace(t.id, static_cast<std::uint32_t>(vars.size()));
        (void)fresh;
        n.id = it->second;
        break;
      }
      case Term::Kind::Sym: n.id = t.id; break;
      case Term::Kind::Num: n.num = t.num; break;
      case Term::Kind::Cmp:
        n.id = t.id;
        for (const auto& a : t.args) n.kids.push_back(term(a));
        break;
    }
    nodes.push_back(std::move(n));
    return &nodes.back();
  }

  static AggKind agg_kind(const std::string& name) {
    if (name == "avg") return AggKind::Avg;
    if (name == "sum") return AggKind::Sum;
    if (name == "max") return AggKind::Max;
    if (name == "min") return AggKind::Min;
    if (name == "mod") return AggKind::Mod;
    return AggKind::Count;
  }

  void conj(const Term& t, std::vector<CLit>& out) {
    if (t.is_cmp() && t.name() == ",") {
      for (const auto& a : t.args) conj(a, out);
    } else {
      out.push_back(literal(t));
    }
  }

  CLit literal(const Term& t) {
    CLit l;
    if (t.is_sym() && t.name() == "true") return l;
    if (t.is_var() || t.is_num()) fail(ErrorKind::Data, "not a callable literal: " + to_string(t));
    if (t.is_sym()) {
      l.kind = LitKind::Call;
      l.a = term(t);
      l.pred = pred_key(t.id, 0);
      return l;
    }
    const std::string& f = t.name();
    if (f == "~=" && t.arity() == 2) {
      l.kind = LitKind::Bind;
      l.a = term(t.args[0]);
      l.b = term(t.args[1]);
    } else if (f == "==" && t.arity() == 2) {
      l.kind = LitKind::Eq;
      l.a = term(t.args[0]);
      l.b = term(t.args[1]);
    } else if (f == "\\+" && t.arity() == 1) {
      l.kind = LitKind::Neg;
      conj(t.args[0], l.sub);
    } else if (f == ",") {
      l.kind = LitKind::Conj;
      for (const auto& a : t.args) conj(a, l.sub);
    } else if (t.arity() == 3 && is_aggregator_name(f)) {
      l.kind = LitKind::Aggr;
      l.agg = agg_kind(f);
      l.a = term(t.args[0]);
      conj(t.args[1], l.sub);
      l.b = term(t.args[2]);
    } else if (t.arity() == 3 && (f == "linear" || f == "logistic" || f == "softmax")) {
      l.kind = f == "linear" ? LitKind::Linear : f == "logistic" ? LitKind::Logistic : LitKind::Softmax;
      l.a = term(t.args[0]);
      l.b = term(t.args[1]);
      l.c = term(t.args[2]);
    } else {
      l.kind = LitKind::Call;
      l.a = term(t);
      l.pred = pred_key(t.id, t.arity());
    }
    return l;
  }
};

std::uint64_t head_key(const Term& h) {
  if (h.is_sym()) return pred_key(h.id, 0);
  if (h.is_cmp()) return pred_key(h.id, h.arity());
  fail(ErrorKind::Data, "invalid clause head: " + to_string(h));
}

void add_to_index(std::unordered_map<std::uint64_t, PredIndex>& index, std::uint64_t key,
                  const CNode* head, std::uint32_t clause) {
  PredIndex& p = index[key];
  std::size_t ar = head->kids.size();
  if (p.by_arg.size() < ar) {
    p.by_arg.resize(ar);
    p.wild.resize(ar);
  }
  p.all.push_back(clause);
  for (std::size_t i = 0; i < ar; ++i) {
    const CNode* a = head->kids[i];
    if (a->kind == Term::Kind::Sym)
      p.by_arg[i][a->id].push_back(clause);
    else
      p.wild[i].push_back(clause);
  }
}

// Relational atoms (top level of a clause body or of an enclosing aggregate /
// negation) that ground the value-binding atoms they scope over.
void collect_occurrences(const std::vector<CLit>& lits, std::vector<const CLit*> guard, std::size_t clause,
                         std::vector<RvOccurrence>& occ) {
  for (const auto& l : lits)
    if (l.kind == LitKind::Call) guard.push_back(&l);
  for (const auto& l : lits) {
    if (l.kind == LitKind::Bind) {
      const CNode* rv = l.a;
      if (rv->kind == Term::Kind::Sym || rv->kind == Term::Kind::Cmp)
        occ.push_back(RvOccurrence{clause, rv, guard});
    } else if (l.kind == LitKind::Neg || l.kind == LitKind::Conj || l.kind == LitKind::Aggr) {
      collect_occurrences(l.sub, guard, clause, occ);
    }
  }
}

void put_u32(std::string& out, std::uint32_t v) { out.append(reinterpret_cast<const char*>(&v), 4); }

void encode_term(const Term& t, std::string& out) {
  switch (t.kind) {
    case Term::Kind::Sym:
      out.push_back('S');
      put_u32(out, t.id);
      break;
    case Term::Kind::Num:
      out.push_back('N');
      out.append(reinterpret_cast<const char*>(&t.num), sizeof(double));
      break;
    case Term::Kind::Cmp:
      out.push_back('C');
      put_u32(out, t.id);
      out.push_back(static_cast<char>(t.args.size()));
      for (const auto& a : t.args) encode_term(a, out);
      break;
    case Term::Kind::Var: fail(ErrorKind::Data, "random variable is not ground: " + to_string(t));
  }
}

Term decode_at(const std::string& s, std::size_t& i) {
  char tag = s.at(i++);
  if (tag == 'S' || tag == 'C') {
    std::uint32_t id;
    std::memcpy(&id, s.data() + i, 4);
    i += 4;
    if (tag == 'S') return Term::sym(id);
    std::size_t n = static_cast<unsigned char>(s.at(i++));
    std::vector<Term> args;
    for (std::size_t k = 0; k < n; ++k) args.push_back(decode_at(s, i));
    return Term::compound(id, std::move(args));
  }
  double x;
  std::memcpy(&x, s.data() + i, sizeof(double));
  i += sizeof(double);
  return Term::number(x);
}

}  // namespace

std::string ground_key(const Term& t) {
  std::string out;
  encode_term(t, out);
  return out;
}

Term decode_key(const std::string& key) {
  std::size_t i = 0;
  return decode_at(key, i);
}

KnowledgeBase::KnowledgeBase(Program p) : program_(std::move(p)) {
  for (std::size_t ci = 0; ci < program_.clauses.size(); ++ci) {
    const Clause& c = program_.clauses[ci];
    Compiler comp{nodes_, {}};
    CClause cc;
    cc.source = ci;
    cc.head = comp.term(c.head);
    if (c.dist) cc.dist = comp.term(*c.dist);
    for (const auto& lit : c.body) comp.conj(lit, cc.body);
    cc.nvars = static_cast<std::uint32_t>(comp.vars.size());
    std::uint64_t key = head_key(c.head);
    if (c.kind == Clause::Kind::Distributional) {
      add_to_index(dc_index_, key, cc.head, static_cast<std::uint32_t>(dcs_.size()));
      dcs_.push_back(std::move(cc));
    } else {
      add_to_index(rel_index_, key, cc.head, static_cast<std::uint32_t>(rel_.size()));
      rel_.push_back(std::move(cc));
    }
  }
  occ_by_clause_.resize(dcs_.size());
  for (std::size_t i = 0; i < dcs_.size(); ++i) {
    collect_occurrences(dcs_[i].body, {}, i, occ_by_clause_[i]);
    for (std::size_t j = 0; j < occ_by_clause_[i].size(); ++j) {
      const CNode* rv = occ_by_clause_[i][j].rv;
      occ_[pred_key(rv->id, rv->kids.size())].emplace_back(static_cast<std::uint32_t>(i),
                                                           static_cast<std::uint32_t>(j));
    }
  }
}

const PredIndex* KnowledgeBase::rel_index(std::uint64_t key) const {
  auto it = rel_index_.find(key);
  return it == rel_index_.end() ? nullptr : &it->second;
}

const PredIndex* KnowledgeBase::dc_index(std::uint64_t key) const {
  auto it = dc_index_.find(key);
  return it == dc_index_.end() ? nullptr : &it->second;
}

const std::vector<std::pair<std::uint32_t, std::uint32_t>>* KnowledgeBase::occurrences(std::uint64_t key) const {
  auto it = occ_.find(key);
  return it == occ_.end() ? nullptr : &it->second;
}

CompiledGoal compile_goal(const std::vector<Term>& goal) {
  CompiledGoal g;
  Compiler comp{g.nodes, {}};
  for (const auto& lit : goal) comp.conj(lit, g.lits);
  g.nvars = static_cast<std::uint32_t>(comp.vars.size());
  for (auto [name, idx] : comp.vars) g.vars.emplace_back(name, idx);
  return g;
}

// ---------------------------------------------------------------- world

void PartialWorld::add_evidence(const EvidenceItem& e) {
  std::string key = ground_key(e.rv);
  if (evidence.insert_or_assign(key, e).second) evidence_order.push_back(std::move(key));
}

std::optional<Value> PartialWorld::value_of(const Term& rv) const {
  auto it = memo.find(ground_key(rv));
  if (it == memo.end() || !it->second.defined) return std::nullopt;
  return it->second.value;
}

double PartialWorld::evidence_weight() const { return std::exp(log_we); }

void PartialWorld::clear() {
  memo.clear();
  order.clear();
  derived.clear();
  evidence.clear();
  evidence_order.clear();
  log_we = 0.0;
  query_holds = false;
}

}  // namespace dcml
