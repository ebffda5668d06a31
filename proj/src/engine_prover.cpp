#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>

#include "dcml/engine.hpp"

namespace dcml {

namespace {

const SymId kList = intern("[]");
const SymId kColon = intern(":");
const SymId kVal = intern("val");
const SymId kGaussian = intern("gaussian");
const SymId kDiscrete = intern("discrete");

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Deep recursion is cut off both by proof depth and by the native stack used,
// so runaway programs fail cleanly instead of overflowing the thread's stack.
constexpr std::ptrdiff_t kStackBudget = 3 << 20;

struct DepthGuard {
  std::size_t& d;
  DepthGuard(std::size_t& depth, std::size_t limit, const char* stack_base) : d(depth) {
    char here;
    if (++d > limit || std::abs(stack_base - &here) > kStackBudget) {
      --d;
      fail(ErrorKind::NonTermination, "proof depth limit exceeded");
    }
  }
  ~DepthGuard() { --d; }
};

bool has_neg_or_aggr(const std::vector<CLit>& lits) {
  for (const auto& l : lits) {
    if (l.kind == LitKind::Neg || l.kind == LitKind::Aggr) return true;
    if (l.kind == LitKind::Conj && has_neg_or_aggr(l.sub)) return true;
  }
  return false;
}

std::string clause_where(const KnowledgeBase& kb, const CClause& c) {
  const SourceLoc& loc = kb.program().clauses[c.source].loc;
  return loc.file + ":" + std::to_string(loc.line);
}

}  // namespace

std::optional<Value> aggregate_values(AggKind kind, const std::vector<Value>& values) {
  if (values.empty()) return std::nullopt;
  if (kind == AggKind::Count) return Value::number(static_cast<double>(values.size()));
  if (kind == AggKind::Mod) {
    std::map<std::string, std::pair<std::size_t, Value>> counts;
    for (const auto& v : values) {
      auto& e = counts[v.str()];
      ++e.first;
      e.second = v;
    }
    const std::pair<std::size_t, Value>* best = nullptr;
    for (const auto& [text, e] : counts)  // ties go to the lexicographically smallest label
      if (!best || e.first > best->first) best = &e;
    return best->second;
  }
  double acc = 0.0;
  bool first = true;
  for (const auto& v : values) {
    if (!v.is_num()) fail(ErrorKind::TypeMismatch, "numeric aggregate over label " + v.str());
    switch (kind) {
      case AggKind::Max: acc = first ? v.num : std::max(acc, v.num); break;
      case AggKind::Min: acc = first ? v.num : std::min(acc, v.num); break;
      default: acc += v.num;
    }
    first = false;
  }
  if (kind == AggKind::Avg) acc /= static_cast<double>(values.size());
  return Value::number(acc);
}

Prover::Prover(const KnowledgeBase& kb, PartialWorld& world, Rng& rng, ProveOptions opt)
    : kb_(kb), world_(world), rng_(rng), opt_(opt) {
  char probe;
  stack_base_ = &probe;
  bind_.reserve(256);
  trail_.reserve(256);
}

// ---------------------------------------------------------------- terms

Prover::Ref Prover::deref(Ref r) const {
  while (r.n->kind == Term::Kind::Var) {
    const Ref& b = bind_[r.env + r.n->id];
    if (!b.n) return r;
    r = b;
  }
  return r;
}

void Prover::bind(std::uint32_t slot, Ref t) {
  bind_[slot] = t;
  trail_.push_back(slot);
}

void Prover::undo(std::size_t mark) {
  while (trail_.size() > mark) {
    bind_[trail_.back()] = Ref{};
    trail_.pop_back();
  }
}

std::uint32_t Prover::alloc(std::uint32_t n) {
  auto base = static_cast<std::uint32_t>(bind_.size());
  bind_.resize(bind_.size() + n);
  return base;
}

void Prover::release(std::uint32_t base) { bind_.resize(base); }

bool Prover::occurs(std::uint32_t slot, Ref t) const {
  t = deref(t);
  if (t.n->kind == Term::Kind::Var) return t.env + t.n->id == slot;
  if (t.n->kind != Term::Kind::Cmp) return false;
  for (const CNode* k : t.n->kids)
    if (occurs(slot, Ref{k, t.env})) return true;
  return false;
}

bool Prover::unify(Ref a, Ref b) {
  a = deref(a);
  b = deref(b);
  bool av = a.n->kind == Term::Kind::Var, bv = b.n->kind == Term::Kind::Var;
  if (av && bv) {
    std::uint32_t sa = a.env + a.n->id, sb = b.env + b.n->id;
    if (sa != sb) bind(sa, b);
    return true;
  }
  if (av) {
    std::uint32_t s = a.env + a.n->id;
    if (occurs(s, b)) return false;
    bind(s, b);
    return true;
  }
  if (bv) {
    std::uint32_t s = b.env + b.n->id;
    if (occurs(s, a)) return false;
    bind(s, a);
    return true;
  }
  if (a.n->kind != b.n->kind) return false;
  switch (a.n->kind) {
    case Term::Kind::Sym: return a.n->id == b.n->id;
    case Term::Kind::Num: return a.n->num == b.n->num;
    default: break;
  }
  if (a.n->id != b.n->id || a.n->kids.size() != b.n->kids.size()) return false;
  for (std::size_t i = 0; i < a.n->kids.size(); ++i)
    if (!unify(Ref{a.n->kids[i], a.env}, Ref{b.n->kids[i], b.env})) return false;
  return true;
}

bool Prover::equal(Ref a, Ref b) const {
  a = deref(a);
  b = deref(b);
  if (a.n->kind == Term::Kind::Var || b.n->kind == Term::Kind::Var) return false;
  if (a.n->kind != b.n->kind) return false;
  if (a.n->kind == Term::Kind::Num) return a.n->num == b.n->num;
  if (a.n->id != b.n->id) return false;
  if (a.n->kind == Term::Kind::Sym) return true;
  if (a.n->kids.size() != b.n->kids.size()) return false;
  for (std::size_t i = 0; i < a.n->kids.size(); ++i)
    if (!equal(Ref{a.n->kids[i], a.env}, Ref{b.n->kids[i], b.env})) return false;
  return true;
}

bool Prover::try_encode(Ref r, std::string& out) const {
  r = deref(r);
  switch (r.n->kind) {
    case Term::Kind::Var: return false;
    case Term::Kind::Sym:
      out.push_back('S');
      out.append(reinterpret_cast<const char*>(&r.n->id), 4);
      return true;
    case Term::Kind::Num:
      out.push_back('N');
      out.append(reinterpret_cast<const char*>(&r.n->num), sizeof(double));
      return true;
    case Term::Kind::Cmp:
      out.push_back('C');
      out.append(reinterpret_cast<const char*>(&r.n->id), 4);
      out.push_back(static_cast<char>(r.n->kids.size()));
      for (const CNode* k : r.n->kids)
        if (!try_encode(Ref{k, r.env}, out)) return false;
      return true;
  }
  return false;
}

void Prover::encode(Ref r, std::string& out) const {
  if (!try_encode(r, out)) fail(ErrorKind::Data, "random variable is not ground: " + to_string(to_term(r)));
}

Term Prover::to_term(Ref r) const {
  r = deref(r);
  switch (r.n->kind) {
    case Term::Kind::Var: return Term::var("_U" + std::to_string(r.env + r.n->id));
    case Term::Kind::Sym: return Term::sym(r.n->id);
    case Term::Kind::Num: return Term::number(r.n->num);
    case Term::Kind::Cmp: break;
  }
  std::vector<Term> args;
  args.reserve(r.n->kids.size());
  for (const CNode* k : r.n->kids) args.push_back(to_term(Ref{k, r.env}));
  return Term::compound(r.n->id, std::move(args));
}

std::optional<Value> Prover::to_value(Ref r) const {
  r = deref(r);
  if (r.n->kind == Term::Kind::Num) return Value::number(r.n->num);
  if (r.n->kind == Term::Kind::Sym) return Value::symbol(r.n->id);
  return std::nullopt;
}

double Prover::number_at(Ref r, const char* what) const {
  r = deref(r);
  if (r.n->kind == Term::Kind::Num) return r.n->num;
  if (r.n->kind == Term::Kind::Var) fail(ErrorKind::Data, std::string("unbound ") + what);
  fail(ErrorKind::TypeMismatch, std::string(what) + " is not a number: " + to_string(to_term(r)));
}

const CNode* Prover::value_node(const Value& v) {
  CNode n;
  if (v.is_num()) {
    n.kind = Term::Kind::Num;
    n.num = v.num;
  } else {
    n.kind = Term::Kind::Sym;
    n.id = v.sym;
  }
  arena_.push_back(std::move(n));
  return &arena_.back();
}

const CNode* Prover::arena_term(const Term& t) {
  CNode n;
  n.kind = t.kind;
  switch (t.kind) {
    case Term::Kind::Var: fail(ErrorKind::Data, "expected a ground term: " + to_string(t));
    case Term::Kind::Num: n.num = t.num; break;
    case Term::Kind::Sym: n.id = t.id; break;
    case Term::Kind::Cmp:
      n.id = t.id;
      for (const auto& a : t.args) n.kids.push_back(arena_term(a));
      break;
  }
  arena_.push_back(std::move(n));
  return &arena_.back();
}

// ---------------------------------------------------------------- solving

const std::vector<std::uint32_t>* Prover::candidates(const PredIndex& idx, Ref goal,
                                                     std::vector<std::uint32_t>& scratch) const {
  static const std::vector<std::uint32_t> kNone;
  goal = deref(goal);
  const std::vector<std::uint32_t>* best = &idx.all;
  std::size_t best_arg = SIZE_MAX;
  std::size_t best_size = idx.all.size();
  for (std::size_t i = 0; i < goal.n->kids.size() && i < idx.by_arg.size(); ++i) {
    Ref a = deref(Ref{goal.n->kids[i], goal.env});
    if (a.n->kind != Term::Kind::Sym) continue;
    auto it = idx.by_arg[i].find(a.n->id);
    const std::vector<std::uint32_t>* hit = it == idx.by_arg[i].end() ? &kNone : &it->second;
    std::size_t size = hit->size() + idx.wild[i].size();
    if (size < best_size || best_arg == SIZE_MAX) {
      if (size <= best_size) {
        best = hit;
        best_arg = i;
        best_size = size;
      }
    }
  }
  if (best_arg == SIZE_MAX || idx.wild[best_arg].empty()) return best;
  scratch.clear();
  std::merge(best->begin(), best->end(), idx.wild[best_arg].begin(), idx.wild[best_arg].end(),
             std::back_inserter(scratch));
  return &scratch;
}

bool Prover::solve_list(const std::vector<CLit>& lits, std::uint32_t env, const Goal* tail, Cont k) {
  if (lits.empty()) return tail ? solve(tail, k) : k();
  if (lits.size() <= 8) {
    Goal chain[8];
    for (std::size_t i = lits.size(); i-- > 0;)
      chain[i] = Goal{&lits[i], env, i + 1 < lits.size() ? &chain[i + 1] : tail};
    return solve(&chain[0], k);
  }
  std::vector<Goal> chain(lits.size());
  for (std::size_t i = lits.size(); i-- > 0;)
    chain[i] = Goal{&lits[i], env, i + 1 < lits.size() ? &chain[i + 1] : tail};
  return solve(&chain[0], k);
}

bool Prover::solve_ptrs(const std::vector<const CLit*>& lits, std::size_t i, std::uint32_t env, Cont k) {
  if (i == lits.size()) return k();
  Goal g{lits[i], env, nullptr};
  return solve(&g, [&] { return solve_ptrs(lits, i + 1, env, k); });
}

bool Prover::call(const CLit& l, std::uint32_t env, const Goal* next, Cont k) {
  const PredIndex* idx = kb_.rel_index(l.pred);
  if (!idx) return false;
  Ref goal{l.a, env};
  std::vector<std::uint32_t> scratch;
  const std::vector<std::uint32_t>* cands = candidates(*idx, goal, scratch);
  for (std::uint32_t ci : *cands) {
    const CClause& c = kb_.relational()[ci];
    std::uint32_t base = alloc(c.nvars);
    std::size_t mark = trail_.size();
    bool stop = false;
    if (unify(Ref{c.head, base}, goal)) {
      if (c.body.empty())
        stop = next ? solve(next, k) : k();
      else
        stop = solve_list(c.body, base, next, k);
    }
    undo(mark);
    release(base);
    if (stop) return true;
  }
  return false;
}

bool Prover::stat_model(const CLit& l, std::uint32_t env, const Goal* next, Cont k) {
  Ref in = deref(Ref{l.a, env});
  if (in.n->kind != Term::Kind::Cmp || in.n->id != kList) fail(ErrorKind::Data, "model inputs must be a list");
  std::vector<double> x;
  for (const CNode* c : in.n->kids) x.push_back(number_at(Ref{c, in.env}, "model input"));
  Ref w = deref(Ref{l.b, env});
  if (w.n->kind != Term::Kind::Cmp || w.n->id != kList) fail(ErrorKind::Data, "model weights must be a list");
  auto numbers = [&](Ref list) {
    list = deref(list);
    if (list.n->kind != Term::Kind::Cmp || list.n->id != kList) fail(ErrorKind::Data, "weight row must be a list");
    std::vector<double> v;
    for (const CNode* c : list.n->kids) v.push_back(number_at(Ref{c, list.env}, "model weight"));
    return v;
  };
  StatModel model;
  if (l.kind == LitKind::Linear) {
    model = Linear{numbers(w)};
  } else if (l.kind == LitKind::Logistic) {
    model = Logistic{numbers(w)};
  } else {
    Softmax s;
    for (const CNode* c : w.n->kids) s.rows.push_back(numbers(Ref{c, w.env}));
    model = s;
  }
  std::vector<double> y = eval_stat_model(model, x);
  std::size_t mark = trail_.size();
  bool ok = true;
  if (l.kind == LitKind::Linear) {
    ok = unify(Ref{l.c, env}, Ref{value_node(Value::number(y[0])), 0});
  } else {
    Ref out = deref(Ref{l.c, env});
    if (out.n->kind != Term::Kind::Cmp || out.n->id != kList || out.n->kids.size() != y.size())
      fail(ErrorKind::ArityMismatch, "model output list must have " + std::to_string(y.size()) + " entries");
    for (std::size_t i = 0; ok && i < y.size(); ++i)
      ok = unify(Ref{out.n->kids[i], out.env}, Ref{value_node(Value::number(y[i])), 0});
  }
  bool stop = ok && (next ? solve(next, k) : k());
  undo(mark);
  return stop;
}

bool Prover::solve(const Goal* g, Cont k) {
  if (!g) return k();
  DepthGuard guard(depth_, opt_.max_depth, stack_base_);
  const CLit& l = *g->lit;
  std::uint32_t env = g->env;
  auto next = [&] { return g->next ? solve(g->next, k) : k(); };
  switch (l.kind) {
    case LitKind::True: return next();
    case LitKind::Call: return call(l, env, g->next, k);
    case LitKind::Conj: return solve_list(l.sub, env, g->next, k);
    case LitKind::Bind: {
      auto v = rv_value(Ref{l.a, env});
      if (!v) return false;
      std::size_t mark = trail_.size();
      bool stop = unify(Ref{l.b, env}, Ref{value_node(*v), 0}) && next();
      undo(mark);
      return stop;
    }
    case LitKind::Eq: return equal(Ref{l.a, env}, Ref{l.b, env}) && next();
    case LitKind::Neg: {
      ++neg_depth_;
      bool found = solve_list(l.sub, env, nullptr, [] { return true; });
      --neg_depth_;
      return !found && next();
    }
    case LitKind::Aggr: {
      std::vector<Value> values;
      solve_list(l.sub, env, nullptr, [&] {
        auto v = to_value(Ref{l.a, env});
        if (!v) fail(ErrorKind::Data, "aggregate target is not bound to a value");
        values.push_back(*v);
        return false;
      });
      auto r = aggregate_values(l.agg, values);
      if (!r) return false;
      std::size_t mark = trail_.size();
      bool stop = unify(Ref{l.b, env}, Ref{value_node(*r), 0}) && next();
      undo(mark);
      return stop;
    }
    case LitKind::Linear:
    case LitKind::Logistic:
    case LitKind::Softmax: return stat_model(l, env, g->next, k);
  }
  return false;
}

// ---------------------------------------------------------------- random variables

Distribution Prover::eval_dist(Ref d) const {
  d = deref(d);
  if (d.n->kind == Term::Kind::Cmp) {
    const auto& kids = d.n->kids;
    if (d.n->id == kVal && kids.size() == 1) {
      auto v = to_value(Ref{kids[0], d.env});
      if (!v) fail(ErrorKind::Data, "val/1 needs a bound value");
      return ValDist{*v};
    }
    if (d.n->id == kGaussian && kids.size() == 2)
      return make_gaussian(number_at(Ref{kids[0], d.env}, "gaussian mean"),
                           number_at(Ref{kids[1], d.env}, "gaussian variance"));
    if (d.n->id == kDiscrete && !kids.empty()) {
      std::vector<Ref> items;
      Ref first = deref(Ref{kids[0], d.env});
      if (kids.size() == 1 && first.n->kind == Term::Kind::Cmp && first.n->id == kList) {
        for (const CNode* c : first.n->kids) items.push_back(Ref{c, first.env});
      } else {
        for (const CNode* c : kids) items.push_back(Ref{c, d.env});
      }
      std::vector<Value> labels;
      std::vector<double> probs;
      for (Ref it : items) {
        it = deref(it);
        if (it.n->kind != Term::Kind::Cmp || it.n->id != kColon || it.n->kids.size() != 2)
          fail(ErrorKind::Data, "discrete entries must be Prob:Label");
        probs.push_back(number_at(Ref{it.n->kids[0], it.env}, "probability"));
        auto lab = to_value(Ref{it.n->kids[1], it.env});
        if (!lab) fail(ErrorKind::Data, "discrete label must be a constant");
        labels.push_back(*lab);
      }
      return make_discrete(std::move(labels), std::move(probs));
    }
  }
  fail(ErrorKind::Data, "unknown distribution " + to_string(to_term(d)));
}

std::optional<Distribution> Prover::define(Ref rv, long* clause) {
  rv = deref(rv);
  const PredIndex* idx = kb_.dc_index(pred_key(rv.n->id, rv.n->kids.size()));
  *clause = -1;
  if (!idx) return std::nullopt;
  std::vector<std::uint32_t> scratch;
  std::vector<std::uint32_t> cands = *candidates(*idx, rv, scratch);
  std::optional<Distribution> found;
  long found_clause = -1;
  for (std::uint32_t ci : cands) {
    const CClause& c = kb_.distributional()[ci];
    std::uint32_t base = alloc(c.nvars);
    std::size_t mark = trail_.size();
    if (unify(Ref{c.head, base}, rv)) {
      solve_list(c.body, base, nullptr, [&] {
        Distribution d = eval_dist(Ref{c.dist, base});
        if (found && found_clause != static_cast<long>(ci))
          fail(ErrorKind::ConflictingDefinition,
               to_string(to_term(rv)) + " is defined by clauses at " +
                   clause_where(kb_, kb_.distributional()[found_clause]) + " and " + clause_where(kb_, c));
        found = std::move(d);
        found_clause = static_cast<long>(ci);
        return true;
      });
    }
    undo(mark);
    release(base);
    if (found && !opt_.strict) break;
  }
  *clause = found_clause;
  return found;
}

std::optional<Value> Prover::rv_value(Ref rv) {
  std::string key;
  encode(rv, key);
  return rv_value_key(key, rv);
}

std::optional<Value> Prover::rv_value_key(const std::string& key, Ref rv) {
  auto it = world_.memo.find(key);
  if (it != world_.memo.end()) {
    PartialWorld::Entry& e = it->second;
    if (e.in_progress) fail(ErrorKind::NonTermination, "cyclic dependency on " + to_string(to_term(rv)));
    if (e.pending && neg_depth_ == 0) {
      world_.log_we += e.pending_logw;
      e.pending = false;
    }
    if (!e.defined) return std::nullopt;
    return e.value;
  }
  if (!opt_.lazy) return std::nullopt;
  auto ev = world_.evidence.find(key);
  if (ev != world_.evidence.end() && ev->second.interventional) {
    PartialWorld::Entry& e = world_.memo[key];
    e.defined = true;
    e.value = ev->second.value;
    e.evidence = true;
    world_.order.push_back(key);
    return e.value;
  }
  world_.memo[key].in_progress = true;
  long clause = -1;
  std::optional<Distribution> d;
  try {
    d = define(rv, &clause);
  } catch (...) {
    world_.memo.erase(key);
    throw;
  }
  PartialWorld::Entry& e = world_.memo[key];
  e.in_progress = false;
  e.clause = clause;
  e.continuous = d && is_continuous(*d);
  world_.order.push_back(key);
  if (ev != world_.evidence.end()) {
    e.evidence = true;
    e.defined = d.has_value();
    e.value = ev->second.value;
    double lw = d ? log_density(*d, e.value) : kNegInf;
    if (neg_depth_ == 0) {
      world_.log_we += lw;
    } else {
      e.pending = true;
      e.pending_logw = lw;
    }
  } else if (d) {
    e.defined = true;
    e.value = sample_distribution(*d, rng_);
  }
  if (!e.defined) return std::nullopt;
  return e.value;
}

std::optional<Value> Prover::rv_value(const Term& rv) { return rv_value(Ref{arena_term(rv), 0}); }

std::optional<Distribution> Prover::rv_distribution(const Term& rv) {
  long clause;
  return define(Ref{arena_term(rv), 0}, &clause);
}

void Prover::apply_evidence() {
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& key : world_.evidence_order) {
      const EvidenceItem& e = world_.evidence.at(key);
      if (e.interventional != (pass == 0)) continue;
      rv_value_key(key, Ref{arena_term(e.rv), 0});
    }
  }
}

bool Prover::prove(const std::vector<Term>& goal, Substitution* answer) {
  CompiledGoal g = compile_goal(goal);
  return prove(g, answer);
}

bool Prover::prove(const CompiledGoal& goal, Substitution* answer) {
  bool found = false;
  solutions(goal, [&](const Substitution& s) {
    if (answer) *answer = s;
    found = true;
    return true;
  });
  world_.query_holds = found;
  return found;
}

void Prover::solutions(const CompiledGoal& goal, const std::function<bool(const Substitution&)>& on) {
  std::uint32_t base = alloc(goal.nvars);
  std::size_t mark = trail_.size();
  try {
    solve_list(goal.lits, base, nullptr, [&] {
      Substitution s;
      for (auto [name, idx] : goal.vars) {
        Ref r = bind_[base + idx];
        if (r.n) s[name] = to_term(r);
      }
      return on(s);
    });
  } catch (...) {
    undo(mark);
    release(base);
    throw;
  }
  undo(mark);
  release(base);
}

// ---------------------------------------------------------------- forward chaining

bool Prover::forward_round() {
  bool changed = false;
  for (const CClause& c : kb_.relational()) {
    std::uint32_t base = alloc(c.nvars);
    solve_list(c.body, base, nullptr, [&] {
      std::string key;
      if (try_encode(Ref{c.head, base}, key) && world_.derived.insert(key).second) changed = true;
      return false;
    });
    release(base);
  }
  // clauses with negation or aggregation fire only after the plain ones of the
  // same round, so they see as much of the world as possible
  for (int phase = 0; phase < 2; ++phase) {
    for (std::size_t ci = 0; ci < kb_.distributional().size(); ++ci) {
      const CClause& c = kb_.distributional()[ci];
      if (has_neg_or_aggr(c.body) != (phase == 1)) continue;
      std::uint32_t base = alloc(c.nvars);
      solve_list(c.body, base, nullptr, [&] {
        std::string key;
        encode(Ref{c.head, base}, key);
        auto it = world_.memo.find(key);
        if (it != world_.memo.end() && it->second.clause >= 0) {
          if (it->second.clause != static_cast<long>(ci))
            fail(ErrorKind::ConflictingDefinition,
                 to_string(to_term(Ref{c.head, base})) + " is defined by clauses at " +
                     clause_where(kb_, kb_.distributional()[it->second.clause]) + " and " + clause_where(kb_, c));
          return false;
        }
        Distribution d = eval_dist(Ref{c.dist, base});
        if (it == world_.memo.end()) {
          PartialWorld::Entry& e = world_.memo[key];
          e.defined = true;
          e.value = sample_distribution(d, rng_);
          e.clause = static_cast<long>(ci);
          e.continuous = is_continuous(d);
          world_.order.push_back(key);
          changed = true;
        } else {
          it->second.clause = static_cast<long>(ci);
          it->second.continuous = is_continuous(d);
        }
        return false;
      });
      release(base);
    }
  }
  return changed;
}

PartialWorld forward_sample_world(const KnowledgeBase& kb, Rng& rng, int max_rounds,
                                  const std::vector<EvidenceItem>& forced) {
  PartialWorld w;
  for (const auto& f : forced) {
    std::string key = ground_key(f.rv);
    auto& e = w.memo[key];
    e.defined = true;
    e.value = f.value;
    e.evidence = true;
    w.order.push_back(key);
  }
  ProveOptions opt;
  opt.lazy = false;
  Prover p(kb, w, rng, opt);
  int rounds = 0;
  while (p.forward_round()) {
    if (++rounds > max_rounds)
      fail(ErrorKind::NonTermination, "forward chaining did not reach a fixpoint in " +
                                          std::to_string(max_rounds) + " rounds");
  }
  return w;
}

PartialWorld forward_sample_world(const Program& p, Rng& rng, int max_rounds,
                                  const std::vector<EvidenceItem>& forced) {
  KnowledgeBase kb(p);
  return forward_sample_world(kb, rng, max_rounds, forced);
}

bool prove(const std::vector<Term>& goal, PartialWorld& world, const KnowledgeBase& kb, Rng& rng,
           Substitution* answer) {
  Prover p(kb, world, rng);
  p.apply_evidence();
  return p.prove(goal, answer);
}

std::optional<Value> eval_aggregate(const Term& agg, PartialWorld& world, const KnowledgeBase& kb, Rng& rng) {
  if (!is_aggregate_literal(agg)) fail(ErrorKind::Data, "not an aggregate: " + to_string(agg));
  Term result = agg.args[2];
  Term lit = agg;
  if (!result.is_var()) lit.args[2] = result = Term::var("_AggResult");
  Substitution ans;
  Prover p(kb, world, rng);
  if (!p.prove({lit}, &ans)) return std::nullopt;
  auto it = ans.find(result.id);
  if (it == ans.end()) return std::nullopt;
  return it->second.value();
}

}  // namespace dcml
