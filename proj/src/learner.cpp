#include "dcml/learner.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

#include "parallel.hpp"

namespace dcml {

namespace {

std::string upper_initial(const std::string& type, const char* fallback) {
  if (!type.empty() && std::isalpha(static_cast<unsigned char>(type[0])))
    return std::string(1, static_cast<char>(std::toupper(static_cast<unsigned char>(type[0]))));
  return fallback;
}

// Local names always carry a slot number, so a bare letter cannot clash.
std::string head_var_name(const std::string& type) { return upper_initial(type, "E"); }

Term conj(std::vector<Term> items) {
  if (items.size() == 1) return items[0];
  return Term::compound(",", std::move(items));
}

Term bind(const Term& rv, const Term& value) { return Term::compound("~=", {rv, value}); }

Term negate(const Term& t) { return Term::compound("\\+", {t}); }

// Entity predicate holding the head of an attribute.
std::string entity_predicate(const BiasSpec& bias, const std::string& attribute) {
  std::string type = bias.entity_type(attribute);
  for (const auto& f : bias.type_order) {
    const auto& ts = bias.types.at(f);
    if (ts.size() == 1 && ts[0] == type && !bias.rand(f)) return f;
  }
  fail(ErrorKind::UnknownAttribute, "no entity table of type " + type + " for " + attribute);
}

bool numeric_aggregator(const std::string& a) { return a == "avg" || a == "sum" || a == "max" || a == "min"; }

}  // namespace

// ---------------------------------------------------------------- refinements

Term Refinement::value_var(int slot) const {
  return Term::var((aggregator == "none" ? "V" : "Y") + std::to_string(slot));
}

Term Refinement::literal(const Term& head_var, int slot, const Term& value) const {
  std::string k = std::to_string(slot);
  if (aggregator == "none") return bind(Term::compound(attribute, {head_var}), value);
  std::vector<Term> args;
  int n_out = 0;
  for (char m : link_modes) n_out += m == '-';
  for (std::size_t i = 0; i < link_modes.size(); ++i) {
    if (link_modes[i] == '+') {
      args.push_back(head_var);
      continue;
    }
    std::string name = upper_initial(link_types.empty() ? "" : link_types[i], "E") + k;
    if (n_out > 1) name += "_" + std::to_string(i + 1);
    args.push_back(Term::var(name));
  }
  Term inner = Term::var("X" + k);
  Term read = bind(Term::compound(attribute, {args[static_cast<std::size_t>(attribute_position)]}), inner);
  return Term::compound(aggregator, {inner, conj({Term::compound(*link, args), read}), value});
}

std::vector<Refinement> refinements(const std::string& target, const BiasSpec& bias,
                                    const std::vector<std::string>& path_keys, bool respect_rank) {
  std::vector<Refinement> out;
  std::set<std::string> seen(path_keys.begin(), path_keys.end());
  int target_rank = bias.rank_of(target);
  for (std::size_t mi = 0; mi < bias.modes.size(); ++mi) {
    const ModeDecl& m = bias.modes[mi];
    if (m.target != target) continue;
    if (m.attribute == target) continue;  // would read the target itself
    const RandDecl* rd = bias.rand(m.attribute);
    if (!rd) continue;
    if (respect_rank && !bias.rank.empty()) {
      int r = bias.rank_of(m.attribute);
      if (r < 0 || target_rank < 0 || r >= target_rank) continue;
    }
    Refinement ref;
    ref.mode_index = mi;
    ref.aggregator = m.aggregator;
    ref.attribute = m.attribute;
    ref.link = m.link;
    ref.link_modes = m.link_modes;
    ref.attribute_position = m.attribute_position;
    if (m.link)
      if (const auto* lt = bias.type_of(*m.link)) ref.link_types = *lt;
    if (numeric_aggregator(m.aggregator) && rd->kind == AttrKind::Discrete) continue;
    ref.discrete = (m.aggregator == "none" || m.aggregator == "mod") && rd->kind == AttrKind::Discrete;
    if (ref.discrete) ref.domain = rd->domain;
    ref.key = to_string(ref.literal(Term::var("T"), 0, Term::var("R")));
    if (!seen.insert(ref.key).second) continue;
    out.push_back(std::move(ref));
  }
  return out;
}

// ---------------------------------------------------------------- training data

TrainingSet::TrainingSet(Program facts, const LearnParams& params) {
  for (const auto* c : facts.distributional_clauses())
    if (!c->dist || !c->dist->is("val", 1)) deterministic_ = false;
  std::size_t n = params.complete_data ? 1 : params.proofs ? params.proofs : deterministic_ ? 1 : 20;
  kb_ = std::make_unique<KnowledgeBase>(std::move(facts));
  worlds_.reserve(n);
  for (std::size_t j = 0; j < n; ++j) worlds_.push_back(World{PartialWorld{}, substream(params.seed, j)});
}

const std::vector<Term>& TrainingSet::entities(const std::string& entity_pred) {
  auto it = entities_.find(entity_pred);
  if (it != entities_.end()) return it->second;
  std::vector<Term> out;
  std::set<std::string> seen;
  Term e = Term::var("E");
  CompiledGoal g = compile_goal({Term::compound(entity_pred, {e})});
  Prover p(*kb_, worlds_[0].w, worlds_[0].rng);
  p.solutions(g, [&](const Substitution& s) {
    auto b = s.find(e.id);
    if (b != s.end() && b->second.ground() && seen.insert(ground_key(b->second)).second) out.push_back(b->second);
    return false;
  });
  return entities_.emplace(entity_pred, std::move(out)).first->second;
}

const TrainingSet::Outcomes& TrainingSet::head_outcomes(const std::string& attribute,
                                                        const std::string& entity_pred) {
  std::string key = entity_pred + "|head|" + attribute;
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  const auto& ents = entities(entity_pred);
  Outcomes out(ents.size() * worlds_.size());
  for (std::size_t j = 0; j < worlds_.size(); ++j) {
    Prover p(*kb_, worlds_[j].w, worlds_[j].rng);
    for (std::size_t i = 0; i < ents.size(); ++i)
      out[i * worlds_.size() + j] = p.rv_value(Term::compound(attribute, {ents[i]}));
  }
  return cache_.emplace(key, std::move(out)).first->second;
}

const TrainingSet::Outcomes& TrainingSet::test_outcomes(const Refinement& r, const std::string& entity_pred) {
  std::string key = entity_pred + "|test|" + r.key;
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  const auto& ents = entities(entity_pred);
  Outcomes out(ents.size() * worlds_.size());
  for (std::size_t j = 0; j < worlds_.size(); ++j) {
    auto& w = worlds_[j];
    Prover p(*kb_, w.w, w.rng);
    for (std::size_t i = 0; i < ents.size(); ++i) {
      auto& o = out[i * worlds_.size() + j];
      if (r.aggregator == "none")
        o = p.rv_value(Term::compound(r.attribute, {ents[i]}));
      else
        o = eval_aggregate(r.literal(ents[i], 0, Term::var("R0")), w.w, *kb_, w.rng);
    }
  }
  return cache_.emplace(key, std::move(out)).first->second;
}

// ---------------------------------------------------------------- scoring

double bic_score(double expected_ll, std::size_t n_params, std::size_t n_examples) {
  if (n_examples == 0) return 0.0;
  return 2.0 * expected_ll - static_cast<double>(n_params) * std::log(static_cast<double>(n_examples));
}

namespace {

std::size_t distinct_entities(const std::vector<ExampleRow>& rows) {
  std::set<std::size_t> s;
  for (const auto& r : rows) s.insert(r.entity);
  return s.size();
}

}  // namespace

LeafFit fit_leaf(TrainingSet& data, const Dlt& tree, const std::vector<ExampleRow>& rows,
                 const std::vector<std::size_t>& feature_tests, const LearnParams& params) {
  if (rows.empty()) fail(ErrorKind::DegenerateData, "no examples for a leaf of " + tree.target);
  const std::size_t nw = data.n_worlds();
  const auto& head = data.head_outcomes(tree.target, tree.entity);
  std::vector<const TrainingSet::Outcomes*> feats;
  for (auto f : feature_tests) feats.push_back(&data.test_outcomes(tree.tests[f], tree.entity));
  double w = params.complete_data ? 1.0 : 1.0 / static_cast<double>(nw);
  std::vector<WeightedSample> samples;
  samples.reserve(rows.size());
  for (const auto& r : rows) {
    std::size_t at = r.entity * nw + r.world;
    WeightedSample s;
    s.target = *head[at];
    s.weight = w;
    for (const auto* f : feats) s.features.push_back((*f)[at]->num);
    samples.push_back(std::move(s));
  }
  FitOptions opt = params.fit;
  if (tree.kind == AttrKind::Discrete) opt.domain = tree.domain;
  LeafFit out;
  out.fit = fit_weighted_mle(tree.kind == AttrKind::Continuous ? LeafKind::Continuous : LeafKind::Discrete,
                             samples, opt);
  out.n_examples = distinct_entities(rows);
  out.score = bic_score(out.fit.expected_ll, out.fit.n_params, out.n_examples);
  return out;
}

namespace {

// Branch index of one row for a test: domain index or success (0), fail last.
std::vector<std::vector<ExampleRow>> partition_rows(TrainingSet& data, const Dlt& tree, std::size_t t,
                                                    const std::vector<ExampleRow>& rows) {
  const Refinement& r = tree.tests[t];
  const auto& outs = data.test_outcomes(r, tree.entity);
  std::size_t nb = r.discrete ? r.domain.size() + 1 : 2;
  std::vector<std::vector<ExampleRow>> parts(nb);
  for (const auto& row : rows) {
    const auto& o = outs[row.entity * data.n_worlds() + row.world];
    std::size_t b = nb - 1;
    if (o) {
      if (r.discrete) {
        auto it = std::find(r.domain.begin(), r.domain.end(), *o);
        if (it == r.domain.end())
          fail(ErrorKind::Data, "value " + o->str() + " of " + r.attribute + " is outside its domain");
        b = static_cast<std::size_t>(it - r.domain.begin());
      } else if (o->is_num()) {
        b = 0;
      }
    }
    parts[b].push_back(row);
  }
  return parts;
}

}  // namespace

double score_refinement(TrainingSet& data, const Dlt& tree, std::size_t t, const std::vector<ExampleRow>& rows,
                        const std::vector<std::size_t>& feature_tests, const LearnParams& params,
                        std::vector<std::vector<ExampleRow>>* partition) {
  auto parts = partition_rows(data, tree, t, rows);
  bool cont = !tree.tests[t].discrete;
  double total = 0.0;
  for (std::size_t b = 0; b < parts.size(); ++b) {
    if (parts[b].empty()) continue;
    std::vector<std::size_t> fs = feature_tests;
    if (cont && b == 0) fs.push_back(t);
    total += fit_leaf(data, tree, parts[b], fs, params).score;
  }
  if (partition) *partition = std::move(parts);
  return total;
}

// ---------------------------------------------------------------- induction

namespace {

struct Grower {
  TrainingSet& data;
  Dlt& tree;
  const LearnParams& params;

  std::unique_ptr<DltNode> grow(const std::vector<ExampleRow>& rows, std::vector<std::size_t>& path,
                                const std::vector<std::size_t>& features) {
    auto node = std::make_unique<DltNode>();
    node->features = features;
    node->n_examples = distinct_entities(rows);
    if (rows.empty()) return node;
    LeafFit leaf = fit_leaf(data, tree, rows, features, params);
    node->leaf_score = leaf.score;
    node->expected_ll = leaf.fit.expected_ll;
    int depth = static_cast<int>(path.size());
    std::vector<std::size_t> cands;
    if (depth < params.max_depth && depth + 2 <= params.max_body)
      for (std::size_t t = 0; t < tree.tests.size(); ++t)
        if (std::find(path.begin(), path.end(), t) == path.end()) cands.push_back(t);
    std::vector<double> scores(cands.size());
    parallel_for(cands.size(), params.threads, [&](std::size_t i) {
      scores[i] = score_refinement(data, tree, cands[i], rows, features, params);
    });
    std::optional<std::size_t> best;
    double best_gain = 0.0;
    for (std::size_t i = 0; i < cands.size(); ++i) {
      double gain = scores[i] - leaf.score;
      if (gain > 0.0 && gain >= params.epsilon && (!best || gain > best_gain)) {
        best = i;
        best_gain = gain;
      }
    }
    if (!best) {
      node->leaf = leaf.fit.leaf;
      node->score = leaf.score;
      return node;
    }
    std::size_t t = cands[*best];
    const Refinement& r = tree.tests[t];
    std::vector<std::vector<ExampleRow>> parts;
    score_refinement(data, tree, t, rows, features, params, &parts);
    node->test = t;
    path.push_back(t);
    double total = 0.0;
    for (std::size_t b = 0; b < parts.size(); ++b) {
      DltBranch br;
      std::vector<std::size_t> fs = features;
      if (b + 1 == parts.size()) {
        br.kind = DltBranch::Kind::Fail;
      } else if (r.discrete) {
        br.kind = DltBranch::Kind::Value;
        br.value = r.domain[b];
      } else {
        br.kind = DltBranch::Kind::Success;
        fs.push_back(t);
      }
      br.node = grow(parts[b], path, fs);
      total += br.node->score;
      node->branches.push_back(std::move(br));
    }
    path.pop_back();
    node->score = total;
    return node;
  }
};

// Leaf used when an attribute has no observed value at all.
Leaf prior_leaf(const Dlt& tree) {
  Leaf l;
  if (tree.kind == AttrKind::Discrete && !tree.domain.empty()) {
    std::vector<double> p(tree.domain.size(), 1.0 / static_cast<double>(tree.domain.size()));
    l.dist = Discrete{tree.domain, p};
  } else {
    l.dist = Gaussian{0.0, 1.0};
  }
  return l;
}

}  // namespace

std::size_t Dlt::leaf_count(bool nonempty_only) const {
  std::size_t n = 0;
  std::vector<const DltNode*> stack{root.get()};
  while (!stack.empty()) {
    const DltNode* d = stack.back();
    stack.pop_back();
    if (!d) continue;
    if (!d->test) {
      if (!nonempty_only || d->n_examples > 0) ++n;
      continue;
    }
    for (const auto& b : d->branches) stack.push_back(b.node.get());
  }
  return n;
}

Dlt induce_dlt(const std::string& target, TrainingSet& data, const BiasSpec& bias, const LearnParams& params) {
  const RandDecl* rd = bias.rand(target);
  if (!rd) fail(ErrorKind::UnknownAttribute, target + " has no rand declaration");
  Dlt tree;
  tree.target = target;
  tree.entity = entity_predicate(bias, target);
  tree.type = bias.entity_type(target);
  tree.kind = rd->kind;
  tree.domain = rd->domain;
  tree.tests = refinements(target, bias, {}, params.respect_rank);
  const auto& head = data.head_outcomes(target, tree.entity);
  std::size_t nw = data.n_worlds();
  std::vector<ExampleRow> rows;
  for (std::size_t i = 0; i * nw < head.size(); ++i)
    for (std::size_t j = 0; j < nw; ++j)
      if (head[i * nw + j]) rows.push_back({i, j});
  if (rows.empty()) fail(ErrorKind::NoExamples, "no entity has a value for " + target);
  // outcomes are cached before any parallel scoring reads them
  for (const auto& t : tree.tests) data.test_outcomes(t, tree.entity);
  std::vector<std::size_t> path;
  Grower g{data, tree, params};
  tree.root = g.grow(rows, path, {});
  return tree;
}

// ---------------------------------------------------------------- clauses

namespace {

Term number_list(const std::vector<double>& xs) {
  std::vector<Term> items;
  for (double x : xs) items.push_back(Term::number(x));
  return Term::list(std::move(items));
}

void emit(const Dlt& tree, const DltNode& node, const Term& head_var, std::vector<Term>& body,
          std::vector<std::pair<std::size_t, int>>& slots, std::vector<Clause>& out) {
  if (node.test) {
    const Refinement& r = tree.tests[*node.test];
    int slot = static_cast<int>(slots.size()) + 1;
    slots.emplace_back(*node.test, slot);
    for (const auto& b : node.branches) {
      switch (b.kind) {
        case DltBranch::Kind::Value: body.push_back(r.literal(head_var, slot, Term::from_value(b.value))); break;
        case DltBranch::Kind::Success: body.push_back(r.literal(head_var, slot, r.value_var(slot))); break;
        case DltBranch::Kind::Fail: body.push_back(negate(r.literal(head_var, slot, r.value_var(slot)))); break;
      }
      emit(tree, *b.node, head_var, body, slots, out);
      body.pop_back();
    }
    slots.pop_back();
    return;
  }
  if (!node.leaf) return;
  Clause c;
  c.kind = Clause::Kind::Distributional;
  c.head = Term::compound(tree.target, {head_var});
  c.body = body;
  std::vector<Term> inputs;
  for (auto f : node.features) {
    auto it = std::find_if(slots.begin(), slots.end(), [&](const auto& s) { return s.first == f; });
    inputs.push_back(tree.tests[f].value_var(it->second));
  }
  const Leaf& leaf = *node.leaf;
  if (!leaf.model) {
    if (const auto* g = std::get_if<Gaussian>(&leaf.dist)) {
      c.dist = Term::compound("gaussian", {Term::number(g->mean), Term::number(g->variance)});
    } else if (const auto* d = std::get_if<Discrete>(&leaf.dist)) {
      std::vector<Term> items;
      for (std::size_t k = 0; k < d->labels.size(); ++k)
        items.push_back(Term::compound(":", {Term::number(d->probs[k]), Term::from_value(d->labels[k])}));
      c.dist = Term::compound("discrete", {Term::list(std::move(items))});
    } else {
      c.dist = Term::compound("val", {Term::from_value(std::get<ValDist>(leaf.dist).value)});
    }
  } else if (const auto* lin = std::get_if<Linear>(&*leaf.model)) {
    Term mean = Term::var("Mean");
    c.body.push_back(Term::compound("linear", {Term::list(inputs), number_list(lin->weights), mean}));
    c.dist = Term::compound("gaussian", {mean, Term::number(std::get<Gaussian>(leaf.dist).variance)});
  } else {
    const auto& d = std::get<Discrete>(leaf.dist);
    std::vector<Term> probs, items;
    for (std::size_t k = 0; k < d.labels.size(); ++k) {
      probs.push_back(Term::var("Prob" + std::to_string(k + 1)));
      items.push_back(Term::compound(":", {probs.back(), Term::from_value(d.labels[k])}));
    }
    if (const auto* lg = std::get_if<Logistic>(&*leaf.model)) {
      c.body.push_back(Term::compound("logistic", {Term::list(inputs), number_list(lg->weights), Term::list(probs)}));
    } else {
      std::vector<Term> rows;
      for (const auto& row : std::get<Softmax>(*leaf.model).rows) rows.push_back(number_list(row));
      c.body.push_back(Term::compound("softmax", {Term::list(inputs), Term::list(rows), Term::list(probs)}));
    }
    c.dist = Term::compound("discrete", {Term::list(std::move(items))});
  }
  out.push_back(std::move(c));
}

}  // namespace

std::vector<Clause> dlt_to_clauses(const Dlt& tree) {
  std::vector<Clause> out;
  if (!tree.root) return out;
  Term head_var = Term::var(head_var_name(tree.type.empty() ? tree.entity : tree.type));
  std::vector<Term> body{Term::compound(tree.entity, {head_var})};
  std::vector<std::pair<std::size_t, int>> slots;
  emit(tree, *tree.root, head_var, body, slots, out);
  return out;
}

// ---------------------------------------------------------------- joint model

Program training_program(const TableBundle& data, const BiasSpec& bias) {
  Program p = transform_tables(data).program();
  p.clauses.insert(p.clauses.end(), bias.background.clauses.begin(), bias.background.clauses.end());
  p.rank = bias.rank;
  return p;
}

JmpModel learn_jmp(const TableBundle& data, const BiasSpec& bias, const LearnParams& params) {
  return learn_jmp(training_program(data, bias), bias, params);
}

JmpModel learn_jmp(const Program& facts, const BiasSpec& bias, const LearnParams& params) {
  if (bias.rank.empty()) fail(ErrorKind::MissingRank, "the bias declares no rank order");
  for (const auto& r : bias.rands)
    if (bias.rank_of(r.attribute) < 0) fail(ErrorKind::MissingRank, "attribute " + r.attribute + " has no rank");
  std::set<std::string> learned(bias.rank.begin(), bias.rank.end());
  JmpModel m;
  for (const auto& c : facts.clauses) {
    if (c.kind == Clause::Kind::Distributional && c.head.is_cmp() && learned.count(c.head.name())) continue;
    m.program.clauses.push_back(c);
  }
  TrainingSet data(facts, params);
  for (const auto& attr : bias.rank) {
    if (!bias.rand(attr)) continue;
    Dlt tree;
    try {
      tree = induce_dlt(attr, data, bias, params);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NoExamples) throw;
      const RandDecl* rd = bias.rand(attr);
      tree.target = attr;
      tree.entity = entity_predicate(bias, attr);
      tree.type = bias.entity_type(attr);
      tree.kind = rd->kind;
      tree.domain = rd->domain;
      tree.root = std::make_unique<DltNode>();
      tree.root->leaf = prior_leaf(tree);
      tree.root->prior = true;
    }
    for (auto& c : dlt_to_clauses(tree)) m.program.clauses.push_back(std::move(c));
    m.trees.push_back(std::move(tree));
  }
  m.program.rank = bias.rank;
  return m;
}

namespace {

void report_node(const Dlt& t, const DltNode& n, int indent, std::ostringstream& os) {
  std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  if (!n.test) {
    if (n.prior)
      os << pad << "leaf prior (no examples)\n";
    else if (n.n_examples == 0)
      os << pad << "empty\n";
    else
      os << pad << "leaf n=" << n.n_examples << " score=" << format_number(n.score) << "\n";
    return;
  }
  const Refinement& r = t.tests[*n.test];
  os << pad << "split " << r.key << " n=" << n.n_examples << " leaf_score=" << format_number(n.leaf_score)
     << " score=" << format_number(n.score) << "\n";
  for (const auto& b : n.branches) {
    os << pad << "- ";
    switch (b.kind) {
      case DltBranch::Kind::Value: os << "value " << b.value.str(); break;
      case DltBranch::Kind::Success: os << "success"; break;
      case DltBranch::Kind::Fail: os << "fail"; break;
    }
    os << "\n";
    report_node(t, *b.node, indent + 1, os);
  }
}

}  // namespace

std::string JmpModel::report() const {
  std::ostringstream os;
  for (const auto& t : trees) {
    os << "tree " << t.target << " (" << t.leaf_count() << " leaves)\n";
    if (t.root) report_node(t, *t.root, 1, os);
  }
  return os.str();
}

// ---------------------------------------------------------------- conformance

bool bias_conform(const Clause& c, const BiasSpec& bias) {
  if (c.kind != Clause::Kind::Distributional || !c.head.is_cmp() || c.head.arity() != 1) return false;
  const std::string target = c.head.name();
  if (c.body.empty() || !c.body[0].is_cmp() || c.body[0].arity() != 1) return false;
  for (std::size_t i = 1; i < c.body.size(); ++i) {
    Term lit = c.body[i];
    if (lit.is("\\+", 1)) lit = lit.args[0];
    if (is_stat_model_literal(lit)) continue;
    bool ok = false;
    for (const auto& m : bias.modes_for(target)) {
      if (m->aggregator == "none") {
        ok = lit.is("~=", 2) && lit.args[0].is_cmp() && lit.args[0].name() == m->attribute &&
             lit.args[0].arity() == 1 && lit.args[0].args[0] == c.head.args[0];
      } else if (lit.is(m->aggregator, 3)) {
        const Term& inner = lit.args[1];
        if (inner.is(",", 2) && m->link && inner.args[0].is_cmp() && inner.args[0].name() == *m->link &&
            inner.args[0].arity() == m->link_modes.size() && inner.args[1].is("~=", 2) &&
            inner.args[1].args[0].is_cmp() && inner.args[1].args[0].name() == m->attribute) {
          ok = true;
          for (std::size_t k = 0; k < m->link_modes.size(); ++k)
            if (m->link_modes[k] == '+' && inner.args[0].args[k] != c.head.args[0]) ok = false;
        }
      }
      if (ok) break;
    }
    if (!ok) return false;
  }
  return true;
}

Program program_for_tables(const Program& learned, const TableBundle& tables) {
  Program p;
  for (const auto& c : transform_tables(tables).relational) p.clauses.push_back(c);
  for (const auto& c : learned.clauses)
    if (!c.head.ground() || !c.body.empty()) p.clauses.push_back(c);
  p.rank = learned.rank;
  return p;
}

}  // namespace dcml
