#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "../support/bank.hpp"
#include "dcml/learner.hpp"
#include "doctest.h"

using namespace dcml;

namespace {

const std::filesystem::path kToyBank = std::filesystem::path(DCML_TEST_DATA) / "bank_toy";

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kFlatBias = R"(
type(obj(o)).
type(t(o)). type(b(o)). type(c(o)). type(z(o)).
rand(t,continuous,[]).
rand(b,discrete,[u,v]).
rand(c,discrete,[p,q,r]).
rand(z,continuous,[]).
mode(t,none,c(+)).
mode(t,none,b(+)).
mode(t,none,z(+)).
rank([b,c,z,t]).
)";

// One entity table with independent parents b, c, z and a target t whose
// mean shifts by `shift` standard deviations when b = v.
Program flat_data(std::size_t n, double shift, std::uint64_t seed, double missing_b = 0.0) {
  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::bernoulli_distribution coin(0.5), hide(missing_b);
  std::uniform_int_distribution<int> three(0, 2);
  std::ostringstream os;
  const char* cs[] = {"p", "q", "r"};
  for (std::size_t i = 0; i < n; ++i) {
    std::string e = "e" + std::to_string(i);
    bool bv = coin(rng);
    os << "obj(" << e << ").\n";
    if (!hide(rng)) os << "b(" << e << ") ~ val(" << (bv ? "v" : "u") << ").\n";
    os << "c(" << e << ") ~ val(" << cs[three(rng)] << ").\n";
    os << "z(" << e << ") ~ val(" << format_number(noise(rng)) << ").\n";
    os << "t(" << e << ") ~ val(" << format_number(10.0 + (bv ? shift : 0.0) + noise(rng)) << ").\n";
  }
  return parse_program(os.str());
}

std::string root_attribute(const Dlt& t) {
  if (!t.root || !t.root->test) return "";
  return t.tests[*t.root->test].attribute;
}

// Number of clauses of `attr` whose body succeeds for the given entity.
int firing_clauses(const Program& learned, const Program& facts, const std::string& attr, const Term& entity) {
  int n = 0;
  for (const auto& c : learned.clauses) {
    if (c.kind != Clause::Kind::Distributional || c.head.name() != attr) continue;
    auto s = unify(c.head.args[0], entity);
    REQUIRE(s);
    std::vector<Term> body;
    for (const auto& l : c.body) body.push_back(apply_substitution(l, *s));
    KnowledgeBase kb(facts);
    PartialWorld w;
    Rng rng(1);
    if (prove(body, w, kb, rng)) ++n;
  }
  return n;
}

}  // namespace

TEST_CASE("BIC score and parameter counts") {
  CHECK(bic_score(-3.0, 2, 4) == doctest::Approx(-6.0 - 2.0 * std::log(4.0)).epsilon(1e-15));
  CHECK(bic_score(1.5, 0, 7) == 3.0);
  CHECK(bic_score(5.0, 3, 0) == 0.0);

  // Gaussian leaf without features: k = 2
  std::vector<WeightedSample> g;
  for (double x : {1.0, 2.0, 4.0, 8.0}) g.push_back({{}, Value::number(x), 1.0});
  auto fg = fit_weighted_mle(LeafKind::Continuous, g);
  CHECK(fg.n_params == 2);
  // discrete, d = 3, |E| = 10: penalty 2 ln 10
  std::vector<WeightedSample> d;
  for (int i = 0; i < 10; ++i) d.push_back({{}, Value::symbol(i % 2 ? "a" : "b"), 1.0});
  FitOptions o;
  o.domain = {Value::symbol("a"), Value::symbol("b"), Value::symbol("c")};
  auto fd = fit_weighted_mle(LeafKind::Discrete, d, o);
  CHECK(fd.n_params == 2);
  CHECK(bic_score(fd.expected_ll, fd.n_params, 10) - 2 * fd.expected_ll == doctest::Approx(-2 * std::log(10.0)));
}

TEST_CASE("refinements follow modes, types and rank") {
  BiasSpec decl = parse_bias(slurp(kToyBank / "bias.dc"));
  auto refs = refinements("age", decl, {}, false);
  std::set<std::string> keys;
  for (const auto& r : refs) keys.insert(r.key);
  CHECK(keys.count("avg(X0, (hasAcc(T, A0), savings(A0)~=X0), R)") == 1);
  CHECK(keys.count("creditScore(T)~=R") == 1);
  CHECK(keys.count("mod(X0, (hasAcc(T, A0), freq(A0)~=X0), R)") == 1);
  // age is first in the rank: nothing lower ranked to read
  CHECK(refinements("age", decl, {}, true).empty());
  // no modes for the target
  CHECK(refinements("savings", decl).empty());
  // literal already on the path is not repeated
  auto fewer = refinements("age", decl, {"creditScore(T)~=R"}, false);
  CHECK(fewer.size() == refs.size() - 1);
  // numeric aggregation over a discrete attribute is not offered
  BiasSpec b = parse_bias(std::string(kFlatBias) + "type(link(o,o)).\nmode(t,avg,(link(+,-),b(+))).\n"
                                                   "mode(t,avg,(link(+,-),t(+))).\n");
  for (const auto& r : refinements("t", b, {}, false)) {
    CHECK(r.key.find("avg") == std::string::npos);
    CHECK(r.attribute != "t");
  }
}

TEST_CASE("a 5-sigma parent is found and the split outscores the leaf") {
  BiasSpec bias = parse_bias(kFlatBias);
  int found = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    LearnParams lp;
    lp.seed = seed;
    TrainingSet data(flat_data(500, 5.0, seed), lp);
    Dlt t = induce_dlt("t", data, bias, lp);
    if (root_attribute(t) == "b") ++found;
    REQUIRE(t.root);
    if (t.root->test) CHECK(t.root->score > t.root->leaf_score);
  }
  CHECK(found >= 9);
}

TEST_CASE("pure noise target stays a single leaf") {
  BiasSpec bias = parse_bias(kFlatBias);
  int single = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    LearnParams lp;
    lp.seed = seed;
    TrainingSet data(flat_data(200, 0.0, seed + 100), lp);
    Dlt t = induce_dlt("t", data, bias, lp);
    if (!t.root->test) ++single;
  }
  CHECK(single >= 9);
}

TEST_CASE("score of a refinement is the sum of its branch scores") {
  BiasSpec bias = parse_bias(kFlatBias);
  LearnParams lp;
  TrainingSet data(flat_data(300, 2.0, 7, 0.2), lp);
  Dlt tree = induce_dlt("t", data, bias, lp);
  std::vector<ExampleRow> rows;
  for (std::size_t i = 0; i < data.entities("obj").size(); ++i) rows.push_back({i, 0});
  for (std::size_t t = 0; t < tree.tests.size(); ++t) {
    std::vector<std::vector<ExampleRow>> parts;
    double s = score_refinement(data, tree, t, rows, {}, lp, &parts);
    double sum = 0.0;
    for (std::size_t b = 0; b < parts.size(); ++b) {
      if (parts[b].empty()) continue;
      std::vector<std::size_t> fs;
      if (!tree.tests[t].discrete && b == 0) fs.push_back(t);
      sum += fit_leaf(data, tree, parts[b], fs, lp).score;
    }
    CHECK(std::abs(s - sum) <= 1e-9);
  }
}

TEST_CASE("a test that always fails scores as its fail branch") {
  BiasSpec bias = parse_bias(kFlatBias);
  LearnParams lp;
  TrainingSet data(flat_data(100, 5.0, 3, 1.0), lp);  // b hidden everywhere
  Dlt tree = induce_dlt("t", data, bias, lp);
  std::vector<ExampleRow> rows;
  for (std::size_t i = 0; i < 100; ++i) rows.push_back({i, 0});
  std::size_t tb = 0;
  while (tree.tests[tb].attribute != "b") ++tb;
  double leaf = fit_leaf(data, tree, rows, {}, lp).score;
  CHECK(score_refinement(data, tree, tb, rows, {}, lp) == leaf);
  // no split on b anywhere: the parent never succeeds
  std::vector<const DltNode*> stack{tree.root.get()};
  while (!stack.empty()) {
    const DltNode* n = stack.back();
    stack.pop_back();
    if (n->test) {
      CHECK(tree.tests[*n->test].attribute != "b");
      for (const auto& br : n->branches) stack.push_back(br.node.get());
    }
  }
}

TEST_CASE("all parents missing gives the marginal leaf") {
  const char* bias_text = R"(
type(obj(o)). type(t(o)). type(b(o)).
rand(t,continuous,[]). rand(b,discrete,[u,v]).
mode(t,none,b(+)).
rank([b,t]).
)";
  BiasSpec bias = parse_bias(bias_text);
  Program p = parse_program("obj(e1). obj(e2). obj(e3). t(e1) ~ val(1). t(e2) ~ val(2). t(e3) ~ val(4).");
  LearnParams lp;
  TrainingSet data(p, lp);
  Dlt tree = induce_dlt("t", data, bias, lp);
  REQUIRE(!tree.root->test);
  const auto& g = std::get<Gaussian>(tree.root->leaf->dist);
  CHECK(g.mean == doctest::Approx(7.0 / 3.0));
  auto cl = dlt_to_clauses(tree);
  REQUIRE(cl.size() == 1);
  CHECK(cl[0].body.size() == 1);
}

TEST_CASE("single-leaf and path clause forms") {
  const char* bias_text = R"(
type(client(c)). type(account(a)). type(hasAcc(c,a)).
type(age(c)). type(creditScore(c)). type(freq(a)). type(savings(a)).
rand(age,continuous,[]). rand(creditScore,continuous,[]).
rand(freq,discrete,[low,high]). rand(savings,continuous,[]).
mode(creditScore,mod,(hasAcc(+,-),freq(+))).
mode(creditScore,max,(hasAcc(+,-),savings(+))).
rank([freq,savings,age,creditScore]).
)";
  BiasSpec bias = parse_bias(bias_text);
  Program p = parse_program(
      "client(c1). client(c2). age(c1) ~ val(30). age(c2) ~ val(34).");
  LearnParams lp;
  TrainingSet data(p, lp);
  Dlt age = induce_dlt("age", data, bias, lp);
  auto cl = dlt_to_clauses(age);
  REQUIRE(cl.size() == 1);
  CHECK(to_string(cl[0]) == "age(C) ~ gaussian(32, 4) := client(C).");

  // hand-built tree: mod test, low branch with a max feature, others empty
  Dlt t;
  t.target = "creditScore";
  t.entity = "client";
  t.type = "c";
  t.tests = refinements("creditScore", bias);
  REQUIRE(t.tests.size() == 2);
  t.root = std::make_unique<DltNode>();
  t.root->test = 0;
  for (const char* v : {"low", "high"}) {
    DltBranch b;
    b.kind = DltBranch::Kind::Value;
    b.value = Value::symbol(v);
    b.node = std::make_unique<DltNode>();
    t.root->branches.push_back(std::move(b));
  }
  DltBranch f;
  f.node = std::make_unique<DltNode>();
  t.root->branches.push_back(std::move(f));
  DltNode& low = *t.root->branches[0].node;
  low.test = 1;
  DltBranch succ;
  succ.kind = DltBranch::Kind::Success;
  succ.node = std::make_unique<DltNode>();
  succ.node->features = {1};
  succ.node->n_examples = 4;
  succ.node->leaf = Leaf{Gaussian{0, 10.1}, Linear{{0.2, 300}}};
  low.branches.push_back(std::move(succ));
  DltBranch lf;
  lf.node = std::make_unique<DltNode>();
  low.branches.push_back(std::move(lf));
  auto cs = dlt_to_clauses(t);
  REQUIRE(cs.size() == 1);
  CHECK(t.leaf_count() == 1);
  CHECK(to_string(cs[0]) ==
        "creditScore(C) ~ gaussian(Mean, 10.1) := client(C), mod(X1, (hasAcc(C, A1), freq(A1)~=X1), low), "
        "max(X2, (hasAcc(C, A2), savings(A2)~=X2), Y2), linear([Y2], [0.2, 300], Mean).");
  CHECK(bias_conform(cs[0], bias));
  CHECK(validate_program(parse_program(to_string(cs[0]))).empty());
}

TEST_CASE("complete-data mode equals expected log-likelihood on deterministic facts") {
  BiasSpec bias = parse_bias(kFlatBias);
  Program p = flat_data(150, 1.0, 11, 0.1);
  LearnParams a, b;
  b.complete_data = true;
  TrainingSet da(p, a), db(p, b);
  CHECK(da.deterministic());
  CHECK(da.n_worlds() == 1);
  auto ca = dlt_to_clauses(induce_dlt("t", da, bias, a));
  auto cb = dlt_to_clauses(induce_dlt("t", db, bias, b));
  CHECK(ca == cb);
}

TEST_CASE("toy bank tables: every attribute gets a clause") {
  BiasSpec bias = parse_bias(slurp(kToyBank / "bias.dc"));
  TableBundle tb = load_tables(bias, kToyBank);
  LearnParams lp;
  JmpModel m = learn_jmp(tb, bias, lp);
  for (const auto& r : bias.rands) {
    int n = 0;
    for (const auto& c : m.program.clauses)
      if (c.kind == Clause::Kind::Distributional && c.head.name() == r.attribute) ++n;
    CHECK_MESSAGE(n >= 1, r.attribute);
  }
  CHECK(validate_program(m.program).empty());
  CHECK(m.trees.size() == bias.rank.size());
  CHECK(m.report().find("tree status") != std::string::npos);
}

TEST_CASE("bank data: structure, exclusiveness, conformance, reproducibility") {
  auto t0 = std::chrono::steady_clock::now();
  int freq_root = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto bank = testsupport::generate_bank(seed == 1 ? 1000 : 300, seed);
    LearnParams lp;
    lp.seed = seed;
    Program facts = training_program(bank.tables, bank.bias);
    TrainingSet data(facts, lp);
    Dlt sav = induce_dlt("savings", data, bank.bias, lp);
    if (root_attribute(sav) == "freq") ++freq_root;
    if (seed != 1) continue;
    CHECK(sav.leaf_count() == 2);
    JmpModel m = learn_jmp(facts, bank.bias, lp);
    auto diags = validate_program(m.program);
    for (const auto& d : diags) INFO(d.str());
    CHECK(diags.empty());
    for (const auto& c : m.program.clauses)
      if (c.kind == Clause::Kind::Distributional) CHECK_MESSAGE(bias_conform(c, bank.bias), to_string(c));
    for (const auto& tr : m.trees) {
      std::size_t n = 0;
      for (const auto& c : m.program.clauses)
        if (c.kind == Clause::Kind::Distributional && c.head.name() == tr.target) ++n;
      CHECK(n == tr.leaf_count());
    }
    // every sampled entity fires exactly one clause of each attribute
    Program learned;
    for (const auto& c : m.program.clauses)
      if (c.kind == Clause::Kind::Distributional) learned.clauses.push_back(c);
    for (const auto& [attr, ent] : std::vector<std::pair<std::string, std::string>>{
             {"savings", "a"}, {"creditScore", "c"}, {"age", "c"}, {"loanAmt", "l"}, {"status", "l"}})
      for (int i : {0, 17, 404, 999}) {
        Term e = Term::sym(ent + std::to_string(i));
        CHECK_MESSAGE(firing_clauses(learned, facts, attr, e) == 1, attr, " ", to_string(e));
      }
    JmpModel again = learn_jmp(facts, bank.bias, lp);
    CHECK(print_program(again.program, true) == print_program(m.program, true));
    lp.threads = 4;
    JmpModel threaded = learn_jmp(facts, bank.bias, lp);
    CHECK(print_program(threaded.program, true) == print_program(m.program, true));
  }
  CHECK(freq_root >= 9);
  CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() < 600.0);
}
