#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>
#include <unistd.h>

#include "../support/bank.hpp"
#include "dcml/cli.hpp"
#include "dcml/evaluation.hpp"
#include "dcml/relational.hpp"
#include "doctest.h"

using namespace dcml;
namespace fs = std::filesystem;

namespace {

const fs::path kToyBank = fs::path(DCML_TEST_DATA) / "bank_toy";

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("dcml-cli-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& f) const { return (path / f).string(); }
};

struct Run {
  int code;
  std::string out, err;
};

Run cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

void copy_dir(const fs::path& from, const fs::path& to) {
  fs::create_directories(to);
  for (const auto& e : fs::directory_iterator(from)) fs::copy_file(e.path(), to / e.path().filename());
}

const char* kLoanProgram = R"(
hasAccount(c_1, a_1).
hasLoan(a_1, l_1).
age(c_1) ~ val(55).
age(c_2) ~ gaussian(40, 0.2).
status(l_1) ~ discrete([0.7:appr, 0.3:decl]).
clientLoan(C,L) := hasAccount(C,A), hasLoan(A,L).
creditScore(C) ~ gaussian(755.5,0.1) := clientLoan(C,L), status(L)~=appr.
creditScore(C) ~ gaussian(350,0.1) := clientLoan(C,L), status(L)~=decl.
)";

}  // namespace

TEST_CASE("cli transform writes facts and cell lists") {
  TempDir tmp;
  std::string bias = (kToyBank / "bias.dc").string();
  auto r = cli({"transform", "--bias", bias, "--tables", kToyBank.string(), "--out", tmp / "t"});
  REQUIRE(r.code == 0);
  TableBundle b = load_tables(parse_bias(slurp(bias)), kToyBank);
  CHECK(slurp(tmp / "t/facts.dc") == print_program(transform_tables(b).program()));
  CHECK(slurp(tmp / "t/facts.dc").find("age(ann) ~ val(33).") != std::string::npos);
  std::string missing = slurp(tmp / "t/missing.csv");
  CHECK(missing.rfind("table,key,attribute\n", 0) == 0);
  CHECK(missing.find("client,ann,creditScore") != std::string::npos);
  CHECK(slurp(tmp / "t/queries.csv").find("account,a_20,savings") != std::string::npos);

  // existing outputs need --force
  auto again = cli({"transform", "--bias", bias, "--tables", kToyBank.string(), "--out", tmp / "t"});
  CHECK(again.code == 1);
  CHECK(cli({"transform", "--bias", bias, "--tables", kToyBank.string(), "--out", tmp / "t", "--force"}).code == 0);

  fs::create_directories(tmp.path / "empty");
  auto empty = cli({"transform", "--bias", bias, "--tables", tmp / "empty", "--out", tmp / "e"});
  CHECK(empty.code == 2);

  copy_dir(kToyBank, tmp.path / "dangling");
  std::string acc = slurp(tmp.path / "dangling/hasAcc.csv");
  spit(tmp.path / "dangling/hasAcc.csv", acc + "zed,a_11\n");
  auto dangling = cli({"transform", "--bias", bias, "--tables", tmp / "dangling", "--out", tmp / "d"});
  CHECK(dangling.code == 2);
  CHECK(dangling.err.find("zed") != std::string::npos);
}

TEST_CASE("cli usage errors exit with 1") {
  CHECK(cli({}).code == 1);
  CHECK(cli({"nonsense"}).code == 1);
  CHECK(cli({"--help"}).code == 0);
  TempDir tmp;
  std::string bias = (kToyBank / "bias.dc").string();
  auto noseed = cli({"learn", "--bias", bias, "--tables", kToyBank.string(), "--out", tmp / "p.dc"});
  CHECK(noseed.code == 1);
  CHECK(noseed.err.find("--seed") != std::string::npos);
  CHECK(cli({"learn", "--bias", bias, "--tables", kToyBank.string(), "--out", tmp / "p.dc", "--seed", "1",
             "--max-depth", "0"})
            .code == 1);
}

TEST_CASE("cli learn is deterministic and learn-em writes a full trace") {
  TempDir tmp;
  std::string bias = (kToyBank / "bias.dc").string();
  for (const char* out : {"a.dc", "b.dc"})
    REQUIRE(cli({"learn", "--bias", bias, "--tables", kToyBank.string(), "--out", tmp / out, "--seed", "7",
                 "--report", tmp / (std::string(out) + ".txt")})
                .code == 0);
  CHECK(slurp(tmp / "a.dc") == slurp(tmp / "b.dc"));
  CHECK(!slurp(tmp / "a.dc").empty());

  auto em = cli({"learn-em", "--bias", bias, "--tables", kToyBank.string(), "--out", tmp / "em.dc", "--seed", "7",
                 "--em-iters", "3", "--em-particles", "10", "--trace", tmp / "trace.csv", "--report", tmp / "r.txt"});
  REQUIRE(em.code == 0);
  std::string trace = slurp(tmp / "trace.csv");
  CHECK(std::count(trace.begin(), trace.end(), '\n') == 1 + 4);
}

TEST_CASE("cli learn on generated bank data reports one tree per attribute") {
  TempDir tmp;
  auto bank = testsupport::generate_bank(120, 3);
  fs::create_directories(tmp.path / "tables");
  write_tables(bank.tables, tmp.path / "tables");
  spit(tmp.path / "bias.dc", testsupport::kBankBias);
  auto r = cli({"learn", "--bias", tmp / "bias.dc", "--tables", tmp / "tables", "--out", tmp / "p.dc", "--seed", "2"});
  REQUIRE(r.code == 0);
  for (const char* attr : {"freq", "savings", "creditScore", "age", "loanAmt", "status"})
    CHECK(r.out.find(std::string("tree ") + attr + " (") != std::string::npos);
  std::size_t trees = 0;
  for (std::size_t p = r.out.find("tree "); p != std::string::npos; p = r.out.find("tree ", p + 1))
    if (p == 0 || r.out[p - 1] == '\n') ++trees;
  CHECK(trees == 6);
}

TEST_CASE("cli query reproduces a known marginal") {
  TempDir tmp;
  spit(tmp.path / "loans.dc", kLoanProgram);
  auto r = cli({"query", "--program", tmp / "loans.dc", "--seed", "5", "query 20000 :: status(l_1)~=appr |"});
  REQUIRE(r.code == 0);
  auto j = nlohmann::json::parse(r.out);
  CHECK(std::abs(j["estimate"].get<double>() - 0.7) <= 0.01);
  CHECK(j["n_samples"].get<std::size_t>() == 20000);
  CHECK(j.contains("effective_evidence_weight"));
  // same seed, same answer
  CHECK(cli({"query", "--program", tmp / "loans.dc", "--seed", "5", "query 20000 :: status(l_1)~=appr |"}).out == r.out);

  auto cond = cli({"query", "--program", tmp / "loans.dc", "--seed", "5",
                   "query 5000 :: status(l_1)~=appr | creditScore(c_1)~=350."});
  REQUIRE(cond.code == 0);
  CHECK(nlohmann::json::parse(cond.out)["estimate"].get<double>() <= 1e-9);

  CHECK(cli({"query", "--program", tmp / "loans.dc", "--seed", "5", "query x :: status(l_1)~=appr"}).code == 1);
}

TEST_CASE("query text parsing") {
  QueryText q = parse_query_text("query 300 :: a(x)~=1, b(y) | c(z)~=k, d(w)~=2.5.");
  REQUIRE(q.samples);
  CHECK(*q.samples == 300);
  CHECK(q.goal.size() == 2);
  REQUIRE(q.evidence.size() == 2);
  CHECK(q.evidence[1].value == Value::number(2.5));
  CHECK(!parse_query_text("a(x)~=1").samples);
  CHECK_THROWS_AS(parse_query_text("query 3 :: a | b(x)~=Y"), Error);
}

TEST_CASE("cli complete fills query cells and writes a sidecar") {
  TempDir tmp;
  std::string bias = (kToyBank / "bias.dc").string();
  REQUIRE(cli({"learn", "--bias", bias, "--tables", kToyBank.string(), "--out", tmp / "p.dc", "--seed", "1"}).code == 0);
  auto r = cli({"complete", "--program", tmp / "p.dc", "--bias", bias, "--tables", kToyBank.string(), "--out",
                tmp / "done", "--seed", "3", "--samples", "2000"});
  REQUIRE(r.code == 0);
  BiasSpec schema = parse_bias(slurp(bias));
  TableBundle train = load_tables(schema, kToyBank);
  TableBundle done = load_tables(schema, tmp.path / "done");
  const EntityTable* acc = done.entity("account");
  REQUIRE(acc);
  int row = acc->row_of("a_20");
  int sav = acc->attribute_index("savings"), freq = acc->attribute_index("freq");
  REQUIRE(row >= 0);
  const Cell& s = acc->cells[row][sav];
  REQUIRE(s.status == CellStatus::Observed);
  auto range = attribute_ranges(train);
  double lo = 1e300, hi = -1e300;
  const EntityTable* tacc = train.entity("account");
  for (const auto& rr : tacc->cells)
    if (rr[sav].status == CellStatus::Observed) {
      lo = std::min(lo, rr[sav].value.num);
      hi = std::max(hi, rr[sav].value.num);
    }
  CHECK(range.at("savings") == hi - lo);
  CHECK(s.value.num >= lo);
  CHECK(s.value.num <= hi);
  const Cell& f = acc->cells[row][freq];
  REQUIRE(f.status == CellStatus::Observed);
  CHECK((f.value == Value::symbol("low") || f.value == Value::symbol("high")));
  auto side = nlohmann::json::parse(slurp(tmp / "done/predictions.json"));
  CHECK(side.size() == 3);
  for (const auto& c : side) CHECK(c.contains("value"));

  // nothing to complete: output equals input
  TempDir plain;
  write_tables(train, plain.path / "in");
  // drop the query marks so there is nothing to fill
  TableBundle noq = train;
  for (auto& t : noq.entities)
    for (auto& rr : t.cells)
      for (auto& c : rr)
        if (c.status == CellStatus::Query) c.status = CellStatus::Missing;
  fs::remove_all(plain.path / "in");
  fs::create_directories(plain.path / "in");
  write_tables(noq, plain.path / "in");
  REQUIRE(cli({"complete", "--program", tmp / "p.dc", "--bias", bias, "--tables", plain / "in", "--out",
               plain / "out", "--seed", "3"})
              .code == 0);
  for (const auto& e : fs::directory_iterator(plain.path / "in"))
    CHECK(slurp(e.path()) == slurp(plain.path / "out" / e.path().filename()));
}

TEST_CASE("cli eval scores a perfect program") {
  TempDir tmp;
  spit(tmp.path / "bias.dc", R"(
type(obj(o)). type(b(o)). type(t(o)). type(d(o)).
rand(b,discrete,[u,v]). rand(t,continuous,[]). rand(d,discrete,[p,q]).
)");
  fs::create_directories(tmp.path / "truth");
  fs::create_directories(tmp.path / "test");
  spit(tmp.path / "truth/obj.csv", "id,b,t,d\ne1,u,1,p\ne2,v,5,q\ne3,u,1,p\ne4,v,5,q\n");
  spit(tmp.path / "test/obj.csv", "id,b,t,d\ne1,u,?,?\ne2,v,?,-\ne3,u,-,?\ne4,v,5,?\n");
  spit(tmp.path / "p.dc", R"(
t(E) ~ val(1) := obj(E), b(E)~=u.
t(E) ~ val(5) := obj(E), b(E)~=v.
d(E) ~ val(p) := obj(E), b(E)~=u.
d(E) ~ val(q) := obj(E), b(E)~=v.
)");
  auto r = cli({"eval", "--program", tmp / "p.dc", "--bias", tmp / "bias.dc", "--tables", tmp / "test", "--truth",
                tmp / "truth", "--seed", "1", "--samples", "50"});
  REQUIRE(r.code == 0);
  auto rows = parse_csv(r.out);
  REQUIRE(rows.size() == 5);
  CHECK(rows[0] == std::vector<std::string>{"attribute", "metric", "value", "n"});
  std::set<std::pair<std::string, std::string>> seen;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(seen.insert({rows[i][0], rows[i][1]}).second);
    if (rows[i][1] == "nrmse") CHECK(std::stod(rows[i][2]) == 0.0);
    if (rows[i][1] == "auc") CHECK(std::stod(rows[i][2]) == 1.0);
  }
}
