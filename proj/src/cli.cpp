#include "dcml/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "dcml/em.hpp"
#include "dcml/evaluation.hpp"
#include "dcml/learner.hpp"
#include "dcml/relational.hpp"

namespace dcml {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void guard_output(const fs::path& p, bool force) {
  if (fs::exists(p) && !force) fail(ErrorKind::Usage, p.string() + " exists; pass --force to overwrite");
}

void write_file(const fs::path& p, const std::string& text, bool force) {
  guard_output(p, force);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + p.string());
  out << text;
}

std::string cells_csv(const std::vector<CellRef>& cells) {
  std::vector<std::vector<std::string>> rows{{"table", "key", "attribute"}};
  for (const auto& c : cells) rows.push_back({c.table, c.key, c.attribute});
  return format_csv(rows);
}

json estimate_json(const Estimate& e, bool predictive) {
  json j;
  if (!predictive) {
    j["estimate"] = e.probability;
  } else if (e.continuous) {
    j["estimate"] = {{"mean", e.mean}, {"variance", e.variance}};
    j["defined_mass"] = e.defined_mass;
  } else {
    json d = json::object();
    for (const auto& [v, p] : e.labels) d[v.str()] = p;
    j["estimate"] = d;
    j["defined_mass"] = e.defined_mass;
  }
  j["n_samples"] = e.n_samples;
  j["effective_evidence_weight"] = e.effective_evidence_weight;
  return j;
}

struct Common {
  std::string bias, tables, program, out;
  std::optional<std::uint64_t> seed;
  std::size_t samples = 1000;
  double epsilon = 0.0;
  std::size_t max_depth = 4, max_body = 6;
  std::size_t em_iters = 5, em_particles = 50;
  unsigned threads = 1;
  bool force = false;
};

std::uint64_t need_seed(const Common& c) {
  if (!c.seed) fail(ErrorKind::Usage, "--seed is required for this command");
  return *c.seed;
}

LearnParams learn_params(const Common& c) {
  LearnParams lp;
  lp.epsilon = c.epsilon;
  lp.max_depth = c.max_depth;
  lp.max_body = c.max_body;
  lp.seed = need_seed(c);
  lp.threads = c.threads;
  return lp;
}

EstimateOptions estimate_options(const Common& c) {
  EstimateOptions o;
  o.n_samples = c.samples;
  o.seed = need_seed(c);
  o.threads = c.threads;
  return o;
}

int cmd_transform(const Common& c, std::ostream& out) {
  BiasSpec bias = parse_bias(read_file(c.bias), c.bias);
  TableBundle b = load_tables(bias, c.tables);
  Transformed t = transform_tables(b);
  fs::path dir = c.out;
  for (const char* f : {"facts.dc", "missing.csv", "queries.csv"}) guard_output(dir / f, c.force);
  write_file(dir / "facts.dc", print_program(t.program()), true);
  write_file(dir / "missing.csv", cells_csv(t.missing), true);
  write_file(dir / "queries.csv", cells_csv(t.query), true);
  out << t.relational.size() << " relational facts, " << t.attributes.size() << " attribute facts, "
      << t.missing.size() << " missing, " << t.query.size() << " query cells\n";
  return 0;
}

int cmd_learn(const Common& c, const std::string& report, const std::string& trace, bool em, std::ostream& out) {
  BiasSpec bias = parse_bias(read_file(c.bias), c.bias);
  TableBundle b = load_tables(bias, c.tables);
  LearnParams lp = learn_params(c);
  guard_output(c.out, c.force);
  if (!report.empty()) guard_output(report, c.force);
  if (!trace.empty()) guard_output(trace, c.force);
  JmpModel model;
  if (em) {
    EmParams ep;
    ep.iterations = c.em_iters;
    ep.particles = c.em_particles;
    ep.learn = lp;
    ep.seed = lp.seed;
    ep.threads = c.threads;
    EmResult r = run_stochastic_em(b, bias, ep);
    model = std::move(r.model);
    if (!trace.empty()) write_file(trace, trace_csv(r.trace), true);
    else out << trace_csv(r.trace);
  } else {
    model = learn_jmp(b, bias, lp);
  }
  write_file(c.out, print_program(model.program, true), true);
  if (!report.empty()) write_file(report, model.report(), true);
  else out << model.report();
  return 0;
}

int cmd_query(const Common& c, const std::vector<std::string>& queries, std::ostream& out) {
  KnowledgeBase kb(parse_program(read_file(c.program), c.program));
  EstimateOptions base = estimate_options(c);
  for (const auto& text : queries) {
    QueryText q = parse_query_text(text);
    EstimateOptions o = base;
    if (q.samples) o.n_samples = *q.samples;
    // a single rv~=Var goal asks for the predictive distribution
    bool predictive = q.goal.size() == 1 && q.goal[0].is("~=", 2) && q.goal[0].args[1].is_var();
    Estimate e = predictive ? estimate_predictive(kb, q.goal[0].args[0], q.evidence, o)
                            : estimate_conditional(kb, q.goal, q.evidence, o);
    json j{{"query", text}};
    j.update(estimate_json(e, predictive));
    out << j.dump() << "\n";
  }
  return 0;
}

int cmd_complete(const Common& c, std::ostream& out) {
  BiasSpec bias = parse_bias(read_file(c.bias), c.bias);
  TableBundle b = load_tables(bias, c.tables);
  EstimateOptions opt = estimate_options(c);
  fs::path dir = c.out;
  for (const auto& t : b.entities) guard_output(dir / (t.name + ".csv"), c.force);
  for (const auto& l : b.links) guard_output(dir / (l.name + ".csv"), c.force);
  guard_output(dir / "predictions.json", c.force);

  KnowledgeBase kb(program_for_tables(parse_program(read_file(c.program), c.program), b));
  DependencyGraph graph(kb);
  std::vector<EvidenceItem> evidence = observed_evidence(b);
  json sidecar = json::array();
  std::size_t filled = 0, flagged = 0;
  TableBundle done = b;
  for (auto& t : done.entities)
    for (std::size_t r = 0; r < t.keys.size(); ++r)
      for (std::size_t a = 0; a < t.attributes.size(); ++a) {
        Cell& cell = t.cells[r][a];
        if (cell.status != CellStatus::Query) continue;
        CellPrediction p = predict_cell(kb, graph, Term::compound(t.attributes[a], {Term::sym(t.keys[r])}), evidence, opt);
        json j{{"table", t.name}, {"key", t.keys[r]}, {"attribute", t.attributes[a]}};
        if (p.point) {
          cell.status = CellStatus::Observed;
          cell.value = *p.point;
          j["value"] = p.point->str();
          j.update(estimate_json(p.estimate, true));
          ++filled;
        } else {
          // left as a query cell
          j["error"] = p.error.empty() ? "no prediction" : p.error;
          ++flagged;
        }
        sidecar.push_back(j);
      }
  fs::create_directories(dir);
  write_tables(done, dir);
  write_file(dir / "predictions.json", sidecar.dump(2) + "\n", true);
  out << filled << " cells filled, " << flagged << " flagged\n";
  return 0;
}

int cmd_eval(const Common& c, const std::string& truth_dir, const std::string& train_dir, std::ostream& out) {
  BiasSpec bias = parse_bias(read_file(c.bias), c.bias);
  TableBundle test = load_tables(bias, c.tables);
  TableBundle truth = load_tables(bias, truth_dir);
  auto ranges = attribute_ranges(train_dir.empty() ? truth : load_tables(bias, train_dir));
  KnowledgeBase kb(program_for_tables(parse_program(read_file(c.program), c.program), test));
  std::string csv = metrics_csv(evaluate_tables(kb, test, truth, ranges, estimate_options(c)));
  if (c.out.empty()) out << csv;
  else write_file(c.out, csv, c.force);
  return 0;
}

std::string trim(std::string s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

QueryText parse_query_text(const std::string& text) {
  QueryText q;
  std::string s = trim(text);
  if (!s.empty() && s.back() == '.') s = trim(s.substr(0, s.size() - 1));
  if (s.rfind("query", 0) == 0) s = trim(s.substr(5));
  auto sep = s.find("::");
  if (sep != std::string::npos) {
    std::string n = trim(s.substr(0, sep));
    if (!n.empty()) {
      std::size_t used = 0;
      unsigned long long v = 0;
      try {
        v = std::stoull(n, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != n.size() || v == 0) fail(ErrorKind::Usage, "bad sample count '" + n + "'");
      q.samples = static_cast<std::size_t>(v);
    }
    s = trim(s.substr(sep + 2));
  }
  std::string goal = s, ev;
  if (auto bar = s.find('|'); bar != std::string::npos) {
    goal = trim(s.substr(0, bar));
    ev = trim(s.substr(bar + 1));
  }
  if (goal.empty()) fail(ErrorKind::Usage, "empty query goal");
  q.goal = parse_body(goal);
  if (!ev.empty())
    for (const auto& lit : parse_body(ev)) {
      auto v = lit.is("~=", 2) ? lit.args[1].value() : std::nullopt;
      if (!v || !lit.args[0].ground())
        fail(ErrorKind::Usage, "evidence must be rv~=value with a ground value: " + to_string(lit));
      q.evidence.push_back(EvidenceItem{lit.args[0], *v, false});
    }
  return q;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Learning and inference for joint model programs over relational tables", "dcml"};
  app.require_subcommand(1);
  Common c;
  std::string report, trace, truth, train;
  std::vector<std::string> queries;

  auto seed = [&](CLI::App* s) {
    s->add_option("--seed", c.seed, "random seed")->check(CLI::NonNegativeNumber);
    s->add_option("--threads", c.threads, "worker threads")->check(CLI::Range(1u, 256u));
  };
  auto learn_flags = [&](CLI::App* s) {
    s->add_option("--bias", c.bias, "bias file (types, rand, modes, rank)")->required();
    s->add_option("--tables", c.tables, "directory of table CSVs")->required();
    s->add_option("--out", c.out, "output program file")->required();
    s->add_option("--report", report, "tree report file (stdout when absent)");
    s->add_option("--epsilon", c.epsilon, "minimum split gain")->check(CLI::NonNegativeNumber);
    s->add_option("--max-depth", c.max_depth, "tree depth limit")->check(CLI::Range(1, 64));
    s->add_option("--max-body", c.max_body, "clause body length limit")->check(CLI::Range(1, 64));
    s->add_flag("--force", c.force, "overwrite outputs");
    seed(s);
  };

  auto* transform = app.add_subcommand("transform", "tables to facts");
  transform->add_option("--bias", c.bias, "bias file")->required();
  transform->add_option("--tables", c.tables, "directory of table CSVs")->required();
  transform->add_option("--out", c.out, "output directory")->required();
  transform->add_flag("--force", c.force, "overwrite outputs");

  auto* learn = app.add_subcommand("learn", "learn a program from complete or partial tables");
  learn_flags(learn);

  auto* learn_em = app.add_subcommand("learn-em", "learn with stochastic EM over missing cells");
  learn_flags(learn_em);
  learn_em->add_option("--trace", trace, "log-likelihood trace CSV (stdout when absent)");
  learn_em->add_option("--em-iters", c.em_iters, "EM iterations")->check(CLI::Range(0, 1000));
  learn_em->add_option("--em-particles", c.em_particles, "E-step particles")->check(CLI::Range(1, 100000));

  auto* query = app.add_subcommand("query", "estimate query probabilities");
  query->add_option("--program", c.program, "program file")->required();
  query->add_option("--samples", c.samples, "default sample count")->check(CLI::Range(1, 100000000));
  query->add_option("queries", queries, "query texts: 'query N :: goal | evidence'")->required();
  seed(query);

  auto* complete = app.add_subcommand("complete", "fill query cells with their most likely values");
  complete->add_option("--program", c.program, "program file")->required();
  complete->add_option("--bias", c.bias, "bias file")->required();
  complete->add_option("--tables", c.tables, "directory of table CSVs with ? cells")->required();
  complete->add_option("--out", c.out, "output directory")->required();
  complete->add_option("--samples", c.samples, "samples per cell")->check(CLI::Range(1, 100000000));
  complete->add_flag("--force", c.force, "overwrite outputs");
  seed(complete);

  auto* eval = app.add_subcommand("eval", "score predictions of query cells against truth");
  eval->add_option("--program", c.program, "program file")->required();
  eval->add_option("--bias", c.bias, "bias file")->required();
  eval->add_option("--tables", c.tables, "test tables with ? cells")->required();
  eval->add_option("--truth", truth, "tables holding the true values")->required();
  eval->add_option("--train", train, "tables for attribute ranges (defaults to truth)");
  eval->add_option("--out", c.out, "metrics CSV (stdout when absent)");
  eval->add_option("--samples", c.samples, "samples per cell")->check(CLI::Range(1, 100000000));
  eval->add_flag("--force", c.force, "overwrite outputs");
  seed(eval);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (transform->parsed()) return cmd_transform(c, out);
    if (learn->parsed()) return cmd_learn(c, report, "", false, out);
    if (learn_em->parsed()) return cmd_learn(c, report, trace, true, out);
    if (query->parsed()) return cmd_query(c, queries, out);
    if (complete->parsed()) return cmd_complete(c, out);
    if (eval->parsed()) return cmd_eval(c, truth, train, out);
  } catch (const Error& e) {
    err << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const fs::filesystem_error& e) {
    err << "Io: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace dcml
