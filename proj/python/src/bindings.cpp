#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "dcml/em.hpp"
#include "dcml/evaluation.hpp"
#include "dcml/learner.hpp"

namespace py = pybind11;
using namespace dcml;

namespace {

Value to_value(const py::handle& h) {
  if (py::isinstance<py::str>(h)) return Value::symbol(h.cast<std::string>());
  if (py::isinstance<py::bool_>(h)) throw py::type_error("evidence values are numbers or labels");
  return Value::number(h.cast<double>());
}

py::object from_value(const Value& v) {
  if (v.is_num()) return py::float_(v.num);
  return py::str(symbol_name(v.sym));
}

std::vector<EvidenceItem> to_evidence(const py::dict& d) {
  std::vector<EvidenceItem> out;
  for (const auto& [k, v] : d) out.push_back({parse_term(k.cast<std::string>()), to_value(v), false});
  return out;
}

py::dict estimate_dict(const Estimate& e) {
  py::dict d;
  d["probability"] = e.probability;
  d["continuous"] = e.continuous;
  if (e.continuous) {
    d["mean"] = e.mean;
    d["variance"] = e.variance;
  } else {
    py::dict labels;
    for (const auto& [v, p] : e.labels) labels[from_value(v)] = p;
    d["labels"] = labels;
  }
  d["defined_mass"] = e.defined_mass;
  d["n_samples"] = e.n_samples;
  d["effective_evidence_weight"] = e.effective_evidence_weight;
  return d;
}

EstimateOptions options(std::size_t samples, std::uint64_t seed, unsigned threads) {
  EstimateOptions o;
  o.n_samples = samples;
  o.seed = seed;
  o.threads = threads;
  return o;
}

LearnParams learn_params(std::uint64_t seed, double epsilon, std::size_t max_depth, unsigned threads) {
  LearnParams lp;
  lp.seed = seed;
  lp.epsilon = epsilon;
  lp.max_depth = max_depth;
  lp.threads = threads;
  return lp;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Distributional clause programs: inference, structure learning and EM over relational tables";

  static py::exception<Error> error(m, "DcmlError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = error;
      py::object inst = exc(e.what());
      inst.attr("kind") = error_kind_name(e.kind());
      inst.attr("exit_code") = exit_code_for(e.kind());
      PyErr_SetObject(exc.ptr(), inst.ptr());
    }
  });

  m.def(
      "format_program", [](const std::string& text) { return print_program(parse_program(text)); }, py::arg("text"),
      "Parse a program and print it in canonical form.");

  m.def(
      "validate",
      [](const std::string& text) {
        std::vector<std::string> out;
        for (const auto& d : validate_program(parse_program(text))) out.push_back(d.str());
        return out;
      },
      py::arg("text"), "Diagnostics for a program; empty when it is valid.");

  m.def(
      "query",
      [](const std::string& program, const std::string& goal, const py::dict& evidence, std::size_t samples,
         std::uint64_t seed, unsigned threads) {
        KnowledgeBase kb(parse_program(program));
        auto ev = to_evidence(evidence);
        Estimate e;
        {
          py::gil_scoped_release release;
          e = estimate_conditional(kb, parse_body(goal), ev, options(samples, seed, threads));
        }
        return estimate_dict(e);
      },
      py::arg("program"), py::arg("goal"), py::arg("evidence") = py::dict(), py::arg("samples") = 1000,
      py::arg("seed") = 0, py::arg("threads") = 1, "Probability of a goal given rv -> value evidence.");

  m.def(
      "predict",
      [](const std::string& program, const std::string& rv, const py::dict& evidence, std::size_t samples,
         std::uint64_t seed, unsigned threads) {
        KnowledgeBase kb(parse_program(program));
        auto ev = to_evidence(evidence);
        Estimate e;
        {
          py::gil_scoped_release release;
          e = estimate_predictive(kb, parse_term(rv), ev, options(samples, seed, threads));
        }
        return estimate_dict(e);
      },
      py::arg("program"), py::arg("rv"), py::arg("evidence") = py::dict(), py::arg("samples") = 1000,
      py::arg("seed") = 0, py::arg("threads") = 1, "Predictive distribution of one random variable.");

  m.def(
      "learn",
      [](const std::string& bias_text, const std::filesystem::path& tables, std::uint64_t seed, double epsilon,
         std::size_t max_depth, unsigned threads) {
        BiasSpec bias = parse_bias(bias_text);
        TableBundle b = load_tables(bias, tables);
        JmpModel model;
        {
          py::gil_scoped_release release;
          model = learn_jmp(b, bias, learn_params(seed, epsilon, max_depth, threads));
        }
        return py::make_tuple(print_program(model.program, true), model.report());
      },
      py::arg("bias"), py::arg("tables"), py::arg("seed"), py::arg("epsilon") = 0.0, py::arg("max_depth") = 4,
      py::arg("threads") = 1, "Learn a program from a directory of table CSVs; returns (program, report).");

  m.def(
      "learn_em",
      [](const std::string& bias_text, const std::filesystem::path& tables, std::uint64_t seed, std::size_t iterations,
         std::size_t particles, unsigned threads) {
        BiasSpec bias = parse_bias(bias_text);
        TableBundle b = load_tables(bias, tables);
        EmParams ep;
        ep.iterations = iterations;
        ep.particles = particles;
        ep.seed = seed;
        ep.threads = threads;
        ep.learn.seed = seed;
        EmResult r;
        {
          py::gil_scoped_release release;
          r = run_stochastic_em(b, bias, ep);
        }
        return py::make_tuple(print_program(r.model.program, true), r.trace);
      },
      py::arg("bias"), py::arg("tables"), py::arg("seed"), py::arg("iterations") = 5, py::arg("particles") = 50,
      py::arg("threads") = 1, "Stochastic EM over missing cells; returns (program, log-likelihood trace).");

  m.def("nrmse", &nrmse, py::arg("predictions"), py::arg("truths"), py::arg("range"),
        "Root mean squared error over the range, clipped to [0, 1].");
  m.def("auc_total", &auc_total, py::arg("scores"), py::arg("truths"),
        "Prevalence-weighted one-vs-rest AUC; scores[i][k] scores class k for item i.");
}
