#pragma once

#include <string>
#include <vector>

#include "dcml/learner.hpp"
#include "dcml/relational.hpp"

namespace dcml {

struct EmParams {
  std::size_t iterations = 5;
  std::size_t particles = 50;       // K per E-step
  std::size_t max_particles = 800;  // cap for the doubling retry on zero weight
  LearnParams learn;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct Imputed {
  CellRef cell;
  Value value;
};

// Missing (not query) cells of a bundle.
std::vector<CellRef> missing_cells(const TableBundle& data);

// Learns from partial data; missing parents go through fail branches.
JmpModel bootstrap_program(const TableBundle& data, const BiasSpec& bias, const LearnParams& params);

// One joint draw of every missing cell from p(Z | observed) by likelihood
// weighted particles; cells the program leaves undefined are not imputed.
std::vector<Imputed> e_step_sample(const Program& program, const TableBundle& data, const BiasSpec& bias,
                                   std::size_t particles, std::uint64_t seed, unsigned threads = 1,
                                   std::size_t max_particles = 800);

// The bundle with imputed cells marked observed; the input is left untouched.
TableBundle with_imputation(const TableBundle& data, const std::vector<Imputed>& z);

// Complete-data relearning on data plus imputation.
JmpModel m_step_relearn(const TableBundle& data, const std::vector<Imputed>& z, const BiasSpec& bias,
                        const LearnParams& params);

// Log-likelihood of the observed cells with missing cells marginalized out,
// estimated per dependency component by the mean particle weight. Cell
// densities are floored at kProbabilityFloor so the result stays finite.
double observed_loglik(const Program& program, const TableBundle& data, const BiasSpec& bias,
                       std::size_t particles, std::uint64_t seed, unsigned threads = 1);

struct EmResult {
  JmpModel model;                 // final program and trees
  std::vector<double> trace;      // iteration 0 (bootstrap) through the last
  std::vector<Imputed> imputation;  // the last E-step draw
};

EmResult run_stochastic_em(const TableBundle& data, const BiasSpec& bias, const EmParams& params);

std::string trace_csv(const std::vector<double>& trace);

}  // namespace dcml
