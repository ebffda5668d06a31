#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "dcml/common.hpp"

namespace dcml {

struct ValDist {
  Value value;
};

struct Gaussian {
  double mean = 0.0;
  double variance = 1.0;  // second parameter is the variance, not the std-dev
};

struct Discrete {
  std::vector<Value> labels;
  std::vector<double> probs;
};

using Distribution = std::variant<ValDist, Gaussian, Discrete>;

Distribution make_gaussian(double mean, double variance);
Distribution make_discrete(std::vector<Value> labels, std::vector<double> probs);

// Weight vectors hold one entry per input followed by the intercept.
struct Linear {
  std::vector<double> weights;
};
struct Logistic {
  std::vector<double> weights;
};
struct Softmax {
  std::vector<std::vector<double>> rows;  // one row per label
};

using StatModel = std::variant<Linear, Logistic, Softmax>;

std::size_t input_arity(const StatModel& m);
std::vector<double> eval_stat_model(const StatModel& m, const std::vector<double>& inputs);

double log_density(const Distribution& d, const Value& x);
Value sample_distribution(const Distribution& d, Rng& rng);
bool is_continuous(const Distribution& d);

struct WeightedSample {
  std::vector<double> features;
  Value target;
  double weight = 1.0;
};

enum class LeafKind { Continuous, Discrete };

struct FitOptions {
  std::vector<Value> domain;  // label order for discrete leaves
  double ridge = 1e-6;
  double variance_floor = 1e-6;
  double laplace = 1e-3;
  int max_iterations = 500;
  double gradient_tolerance = 1e-8;
};

// A fitted leaf: a distribution whose parameters may come from a model.
struct Leaf {
  Distribution dist;  // for model leaves: Gaussian holds the variance, Discrete the labels
  std::optional<StatModel> model;

  Distribution predict(const std::vector<double>& features) const;
  std::size_t n_params() const;
};

struct FitResult {
  Leaf leaf;
  double expected_ll = 0.0;
  std::size_t n_params = 0;
};

FitResult fit_weighted_mle(LeafKind kind, const std::vector<WeightedSample>& data,
                           const FitOptions& opt = {});

// Normalized penalized negative log-likelihood of a logistic / softmax model
// and its gradient, in the model's own coordinates. Exposed for gradient checks.
struct Objective {
  double value = 0.0;
  std::vector<double> gradient;  // row-major for softmax
};
Objective logistic_objective(const std::vector<double>& weights,
                             const std::vector<WeightedSample>& data, const FitOptions& opt);
Objective softmax_objective(const std::vector<std::vector<double>>& rows,
                            const std::vector<WeightedSample>& data, const FitOptions& opt);

}  // namespace dcml
