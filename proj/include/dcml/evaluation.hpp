#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dcml/engine.hpp"
#include "dcml/relational.hpp"

namespace dcml {

// RMSE divided by the attribute range, clipped to [0, 1].
double nrmse(const std::vector<double>& preds, const std::vector<double>& truths, double range);

// Prevalence-weighted one-vs-rest AUC. scores[i][k] is the score of class k
// for item i; tied pairs count one half.
double auc_total(const std::vector<std::vector<double>>& scores, const std::vector<std::size_t>& truths);

// Probabilities below this floor are clamped before taking logs.
inline constexpr double kProbabilityFloor = 1e-12;

struct TestCell {
  Term rv;
  Value truth;
};

// Mean of ln p(cell = truth | evidence without the cell), densities for
// continuous cells. Evidence is pruned to the relevant part per cell.
double wpll(const KnowledgeBase& kb, const std::vector<TestCell>& cells,
            const std::vector<EvidenceItem>& evidence, const EstimateOptions& opt);
// Log-probability of one cell, floored; `graph` caches dependency edges.
double cell_log_prob(const KnowledgeBase& kb, DependencyGraph& graph, const TestCell& cell,
                     const std::vector<EvidenceItem>& evidence, const EstimateOptions& opt);

struct CellPrediction {
  Term rv;
  Estimate estimate;
  std::optional<Value> point;  // mode of the predictive distribution
  std::string error;           // set when the estimate failed
};

CellPrediction predict_cell(const KnowledgeBase& kb, DependencyGraph& graph, const Term& rv,
                            const std::vector<EvidenceItem>& evidence, const EstimateOptions& opt);

// Observed cells of a bundle as observational evidence.
std::vector<EvidenceItem> observed_evidence(const TableBundle& b);

// Range (max - min) of every continuous attribute over observed cells.
std::map<std::string, double> attribute_ranges(const TableBundle& b);

struct MetricRow {
  std::string attribute;
  std::string metric;
  double value = 0.0;
  std::size_t n = 0;
};

// Predicts every query cell of `test` and scores it against the same cell
// in `truth`: NRMSE for continuous attributes, AUC for discrete ones, WPLL
// for both. Ranges come from training data.
std::vector<MetricRow> evaluate_tables(const KnowledgeBase& kb, const TableBundle& test, const TableBundle& truth,
                                       const std::map<std::string, double>& ranges, const EstimateOptions& opt);

std::string metrics_csv(const std::vector<MetricRow>& rows);

}  // namespace dcml
