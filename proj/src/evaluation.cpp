#include "dcml/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace dcml {

namespace {

// Neumaier compensated sum, so totals do not depend on summation order noise.
struct Sum {
  double s = 0.0, c = 0.0;
  void add(double x) {
    double t = s + x;
    c += std::abs(s) >= std::abs(x) ? (s - t) + x : (x - t) + s;
    s = t;
  }
  double value() const { return s + c; }
};

std::vector<EvidenceItem> without(const std::vector<EvidenceItem>& ev, const Term& rv) {
  std::string key = ground_key(rv);
  std::vector<EvidenceItem> out;
  out.reserve(ev.size());
  for (const auto& e : ev)
    if (ground_key(e.rv) != key) out.push_back(e);
  return out;
}

}  // namespace

double nrmse(const std::vector<double>& preds, const std::vector<double>& truths, double range) {
  if (preds.empty()) fail(ErrorKind::EmptyInput, "no predictions to score");
  if (preds.size() != truths.size()) fail(ErrorKind::ArityMismatch, "predictions and truths differ in length");
  if (!(range > 0.0)) fail(ErrorKind::ZeroRange, "attribute range must be positive");
  Sum se;
  for (std::size_t i = 0; i < preds.size(); ++i) se.add((preds[i] - truths[i]) * (preds[i] - truths[i]));
  double v = std::sqrt(se.value() / static_cast<double>(preds.size())) / range;
  return std::clamp(v, 0.0, 1.0);
}

double auc_total(const std::vector<std::vector<double>>& scores, const std::vector<std::size_t>& truths) {
  if (scores.empty()) fail(ErrorKind::EmptyInput, "no predictions to score");
  if (scores.size() != truths.size()) fail(ErrorKind::ArityMismatch, "scores and truths differ in length");
  std::size_t d = scores[0].size();
  for (const auto& s : scores)
    if (s.size() != d) fail(ErrorKind::ArityMismatch, "every item needs one score per class");
  std::vector<std::size_t> count(d, 0);
  for (auto t : truths) {
    if (t >= d) fail(ErrorKind::ArityMismatch, "truth label outside the class range");
    ++count[t];
  }
  std::size_t present = std::count_if(count.begin(), count.end(), [](std::size_t c) { return c > 0; });
  if (present < 2) fail(ErrorKind::SingleClass, "AUC needs at least two classes among the truths");
  const std::size_t n = truths.size();
  Sum total;
  for (std::size_t k = 0; k < d; ++k) {
    if (count[k] == 0) continue;
    // Mann-Whitney with mid-ranks: ties between a positive and a negative count one half
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a][k] < scores[b][k]; });
    double pos_rank = 0.0;
    for (std::size_t i = 0; i < n;) {
      std::size_t j = i;
      while (j < n && scores[idx[j]][k] == scores[idx[i]][k]) ++j;
      double mid = (static_cast<double>(i) + static_cast<double>(j) + 1.0) / 2.0;
      for (std::size_t m = i; m < j; ++m)
        if (truths[idx[m]] == k) pos_rank += mid;
      i = j;
    }
    double np = static_cast<double>(count[k]), nn = static_cast<double>(n - count[k]);
    double auc = nn == 0 ? 0.5 : (pos_rank - np * (np + 1.0) / 2.0) / (np * nn);
    total.add(np / static_cast<double>(n) * auc);
  }
  return total.value();
}

double cell_log_prob(const KnowledgeBase& kb, DependencyGraph& graph, const TestCell& cell,
                     const std::vector<EvidenceItem>& evidence, const EstimateOptions& opt) {
  auto rel = relevant_evidence(graph, {cell.rv}, without(evidence, cell.rv));
  double lp = estimate_log_prob(kb, cell.rv, cell.truth, rel.all(), opt);
  const double floor = std::log(kProbabilityFloor);
  if (std::isnan(lp) || lp < floor) lp = floor;
  return lp;
}

double wpll(const KnowledgeBase& kb, const std::vector<TestCell>& cells, const std::vector<EvidenceItem>& evidence,
            const EstimateOptions& opt) {
  if (cells.empty()) fail(ErrorKind::EmptyInput, "no test instances");
  DependencyGraph graph(kb);
  Sum s;
  for (const auto& c : cells) s.add(cell_log_prob(kb, graph, c, evidence, opt));
  return s.value() / static_cast<double>(cells.size());
}

CellPrediction predict_cell(const KnowledgeBase& kb, DependencyGraph& graph, const Term& rv,
                            const std::vector<EvidenceItem>& evidence, const EstimateOptions& opt) {
  CellPrediction out;
  out.rv = rv;
  try {
    auto rel = relevant_evidence(graph, {rv}, without(evidence, rv));
    out.estimate = estimate_predictive(kb, rv, rel.all(), opt);
    out.point = out.estimate.mode();
    if (!out.point) out.error = "no clause defines " + to_string(rv);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::ZeroEvidenceWeight) throw;
    out.error = e.what();
  }
  return out;
}

std::vector<EvidenceItem> observed_evidence(const TableBundle& b) {
  std::vector<EvidenceItem> out;
  for (const auto& t : b.entities)
    for (std::size_t r = 0; r < t.keys.size(); ++r)
      for (std::size_t a = 0; a < t.attributes.size(); ++a)
        if (t.cells[r][a].status == CellStatus::Observed)
          out.push_back(EvidenceItem{CellRef{t.name, t.keys[r], t.attributes[a]}.rv(), t.cells[r][a].value, false});
  return out;
}

std::map<std::string, double> attribute_ranges(const TableBundle& b) {
  std::map<std::string, double> out;
  for (const auto& t : b.entities)
    for (std::size_t a = 0; a < t.attributes.size(); ++a) {
      const RandDecl* rd = b.schema.rand(t.attributes[a]);
      if (!rd || rd->kind != AttrKind::Continuous) continue;
      double lo = INFINITY, hi = -INFINITY;
      for (const auto& row : t.cells)
        if (row[a].status == CellStatus::Observed && row[a].value.is_num()) {
          lo = std::min(lo, row[a].value.num);
          hi = std::max(hi, row[a].value.num);
        }
      if (lo <= hi) out[t.attributes[a]] = hi - lo;
    }
  return out;
}

std::vector<MetricRow> evaluate_tables(const KnowledgeBase& kb, const TableBundle& test, const TableBundle& truth,
                                       const std::map<std::string, double>& ranges, const EstimateOptions& opt) {
  std::vector<EvidenceItem> evidence = observed_evidence(test);
  DependencyGraph graph(kb);
  struct Acc {
    std::vector<double> preds, truths;
    std::vector<std::vector<double>> scores;
    std::vector<std::size_t> labels;
    Sum ll;
    std::size_t n = 0;
  };
  std::map<std::string, Acc> acc;
  std::vector<std::string> order;
  for (const auto& t : test.entities) {
    const EntityTable* tt = truth.entity(t.name);
    if (!tt) fail(ErrorKind::Data, "truth tables lack " + t.name);
    for (std::size_t r = 0; r < t.keys.size(); ++r)
      for (std::size_t a = 0; a < t.attributes.size(); ++a) {
        if (t.cells[r][a].status != CellStatus::Query) continue;
        const std::string& attr = t.attributes[a];
        int tr = tt->row_of(t.keys[r]);
        int ta = tt->attribute_index(attr);
        if (tr < 0 || ta < 0 || tt->cells[tr][ta].status != CellStatus::Observed)
          fail(ErrorKind::Data, "no truth for " + attr + "(" + t.keys[r] + ")");
        Value v = tt->cells[tr][ta].value;
        Term rv = CellRef{t.name, t.keys[r], attr}.rv();
        const RandDecl* rd = test.schema.rand(attr);
        if (!acc.count(attr)) order.push_back(attr);
        Acc& A = acc[attr];
        CellPrediction p = predict_cell(kb, graph, rv, evidence, opt);
        if (!p.error.empty()) fail(ErrorKind::ZeroEvidenceWeight, "no prediction for " + to_string(rv) + ": " + p.error);
        if (rd && rd->kind == AttrKind::Discrete) {
          std::vector<double> sc(rd->domain.size(), 0.0);
          for (const auto& [label, prob] : p.estimate.labels)
            for (std::size_t k = 0; k < rd->domain.size(); ++k)
              if (rd->domain[k] == label) sc[k] = prob;
          auto it = std::find(rd->domain.begin(), rd->domain.end(), v);
          if (it == rd->domain.end()) fail(ErrorKind::Data, "truth outside the domain of " + attr);
          A.scores.push_back(sc);
          A.labels.push_back(static_cast<std::size_t>(it - rd->domain.begin()));
        } else {
          A.preds.push_back(p.point->num);
          A.truths.push_back(v.num);
        }
        A.ll.add(cell_log_prob(kb, graph, TestCell{rv, v}, evidence, opt));
        ++A.n;
      }
  }
  std::vector<MetricRow> rows;
  for (const auto& attr : order) {
    Acc& A = acc[attr];
    if (!A.preds.empty()) {
      auto it = ranges.find(attr);
      if (it == ranges.end()) fail(ErrorKind::ZeroRange, "no training range for " + attr);
      rows.push_back({attr, "nrmse", nrmse(A.preds, A.truths, it->second), A.n});
    } else {
      rows.push_back({attr, "auc", auc_total(A.scores, A.labels), A.n});
    }
    rows.push_back({attr, "wpll", A.ll.value() / static_cast<double>(A.n), A.n});
  }
  return rows;
}

std::string metrics_csv(const std::vector<MetricRow>& rows) {
  std::vector<std::vector<std::string>> t{{"attribute", "metric", "value", "n"}};
  for (const auto& r : rows) t.push_back({r.attribute, r.metric, format_number(r.value), std::to_string(r.n)});
  return format_csv(t);
}

}  // namespace dcml
