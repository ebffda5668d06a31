#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <thread>

#include "dcml/engine.hpp"
#include "parallel.hpp"

namespace dcml {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct SampleOut {
  double log_we = 0.0;
  bool holds = false;
  std::optional<Value> value;
  bool continuous = false;
};

double max_finite(const std::vector<SampleOut>& s) {
  double m = kNegInf;
  for (const auto& o : s) m = std::max(m, o.log_we);
  return m;
}

void run_samples(const KnowledgeBase& kb, const std::vector<EvidenceItem>& evidence, const EstimateOptions& opt,
                 const CompiledGoal* goal, const Term* rv, std::vector<SampleOut>& out) {
  if (opt.n_samples == 0) fail(ErrorKind::Usage, "number of samples must be positive");
  out.assign(opt.n_samples, SampleOut{});
  parallel_for(opt.n_samples, opt.threads, [&](std::size_t i) {
    PartialWorld w;
    for (const auto& e : evidence) w.add_evidence(e);
    Rng rng = substream(opt.seed, i);
    ProveOptions po;
    po.strict = opt.strict;
    Prover p(kb, w, rng, po);
    p.apply_evidence();
    SampleOut& o = out[i];
    if (w.log_we == kNegInf) {
      o.log_we = kNegInf;
      return;
    }
    if (goal) o.holds = p.prove(*goal);
    if (rv) {
      o.value = p.rv_value(*rv);
      o.holds = o.value.has_value();
      auto it = w.memo.find(ground_key(*rv));
      if (it != w.memo.end()) o.continuous = it->second.continuous;
    }
    o.log_we = w.log_we;
  });
}

// Normalized evidence weights; throws when every sample has zero weight.
std::vector<double> normalized_weights(const std::vector<SampleOut>& s, double* ess) {
  double m = max_finite(s);
  if (m == kNegInf) fail(ErrorKind::ZeroEvidenceWeight, "every sample has zero evidence weight");
  std::vector<double> w(s.size());
  double sum = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    w[i] = std::exp(s[i].log_we - m);
    sum += w[i];
    sq += w[i] * w[i];
  }
  if (ess) *ess = sum * sum / sq;
  for (double& x : w) x /= sum;
  return w;
}

// Weighted fraction of samples where the query held, as a ratio of sums so an
// always-true query gives exactly 1.
double held_fraction(const std::vector<SampleOut>& s, const std::vector<double>& w) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    den += w[i];
    if (s[i].holds) num += w[i];
  }
  return num == den ? 1.0 : num / den;
}

double log_sum_exp(const std::vector<SampleOut>& s) {
  double m = max_finite(s);
  if (m == kNegInf) return kNegInf;
  double acc = 0.0;
  for (const auto& o : s) acc += std::exp(o.log_we - m);
  return m + std::log(acc);
}

}  // namespace

std::optional<Value> Estimate::mode() const {
  if (continuous) return Value::number(mean);
  const std::pair<Value, double>* best = nullptr;
  for (const auto& l : labels)
    if (!best || l.second > best->second) best = &l;
  if (!best) return std::nullopt;
  return best->first;
}

Estimate estimate_conditional(const KnowledgeBase& kb, const std::vector<Term>& query,
                              const std::vector<EvidenceItem>& evidence, const EstimateOptions& opt) {
  CompiledGoal goal = compile_goal(query);
  std::vector<SampleOut> s;
  run_samples(kb, evidence, opt, &goal, nullptr, s);
  Estimate est;
  est.n_samples = s.size();
  std::vector<double> w = normalized_weights(s, &est.effective_evidence_weight);
  est.probability = held_fraction(s, w);
  est.defined_mass = est.probability;
  return est;
}

Estimate estimate_predictive(const KnowledgeBase& kb, const Term& rv, const std::vector<EvidenceItem>& evidence,
                             const EstimateOptions& opt) {
  std::vector<SampleOut> s;
  run_samples(kb, evidence, opt, nullptr, &rv, s);
  Estimate est;
  est.n_samples = s.size();
  std::vector<double> w = normalized_weights(s, &est.effective_evidence_weight);
  est.defined_mass = held_fraction(s, w);
  for (const auto& o : s)
    if (o.value && o.continuous) est.continuous = true;
  est.probability = est.defined_mass;
  if (est.continuous) {
    double mean = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s[i].value) {
        if (!s[i].value->is_num()) fail(ErrorKind::TypeMismatch, "label value for a continuous variable");
        mean += w[i] * s[i].value->num;
      }
    if (est.defined_mass > 0) mean /= est.defined_mass;
    // a point mass keeps its exact value instead of a rounded weighted average
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s[i].value && w[i] > 0) {
        lo = std::min(lo, s[i].value->num);
        hi = std::max(hi, s[i].value->num);
      }
    if (lo == hi) mean = lo;
    double var = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s[i].value) var += w[i] * (s[i].value->num - mean) * (s[i].value->num - mean);
    if (est.defined_mass > 0) var /= est.defined_mass;
    est.mean = mean;
    est.variance = var;
  } else {
    std::map<std::string, std::pair<Value, double>> acc;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s[i].value) {
        auto& e = acc[s[i].value->str()];
        e.first = *s[i].value;
        e.second += w[i];
      }
    for (auto& [text, e] : acc) est.labels.push_back(e);
  }
  return est;
}

double estimate_log_prob(const KnowledgeBase& kb, const Term& rv, const Value& x,
                         const std::vector<EvidenceItem>& evidence, const EstimateOptions& opt) {
  std::vector<SampleOut> base, joint;
  run_samples(kb, evidence, opt, nullptr, nullptr, base);
  double denom = log_sum_exp(base);
  if (denom == kNegInf) fail(ErrorKind::ZeroEvidenceWeight, "every sample has zero evidence weight");
  std::vector<EvidenceItem> with = evidence;
  std::string key = ground_key(rv);
  with.erase(std::remove_if(with.begin(), with.end(), [&](const EvidenceItem& e) { return ground_key(e.rv) == key; }),
             with.end());
  with.push_back(EvidenceItem{rv, x, false});
  run_samples(kb, with, opt, nullptr, nullptr, joint);
  return log_sum_exp(joint) - denom;
}

std::vector<ProofRecord> sample_weighted_proofs(const Term& head, const std::vector<Term>& body,
                                                const Substitution& theta, const KnowledgeBase& kb, std::size_t n,
                                                std::uint64_t seed, const std::vector<Term>& feature_vars,
                                                const std::vector<EvidenceItem>& evidence) {
  Term head_var = Term::var("_HeadValue");
  std::vector<Term> goal{Term::compound("~=", {apply_substitution(head, theta), head_var})};
  for (const auto& l : body) goal.push_back(apply_substitution(l, theta));
  CompiledGoal cg = compile_goal(goal);
  std::vector<ProofRecord> out(n);
  std::vector<double> logw(n, kNegInf);
  std::vector<bool> ok(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    PartialWorld w;
    for (const auto& e : evidence) w.add_evidence(e);
    Rng rng = substream(seed, i);
    Prover p(kb, w, rng);
    p.apply_evidence();
    logw[i] = w.log_we;
    if (logw[i] == kNegInf) continue;
    Substitution ans;
    ok[i] = p.prove(cg, &ans);
    logw[i] = w.log_we;
    ProofRecord& r = out[i];
    r.features.assign(feature_vars.size(), std::numeric_limits<double>::quiet_NaN());
    if (!ok[i]) continue;
    auto hv = ans.find(head_var.id);
    if (hv != ans.end()) r.head_value = hv->second.value();
    for (std::size_t f = 0; f < feature_vars.size(); ++f) {
      auto it = ans.find(feature_vars[f].id);
      if (it != ans.end() && it->second.is_num()) r.features[f] = it->second.num;
    }
  }
  double m = kNegInf;
  for (double lw : logw) m = std::max(m, lw);
  if (m == kNegInf) fail(ErrorKind::ZeroEvidenceWeight, "every sample has zero evidence weight");
  double sum = 0.0;
  for (double lw : logw) sum += std::exp(lw - m);
  for (std::size_t i = 0; i < n; ++i) out[i].weight = ok[i] ? std::exp(logw[i] - m) / sum : 0.0;
  return out;
}

}  // namespace dcml
