#include "dcml/distributions.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace dcml {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double dot_with_intercept(const std::vector<double>& w, const std::vector<double>& x) {
  double z = w.back();
  for (std::size_t i = 0; i < x.size(); ++i) z += w[i] * x[i];
  return z;
}

double log_sigmoid(double z) { return z >= 0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z)); }
}  // namespace

Distribution make_gaussian(double mean, double variance) {
  if (!(variance > 0) || !std::isfinite(variance) || !std::isfinite(mean))
    fail(ErrorKind::Data, "gaussian variance must be a positive finite number");
  return Gaussian{mean, variance};
}

Distribution make_discrete(std::vector<Value> labels, std::vector<double> probs) {
  if (labels.size() != probs.size() || labels.empty())
    fail(ErrorKind::Data, "discrete distribution needs one probability per label");
  double s = 0;
  for (double p : probs) {
    if (!(p >= 0) || !std::isfinite(p)) fail(ErrorKind::Data, "discrete probabilities must be nonnegative");
    s += p;
  }
  if (std::abs(s - 1.0) > 1e-9) fail(ErrorKind::Data, "discrete probabilities sum to " + format_number(s));
  for (std::size_t i = 0; i < labels.size(); ++i)
    for (std::size_t j = i + 1; j < labels.size(); ++j)
      if (labels[i] == labels[j]) fail(ErrorKind::Data, "duplicate discrete label " + labels[i].str());
  return Discrete{std::move(labels), std::move(probs)};
}

std::size_t input_arity(const StatModel& m) {
  if (auto* l = std::get_if<Linear>(&m)) return l->weights.empty() ? 0 : l->weights.size() - 1;
  if (auto* l = std::get_if<Logistic>(&m)) return l->weights.empty() ? 0 : l->weights.size() - 1;
  const auto& s = std::get<Softmax>(m);
  return s.rows.empty() || s.rows[0].empty() ? 0 : s.rows[0].size() - 1;
}

std::vector<double> eval_stat_model(const StatModel& m, const std::vector<double>& x) {
  auto check = [&](const std::vector<double>& w) {
    if (w.size() != x.size() + 1)
      fail(ErrorKind::ArityMismatch, "model expects " + std::to_string(w.empty() ? 0 : w.size() - 1) +
                                         " inputs, got " + std::to_string(x.size()));
  };
  if (auto* l = std::get_if<Linear>(&m)) {
    check(l->weights);
    return {dot_with_intercept(l->weights, x)};
  }
  if (auto* l = std::get_if<Logistic>(&m)) {
    check(l->weights);
    double z = dot_with_intercept(l->weights, x);
    double p1 = 1.0 / (1.0 + std::exp(-z));
    return {p1, 1.0 - p1};
  }
  const auto& s = std::get<Softmax>(m);
  if (s.rows.empty()) fail(ErrorKind::ArityMismatch, "softmax without rows");
  std::vector<double> z;
  for (const auto& r : s.rows) {
    check(r);
    z.push_back(dot_with_intercept(r, x));
  }
  double mx = *std::max_element(z.begin(), z.end());
  double tot = 0;
  for (auto& v : z) tot += (v = std::exp(v - mx));
  for (auto& v : z) v /= tot;
  return z;
}

bool is_continuous(const Distribution& d) {
  if (std::holds_alternative<Gaussian>(d)) return true;
  if (auto* v = std::get_if<ValDist>(&d)) return v->value.is_num();
  return false;
}

double log_density(const Distribution& d, const Value& x) {
  if (auto* v = std::get_if<ValDist>(&d)) {
    if (v->value.kind != x.kind) fail(ErrorKind::TypeMismatch, "value " + x.str() + " does not match val(" + v->value.str() + ")");
    return v->value == x ? 0.0 : kNegInf;
  }
  if (auto* g = std::get_if<Gaussian>(&d)) {
    if (!x.is_num()) fail(ErrorKind::TypeMismatch, "gaussian evaluated at label " + x.str());
    double r = x.num - g->mean;
    return -0.5 * (kLog2Pi + std::log(g->variance)) - r * r / (2 * g->variance);
  }
  const auto& c = std::get<Discrete>(d);
  bool kind_ok = false;
  for (std::size_t i = 0; i < c.labels.size(); ++i) {
    if (c.labels[i].kind == x.kind) kind_ok = true;
    if (c.labels[i] == x) return std::log(c.probs[i]);
  }
  if (!kind_ok) fail(ErrorKind::TypeMismatch, "discrete distribution evaluated at " + x.str());
  return kNegInf;
}

Value sample_distribution(const Distribution& d, Rng& rng) {
  if (auto* v = std::get_if<ValDist>(&d)) return v->value;
  if (auto* g = std::get_if<Gaussian>(&d)) {
    std::normal_distribution<double> n(g->mean, std::sqrt(g->variance));
    return Value::number(n(rng));
  }
  const auto& c = std::get<Discrete>(d);
  double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0;
  for (std::size_t i = 0; i < c.probs.size(); ++i) {
    acc += c.probs[i];
    if (u < acc) return c.labels[i];
  }
  for (std::size_t i = c.probs.size(); i-- > 0;)
    if (c.probs[i] > 0) return c.labels[i];
  return c.labels.back();
}

Distribution Leaf::predict(const std::vector<double>& features) const {
  if (!model) return dist;
  auto out = eval_stat_model(*model, features);
  if (std::holds_alternative<Linear>(*model)) {
    const auto& g = std::get<Gaussian>(dist);
    return Gaussian{out[0], g.variance};
  }
  const auto& c = std::get<Discrete>(dist);
  return Discrete{c.labels, out};
}

std::size_t Leaf::n_params() const {
  if (!model) {
    if (std::holds_alternative<Gaussian>(dist)) return 2;
    if (auto* c = std::get_if<Discrete>(&dist)) return c->labels.size() - 1;
    return 0;
  }
  if (auto* l = std::get_if<Linear>(&*model)) return l->weights.size() + 1;
  if (auto* l = std::get_if<Logistic>(&*model)) return l->weights.size();
  const auto& s = std::get<Softmax>(*model);
  return s.rows.size() * s.rows[0].size();
}

// ---------------------------------------------------------------- fitting

namespace {

struct Prepared {
  std::vector<const WeightedSample*> rows;  // positive weight only
  double total = 0;
  std::size_t n_features = 0;
  std::vector<double> mean, scale;  // weighted feature moments
};

Prepared prepare(const std::vector<WeightedSample>& data) {
  Prepared p;
  bool first = true;
  for (const auto& s : data) {
    if (!(s.weight >= 0) || !std::isfinite(s.weight)) fail(ErrorKind::Data, "sample weights must be finite and nonnegative");
    if (first) {
      p.n_features = s.features.size();
      first = false;
    } else if (s.features.size() != p.n_features) {
      fail(ErrorKind::ArityMismatch, "inconsistent feature dimension");
    }
    if (s.weight > 0) {
      p.rows.push_back(&s);
      p.total += s.weight;
    }
  }
  if (p.rows.empty() || !(p.total > 0)) fail(ErrorKind::DegenerateData, "all sample weights are zero");
  std::size_t n = p.n_features;
  p.mean.assign(n, 0.0);
  p.scale.assign(n, 1.0);
  for (const auto* r : p.rows)
    for (std::size_t j = 0; j < n; ++j) p.mean[j] += r->weight * r->features[j];
  for (auto& m : p.mean) m /= p.total;
  for (std::size_t j = 0; j < n; ++j) {
    double v = 0;
    for (const auto* r : p.rows) {
      double d = r->features[j] - p.mean[j];
      v += r->weight * d * d;
    }
    v /= p.total;
    double s = std::sqrt(v);
    p.scale[j] = (s > 0 && std::isfinite(s)) ? s : 1.0;
  }
  return p;
}

std::size_t label_index(const std::vector<Value>& domain, const Value& v) {
  for (std::size_t i = 0; i < domain.size(); ++i)
    if (domain[i] == v) return i;
  fail(ErrorKind::TypeMismatch, "label " + v.str() + " is outside the declared domain");
}

std::vector<Value> domain_of(const Prepared& p, const FitOptions& opt) {
  if (!opt.domain.empty()) return opt.domain;
  std::vector<Value> d;
  for (const auto* r : p.rows) {
    if (!r->target.is_sym()) fail(ErrorKind::TypeMismatch, "discrete target must be a label");
    if (std::find(d.begin(), d.end(), r->target) == d.end()) d.push_back(r->target);
  }
  std::sort(d.begin(), d.end(), [](const Value& a, const Value& b) { return a.str() < b.str(); });
  return d;
}

// Multinomial model in standardized coordinates: params laid out as
// d rows of (n coefficients, intercept). Binary logistic uses d=1 with the
// implicit zero second row.
struct MultiProblem {
  const Prepared* p;
  std::vector<std::size_t> y;
  std::size_t d;      // number of free rows
  bool binary;        // logistic
  double ridge;

  std::size_t dim() const { return d * (p->n_features + 1); }

  // value and gradient of normalized penalized NLL; u are standardized coords
  double eval(const Eigen::VectorXd& theta, Eigen::VectorXd& grad) const {
    std::size_t n = p->n_features, w = n + 1;
    grad.setZero(static_cast<Eigen::Index>(dim()));
    double f = 0;
    std::vector<double> u(n), z(binary ? 2 : d);
    for (std::size_t i = 0; i < p->rows.size(); ++i) {
      const auto* r = p->rows[i];
      double wt = r->weight / p->total;
      for (std::size_t j = 0; j < n; ++j) u[j] = (r->features[j] - p->mean[j]) / p->scale[j];
      if (binary) {
        double zz = theta[static_cast<Eigen::Index>(n)];
        for (std::size_t j = 0; j < n; ++j) zz += theta[static_cast<Eigen::Index>(j)] * u[j];
        bool pos = y[i] == 0;
        f -= wt * (pos ? log_sigmoid(zz) : log_sigmoid(-zz));
        double p1 = 1.0 / (1.0 + std::exp(-zz));
        double g = wt * (p1 - (pos ? 1.0 : 0.0));
        for (std::size_t j = 0; j < n; ++j) grad[static_cast<Eigen::Index>(j)] += g * u[j];
        grad[static_cast<Eigen::Index>(n)] += g;
      } else {
        for (std::size_t k = 0; k < d; ++k) {
          double zz = theta[static_cast<Eigen::Index>(k * w + n)];
          for (std::size_t j = 0; j < n; ++j) zz += theta[static_cast<Eigen::Index>(k * w + j)] * u[j];
          z[k] = zz;
        }
        double mx = *std::max_element(z.begin(), z.end());
        double tot = 0;
        for (double v : z) tot += std::exp(v - mx);
        double lse = mx + std::log(tot);
        f -= wt * (z[y[i]] - lse);
        for (std::size_t k = 0; k < d; ++k) {
          double g = wt * (std::exp(z[k] - lse) - (k == y[i] ? 1.0 : 0.0));
          for (std::size_t j = 0; j < n; ++j) grad[static_cast<Eigen::Index>(k * w + j)] += g * u[j];
          grad[static_cast<Eigen::Index>(k * w + n)] += g;
        }
      }
    }
    for (std::size_t k = 0; k < d; ++k)
      for (std::size_t j = 0; j < n; ++j) {
        auto idx = static_cast<Eigen::Index>(k * w + j);
        f += 0.5 * ridge * theta[idx] * theta[idx];
        grad[idx] += ridge * theta[idx];
      }
    return f;
  }
};

// BFGS with backtracking line search.
Eigen::VectorXd bfgs(const MultiProblem& prob, int max_iter, double tol) {
  auto D = static_cast<Eigen::Index>(prob.dim());
  Eigen::VectorXd x = Eigen::VectorXd::Zero(D), g(D), gn(D), xn(D);
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(D, D);
  double f = prob.eval(x, g);
  for (int it = 0; it < max_iter && g.norm() > tol; ++it) {
    Eigen::VectorXd dir = -H * g;
    double slope = g.dot(dir);
    if (slope >= 0) {
      H.setIdentity();
      dir = -g;
      slope = -g.squaredNorm();
    }
    double step = 1.0, fn = 0;
    bool ok = false;
    for (int ls = 0; ls < 60; ++ls) {
      xn = x + step * dir;
      fn = prob.eval(xn, gn);
      if (std::isfinite(fn) && fn <= f + 1e-4 * step * slope) {
        ok = true;
        break;
      }
      step *= 0.5;
    }
    if (!ok) break;
    Eigen::VectorXd s = xn - x, yv = gn - g;
    double sy = s.dot(yv);
    x = xn;
    g = gn;
    if (std::abs(fn - f) == 0 && s.norm() == 0) break;
    f = fn;
    if (sy > 1e-300) {
      if (it == 0) H *= sy / yv.squaredNorm();
      Eigen::VectorXd Hy = H * yv;
      double rho = 1.0 / sy;
      H += (rho * rho * yv.dot(Hy) + rho) * (s * s.transpose()) - rho * (Hy * s.transpose() + s * Hy.transpose());
    }
  }
  return x;
}

// Map standardized coefficients of one row back to raw (coefficients, intercept).
std::vector<double> unstandardize(const Prepared& p, const Eigen::VectorXd& theta, std::size_t row) {
  std::size_t n = p.n_features, w = n + 1;
  std::vector<double> out(w);
  double b = theta[static_cast<Eigen::Index>(row * w + n)];
  for (std::size_t j = 0; j < n; ++j) {
    double c = theta[static_cast<Eigen::Index>(row * w + j)];
    out[j] = c / p.scale[j];
    b -= c * p.mean[j] / p.scale[j];
  }
  out[n] = b;
  return out;
}

FitResult fit_gaussian(const Prepared& p, const FitOptions& opt) {
  std::size_t n = p.n_features;
  for (const auto* r : p.rows)
    if (!r->target.is_num()) fail(ErrorKind::TypeMismatch, "continuous target must be a number");
  double ymean = 0;
  for (const auto* r : p.rows) ymean += r->weight * r->target.num;
  ymean /= p.total;
  FitResult res;
  std::vector<double> weights;
  if (n > 0) {
    auto N = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(N, N);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(N);
    Eigen::VectorXd u(N);
    for (const auto* r : p.rows) {
      double wt = r->weight / p.total;
      for (std::size_t j = 0; j < n; ++j)
        u[static_cast<Eigen::Index>(j)] = (r->features[j] - p.mean[j]) / p.scale[j];
      G.noalias() += wt * u * u.transpose();
      rhs += wt * (r->target.num - ymean) * u;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G);
    if (eig.eigenvalues().minCoeff() < 1e-10) G.diagonal().array() += opt.ridge;  // collinear design
    Eigen::VectorXd gamma = G.ldlt().solve(rhs);
    weights.assign(n + 1, 0.0);
    double b = ymean;
    for (std::size_t j = 0; j < n; ++j) {
      double c = gamma[static_cast<Eigen::Index>(j)];
      weights[j] = c / p.scale[j];
      b -= c * p.mean[j] / p.scale[j];
    }
    weights[n] = b;
  }
  double sse = 0;
  auto mean_of = [&](const WeightedSample* r) {
    return n > 0 ? dot_with_intercept(weights, r->features) : ymean;
  };
  for (const auto* r : p.rows) {
    double e = r->target.num - mean_of(r);
    sse += r->weight * e * e;
  }
  double var = std::max(sse / p.total, opt.variance_floor);
  double ell = 0;
  for (const auto* r : p.rows) {
    double e = r->target.num - mean_of(r);
    ell += r->weight * (-0.5 * (kLog2Pi + std::log(var)) - e * e / (2 * var));
  }
  if (n > 0) {
    res.leaf.dist = Gaussian{0.0, var};
    res.leaf.model = Linear{weights};
  } else {
    res.leaf.dist = Gaussian{ymean, var};
  }
  res.expected_ll = ell;
  res.n_params = res.leaf.n_params();
  return res;
}

FitResult fit_discrete(const Prepared& p, const FitOptions& opt) {
  auto domain = domain_of(p, opt);
  std::size_t d = domain.size();
  if (d == 0) fail(ErrorKind::DegenerateData, "empty label domain");
  std::vector<std::size_t> y;
  for (const auto* r : p.rows) y.push_back(label_index(domain, r->target));
  FitResult res;
  if (p.n_features == 0 || d == 1) {
    std::vector<double> mass(d, 0.0);
    for (std::size_t i = 0; i < y.size(); ++i) mass[y[i]] += p.rows[i]->weight;
    // pseudo-count measured in units of the average sample weight
    double alpha = opt.laplace * p.total / static_cast<double>(p.rows.size());
    std::vector<double> probs(d);
    for (std::size_t k = 0; k < d; ++k) probs[k] = (mass[k] + alpha) / (p.total + d * alpha);
    double ell = 0;
    for (std::size_t i = 0; i < y.size(); ++i) ell += p.rows[i]->weight * std::log(probs[y[i]]);
    res.leaf.dist = Discrete{domain, probs};
    res.expected_ll = ell;
    res.n_params = d - 1;
    return res;
  }
  MultiProblem prob{&p, y, d == 2 ? 1 : d, d == 2, opt.ridge};
  Eigen::VectorXd theta = bfgs(prob, opt.max_iterations, opt.gradient_tolerance);
  std::vector<double> placeholder(d, 1.0 / static_cast<double>(d));
  res.leaf.dist = Discrete{domain, placeholder};
  if (d == 2) {
    res.leaf.model = Logistic{unstandardize(p, theta, 0)};
  } else {
    Softmax s;
    for (std::size_t k = 0; k < d; ++k) s.rows.push_back(unstandardize(p, theta, k));
    res.leaf.model = s;
  }
  double ell = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    auto probs = eval_stat_model(*res.leaf.model, p.rows[i]->features);
    ell += p.rows[i]->weight * std::log(std::max(probs[y[i]], 1e-300));
  }
  res.expected_ll = ell;
  res.n_params = res.leaf.n_params();
  return res;
}

}  // namespace

FitResult fit_weighted_mle(LeafKind kind, const std::vector<WeightedSample>& data, const FitOptions& opt) {
  Prepared p = prepare(data);
  return kind == LeafKind::Continuous ? fit_gaussian(p, opt) : fit_discrete(p, opt);
}

namespace {

// Evaluate a multinomial objective given raw rows by converting to standardized coords.
Objective raw_objective(const std::vector<std::vector<double>>& rows, const std::vector<WeightedSample>& data,
                        const FitOptions& opt, bool binary) {
  Prepared p = prepare(data);
  auto domain = domain_of(p, opt);
  std::vector<std::size_t> y;
  for (const auto* r : p.rows) y.push_back(label_index(domain, r->target));
  std::size_t n = p.n_features, w = n + 1, d = rows.size();
  for (const auto& r : rows)
    if (r.size() != w) fail(ErrorKind::ArityMismatch, "weight row length does not match features");
  if (!binary && d != domain.size()) fail(ErrorKind::ArityMismatch, "one softmax row per label required");
  MultiProblem prob{&p, y, d, binary, opt.ridge};
  // raw (beta, b) -> standardized (gamma_j = beta_j * s_j, gamma_0 = b + sum beta_j m_j)
  Eigen::VectorXd theta(static_cast<Eigen::Index>(d * w));
  for (std::size_t k = 0; k < d; ++k) {
    double b = rows[k][n];
    for (std::size_t j = 0; j < n; ++j) {
      theta[static_cast<Eigen::Index>(k * w + j)] = rows[k][j] * p.scale[j];
      b += rows[k][j] * p.mean[j];
    }
    theta[static_cast<Eigen::Index>(k * w + n)] = b;
  }
  Eigen::VectorXd g;
  Objective o;
  o.value = prob.eval(theta, g);
  // chain rule back to raw coordinates
  o.gradient.assign(d * w, 0.0);
  for (std::size_t k = 0; k < d; ++k) {
    double gb = g[static_cast<Eigen::Index>(k * w + n)];
    for (std::size_t j = 0; j < n; ++j)
      o.gradient[k * w + j] = g[static_cast<Eigen::Index>(k * w + j)] * p.scale[j] + gb * p.mean[j];
    o.gradient[k * w + n] = gb;
  }
  return o;
}

}  // namespace

Objective logistic_objective(const std::vector<double>& weights, const std::vector<WeightedSample>& data,
                             const FitOptions& opt) {
  return raw_objective({weights}, data, opt, true);
}

Objective softmax_objective(const std::vector<std::vector<double>>& rows, const std::vector<WeightedSample>& data,
                            const FitOptions& opt) {
  return raw_objective(rows, data, opt, false);
}

}  // namespace dcml
