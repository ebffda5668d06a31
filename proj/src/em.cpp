#include "dcml/em.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "dcml/evaluation.hpp"
#include "parallel.hpp"

namespace dcml {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

std::vector<CellRef> missing_cells(const TableBundle& data) {
  std::vector<CellRef> out;
  for (const auto& t : data.entities)
    for (std::size_t r = 0; r < t.keys.size(); ++r)
      for (std::size_t a = 0; a < t.attributes.size(); ++a)
        if (t.cells[r][a].status == CellStatus::Missing) out.push_back(CellRef{t.name, t.keys[r], t.attributes[a]});
  return out;
}

namespace {

// K likelihood-weighted particles over every missing cell. The ground
// dependency graph over all cells splits into connected components; the
// posterior factorizes over them, so weights are kept per component.
struct ParticleSet {
  std::vector<CellRef> cells;                             // missing, rank order
  std::vector<std::size_t> cell_component;
  std::size_t n_components = 0;
  std::vector<std::vector<std::optional<Value>>> values;  // [particle][cell]
  std::vector<std::vector<double>> log_w;                 // [particle][component]
  std::vector<std::vector<double>> floored_log_w;         // per-cell floor applied
  double detached = 0.0;  // floored log-density of observed cells outside every component
};

ParticleSet draw_particles(const Program& program, const TableBundle& data, const BiasSpec& bias,
                           std::size_t k, std::uint64_t seed, unsigned threads) {
  ParticleSet ps;
  ps.cells = missing_cells(data);
  // sample in rank order so parents tend to be drawn before their children
  std::stable_sort(ps.cells.begin(), ps.cells.end(), [&](const CellRef& a, const CellRef& b) {
    return bias.rank_of(a.attribute) < bias.rank_of(b.attribute);
  });
  const auto& z = ps.cells;
  KnowledgeBase kb(program);
  std::vector<EvidenceItem> observed = observed_evidence(data);

  std::unordered_map<std::string, std::size_t> index;
  std::vector<std::size_t> up;
  auto node = [&](const std::string& key) {
    auto [it, fresh] = index.emplace(key, up.size());
    if (fresh) up.push_back(up.size());
    return it->second;
  };
  auto find = [&](std::size_t x) {
    while (up[x] != x) x = up[x] = up[up[x]];
    return x;
  };
  std::vector<std::string> zkeys, okeys;
  for (const auto& c : z) zkeys.push_back(ground_key(c.rv()));
  for (const auto& e : observed) okeys.push_back(ground_key(e.rv));
  {
    DependencyGraph g(kb);
    auto link = [&](const std::string& key) {
      std::size_t a = node(key);
      for (const auto& p : g.parents(key)) up[find(node(p))] = find(a);
    };
    for (const auto& key : zkeys) link(key);
    for (const auto& key : okeys) link(key);
  }
  std::unordered_map<std::size_t, std::size_t> comp_of_root;
  ps.cell_component.resize(z.size());
  for (std::size_t c = 0; c < z.size(); ++c)
    ps.cell_component[c] = comp_of_root.emplace(find(index.at(zkeys[c])), comp_of_root.size()).first->second;
  ps.n_components = comp_of_root.size();
  std::vector<std::pair<std::size_t, std::size_t>> weighted;  // (observed index, component)
  std::vector<std::size_t> rest;
  for (std::size_t o = 0; o < observed.size(); ++o) {
    auto it = comp_of_root.find(find(index.at(okeys[o])));
    if (it != comp_of_root.end()) weighted.emplace_back(o, it->second);
    else rest.push_back(o);
  }

  const double floor = std::log(kProbabilityFloor);
  auto fixed_world = [&] {
    PartialWorld w;
    for (auto e : observed) {
      e.interventional = true;
      w.add_evidence(e);
    }
    return w;
  };
  {
    // cells whose whole component is observed do not depend on the particle
    PartialWorld w = fixed_world();
    Rng rng = substream(seed, k + 1);
    Prover p(kb, w, rng);
    for (std::size_t o : rest) {
      auto d = p.rv_distribution(observed[o].rv);
      double lp = d ? log_density(*d, observed[o].value) : floor;
      ps.detached += std::isnan(lp) ? floor : std::max(lp, floor);
    }
  }
  ps.values.resize(k);
  ps.log_w.assign(k, std::vector<double>(ps.n_components, 0.0));
  ps.floored_log_w = ps.log_w;
  parallel_for(k, threads, [&](std::size_t i) {
    PartialWorld w = fixed_world();
    Rng rng = substream(seed, i);
    Prover p(kb, w, rng);
    ps.values[i].reserve(z.size());
    for (const auto& c : z) ps.values[i].push_back(p.rv_value(c.rv()));
    // likelihood weight: density of each observed cell given the particle
    for (const auto& [o, comp] : weighted) {
      auto d = p.rv_distribution(observed[o].rv);
      double lp = d ? log_density(*d, observed[o].value) : kNegInf;
      if (std::isnan(lp)) lp = kNegInf;
      ps.log_w[i][comp] += lp;
      ps.floored_log_w[i][comp] += std::max(lp, floor);
    }
  });
  return ps;
}

double log_mean_exp(const std::vector<std::vector<double>>& lw, std::size_t comp) {
  double m = kNegInf;
  for (const auto& row : lw) m = std::max(m, row[comp]);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (const auto& row : lw) s += std::exp(row[comp] - m);
  return m + std::log(s / static_cast<double>(lw.size()));
}

}  // namespace

JmpModel bootstrap_program(const TableBundle& data, const BiasSpec& bias, const LearnParams& params) {
  return learn_jmp(data, bias, params);
}

std::vector<Imputed> e_step_sample(const Program& program, const TableBundle& data, const BiasSpec& bias,
                                   std::size_t particles, std::uint64_t seed, unsigned threads,
                                   std::size_t max_particles) {
  if (missing_cells(data).empty()) return {};
  std::size_t k = std::max<std::size_t>(1, particles);
  while (true) {
    ParticleSet ps = draw_particles(program, data, bias, k, seed, threads);
    std::vector<std::size_t> chosen(ps.n_components);
    bool zero = false;
    Rng pick = substream(seed, k);
    for (std::size_t c = 0; c < ps.n_components && !zero; ++c) {
      double m = kNegInf;
      for (std::size_t i = 0; i < k; ++i) m = std::max(m, ps.log_w[i][c]);
      if (m == kNegInf) {
        zero = true;
        break;
      }
      std::vector<double> w(k);
      for (std::size_t i = 0; i < k; ++i) w[i] = std::exp(ps.log_w[i][c] - m);
      std::discrete_distribution<std::size_t> choose(w.begin(), w.end());
      chosen[c] = choose(pick);
    }
    if (zero) {
      if (k >= max_particles) fail(ErrorKind::ZeroEvidenceWeight, "every E-step particle has zero weight");
      k = std::min(2 * k, max_particles);
      continue;
    }
    std::vector<Imputed> out;
    for (std::size_t c = 0; c < ps.cells.size(); ++c)
      if (const auto& v = ps.values[chosen[ps.cell_component[c]]][c]) out.push_back(Imputed{ps.cells[c], *v});
    return out;
  }
}

TableBundle with_imputation(const TableBundle& data, const std::vector<Imputed>& z) {
  TableBundle b = data;
  for (const auto& i : z) {
    EntityTable* t = b.entity(i.cell.table);
    if (!t) fail(ErrorKind::Data, "no table " + i.cell.table);
    int r = t->row_of(i.cell.key), a = t->attribute_index(i.cell.attribute);
    if (r < 0 || a < 0) fail(ErrorKind::Data, "no cell " + i.cell.attribute + "(" + i.cell.key + ")");
    Cell& cell = t->cells[static_cast<std::size_t>(r)][static_cast<std::size_t>(a)];
    if (cell.status != CellStatus::Missing)
      fail(ErrorKind::CellAlreadyObserved, i.cell.attribute + "(" + i.cell.key + ") is not missing");
    cell.status = CellStatus::Observed;
    cell.value = i.value;
  }
  return b;
}

JmpModel m_step_relearn(const TableBundle& data, const std::vector<Imputed>& z, const BiasSpec& bias,
                        const LearnParams& params) {
  LearnParams lp = params;
  lp.complete_data = true;
  // the imputed facts live only in this copy, so they are gone once learning returns
  return learn_jmp(with_imputation(data, z), bias, lp);
}

double observed_loglik(const Program& program, const TableBundle& data, const BiasSpec& bias,
                       std::size_t particles, std::uint64_t seed, unsigned threads) {
  ParticleSet ps = draw_particles(program, data, bias, std::max<std::size_t>(1, particles), seed, threads);
  double total = ps.detached;
  for (std::size_t c = 0; c < ps.n_components; ++c) total += log_mean_exp(ps.floored_log_w, c);
  return total;
}

EmResult run_stochastic_em(const TableBundle& data, const BiasSpec& bias, const EmParams& params) {
  EmResult res;
  LearnParams lp = params.learn;
  lp.threads = params.threads;
  res.model = bootstrap_program(data, bias, lp);
  auto trace = [&](std::size_t it) {
    res.trace.push_back(observed_loglik(res.model.program, data, bias, params.particles,
                                        mix_seed(params.seed, 1000 + it), params.threads));
  };
  trace(0);
  for (std::size_t it = 1; it <= params.iterations; ++it) {
    std::uint64_t s = mix_seed(params.seed, it);
    res.imputation = e_step_sample(res.model.program, data, bias, params.particles, s, params.threads,
                                   params.max_particles);
    res.model = m_step_relearn(data, res.imputation, bias, lp);
    trace(it);
  }
  return res;
}

std::string trace_csv(const std::vector<double>& trace) {
  std::vector<std::vector<std::string>> rows{{"iteration", "loglik"}};
  for (std::size_t i = 0; i < trace.size(); ++i) rows.push_back({std::to_string(i), format_number17(trace[i])});
  return format_csv(rows);
}

}  // namespace dcml
