#pragma once

// State-vector QAOA on small Ising graphs and recursive correlation-driven
// variable elimination on top of it.
//
// Qubit k carries node k; basis index bit k = x_k, and Z_k has eigenvalue +1
// on bit 0, so the cost diagonal at basis state b is the Ising energy of b.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "ucq/classical.hpp"
#include "ucq/errors.hpp"
#include "ucq/ising.hpp"

namespace ucq {

using Amplitude = std::complex<double>;

inline constexpr std::size_t kSimulatorHardLimit = 26;

struct QaoaParams {
  std::vector<double> gamma;
  std::vector<double> beta;

  std::size_t layers() const { return gamma.size(); }
  bool operator==(const QaoaParams&) const = default;

  void validate() const {
    if (gamma.empty() || gamma.size() != beta.size()) throw ValidationError("qaoa params: need p >= 1 gamma/beta pairs");
    for (std::size_t k = 0; k < gamma.size(); ++k) {
      if (!std::isfinite(gamma[k]) || !std::isfinite(beta[k])) throw ValidationError("qaoa params: angles must be finite");
    }
  }
};

struct StateVector {
  std::size_t qubits = 0;
  std::vector<Amplitude> amplitudes;

  double norm() const {
    double s = 0.0;
    for (const auto& a : amplitudes) s += std::norm(a);
    return std::sqrt(s);
  }
};

struct QiroConfig {
  std::size_t min_size = 10;
  std::size_t max_qubits = 16;
  std::size_t shots = 10240;
  std::size_t budget = 200;  // cost evaluations per angle optimization
  std::size_t layers = 1;
  std::size_t grid = 4;  // multi-start grid is grid x grid over (gamma, beta)
  bool exact_expectations = false;

  void validate() const {
    if (min_size < 2 || min_size > max_qubits || max_qubits > kSimulatorHardLimit) {
      throw ConfigError("qiro config: need 2 <= min_size <= max_qubits <= " + std::to_string(kSimulatorHardLimit));
    }
    if (layers < 1) throw ConfigError("qiro config: layers must be >= 1");
    if (shots < 1) throw ConfigError("qiro config: shots must be >= 1");
    if (grid < 1) throw ConfigError("qiro config: grid must be >= 1");
    if (budget < grid * grid) {
      throw ConfigError("qiro config: budget " + std::to_string(budget) + " is smaller than the " +
                        std::to_string(grid * grid) + " multi-start points");
    }
  }
};

inline void check_qubits(const IsingGraph& g, std::size_t max_qubits) {
  if (g.size() > max_qubits) {
    throw CapacityError("simulator: " + std::to_string(g.size()) + " qubits exceeds the limit of " +
                        std::to_string(max_qubits));
  }
}

inline std::vector<double> cost_diagonal(const IsingGraph& g, std::size_t max_qubits = 16) {
  check_qubits(g, max_qubits);
  const std::size_t n = g.size();
  const std::size_t dim = std::size_t{1} << n;
  std::vector<double> diag(dim);
  std::vector<std::uint8_t> bits(n);
  for (std::size_t b = 0; b < dim; ++b) {
    for (std::size_t k = 0; k < n; ++k) bits[k] = static_cast<std::uint8_t>((b >> k) & 1U);
    diag[b] = ising_energy(g, bits);
  }
  return diag;
}

namespace detail {

inline void apply_cost_phase(std::vector<Amplitude>& psi, const std::vector<double>& diag, double gamma) {
  for (std::size_t b = 0; b < psi.size(); ++b) psi[b] *= std::polar(1.0, -gamma * diag[b]);
}

// exp(-i beta X) on every qubit.
inline void apply_mixer(std::vector<Amplitude>& psi, std::size_t qubits, double beta) {
  const double c = std::cos(beta);
  const Amplitude ms(0.0, -std::sin(beta));
  for (std::size_t k = 0; k < qubits; ++k) {
    const std::size_t stride = std::size_t{1} << k;
    for (std::size_t base = 0; base < psi.size(); base += 2 * stride) {
      for (std::size_t off = base; off < base + stride; ++off) {
        const Amplitude a0 = psi[off];
        const Amplitude a1 = psi[off + stride];
        psi[off] = c * a0 + ms * a1;
        psi[off + stride] = ms * a0 + c * a1;
      }
    }
  }
}

inline StateVector evolve(std::size_t qubits, const std::vector<double>& diag, const QaoaParams& params) {
  StateVector sv;
  sv.qubits = qubits;
  const std::size_t dim = diag.size();
  sv.amplitudes.assign(dim, Amplitude(1.0 / std::sqrt(static_cast<double>(dim)), 0.0));
  for (std::size_t l = 0; l < params.layers(); ++l) {
    apply_cost_phase(sv.amplitudes, diag, params.gamma[l]);
    apply_mixer(sv.amplitudes, qubits, params.beta[l]);
  }
  return sv;
}

inline double expectation(const StateVector& sv, const std::vector<double>& diag) {
  double e = 0.0;
  for (std::size_t b = 0; b < diag.size(); ++b) e += std::norm(sv.amplitudes[b]) * diag[b];
  return e;
}

}  // namespace detail

// prod_k exp(-i beta_k H_M) exp(-i gamma_k H_C) |+>^n with H_M = sum_i X_i.
inline StateVector qaoa_state(const IsingGraph& g, const QaoaParams& params, std::size_t max_qubits = 16) {
  params.validate();
  return detail::evolve(g.size(), cost_diagonal(g, max_qubits), params);
}

inline double qaoa_expectation(const IsingGraph& g, const QaoaParams& params, std::size_t max_qubits = 16) {
  params.validate();
  const auto diag = cost_diagonal(g, max_qubits);
  return detail::expectation(detail::evolve(g.size(), diag, params), diag);
}

namespace detail {

// Improvement beyond rounding noise in the expectation sum.
inline bool strictly_below(double v, double best) {
  return v < best - 1e-12 * std::max(1.0, std::abs(best));
}

// Plain Nelder-Mead on a fixed evaluation budget. Only strict improvements
// replace the incumbent, so a flat objective returns the start unchanged.
template <class F>
std::vector<double> nelder_mead(F&& f, std::vector<double> x0, double step, std::size_t budget, double& fbest) {
  const std::size_t dim = x0.size();
  std::vector<std::vector<double>> simplex(dim + 1, x0);
  std::vector<double> values(dim + 1);
  std::size_t used = 0;
  auto eval = [&](const std::vector<double>& x) {
    ++used;
    return f(x);
  };
  std::vector<double> best = x0;
  auto take = [&](const std::vector<double>& x, double v) {
    if (strictly_below(v, fbest)) {
      fbest = v;
      best = x;
    }
  };
  values[0] = fbest;
  for (std::size_t k = 0; k < dim; ++k) {
    if (used >= budget) return best;
    simplex[k + 1][k] += step;
    values[k + 1] = eval(simplex[k + 1]);
    take(simplex[k + 1], values[k + 1]);
  }

  std::vector<std::size_t> order(dim + 1);
  while (used < budget) {
    for (std::size_t k = 0; k <= dim; ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const std::size_t worst = order[dim];
    const std::size_t second = order[dim - 1];
    const std::size_t lowest = order[0];
    double spread = 0.0;
    for (std::size_t k = 0; k <= dim; ++k)
      for (std::size_t c = 0; c < dim; ++c) spread = std::max(spread, std::abs(simplex[k][c] - simplex[lowest][c]));
    if (spread < 1e-10) break;

    std::vector<double> centroid(dim, 0.0);
    for (std::size_t k = 0; k <= dim; ++k) {
      if (k == worst) continue;
      for (std::size_t c = 0; c < dim; ++c) centroid[c] += simplex[k][c] / static_cast<double>(dim);
    }
    auto along = [&](double t) {
      std::vector<double> x(dim);
      for (std::size_t c = 0; c < dim; ++c) x[c] = centroid[c] + t * (simplex[worst][c] - centroid[c]);
      return x;
    };
    const auto xr = along(-1.0);
    const double fr = eval(xr);
    take(xr, fr);
    if (fr < values[lowest]) {
      if (used >= budget) break;
      const auto xe = along(-2.0);
      const double fe = eval(xe);
      take(xe, fe);
      if (fe < fr) {
        simplex[worst] = xe;
        values[worst] = fe;
      } else {
        simplex[worst] = xr;
        values[worst] = fr;
      }
      continue;
    }
    if (fr < values[second]) {
      simplex[worst] = xr;
      values[worst] = fr;
      continue;
    }
    if (used >= budget) break;
    const auto xc = fr < values[worst] ? along(-0.5) : along(0.5);
    const double fc = eval(xc);
    take(xc, fc);
    if (fc < std::min(fr, values[worst])) {
      simplex[worst] = xc;
      values[worst] = fc;
      continue;
    }
    for (std::size_t k = 0; k <= dim && used < budget; ++k) {
      if (k == lowest) continue;
      for (std::size_t c = 0; c < dim; ++c) simplex[k][c] = simplex[lowest][c] + 0.5 * (simplex[k][c] - simplex[lowest][c]);
      values[k] = eval(simplex[k]);
      take(simplex[k], values[k]);
    }
  }
  return best;
}

// Largest |h| or |w|; angles are searched on the cost Hamiltonian divided by
// this scale so the grid means the same thing for every graph.
inline double cost_scale(const IsingGraph& g) {
  double s = 0.0;
  for (double h : g.biases()) s = std::max(s, std::abs(h));
  for (const auto& e : g.edges()) s = std::max(s, std::abs(e.w));
  return s > 0.0 ? s : 1.0;
}

}  // namespace detail

struct AngleSearch {
  QaoaParams params;
  double expectation = 0.0;
  std::size_t evaluations = 0;
};

// Multi-start grid over (gamma, beta) in [0, pi) x [0, pi/2) on the
// normalized Hamiltonian, followed by Nelder-Mead from the best grid point
// with the remaining budget. Returned angles act on the raw Hamiltonian.
inline AngleSearch optimize_angles_detailed(const IsingGraph& g, const QiroConfig& config) {
  config.validate();
  const auto diag = cost_diagonal(g, config.max_qubits);
  const double scale = detail::cost_scale(g);
  const std::size_t p = config.layers;
  std::size_t evaluations = 0;
  auto objective = [&](const std::vector<double>& x) {
    ++evaluations;
    QaoaParams params;
    for (std::size_t l = 0; l < p; ++l) {
      params.gamma.push_back(x[l] / scale);
      params.beta.push_back(x[p + l]);
    }
    return detail::expectation(detail::evolve(g.size(), diag, params), diag);
  };

  std::vector<double> best_x;
  double best = std::numeric_limits<double>::infinity();
  const std::size_t grid = config.grid;
  for (std::size_t a = 0; a < grid; ++a) {
    for (std::size_t b = 0; b < grid; ++b) {
      const double gamma = std::numbers::pi * (static_cast<double>(a) + 0.5) / static_cast<double>(grid);
      const double beta = 0.5 * std::numbers::pi * (static_cast<double>(b) + 0.5) / static_cast<double>(grid);
      std::vector<double> x(2 * p);
      for (std::size_t l = 0; l < p; ++l) {
        x[l] = gamma;
        x[p + l] = beta;
      }
      const double v = objective(x);
      if (best_x.empty() || detail::strictly_below(v, best)) {
        best = v;
        best_x = x;
      }
    }
  }
  const std::size_t remaining = config.budget - evaluations;
  if (remaining > 0) {
    const double step = 0.25 * std::numbers::pi / static_cast<double>(grid);
    best_x = detail::nelder_mead(objective, best_x, step, remaining, best);
  }
  AngleSearch out;
  for (std::size_t l = 0; l < p; ++l) {
    out.params.gamma.push_back(best_x[l] / scale);
    out.params.beta.push_back(best_x[p + l]);
  }
  out.expectation = best;
  out.evaluations = evaluations;
  return out;
}

inline QaoaParams optimize_angles(const IsingGraph& g, const QiroConfig& config) {
  return optimize_angles_detailed(g, config).params;
}

struct ShotCounts {
  std::size_t qubits = 0;
  std::size_t total = 0;
  std::map<std::uint64_t, std::size_t> counts;  // basis index -> hits

  // Bitstring x_0 x_1 ... x_{n-1} of a basis index.
  std::string bitstring(std::uint64_t basis) const {
    std::string s(qubits, '0');
    for (std::size_t k = 0; k < qubits; ++k) s[k] = ((basis >> k) & 1U) ? '1' : '0';
    return s;
  }
};

inline ShotCounts sample(const StateVector& sv, std::size_t shots, std::uint64_t seed) {
  if (shots < 1) throw ValidationError("sample: shots must be >= 1");
  std::vector<double> probs(sv.amplitudes.size());
  for (std::size_t b = 0; b < probs.size(); ++b) probs[b] = std::norm(sv.amplitudes[b]);
  std::discrete_distribution<std::uint64_t> dist(probs.begin(), probs.end());
  std::mt19937_64 rng(seed);
  ShotCounts out;
  out.qubits = sv.qubits;
  out.total = shots;
  for (std::size_t s = 0; s < shots; ++s) ++out.counts[dist(rng)];
  return out;
}

struct Correlations {
  std::vector<double> single;  // <Z_i>
  std::vector<double> pair;    // <Z_i Z_j>, aligned with graph.edges()
};

inline Correlations correlations_from_state(const IsingGraph& g, const StateVector& sv) {
  Correlations c;
  c.single.assign(g.size(), 0.0);
  c.pair.assign(g.edges().size(), 0.0);
  for (std::size_t b = 0; b < sv.amplitudes.size(); ++b) {
    const double p = std::norm(sv.amplitudes[b]);
    if (p == 0.0) continue;
    for (std::size_t k = 0; k < g.size(); ++k) c.single[k] += p * (((b >> k) & 1U) ? -1.0 : 1.0);
    for (std::size_t e = 0; e < g.edges().size(); ++e) {
      const auto& edge = g.edges()[e];
      const bool odd = (((b >> edge.i) ^ (b >> edge.j)) & 1U) != 0;
      c.pair[e] += odd ? -p : p;
    }
  }
  return c;
}

inline Correlations correlations_from_counts(const IsingGraph& g, const ShotCounts& counts) {
  Correlations c;
  c.single.assign(g.size(), 0.0);
  c.pair.assign(g.edges().size(), 0.0);
  const double total = static_cast<double>(counts.total);
  for (const auto& [b, hits] : counts.counts) {
    const double w = static_cast<double>(hits) / total;
    for (std::size_t k = 0; k < g.size(); ++k) c.single[k] += w * (((b >> k) & 1U) ? -1.0 : 1.0);
    for (std::size_t e = 0; e < g.edges().size(); ++e) {
      const auto& edge = g.edges()[e];
      const bool odd = (((b >> edge.i) ^ (b >> edge.j)) & 1U) != 0;
      c.pair[e] += odd ? -w : w;
    }
  }
  return c;
}

struct QiroRound {
  bool pair = false;          // false: node frozen; true: partner merged into node
  std::size_t node = 0;       // index in the original graph
  std::size_t partner = 0;    // index in the original graph (pair rounds)
  int sign = 1;               // frozen spin, or relative sign s_partner = sign * s_node
  double correlation = 0.0;
  std::size_t reduced_size = 0;
  double expectation = 0.0;   // optimized <H_C> of the round's graph
};

struct QiroResult {
  SolveResult result;
  std::vector<QiroRound> rounds;
};

namespace detail {

struct Reduction {
  IsingGraph graph;
  std::vector<std::size_t> origin;  // reduced node -> original node
};

// Fix node k at spin `spin`.
inline Reduction freeze(const Reduction& r, std::size_t k, int spin) {
  const IsingGraph& g = r.graph;
  std::vector<std::size_t> local(g.size());
  std::vector<double> h;
  std::vector<std::size_t> origin;
  for (std::size_t i = 0, next = 0; i < g.size(); ++i) {
    if (i == k) continue;
    local[i] = next++;
    h.push_back(g.bias(i));
    origin.push_back(r.origin[i]);
  }
  double e0 = g.offset() + g.bias(k) * spin;
  std::vector<Edge> edges;
  for (const auto& e : g.edges()) {
    if (e.i == k) h[local[e.j]] += e.w * spin;
    else if (e.j == k) h[local[e.i]] += e.w * spin;
    else edges.push_back({local[e.i], local[e.j], e.w});
  }
  return {IsingGraph(std::move(h), edges, e0), std::move(origin)};
}

// Substitute s_j = sign * s_i and drop node j.
inline Reduction merge(const Reduction& r, std::size_t i, std::size_t j, int sign) {
  const IsingGraph& g = r.graph;
  std::vector<std::size_t> local(g.size());
  std::vector<double> h;
  std::vector<std::size_t> origin;
  for (std::size_t k = 0, next = 0; k < g.size(); ++k) {
    if (k == j) continue;
    local[k] = next++;
    h.push_back(g.bias(k));
    origin.push_back(r.origin[k]);
  }
  local[j] = local[i];
  h[local[i]] += sign * g.bias(j);
  double e0 = g.offset();
  std::vector<Edge> edges;
  for (const auto& e : g.edges()) {
    const bool touches_j = e.i == j || e.j == j;
    const double w = touches_j ? sign * e.w : e.w;
    // The i-j coupling becomes w * s_i * (sign * s_i), a constant; the
    // IsingGraph constructor folds self-edges into the offset.
    edges.push_back({local[e.i], local[e.j], w});
  }
  return {IsingGraph(std::move(h), edges, e0), std::move(origin)};
}

}  // namespace detail

// Recursive QAOA: optimize angles, estimate <Z_i> and <Z_i Z_j> over edges,
// and eliminate one variable along the strongest correlation until the graph
// has at most min_size nodes, which are then brute forced.
inline QiroResult qiro_solve_detailed(const IsingGraph& g, const QiroConfig& config, std::uint64_t seed) {
  config.validate();
  check_qubits(g, config.max_qubits);
  detail::Stopwatch clock;
  std::mt19937_64 rng(seed);

  QiroResult out;
  detail::Reduction current{g, {}};
  current.origin.resize(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) current.origin[i] = i;

  while (current.graph.size() > config.min_size) {
    const IsingGraph& rg = current.graph;
    const AngleSearch search = optimize_angles_detailed(rg, config);
    const StateVector sv = qaoa_state(rg, search.params, config.max_qubits);
    const Correlations corr = config.exact_expectations ? correlations_from_state(rg, sv)
                                                        : correlations_from_counts(rg, sample(sv, config.shots, rng()));
    // Strongest correlation; strict comparison keeps the earliest candidate
    // (singles by index, then edges by (i, j)) on ties.
    bool use_pair = false;
    std::size_t pick = 0;
    double strongest = -1.0;
    for (std::size_t k = 0; k < corr.single.size(); ++k) {
      if (std::abs(corr.single[k]) > strongest) {
        strongest = std::abs(corr.single[k]);
        pick = k;
      }
    }
    for (std::size_t e = 0; e < corr.pair.size(); ++e) {
      if (std::abs(corr.pair[e]) > strongest) {
        strongest = std::abs(corr.pair[e]);
        pick = e;
        use_pair = true;
      }
    }

    QiroRound round;
    round.expectation = search.expectation;
    if (use_pair) {
      const auto& edge = rg.edges()[pick];
      round.pair = true;
      round.correlation = corr.pair[pick];
      round.sign = corr.pair[pick] < 0.0 ? -1 : 1;
      round.node = current.origin[edge.i];
      round.partner = current.origin[edge.j];
      current = detail::merge(current, edge.i, edge.j, round.sign);
    } else {
      round.correlation = corr.single[pick];
      round.sign = corr.single[pick] < 0.0 ? -1 : 1;
      round.node = current.origin[pick];
      current = detail::freeze(current, pick, round.sign);
    }
    round.reduced_size = current.graph.size();
    out.rounds.push_back(round);
  }

  const SolveResult base = brute_force(current.graph);
  std::vector<int> spin(g.size(), 0);
  for (std::size_t k = 0; k < current.origin.size(); ++k) spin[current.origin[k]] = base.assignment.spin(k);
  for (auto it = out.rounds.rbegin(); it != out.rounds.rend(); ++it) {
    if (it->pair) spin[it->partner] = it->sign * spin[it->node];
    else spin[it->node] = it->sign;
  }
  std::vector<std::uint8_t> bits(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) bits[i] = spin[i] < 0 ? 1 : 0;
  out.result = detail::finish(g, Assignment(g, std::move(bits)), out.rounds.size(), clock, "qiro", seed);
  return out;
}

inline SolveResult qiro_solve(const IsingGraph& g, const QiroConfig& config, std::uint64_t seed) {
  return qiro_solve_detailed(g, config, seed).result;
}

}  // namespace ucq
