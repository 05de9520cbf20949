#pragma once

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ucq/errors.hpp"
#include "ucq/ising.hpp"

namespace ucq {

struct SolveResult {
  Assignment assignment;
  double energy = 0.0;
  std::size_t iterations = 0;
  double wall_seconds = 0.0;
  std::string solver;
  std::uint64_t seed = 0;
  std::vector<double> trace;  // best-so-far energy at solver checkpoints
};

namespace detail {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline SolveResult finish(const IsingGraph& g, Assignment a, std::size_t iterations, const Stopwatch& clock,
                          std::string solver, std::uint64_t seed, std::vector<double> trace = {}) {
  a.recompute(g);
  SolveResult r;
  r.energy = a.energy();
  r.assignment = std::move(a);
  r.iterations = iterations;
  r.wall_seconds = clock.seconds();
  r.solver = std::move(solver);
  r.seed = seed;
  r.trace = std::move(trace);
  return r;
}

inline std::vector<std::uint8_t> random_bits(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::uint8_t> bits(n);
  for (auto& b : bits) b = static_cast<std::uint8_t>(rng() & 1U);
  return bits;
}

// Lexicographic order of x_0 x_1 ... compares bit 0 first.
inline bool lex_less(std::uint64_t a, std::uint64_t b) {
  const std::uint64_t diff = a ^ b;
  if (diff == 0) return false;
  const int first = std::countr_zero(diff);
  return ((a >> first) & 1U) == 0;
}

}  // namespace detail

inline constexpr std::size_t kBruteForceLimit = 24;

// Exhaustive search in Gray-code order. Ties (within 1e-9 relative) go to the
// lexicographically smallest bitstring x_0 x_1 ... x_{n-1}.
inline SolveResult brute_force(const IsingGraph& g) {
  const std::size_t n = g.size();
  if (n > kBruteForceLimit) {
    throw CapacityError("brute_force: " + std::to_string(n) + " nodes exceeds the limit of " +
                        std::to_string(kBruteForceLimit));
  }
  detail::Stopwatch clock;
  GainState state(g, Assignment::zeros(g));
  std::uint64_t mask = 0;
  std::uint64_t best_mask = 0;
  double best = state.energy();
  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::uint64_t k = 1; k < total; ++k) {
    const auto bit = static_cast<std::size_t>(std::countr_zero(k));
    state.flip(bit);
    mask ^= std::uint64_t{1} << bit;
    const double e = state.energy();
    const double tol = 1e-9 * std::max(1.0, std::abs(best));
    if (e < best - tol || (e <= best + tol && detail::lex_less(mask, best_mask))) {
      best = std::min(best, e);
      best_mask = mask;
    }
  }
  std::vector<std::uint8_t> bits(n);
  for (std::size_t i = 0; i < n; ++i) bits[i] = static_cast<std::uint8_t>((best_mask >> i) & 1U);
  return detail::finish(g, Assignment(g, std::move(bits)), static_cast<std::size_t>(total), clock, "brute_force", 0);
}

// Steepest-descent single flips until no flip lowers the energy.
inline std::size_t steepest_descent(GainState& state, std::size_t n) {
  std::size_t steps = 0;
  for (;;) {
    std::size_t best = n;
    double best_delta = 0.0;
    const double tol = 1e-12 * std::max(1.0, std::abs(state.energy()));
    for (std::size_t i = 0; i < n; ++i) {
      if (state.delta(i) < best_delta - tol) {
        best_delta = state.delta(i);
        best = i;
      }
    }
    if (best == n) return steps;
    state.flip(best);
    ++steps;
  }
}

struct LocalSearchOptions {
  std::size_t restarts = 50;
  std::size_t kicks = 20;  // perturb-and-descend rounds per restart
};

// Multi-restart 1-flip descent with random kicks. A kick flips a few random
// nodes, descends again, and is kept if the energy did not get worse.
inline SolveResult local_search(const IsingGraph& g, const LocalSearchOptions& opt, std::uint64_t seed,
                                const std::optional<Assignment>& start = std::nullopt) {
  if (opt.restarts < 1) throw ValidationError("local_search: restarts must be >= 1");
  detail::Stopwatch clock;
  const std::size_t n = g.size();
  std::mt19937_64 rng(seed);
  std::optional<Assignment> best;
  std::vector<double> trace;
  std::size_t iterations = 0;
  const std::size_t kick_size = std::max<std::size_t>(2, n / 8);
  for (std::size_t r = 0; r < opt.restarts; ++r) {
    Assignment init = (r == 0 && start) ? *start : Assignment(g, detail::random_bits(n, rng));
    GainState state(g, std::move(init));
    iterations += steepest_descent(state, n);
    if (n > 0) {
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      for (std::size_t k = 0; k < opt.kicks; ++k) {
        const Assignment before = state.assignment();
        for (std::size_t f = 0; f < kick_size; ++f) state.flip(pick(rng));
        iterations += steepest_descent(state, n);
        if (state.energy() > before.energy() + 1e-12 * std::max(1.0, std::abs(before.energy()))) {
          state.reset(before);
        }
      }
    }
    if (!best || state.energy() < best->energy()) best = state.assignment();
    trace.push_back(best->energy());
  }
  return detail::finish(g, std::move(*best), iterations, clock, "local_search", seed, std::move(trace));
}

struct AnnealSchedule {
  double t_initial = 1.0;
  double t_final = 1e-3;
  std::size_t sweeps = 200;
  std::size_t moves_per_sweep = 0;  // 0 means one move per node

  void validate() const {
    if (!(t_initial > t_final) || !(t_final > 0.0)) throw ValidationError("anneal schedule: need T0 > T1 > 0");
    if (sweeps < 1) throw ValidationError("anneal schedule: sweeps must be >= 1");
  }
};

// T0 is the largest |flip delta| seen at a random probe assignment and
// T1 = 1e-3 * T0.
inline AnnealSchedule default_anneal_schedule(const IsingGraph& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Assignment probe(g, detail::random_bits(g.size(), rng));
  double t0 = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) t0 = std::max(t0, std::abs(flip_delta(g, probe, i)));
  if (!(t0 > 0.0)) t0 = 1.0;
  AnnealSchedule s;
  s.t_initial = t0;
  s.t_final = 1e-3 * t0;
  return s;
}

// Metropolis single-flip chain with geometric cooling. Returns the best
// assignment seen; trace holds the running best after each sweep.
inline SolveResult simulated_annealing(const IsingGraph& g, const AnnealSchedule& schedule, std::uint64_t seed,
                                       const std::optional<Assignment>& start = std::nullopt) {
  schedule.validate();
  detail::Stopwatch clock;
  const std::size_t n = g.size();
  std::mt19937_64 rng(seed);
  GainState state(g, start ? *start : Assignment(g, detail::random_bits(n, rng)));
  Assignment best = state.assignment();
  std::vector<double> trace;
  if (n == 0) return detail::finish(g, std::move(best), 0, clock, "simulated_annealing", seed, {best.energy()});

  const std::size_t moves = schedule.moves_per_sweep == 0 ? n : schedule.moves_per_sweep;
  const double ratio = schedule.sweeps > 1
                           ? std::pow(schedule.t_final / schedule.t_initial, 1.0 / static_cast<double>(schedule.sweeps - 1))
                           : 1.0;
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double temperature = schedule.t_initial;
  std::size_t accepted = 0;
  for (std::size_t sweep = 0; sweep < schedule.sweeps; ++sweep) {
    for (std::size_t m = 0; m < moves; ++m) {
      const std::size_t i = pick(rng);
      const double delta = state.delta(i);
      if (delta <= 0.0 || unit(rng) < std::exp(-delta / temperature)) {
        state.flip(i);
        ++accepted;
        if (state.energy() < best.energy()) best = state.assignment();
      }
    }
    trace.push_back(best.energy());
    temperature *= ratio;
  }
  return detail::finish(g, std::move(best), accepted, clock, "simulated_annealing", seed, std::move(trace));
}

}  // namespace ucq
