#pragma once

// End-to-end multilevel solve of a unit commitment instance:
// compile -> Ising -> coarsen -> solve coarsest -> (interpolate, refine)
// per level -> decode -> evaluate.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "ucq/classical.hpp"
#include "ucq/errors.hpp"
#include "ucq/ising.hpp"
#include "ucq/multilevel.hpp"
#include "ucq/qaoa.hpp"
#include "ucq/qubo.hpp"
#include "ucq/ucp_model.hpp"

namespace ucq {

struct PipelineConfig {
  Formulation formulation;
  std::size_t subproblem_size = 14;  // H
  std::size_t coarsest_size = 16;    // m
  std::size_t max_rejections = 3;    // consecutive rejected subproblems before leaving a level
  std::size_t max_iterations = 10;   // subproblems per level
  std::size_t coarse_exact_limit = 20;
  double greedy_probability = 0.8;
  std::size_t anneal_sweeps = 200;
  QiroConfig qiro;
  EmbedOptions embed;
  LocalSearchOptions local_search;
  std::uint64_t seed = 0;

  // H = 100: every subproblem exceeds the simulator and goes to local search.
  static PipelineConfig large_scale() {
    PipelineConfig c;
    c.subproblem_size = 100;
    return c;
  }

  void validate() const {
    formulation.penalties.validate();
    if (subproblem_size < 2) throw ConfigError("config: subproblem_size must be >= 2");
    if (coarsest_size < 2) throw ConfigError("config: coarsest_size must be >= 2");
    if (max_rejections < 1) throw ConfigError("config: max_rejections must be >= 1");
    if (max_iterations < 1) throw ConfigError("config: max_iterations must be >= 1");
    if (coarse_exact_limit > kBruteForceLimit) throw ConfigError("config: coarse_exact_limit exceeds brute-force limit");
    if (!(greedy_probability >= 0.0 && greedy_probability <= 1.0)) throw ConfigError("config: greedy_probability must be in [0, 1]");
    if (anneal_sweeps < 1) throw ConfigError("config: anneal_sweeps must be >= 1");
    if (embed.dim < 2 || embed.iterations < 1) throw ConfigError("config: embed needs dim >= 2 and iterations >= 1");
    if (local_search.restarts < 1) throw ConfigError("config: local_search restarts must be >= 1");
    qiro.validate();
  }
};

struct SubproblemLog {
  std::size_t level = 0;
  std::size_t iteration = 0;
  std::size_t size = 0;
  std::string solver;
  double energy_before = 0.0;
  double energy_candidate = 0.0;
  bool accepted = false;
  std::size_t qiro_rounds = 0;
  double wall_seconds = 0.0;
};

struct LevelLog {
  std::size_t level = 0;
  std::size_t nodes = 0;
  double energy_before = 0.0;
  double energy_after = 0.0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t iterations = 0;
  std::vector<double> energy_trace;  // energy after every iteration
  double wall_seconds = 0.0;
};

struct BaselineResult {
  std::string solver;
  bool ran = false;
  std::string note;
  double energy = 0.0;
  std::vector<std::uint8_t> bits;
  Schedule schedule;
  CostReport costs;
  double wall_seconds = 0.0;
};

struct RunReport {
  PipelineConfig config;
  SparsityReport sparsity;
  std::vector<std::size_t> level_sizes;
  std::string coarse_solver;
  double coarse_energy = 0.0;  // equals the energy of its interpolation to level 0
  std::vector<LevelLog> levels;
  std::vector<SubproblemLog> subproblems;
  std::vector<std::uint8_t> bits;
  double final_energy = 0.0;
  Schedule schedule;
  CostReport costs;
  std::vector<BaselineResult> baselines;
  double wall_seconds = 0.0;
};

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (a + 1) + 0xbf58476d1ce4e5b9ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline bool improves(double candidate, double current) {
  return candidate < current - 1e-9 * std::max(1.0, std::abs(current));
}

// Fills `count` slots. Each slot takes the best remaining node by
// (|g| + eps) * weight with probability `greedy`, otherwise samples a
// remaining node proportionally to that score.
inline std::vector<std::size_t> select_nodes(std::span<const double> gains, std::span<const double> weights,
                                             std::size_t count, double greedy, std::mt19937_64& rng) {
  constexpr double kEps = 1e-9;
  const std::size_t n = gains.size();
  std::vector<double> score(n);
  for (std::size_t i = 0; i < n; ++i) score[i] = (std::abs(gains[i]) + kEps) * weights[i];
  std::vector<std::uint8_t> taken(n, 0);
  std::vector<std::size_t> out;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  count = std::min(count, n);
  while (out.size() < count) {
    std::size_t pick = n;
    if (unit(rng) < greedy) {
      double top = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (!taken[i] && score[i] > top) {
          top = score[i];
          pick = i;
        }
      }
    } else {
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) total += taken[i] ? 0.0 : score[i];
      double r = unit(rng) * total;
      for (std::size_t i = 0; i < n; ++i) {
        if (taken[i]) continue;
        pick = i;
        r -= score[i];
        if (r <= 0.0) break;
      }
    }
    taken[pick] = 1;
    out.push_back(pick);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

// Solves an extracted subproblem: QIRO when it fits the simulator, otherwise
// local search seeded from the current assignment.
inline SolveResult solve_subproblem(const IsingGraph& sub, const Assignment& current, const PipelineConfig& config,
                                    std::uint64_t seed, std::size_t* qiro_rounds = nullptr) {
  if (sub.size() <= config.qiro.max_qubits) {
    auto detailed = qiro_solve_detailed(sub, config.qiro, seed);
    if (qiro_rounds) *qiro_rounds = detailed.rounds.size();
    return std::move(detailed.result);
  }
  return local_search(sub, config.local_search, seed, current);
}

// Refinement loop for one level. Only strictly improving subproblem
// solutions are written back, so the energy never increases.
inline Assignment refine_level(const IsingGraph& g, const Assignment& start, const PipelineConfig& config,
                               std::uint64_t seed, LevelLog* log = nullptr,
                               std::vector<SubproblemLog>* sub_logs = nullptr, std::size_t level = 0) {
  check_size(g, start.size(), "refine_level");
  detail::Stopwatch clock;
  GainState state(g, start);
  std::mt19937_64 rng(seed);
  std::vector<double> weights(g.size(), 1.0);
  LevelLog local;
  local.level = level;
  local.nodes = g.size();
  local.energy_before = start.energy();

  std::size_t rejections = 0;
  std::size_t iteration = 0;
  while (g.size() > 0 && rejections < config.max_rejections && iteration < config.max_iterations) {
    detail::Stopwatch sub_clock;
    const auto nodes = detail::select_nodes(state.all(), weights, config.subproblem_size, config.greedy_probability, rng);
    const IsingGraph sub = extract_subproblem(g, state.assignment(), nodes);
    std::vector<std::uint8_t> sub_bits(nodes.size());
    for (std::size_t k = 0; k < nodes.size(); ++k) sub_bits[k] = state.assignment().bit(nodes[k]);
    const Assignment sub_current(sub, std::move(sub_bits));

    std::size_t rounds = 0;
    const SolveResult result =
        solve_subproblem(sub, sub_current, config, detail::mix_seed(seed, iteration, level), &rounds);

    SubproblemLog entry;
    entry.level = level;
    entry.iteration = iteration;
    entry.size = nodes.size();
    entry.solver = result.solver;
    entry.energy_before = state.energy();
    entry.energy_candidate = result.energy;
    entry.qiro_rounds = rounds;

    if (detail::improves(result.energy, state.energy())) {
      for (std::size_t k = 0; k < nodes.size(); ++k) {
        if (result.assignment.bit(k) != state.assignment().bit(nodes[k])) state.flip(nodes[k]);
      }
      state.reset(Assignment(g, std::vector<std::uint8_t>(state.assignment().bits().begin(),
                                                          state.assignment().bits().end())));
      std::fill(weights.begin(), weights.end(), 1.0);
      rejections = 0;
      entry.accepted = true;
      ++local.accepted;
    } else {
      for (std::size_t i : nodes) weights[i] *= 0.5;
      ++rejections;
      ++local.rejected;
    }
    entry.wall_seconds = sub_clock.seconds();
    if (sub_logs) sub_logs->push_back(entry);
    local.energy_trace.push_back(state.energy());
    ++iteration;
  }

  local.iterations = iteration;
  local.energy_after = state.energy();
  local.wall_seconds = clock.seconds();
  if (log) *log = std::move(local);
  return state.assignment();
}

inline RunReport solve_pipeline(const UcpInstance& inst, const PipelineConfig& config) {
  config.validate();
  inst.validate();
  detail::Stopwatch clock;
  RunReport report;
  report.config = config;

  const QuboProblem qubo = compile(inst, config.formulation);
  report.sparsity = sparsity_report(qubo);
  const IsingGraph g0 = qubo_to_ising(qubo);
  const Hierarchy hierarchy =
      build_hierarchy(g0, {config.coarsest_size, config.embed}, detail::mix_seed(config.seed, 0x48));
  for (const auto& level : hierarchy.levels) report.level_sizes.push_back(level.graph.size());

  const IsingGraph& coarsest = hierarchy.coarsest();
  SolveResult coarse = coarsest.size() <= config.coarse_exact_limit
                           ? brute_force(coarsest)
                           : local_search(coarsest, config.local_search, detail::mix_seed(config.seed, 0x43));
  report.coarse_solver = coarse.solver;
  report.coarse_energy = coarse.energy;

  Assignment current = coarse.assignment;
  for (std::size_t l = hierarchy.depth(); l-- > 0;) {
    const IsingGraph& fine = hierarchy.levels[l].graph;
    current = interpolate(fine, current, hierarchy.projections[l]);
    LevelLog log;
    current = refine_level(fine, current, config, detail::mix_seed(config.seed, 0x52, l), &log, &report.subproblems, l);
    report.levels.push_back(std::move(log));
  }

  current.recompute(g0);
  report.bits.assign(current.bits().begin(), current.bits().end());
  report.final_energy = current.energy();
  report.schedule = decode(qubo.varmap, report.bits);
  report.costs = evaluate_schedule(inst, report.schedule, config.formulation);
  report.wall_seconds = clock.seconds();
  return report;
}

// Simulated annealing on the full model, plus exhaustive search when the
// model has at most kBruteForceLimit variables. The best baseline's schedule
// fills the report's schedule and costs.
inline RunReport run_baselines(const UcpInstance& inst, const PipelineConfig& config) {
  config.validate();
  inst.validate();
  detail::Stopwatch clock;
  RunReport report;
  report.config = config;
  const QuboProblem qubo = compile(inst, config.formulation);
  report.sparsity = sparsity_report(qubo);
  const IsingGraph g = qubo_to_ising(qubo);
  report.level_sizes.push_back(g.size());

  auto fill = [&](BaselineResult& b, const SolveResult& r) {
    b.ran = true;
    b.energy = r.energy;
    b.bits.assign(r.assignment.bits().begin(), r.assignment.bits().end());
    b.schedule = decode(qubo.varmap, b.bits);
    b.costs = evaluate_schedule(inst, b.schedule, config.formulation);
    b.wall_seconds = r.wall_seconds;
  };

  {
    BaselineResult sa;
    sa.solver = "simulated_annealing";
    AnnealSchedule schedule = default_anneal_schedule(g, detail::mix_seed(config.seed, 0x53));
    schedule.sweeps = config.anneal_sweeps;
    fill(sa, simulated_annealing(g, schedule, detail::mix_seed(config.seed, 0x41)));
    report.baselines.push_back(std::move(sa));
  }
  {
    BaselineResult exact;
    exact.solver = "brute_force";
    if (g.size() <= kBruteForceLimit) {
      fill(exact, brute_force(g));
    } else {
      exact.note = "not run: " + std::to_string(g.size()) + " variables exceeds the exhaustive limit of " +
                   std::to_string(kBruteForceLimit);
    }
    report.baselines.push_back(std::move(exact));
  }

  const BaselineResult* best = nullptr;
  for (const auto& b : report.baselines) {
    if (b.ran && (!best || b.energy < best->energy)) best = &b;
  }
  report.bits = best->bits;
  report.final_energy = best->energy;
  report.schedule = best->schedule;
  report.costs = best->costs;
  report.wall_seconds = clock.seconds();
  return report;
}

// ---- structured documents -------------------------------------------------

inline const char* to_string(DemandSquareMode m) { return m == DemandSquareMode::PerPeriod ? "per_period" : "verbatim"; }
inline const char* to_string(MinDownMode m) { return m == MinDownMode::Verbatim ? "verbatim" : "forward"; }

inline DemandSquareMode demand_mode_from_string(const std::string& s) {
  if (s == "per_period") return DemandSquareMode::PerPeriod;
  if (s == "verbatim") return DemandSquareMode::Verbatim;
  throw ParseError("config: demand_square_mode must be 'per_period' or 'verbatim'");
}

inline MinDownMode min_down_mode_from_string(const std::string& s) {
  if (s == "verbatim") return MinDownMode::Verbatim;
  if (s == "forward") return MinDownMode::Forward;
  throw ParseError("config: min_down_mode must be 'verbatim' or 'forward'");
}

inline nlohmann::json config_to_json(const PipelineConfig& c) {
  const auto& p = c.formulation.penalties;
  return {{"penalties", {{"a", p.a}, {"b", p.b}, {"c", p.c}, {"d", p.d}}},
          {"demand_square_mode", to_string(c.formulation.demand_mode)},
          {"min_down_mode", to_string(c.formulation.min_down_mode)},
          {"subproblem_size", c.subproblem_size},
          {"coarsest_size", c.coarsest_size},
          {"max_rejections", c.max_rejections},
          {"max_iterations", c.max_iterations},
          {"coarse_exact_limit", c.coarse_exact_limit},
          {"greedy_probability", c.greedy_probability},
          {"anneal_sweeps", c.anneal_sweeps},
          {"accept_metric", "energy"},
          {"qiro",
           {{"min_size", c.qiro.min_size},
            {"max_qubits", c.qiro.max_qubits},
            {"shots", c.qiro.shots},
            {"budget", c.qiro.budget},
            {"layers", c.qiro.layers},
            {"grid", c.qiro.grid},
            {"exact_expectations", c.qiro.exact_expectations}}},
          {"embed", {{"dim", c.embed.dim}, {"iterations", c.embed.iterations}, {"step", c.embed.step}}},
          {"local_search", {{"restarts", c.local_search.restarts}, {"kicks", c.local_search.kicks}}},
          {"seed", c.seed}};
}

namespace detail {

template <class T>
void read_if(const nlohmann::json& doc, const char* key, T& out, const std::string& where) {
  if (!doc.contains(key)) return;
  try {
    out = doc.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError(where + ": field '" + key + "' has the wrong type");
  }
}

}  // namespace detail

// Fields absent from the document keep their values in `base`.
inline PipelineConfig config_from_json(const nlohmann::json& doc, PipelineConfig base = {}) {
  if (!doc.is_object()) throw ParseError("config: expected an object");
  static const std::vector<std::string> known = {
      "penalties",   "demand_square_mode", "min_down_mode",      "subproblem_size", "coarsest_size",
      "max_rejections", "max_iterations",  "coarse_exact_limit", "greedy_probability", "anneal_sweeps",
      "accept_metric", "qiro",             "embed",              "local_search",    "seed"};
  for (const auto& [key, _] : doc.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) throw ParseError("config: unknown field '" + key + "'");
  }
  if (doc.contains("penalties")) {
    const auto& p = doc["penalties"];
    auto& pen = base.formulation.penalties;
    detail::read_if(p, "a", pen.a, "config.penalties");
    detail::read_if(p, "b", pen.b, "config.penalties");
    detail::read_if(p, "c", pen.c, "config.penalties");
    detail::read_if(p, "d", pen.d, "config.penalties");
  }
  if (doc.contains("demand_square_mode"))
    base.formulation.demand_mode = demand_mode_from_string(doc["demand_square_mode"].get<std::string>());
  if (doc.contains("min_down_mode"))
    base.formulation.min_down_mode = min_down_mode_from_string(doc["min_down_mode"].get<std::string>());
  detail::read_if(doc, "subproblem_size", base.subproblem_size, "config");
  detail::read_if(doc, "coarsest_size", base.coarsest_size, "config");
  detail::read_if(doc, "max_rejections", base.max_rejections, "config");
  detail::read_if(doc, "max_iterations", base.max_iterations, "config");
  detail::read_if(doc, "coarse_exact_limit", base.coarse_exact_limit, "config");
  detail::read_if(doc, "greedy_probability", base.greedy_probability, "config");
  detail::read_if(doc, "anneal_sweeps", base.anneal_sweeps, "config");
  detail::read_if(doc, "seed", base.seed, "config");
  if (doc.contains("accept_metric") && doc["accept_metric"] != "energy") {
    throw ParseError("config: accept_metric must be 'energy'");
  }
  if (doc.contains("qiro")) {
    const auto& q = doc["qiro"];
    detail::read_if(q, "min_size", base.qiro.min_size, "config.qiro");
    detail::read_if(q, "max_qubits", base.qiro.max_qubits, "config.qiro");
    detail::read_if(q, "shots", base.qiro.shots, "config.qiro");
    detail::read_if(q, "budget", base.qiro.budget, "config.qiro");
    detail::read_if(q, "layers", base.qiro.layers, "config.qiro");
    detail::read_if(q, "grid", base.qiro.grid, "config.qiro");
    detail::read_if(q, "exact_expectations", base.qiro.exact_expectations, "config.qiro");
  }
  if (doc.contains("embed")) {
    const auto& e = doc["embed"];
    detail::read_if(e, "dim", base.embed.dim, "config.embed");
    detail::read_if(e, "iterations", base.embed.iterations, "config.embed");
    detail::read_if(e, "step", base.embed.step, "config.embed");
  }
  if (doc.contains("local_search")) {
    const auto& l = doc["local_search"];
    detail::read_if(l, "restarts", base.local_search.restarts, "config.local_search");
    detail::read_if(l, "kicks", base.local_search.kicks, "config.local_search");
  }
  return base;
}

inline nlohmann::json baseline_to_json(const BaselineResult& b) {
  nlohmann::json j = {{"solver", b.solver}, {"ran", b.ran}};
  if (!b.ran) {
    j["status"] = "not run";
    j["note"] = b.note;
    return j;
  }
  j["status"] = "ok";
  j["energy"] = b.energy;
  j["schedule"] = schedule_to_json(b.schedule);
  j["costs"] = cost_report_to_json(b.costs);
  j["wall_seconds"] = b.wall_seconds;
  return j;
}

inline nlohmann::json report_to_json(const RunReport& r) {
  nlohmann::json levels = nlohmann::json::array();
  for (const auto& l : r.levels) {
    levels.push_back({{"level", l.level},
                      {"nodes", l.nodes},
                      {"energy_before", l.energy_before},
                      {"energy_after", l.energy_after},
                      {"accepted", l.accepted},
                      {"rejected", l.rejected},
                      {"iterations", l.iterations},
                      {"energy_trace", l.energy_trace},
                      {"wall_seconds", l.wall_seconds}});
  }
  nlohmann::json subs = nlohmann::json::array();
  for (const auto& s : r.subproblems) {
    subs.push_back({{"level", s.level},
                    {"iteration", s.iteration},
                    {"size", s.size},
                    {"solver", s.solver},
                    {"energy_before", s.energy_before},
                    {"energy_candidate", s.energy_candidate},
                    {"accepted", s.accepted},
                    {"qiro_rounds", s.qiro_rounds},
                    {"wall_seconds", s.wall_seconds}});
  }
  nlohmann::json baselines = nlohmann::json::array();
  for (const auto& b : r.baselines) baselines.push_back(baseline_to_json(b));
  return {{"config", config_to_json(r.config)},
          {"seed", r.config.seed},
          {"qubo", {{"n", r.sparsity.n}, {"nnz", r.sparsity.nnz}, {"density", r.sparsity.density}}},
          {"level_sizes", r.level_sizes},
          {"coarse", {{"solver", r.coarse_solver}, {"energy", r.coarse_energy}}},
          {"levels", levels},
          {"subproblems", subs},
          {"final_energy", r.final_energy},
          {"schedule", schedule_to_json(r.schedule)},
          {"costs", cost_report_to_json(r.costs)},
          {"baselines", baselines},
          {"wall_seconds", r.wall_seconds}};
}

}  // namespace ucq
