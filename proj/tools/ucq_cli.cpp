// ucq: command-line front end for the multilevel unit commitment solver.
//
//   ucq gen --units 10 --horizon 24 --seed 7 --out day.json
//   ucq compile day.json --qubo day.qubo
//   ucq solve day.json --seed 7 --out report.json
//   ucq baseline day.json
//   ucq eval day.json schedule.json
//   ucq bench --units 2,5,10 --horizon 24

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ucq/ucq.hpp"

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string config_path;
  std::string out_path;
  std::optional<double> penalty_a, penalty_b, penalty_c, penalty_d;
  std::string format = "human";
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ucq::ValidationError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const std::string& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ucq::ParseError(path + ": " + e.what());
  }
}

// Writes to --out when given, stdout otherwise.
void emit(const Globals& g, const std::string& text) {
  if (g.out_path.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(g.out_path);
  if (!out) throw ucq::ValidationError("cannot write '" + g.out_path + "'");
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
}

ucq::PipelineConfig load_config(const Globals& g) {
  ucq::PipelineConfig c;
  if (!g.config_path.empty()) c = ucq::config_from_json(read_json(g.config_path), c);
  if (g.seed) c.seed = *g.seed;
  auto& p = c.formulation.penalties;
  if (g.penalty_a) p.a = *g.penalty_a;
  if (g.penalty_b) p.b = *g.penalty_b;
  if (g.penalty_c) p.c = *g.penalty_c;
  if (g.penalty_d) p.d = *g.penalty_d;
  c.validate();
  return c;
}

bool structured(const Globals& g) { return g.format == "structured"; }

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

std::string describe_costs(const ucq::CostReport& r) {
  std::ostringstream os;
  os << "generation cost     " << fmt(r.generation_cost) << '\n'
     << "penalized objective " << fmt(r.penalized_objective) << '\n'
     << "startup mismatches  " << r.startup_inconsistency_count << '\n'
     << "min-up violations   " << r.min_up_violations << '\n'
     << "min-down violations " << r.min_down_violations << '\n';
  double worst = 0.0;
  for (double m : r.demand_mismatch) worst = std::max(worst, std::abs(m));
  os << "max |demand gap|    " << fmt(worst) << '\n';
  return os.str();
}

std::string describe_schedule(const ucq::Schedule& s) {
  std::ostringstream os;
  os << "on/off (rows = units, columns = periods)\n";
  for (std::size_t i = 0; i < s.unit_count(); ++i) {
    os << "  u" << std::setw(3) << std::left << i << ' ';
    for (int t = 0; t < s.horizon(); ++t) os << (s.on(t, i) ? '#' : '.');
    os << '\n';
  }
  return os.str();
}

int run_gen(const Globals& g, int units, int horizon) {
  const auto inst = ucq::generate_synthetic(units, horizon, g.seed.value_or(0));
  emit(g, ucq::instance_to_json(inst).dump(2));
  return 0;
}

int run_compile(const Globals& g, const std::string& instance_path, const std::string& qubo_path) {
  const auto inst = ucq::parse_instance(read_file(instance_path));
  const auto cfg = load_config(g);
  const auto q = ucq::compile(inst, cfg.formulation);
  if (!qubo_path.empty()) {
    std::ofstream out(qubo_path);
    if (!out) throw ucq::ValidationError("cannot write '" + qubo_path + "'");
    ucq::write_qubo(out, q);
  }
  const auto s = ucq::sparsity_report(q);
  if (structured(g)) {
    emit(g, nlohmann::json{{"n", s.n},
                           {"dense_elements", s.dense_elements()},
                           {"nnz", s.nnz},
                           {"density", s.density},
                           {"offset", q.offset}}
                .dump(2));
  } else {
    std::ostringstream os;
    os << "variables       " << s.n << '\n'
       << "dense elements  " << s.dense_elements() << '\n'
       << "nonzeros        " << s.nnz << '\n'
       << "density         " << std::fixed << std::setprecision(4) << 100.0 * s.density << " %\n";
    if (qubo_path.empty() && g.out_path.empty()) {
      // Without --qubo the matrix goes after the summary.
      std::ostringstream m;
      ucq::write_qubo(m, q);
      os << '\n' << m.str();
    }
    emit(g, os.str());
  }
  return 0;
}

std::string describe_report(const ucq::RunReport& r) {
  std::ostringstream os;
  os << "seed " << r.config.seed << ", " << r.sparsity.n << " variables, density " << std::fixed
     << std::setprecision(4) << 100.0 * r.sparsity.density << " %\n";
  os.unsetf(std::ios::fixed);
  if (!r.levels.empty() || !r.coarse_solver.empty()) {
    os << "levels";
    for (auto n : r.level_sizes) os << ' ' << n;
    os << '\n' << "coarse solve (" << r.coarse_solver << ") energy " << fmt(r.coarse_energy) << '\n';
    for (const auto& l : r.levels) {
      os << "  level " << l.level << " (" << l.nodes << " nodes): " << fmt(l.energy_before) << " -> "
         << fmt(l.energy_after) << ", " << l.accepted << " accepted, " << l.rejected << " rejected\n";
    }
  }
  for (const auto& b : r.baselines) {
    os << "baseline " << b.solver << ": ";
    if (b.ran) os << "energy " << fmt(b.energy) << ", " << fmt(b.wall_seconds) << " s\n";
    else os << b.note << '\n';
  }
  os << "final energy " << fmt(r.final_energy) << "  (" << fmt(r.wall_seconds) << " s)\n\n";
  os << describe_costs(r.costs) << '\n' << describe_schedule(r.schedule);
  return os.str();
}

int run_solve(const Globals& g, const std::string& instance_path, bool baselines) {
  const auto inst = ucq::parse_instance(read_file(instance_path));
  const auto cfg = load_config(g);
  const auto report = baselines ? ucq::run_baselines(inst, cfg) : ucq::solve_pipeline(inst, cfg);
  emit(g, structured(g) ? ucq::report_to_json(report).dump(2) : describe_report(report));
  return 0;
}

int run_eval(const Globals& g, const std::string& instance_path, const std::string& schedule_path) {
  const auto inst = ucq::parse_instance(read_file(instance_path));
  auto doc = read_json(schedule_path);
  // Accept a bare schedule or a full report carrying one.
  if (doc.is_object() && doc.contains("schedule")) doc = doc["schedule"];
  const auto sched = ucq::schedule_from_json(doc);
  const auto cfg = load_config(g);
  const auto r = ucq::evaluate_schedule(inst, sched, cfg.formulation);
  emit(g, structured(g) ? ucq::cost_report_to_json(r).dump(2) : describe_costs(r));
  return 0;
}

int run_bench(const Globals& g, const std::vector<int>& unit_counts, int horizon) {
  const auto cfg = load_config(g);
  nlohmann::json rows = nlohmann::json::array();
  auto add = [&](int units, const std::string& solver, double energy, const ucq::CostReport& c, double seconds) {
    rows.push_back({{"units", units},
                    {"horizon", horizon},
                    {"solver", solver},
                    {"energy", energy},
                    {"generation_cost", c.generation_cost},
                    {"violations", c.violation_count()},
                    {"seconds", seconds}});
  };
  for (int units : unit_counts) {
    const auto inst = ucq::generate_synthetic(units, horizon, cfg.seed);
    const auto pipeline = ucq::solve_pipeline(inst, cfg);
    add(units, "pipeline", pipeline.final_energy, pipeline.costs, pipeline.wall_seconds);
    const auto base = ucq::run_baselines(inst, cfg);
    for (const auto& b : base.baselines) {
      if (b.ran) add(units, b.solver, b.energy, b.costs, b.wall_seconds);
    }
  }
  if (structured(g)) {
    emit(g, rows.dump(2));
    return 0;
  }
  std::ostringstream os;
  os << std::left << std::setw(7) << "units" << std::setw(9) << "horizon" << std::setw(21) << "solver" << std::right
     << std::setw(18) << "energy" << std::setw(18) << "generation_cost" << std::setw(12) << "violations"
     << std::setw(10) << "seconds" << '\n';
  for (const auto& r : rows) {
    os << std::left << std::setw(7) << r["units"].get<int>() << std::setw(9) << r["horizon"].get<int>()
       << std::setw(21) << r["solver"].get<std::string>() << std::right << std::setw(18)
       << fmt(r["energy"].get<double>()) << std::setw(18) << fmt(r["generation_cost"].get<double>())
       << std::setw(12) << r["violations"].get<std::size_t>() << std::setw(10) << std::fixed
       << std::setprecision(3) << r["seconds"].get<double>() << '\n';
    os.unsetf(std::ios::fixed);
  }
  emit(g, os.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multilevel QAOA/QIRO solver for unit commitment"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--config", g.config_path, "Pipeline configuration document")->check(CLI::ExistingFile);
  app.add_option("--out", g.out_path, "Write the result to this file instead of stdout");
  app.add_option("--penalty-a", g.penalty_a, "Demand balance weight");
  app.add_option("--penalty-b", g.penalty_b, "Startup consistency weight");
  app.add_option("--penalty-c", g.penalty_c, "Minimum up-time weight");
  app.add_option("--penalty-d", g.penalty_d, "Minimum down-time weight");
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"human", "structured"}));

  int units = 10, horizon = 24;
  auto* gen = app.add_subcommand("gen", "Generate a synthetic instance");
  gen->add_option("--units", units, "Number of units")->check(CLI::PositiveNumber);
  gen->add_option("--horizon", horizon, "Number of periods")->check(CLI::PositiveNumber);

  std::string instance_path, schedule_path, qubo_path;
  auto* compile = app.add_subcommand("compile", "Compile an instance to a QUBO and report sparsity");
  compile->add_option("instance", instance_path, "Instance document")->required();
  compile->add_option("--qubo", qubo_path, "Write the QUBO in text form to this file");

  auto* solve = app.add_subcommand("solve", "Run the multilevel pipeline");
  solve->add_option("instance", instance_path, "Instance document")->required();

  auto* baseline = app.add_subcommand("baseline", "Simulated annealing and exhaustive baselines");
  baseline->add_option("instance", instance_path, "Instance document")->required();

  auto* eval = app.add_subcommand("eval", "Evaluate a schedule against an instance");
  eval->add_option("instance", instance_path, "Instance document")->required();
  eval->add_option("schedule", schedule_path, "Schedule document, or a report containing one")->required();

  std::vector<int> bench_units{2, 5, 10};
  int bench_horizon = 24;
  auto* bench = app.add_subcommand("bench", "Pipeline vs baselines over synthetic instances");
  bench->add_option("--units", bench_units, "Unit counts to sweep")->delimiter(',')->check(CLI::PositiveNumber);
  bench->add_option("--horizon", bench_horizon, "Number of periods")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (*gen) return run_gen(g, units, horizon);
    if (*compile) return run_compile(g, instance_path, qubo_path);
    if (*solve) return run_solve(g, instance_path, false);
    if (*baseline) return run_solve(g, instance_path, true);
    if (*eval) return run_eval(g, instance_path, schedule_path);
    if (*bench) return run_bench(g, bench_units, bench_horizon);
  } catch (const ucq::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const ucq::CompileError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const ucq::CapacityError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
