#include <catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"
#include "ucq/pipeline.hpp"

using namespace ucq;

namespace {

nlohmann::json strip_wall_times(nlohmann::json j) {
  if (j.is_object()) {
    j.erase("wall_seconds");
    for (auto& [k, v] : j.items()) v = strip_wall_times(v);
  } else if (j.is_array()) {
    for (auto& v : j) v = strip_wall_times(v);
  }
  return j;
}

}  // namespace

TEST_CASE("select_nodes") {
  std::mt19937_64 rng(1);
  const std::vector<double> gains{0.1, -5.0, 2.0, 0.0, 3.0};
  const std::vector<double> weights(5, 1.0);
  CHECK(detail::select_nodes(gains, weights, 2, 1.0, rng) == std::vector<std::size_t>{1, 4});
  CHECK(detail::select_nodes(gains, weights, 9, 0.5, rng).size() == 5);
  const std::vector<double> halved{1.0, 0.01, 1.0, 1.0, 1.0};
  CHECK(detail::select_nodes(gains, halved, 1, 1.0, rng) == std::vector<std::size_t>{4});
}

TEST_CASE("refine_level") {
  PipelineConfig cfg;
  SECTION("a global optimum is left alone") {
    std::mt19937_64 rng(2);
    const auto g = oracle::random_graph(14, 0.4, rng);
    const auto opt = brute_force(g).assignment;
    LevelLog log;
    const auto out = refine_level(g, opt, cfg, 3, &log);
    CHECK(std::ranges::equal(out.bits(), opt.bits()));
    CHECK(log.accepted == 0);
    CHECK(log.rejected == cfg.max_rejections);
  }
  SECTION("a planted single-flip improvement is taken in the first iteration") {
    // H covers the whole graph and the subproblem is solved exactly.
    std::mt19937_64 rng(3);
    const auto g = oracle::random_graph(14, 0.3, rng);
    cfg.qiro.min_size = 14;
    Assignment start = local_search(g, {5, 5}, 4).assignment;
    std::size_t node = 0;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (flip_delta(g, start, i) > flip_delta(g, start, node)) node = i;
    REQUIRE(flip_delta(g, start, node) > 0.0);
    flip(g, start, node);
    REQUIRE(flip_delta(g, start, node) < 0.0);
    std::vector<SubproblemLog> subs;
    const auto out = refine_level(g, start, cfg, 5, nullptr, &subs);
    REQUIRE(!subs.empty());
    CHECK(subs[0].accepted);
    CHECK(start.energy() - subs[0].energy_candidate >= -flip_delta(g, start, node) - 1e-9);
    CHECK(out.energy() <= start.energy() + flip_delta(g, start, node) + 1e-9);
  }
  SECTION("energy trace never increases") {
    std::mt19937_64 rng(6);
    cfg.subproblem_size = 8;
    cfg.qiro.min_size = 6;
    for (int trial = 0; trial < 100; ++trial) {
      const auto g = oracle::random_graph(20, 0.2, rng);
      const Assignment start(g, oracle::bits_of(rng(), 20));
      LevelLog log;
      const auto out = refine_level(g, start, cfg, rng(), &log);
      double prev = start.energy();
      for (double e : log.energy_trace) {
        REQUIRE(e <= prev);
        prev = e;
      }
      REQUIRE(out.energy() == Catch::Approx(ising_energy(g, out.bits())).margin(1e-9));
    }
  }
  SECTION("oversized subproblems use local search") {
    std::mt19937_64 rng(7);
    const auto g = oracle::random_graph(40, 0.1, rng);
    cfg.subproblem_size = 20;
    std::vector<SubproblemLog> subs;
    refine_level(g, Assignment::zeros(g), cfg, 1, nullptr, &subs);
    REQUIRE(!subs.empty());
    CHECK(subs[0].solver == "local_search");
  }
}

TEST_CASE("solve_pipeline") {
  SECTION("one unit, two periods is solved exactly") {
    UcpInstance inst;
    inst.horizon = 2;
    inst.units = {{3.0, 20.0, 50.0, 1, 1, false}};
    inst.demand = {30.0, 45.0};
    const auto report = solve_pipeline(inst, {});
    const auto exact = brute_force(qubo_to_ising(compile(inst)));
    CHECK(report.final_energy == Catch::Approx(exact.energy).margin(1e-9));
    CHECK(report.costs.penalized_objective == Catch::Approx(exact.energy).epsilon(1e-9));
  }
  SECTION("report is consistent and deterministic on a small day") {
    PipelineConfig cfg;
    cfg.seed = 11;
    cfg.coarsest_size = 8;
    cfg.subproblem_size = 10;
    const auto inst = generate_synthetic(3, 8, 5);
    const auto a = solve_pipeline(inst, cfg);
    const auto b = solve_pipeline(inst, cfg);
    CHECK(strip_wall_times(report_to_json(a)) == strip_wall_times(report_to_json(b)));

    const auto g = qubo_to_ising(compile(inst, cfg.formulation));
    CHECK(a.final_energy == Catch::Approx(ising_energy(g, a.bits)).margin(1e-6));
    const auto re = evaluate_schedule(inst, a.schedule, cfg.formulation);
    CHECK(re.penalized_objective == Catch::Approx(a.final_energy).epsilon(1e-6));
    CHECK(a.level_sizes.front() == 48);
    CHECK(a.level_sizes.back() <= 8);
    REQUIRE(!a.levels.empty());
    CHECK(a.levels.front().energy_before == Catch::Approx(a.coarse_energy).margin(1e-6));
    CHECK(a.final_energy <= a.coarse_energy + 1e-6);
    for (std::size_t k = 1; k < a.levels.size(); ++k) {
      CHECK(a.levels[k].energy_before == Catch::Approx(a.levels[k - 1].energy_after).margin(1e-6));
    }
  }
  SECTION("config is validated") {
    PipelineConfig cfg;
    cfg.subproblem_size = 1;
    CHECK_THROWS_AS(solve_pipeline(generate_synthetic(1, 2, 0), cfg), ConfigError);
  }
}

TEST_CASE("run_baselines") {
  SECTION("tiny instance includes the exact optimum") {
    const auto inst = generate_synthetic(2, 3, 4);
    const auto r = run_baselines(inst, {});
    REQUIRE(r.baselines.size() == 2);
    REQUIRE(r.baselines[1].ran);
    const double exact = r.baselines[1].energy;
    CHECK(exact == Catch::Approx(oracle::enumerate(qubo_to_ising(compile(inst))).min).margin(1e-6));
    CHECK(r.baselines[0].energy >= exact - 1e-9);
    CHECK(solve_pipeline(inst, {}).final_energy >= exact - 1e-9);
  }
  SECTION("480 variables leaves the exact column not run") {
    PipelineConfig cfg;
    cfg.anneal_sweeps = 20;
    const auto r = run_baselines(generate_synthetic(10, 24, 7), cfg);
    CHECK(r.baselines[0].ran);
    CHECK_FALSE(r.baselines[1].ran);
    CHECK(baseline_to_json(r.baselines[1])["status"] == "not run");
  }
}

TEST_CASE("config documents") {
  PipelineConfig c;
  c.subproblem_size = 9;
  c.formulation.min_down_mode = MinDownMode::Forward;
  c.qiro.exact_expectations = true;
  const auto back = config_from_json(config_to_json(c));
  CHECK(config_to_json(back) == config_to_json(c));
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"bogus", 1}}), ParseError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"subproblem_size", "x"}}), ParseError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"accept_metric", "gain"}}), ParseError);
  CHECK(PipelineConfig::large_scale().subproblem_size == 100);
}
