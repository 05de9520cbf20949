#include <catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"
#include "ucq/ucp_model.hpp"

using namespace ucq;

namespace {

UcpInstance two_unit_instance() {
  UcpInstance inst;
  inst.horizon = 3;
  inst.units = {{2.0, 5.0, 10.0, 2, 2, false}, {1.5, 3.0, 6.0, 1, 3, true}};
  inst.demand = {8.0, 12.0, 4.0};
  return inst;
}

}  // namespace

TEST_CASE("parse_instance accepts a minimal document") {
  const auto inst = parse_instance(R"({"horizon": 1, "demand": [10],
      "units": [{"c": 1, "h": 1, "maxp": 10, "minup": 1, "mindown": 1}]})");
  CHECK(inst.unit_count() == 1);
  CHECK(inst.horizon == 1);
  CHECK_FALSE(inst.units[0].initial_on);
}

TEST_CASE("parse_instance sizes a 10-unit day at 480 variables") {
  auto doc = instance_to_json(generate_synthetic(10, 24, 3));
  const auto inst = parse_instance(doc.dump());
  CHECK(inst.variable_count() == 480);
}

TEST_CASE("parse_instance errors name the problem") {
  SECTION("demand length mismatch") {
    auto doc = instance_to_json(generate_synthetic(2, 24, 1));
    doc["demand"].erase(doc["demand"].size() - 1);
    CHECK_THROWS_AS(parse_instance(doc.dump()), ValidationError);
    CHECK_THROWS_WITH(parse_instance(doc.dump()), Catch::Matchers::ContainsSubstring("demand"));
  }
  SECTION("missing unit field") {
    CHECK_THROWS_WITH(parse_instance(R"({"horizon": 1, "demand": [1], "units": [{"c": 1, "h": 1, "minup": 1, "mindown": 1}]})"),
                      Catch::Matchers::ContainsSubstring("maxp"));
  }
  SECTION("wrong type") {
    CHECK_THROWS_AS(parse_instance(R"({"horizon": "x", "demand": [], "units": []})"), ParseError);
  }
  SECTION("invariant violation") {
    CHECK_THROWS_WITH(parse_instance(R"({"horizon": 1, "demand": [1], "units": [{"c": 1, "h": 1, "maxp": 0, "minup": 1, "mindown": 1}]})"),
                      Catch::Matchers::ContainsSubstring("maxp"));
  }
  SECTION("malformed text") { CHECK_THROWS_AS(parse_instance("{"), ParseError); }
}

TEST_CASE("generate_synthetic is deterministic and seed sensitive") {
  const auto a = generate_synthetic(10, 24, 7);
  const auto b = generate_synthetic(10, 24, 7);
  const auto c = generate_synthetic(10, 24, 8);
  CHECK(instance_to_json(a) == instance_to_json(b));
  CHECK(a.demand != c.demand);
  CHECK(generate_synthetic(54, 24, 1).unit_count() == 54);

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto inst = generate_synthetic(1 + static_cast<int>(seed % 7), 24, seed);
    const double peak = *std::max_element(inst.demand.begin(), inst.demand.end());
    CHECK(peak <= inst.total_capacity());
    CHECK(peak >= 0.4 * inst.total_capacity());
  }
}

TEST_CASE("evaluate_schedule basics") {
  SECTION("empty schedule, zero demand") {
    UcpInstance inst = two_unit_instance();
    inst.demand = {0, 0, 0};
    const auto r = evaluate_schedule(inst, Schedule(3, 2));
    CHECK(r.generation_cost == 0.0);
    CHECK(r.violation_count() == 0);
  }
  SECTION("single unit direct substitution") {
    UcpInstance inst;
    inst.horizon = 1;
    inst.units = {{2.0, 5.0, 10.0, 1, 1, false}};
    inst.demand = {10.0};
    Schedule s(1, 1);
    s.set_on(0, 0, true);
    s.set_start(0, 0, true);
    const auto r = evaluate_schedule(inst, s);
    CHECK(r.generation_cost == 25.0);
    CHECK(r.demand_mismatch[0] == 0.0);
    CHECK(r.violation_count() == 0);
  }
  SECTION("dimension mismatch") {
    CHECK_THROWS_AS(evaluate_schedule(two_unit_instance(), Schedule(2, 2)), ValidationError);
  }
}

TEST_CASE("evaluate_schedule matches the direct oracle on every 2-unit, 3-period schedule") {
  const auto inst = two_unit_instance();
  std::mt19937_64 rng(11);
  for (int f = 0; f < 4; ++f) {
    const Formulation form = oracle::random_formulation(rng);
    for (std::uint64_t mask = 0; mask < (1U << 12); ++mask) {
      std::vector<std::vector<int>> on, st;
      oracle::split_bits(inst, mask, on, st);
      Schedule s(3, 2);
      for (int t = 0; t < 3; ++t)
        for (std::size_t i = 0; i < 2; ++i) {
          s.set_on(t, i, on[t][i]);
          s.set_start(t, i, st[t][i]);
        }
      const double expected = oracle::penalized_objective(inst, on, st, form);
      REQUIRE(evaluate_schedule(inst, s, form).penalized_objective ==
              Catch::Approx(expected).epsilon(1e-12).margin(1e-9));
    }
  }
}

TEST_CASE("evaluate_schedule properties") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto inst = oracle::random_instance(16, rng);
    Schedule s(inst.horizon, inst.unit_count());
    for (int t = 0; t < inst.horizon; ++t)
      for (std::size_t i = 0; i < inst.unit_count(); ++i) {
        s.set_on(t, i, rng() & 1U);
        s.set_start(t, i, rng() & 1U);
      }
    const auto r = evaluate_schedule(inst, s);

    // Linear in the cost coefficients.
    UcpInstance doubled = inst;
    for (auto& u : doubled.units) {
      u.linear_cost *= 2;
      u.startup_cost *= 2;
    }
    CHECK(evaluate_schedule(doubled, s).generation_cost == 2.0 * r.generation_cost);

    for (int t = 0; t < inst.horizon; ++t) {
      double supplied = 0.0;
      for (std::size_t i = 0; i < inst.unit_count(); ++i) supplied += inst.units[i].max_power * s.on(t, i);
      CHECK(r.demand_mismatch[t] == Catch::Approx(supplied - inst.demand[t]));
    }

    s.derive_starts(inst);
    const auto consistent = evaluate_schedule(inst, s);
    CHECK(consistent.startup_inconsistency_count == 0);
    CHECK(consistent.blocks.startup == 0.0);
    CHECK(consistent.blocks.min_up >= 0.0);
    if (consistent.blocks.min_down >= 0.0) CHECK(consistent.penalized_objective >= consistent.generation_cost);
  }
}

TEST_CASE("logical violation counters") {
  UcpInstance inst;
  inst.horizon = 4;
  inst.units = {{1.0, 1.0, 5.0, 3, 2, false}};
  inst.demand = {0, 0, 0, 0};
  Schedule s(4, 1);
  s.set_on(1, 0, true);  // starts at t=1, off at t=2: min-up of 3 broken
  s.set_on(3, 0, true);  // restarts at t=3, one period after shutting down: min-down of 2 broken
  s.derive_starts(inst);
  const auto r = evaluate_schedule(inst, s);
  CHECK(r.startup_inconsistency_count == 0);
  CHECK(r.min_up_violations == 1);  // the t=3 start is clamped to the horizon and holds
  CHECK(r.min_down_violations == 1);
}

TEST_CASE("schedule document round trip") {
  Schedule s(2, 3);
  s.set_on(0, 1, true);
  s.set_start(0, 1, true);
  s.set_on(1, 2, true);
  CHECK(schedule_from_json(schedule_to_json(s)) == s);
  CHECK_THROWS_AS(schedule_from_json(nlohmann::json::parse(R"({"on": [[0, 2]], "start": [[0, 0]]})")), ParseError);
}
