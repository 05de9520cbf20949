#pragma once

// Unit commitment instances, schedules and the penalized cost model.
//
// Periods are indexed 0..T-1. The commitment state before the first period
// comes from UnitSpec::initial_on. Units produce exactly max_power while on;
// there is no dispatch layer.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "ucq/errors.hpp"

namespace ucq {

struct UnitSpec {
  double linear_cost = 0.0;   // per MW per period
  double startup_cost = 0.0;  // per start
  double max_power = 1.0;     // MW
  int min_up = 1;             // periods
  int min_down = 1;           // periods
  bool initial_on = false;

  void validate(std::size_t index) const {
    auto fail = [index](const std::string& what) {
      throw ValidationError("units[" + std::to_string(index) + "]: " + what);
    };
    if (!(max_power > 0.0) || !std::isfinite(max_power)) fail("maxp must be > 0");
    if (min_up < 1) fail("minup must be >= 1");
    if (min_down < 1) fail("mindown must be >= 1");
    if (!(linear_cost >= 0.0) || !std::isfinite(linear_cost)) fail("c must be >= 0");
    if (!(startup_cost >= 0.0) || !std::isfinite(startup_cost)) fail("h must be >= 0");
  }
};

struct UcpInstance {
  std::vector<UnitSpec> units;
  int horizon = 1;
  std::vector<double> demand;

  std::size_t unit_count() const { return units.size(); }
  std::size_t variable_count() const { return 2 * static_cast<std::size_t>(horizon) * units.size(); }

  double total_capacity() const {
    double cap = 0.0;
    for (const auto& u : units) cap += u.max_power;
    return cap;
  }

  void validate() const {
    if (horizon < 1) throw ValidationError("horizon must be >= 1");
    if (units.empty()) throw ValidationError("units must not be empty");
    if (demand.size() != static_cast<std::size_t>(horizon)) {
      throw ValidationError("demand has " + std::to_string(demand.size()) +
                            " entries but horizon is " + std::to_string(horizon));
    }
    for (std::size_t t = 0; t < demand.size(); ++t) {
      if (!(demand[t] >= 0.0) || !std::isfinite(demand[t])) {
        throw ValidationError("demand[" + std::to_string(t) + "] must be >= 0");
      }
    }
    for (std::size_t i = 0; i < units.size(); ++i) units[i].validate(i);
  }
};

// on/start are stored period-major: index t * units + i.
class Schedule {
 public:
  Schedule() = default;
  Schedule(int horizon, std::size_t units)
      : horizon_(horizon), units_(units),
        on_(static_cast<std::size_t>(horizon) * units, 0),
        start_(static_cast<std::size_t>(horizon) * units, 0) {}

  int horizon() const { return horizon_; }
  std::size_t unit_count() const { return units_; }

  std::uint8_t on(int t, std::size_t i) const { return on_[index(t, i)]; }
  std::uint8_t start(int t, std::size_t i) const { return start_[index(t, i)]; }
  void set_on(int t, std::size_t i, bool v) { on_[index(t, i)] = v ? 1 : 0; }
  void set_start(int t, std::size_t i, bool v) { start_[index(t, i)] = v ? 1 : 0; }

  // on_{t-1,i}, with the unit's initial state standing in for t = 0.
  std::uint8_t previous_on(const UcpInstance& inst, int t, std::size_t i) const {
    return t == 0 ? static_cast<std::uint8_t>(inst.units[i].initial_on) : on(t - 1, i);
  }

  // Start bits implied by the on bits (s = on * (1 - prev)).
  void derive_starts(const UcpInstance& inst) {
    for (int t = 0; t < horizon_; ++t)
      for (std::size_t i = 0; i < units_; ++i)
        set_start(t, i, on(t, i) && !previous_on(inst, t, i));
  }

  bool operator==(const Schedule&) const = default;

 private:
  std::size_t index(int t, std::size_t i) const { return static_cast<std::size_t>(t) * units_ + i; }

  int horizon_ = 0;
  std::size_t units_ = 0;
  std::vector<std::uint8_t> on_;
  std::vector<std::uint8_t> start_;
};

struct PenaltyFactors {
  double a = 10000.0;  // demand balance
  double b = 100.0;    // start/on consistency
  double c = 100.0;    // minimum up time
  double d = 10.0;     // minimum down time

  void validate() const {
    for (double v : {a, b, c, d}) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("penalty factors must be finite and >= 0");
    }
  }
};

// PerPeriod squares each period's mismatch; Verbatim squares the sum of
// mismatches over the whole horizon.
enum class DemandSquareMode { PerPeriod, Verbatim };

// Verbatim looks back from period t over [t+1-mindown, t]; Forward looks
// ahead over [t, t+mindown-1].
enum class MinDownMode { Verbatim, Forward };

struct Formulation {
  PenaltyFactors penalties;
  DemandSquareMode demand_mode = DemandSquareMode::PerPeriod;
  MinDownMode min_down_mode = MinDownMode::Verbatim;
};

// Inclusive period range, clamped to the horizon. Empty when first > last.
struct Window {
  int first = 0;
  int last = -1;
  int length() const { return std::max(0, last - first + 1); }
};

inline Window min_up_window(int t, int min_up, int horizon) {
  return {t, std::min(t + min_up - 1, horizon - 1)};
}

inline Window min_down_window(int t, int min_down, int horizon, MinDownMode mode) {
  if (mode == MinDownMode::Verbatim) return {std::max(t + 1 - min_down, 0), t};
  return {t, std::min(t + min_down - 1, horizon - 1)};
}

struct PenaltyBlocks {
  double demand = 0.0;
  double startup = 0.0;
  double min_up = 0.0;
  double min_down = 0.0;
};

struct CostReport {
  double generation_cost = 0.0;
  std::vector<double> demand_mismatch;  // MW, signed, per period
  std::size_t startup_inconsistency_count = 0;
  std::size_t min_up_violations = 0;
  std::size_t min_down_violations = 0;
  PenaltyBlocks blocks;  // unweighted block values
  double penalized_objective = 0.0;

  std::size_t violation_count() const {
    return startup_inconsistency_count + min_up_violations + min_down_violations;
  }
};

inline void check_dimensions(const UcpInstance& inst, const Schedule& s) {
  if (s.horizon() != inst.horizon || s.unit_count() != inst.unit_count()) {
    throw ValidationError("schedule is " + std::to_string(s.horizon()) + "x" + std::to_string(s.unit_count()) +
                          " but instance is " + std::to_string(inst.horizon) + "x" +
                          std::to_string(inst.unit_count()));
  }
}

// Evaluates the penalized objective block by block, plus violation counters
// that follow the logical constraints rather than the penalty expressions.
inline CostReport evaluate_schedule(const UcpInstance& inst, const Schedule& sched, const Formulation& form = {}) {
  check_dimensions(inst, sched);
  const int horizon = inst.horizon;
  const std::size_t units = inst.unit_count();
  CostReport r;
  r.demand_mismatch.assign(static_cast<std::size_t>(horizon), 0.0);

  for (int t = 0; t < horizon; ++t) {
    double supplied = 0.0;
    for (std::size_t i = 0; i < units; ++i) {
      const auto& u = inst.units[i];
      const double on = sched.on(t, i);
      const double st = sched.start(t, i);
      r.generation_cost += u.linear_cost * u.max_power * on + u.startup_cost * st;
      supplied += u.max_power * on;
    }
    r.demand_mismatch[static_cast<std::size_t>(t)] = supplied - inst.demand[static_cast<std::size_t>(t)];
  }

  if (form.demand_mode == DemandSquareMode::PerPeriod) {
    for (double m : r.demand_mismatch) r.blocks.demand += m * m;
  } else {
    double total = 0.0;
    for (double m : r.demand_mismatch) total += m;
    r.blocks.demand = total * total;
  }

  for (int t = 0; t < horizon; ++t) {
    for (std::size_t i = 0; i < units; ++i) {
      const auto& u = inst.units[i];
      const double on = sched.on(t, i);
      const double prev = sched.previous_on(inst, t, i);
      const double st = sched.start(t, i);

      r.blocks.startup += on * (1.0 - prev) + 2.0 * st * (prev - on) + st;

      const Window up = min_up_window(t, u.min_up, horizon);
      double covered = 0.0;
      for (int tau = up.first; tau <= up.last; ++tau) covered += st * sched.on(tau, i);
      r.blocks.min_up += st * up.length() - covered;

      const Window down = min_down_window(t, u.min_down, horizon, form.min_down_mode);
      for (int tau = down.first; tau <= down.last; ++tau) {
        r.blocks.min_down += (st + prev - on) * sched.on(tau, i);
      }

      // Logical counters.
      const bool implied_start = on > 0.5 && prev < 0.5;
      if ((st > 0.5) != implied_start) ++r.startup_inconsistency_count;
      if (implied_start) {
        for (int tau = up.first; tau <= up.last; ++tau) {
          if (!sched.on(tau, i)) {
            ++r.min_up_violations;
            break;
          }
        }
      }
      if (prev > 0.5 && on < 0.5) {
        const Window fwd = min_down_window(t, u.min_down, horizon, MinDownMode::Forward);
        for (int tau = fwd.first; tau <= fwd.last; ++tau) {
          if (sched.on(tau, i)) {
            ++r.min_down_violations;
            break;
          }
        }
      }
    }
  }

  const auto& p = form.penalties;
  r.penalized_objective = r.generation_cost + p.a * r.blocks.demand + p.b * r.blocks.startup +
                          p.c * r.blocks.min_up + p.d * r.blocks.min_down;
  return r;
}

namespace detail {

template <class T>
T required_field(const nlohmann::json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw ParseError(where + ": missing field '" + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError(where + ": field '" + key + "' has the wrong type");
  }
}

}  // namespace detail

inline UcpInstance instance_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ParseError("instance: expected an object");
  UcpInstance inst;
  inst.horizon = detail::required_field<int>(doc, "horizon", "instance");
  if (!doc.contains("demand") || !doc["demand"].is_array()) throw ParseError("instance: field 'demand' must be an array");
  for (std::size_t t = 0; t < doc["demand"].size(); ++t) {
    const auto& v = doc["demand"][t];
    if (!v.is_number()) throw ParseError("instance: demand[" + std::to_string(t) + "] is not a number");
    inst.demand.push_back(v.get<double>());
  }
  if (!doc.contains("units") || !doc["units"].is_array()) throw ParseError("instance: field 'units' must be an array");
  for (std::size_t i = 0; i < doc["units"].size(); ++i) {
    const auto& u = doc["units"][i];
    const std::string where = "units[" + std::to_string(i) + "]";
    if (!u.is_object()) throw ParseError(where + ": expected an object");
    UnitSpec spec;
    spec.linear_cost = detail::required_field<double>(u, "c", where);
    spec.startup_cost = detail::required_field<double>(u, "h", where);
    spec.max_power = detail::required_field<double>(u, "maxp", where);
    spec.min_up = detail::required_field<int>(u, "minup", where);
    spec.min_down = detail::required_field<int>(u, "mindown", where);
    if (u.contains("initial_on")) {
      const auto& v = u["initial_on"];
      if (v.is_boolean()) spec.initial_on = v.get<bool>();
      else if (v.is_number_integer() && (v.get<int>() == 0 || v.get<int>() == 1)) spec.initial_on = v.get<int>() == 1;
      else throw ParseError(where + ": field 'initial_on' must be 0/1 or boolean");
    }
    inst.units.push_back(spec);
  }
  inst.validate();
  return inst;
}

inline UcpInstance parse_instance(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("instance: malformed document: ") + e.what());
  }
  return instance_from_json(doc);
}

inline nlohmann::json instance_to_json(const UcpInstance& inst) {
  nlohmann::json units = nlohmann::json::array();
  for (const auto& u : inst.units) {
    units.push_back({{"c", u.linear_cost},
                     {"h", u.startup_cost},
                     {"maxp", u.max_power},
                     {"minup", u.min_up},
                     {"mindown", u.min_down},
                     {"initial_on", u.initial_on ? 1 : 0}});
  }
  return {{"horizon", inst.horizon}, {"demand", inst.demand}, {"units", units}};
}

inline nlohmann::json schedule_to_json(const Schedule& s) {
  nlohmann::json on = nlohmann::json::array();
  nlohmann::json start = nlohmann::json::array();
  for (int t = 0; t < s.horizon(); ++t) {
    std::vector<int> on_row, start_row;
    for (std::size_t i = 0; i < s.unit_count(); ++i) {
      on_row.push_back(s.on(t, i));
      start_row.push_back(s.start(t, i));
    }
    on.push_back(on_row);
    start.push_back(start_row);
  }
  return {{"on", on}, {"start", start}};
}

inline Schedule schedule_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("on") || !doc.contains("start")) {
    throw ParseError("schedule: expected fields 'on' and 'start'");
  }
  const auto& on = doc["on"];
  const auto& start = doc["start"];
  if (!on.is_array() || !start.is_array() || on.empty() || on.size() != start.size()) {
    throw ParseError("schedule: 'on' and 'start' must be non-empty matrices of equal shape");
  }
  const std::size_t units = on[0].size();
  Schedule s(static_cast<int>(on.size()), units);
  for (std::size_t t = 0; t < on.size(); ++t) {
    if (!on[t].is_array() || !start[t].is_array() || on[t].size() != units || start[t].size() != units) {
      throw ParseError("schedule: row " + std::to_string(t) + " has the wrong length");
    }
    for (std::size_t i = 0; i < units; ++i) {
      const int a = on[t][i].get<int>();
      const int b = start[t][i].get<int>();
      if ((a != 0 && a != 1) || (b != 0 && b != 1)) throw ParseError("schedule: entries must be 0 or 1");
      s.set_on(static_cast<int>(t), i, a == 1);
      s.set_start(static_cast<int>(t), i, b == 1);
    }
  }
  return s;
}

inline nlohmann::json cost_report_to_json(const CostReport& r) {
  return {{"generation_cost", r.generation_cost},
          {"demand_mismatch", r.demand_mismatch},
          {"startup_inconsistency_count", r.startup_inconsistency_count},
          {"min_up_violations", r.min_up_violations},
          {"min_down_violations", r.min_down_violations},
          {"blocks",
           {{"demand", r.blocks.demand},
            {"startup", r.blocks.startup},
            {"min_up", r.blocks.min_up},
            {"min_down", r.blocks.min_down}}},
          {"penalized_objective", r.penalized_objective}};
}

// Synthetic fleet standing in for unpublished benchmark data.
//   max_power    uniform [50, 400] MW
//   linear_cost  uniform [10, 60] per MW per period
//   startup_cost uniform [200, 2000]
//   min_up       uniform {1..4}, min_down uniform {1..4}
//   initial_on   false
// Demand follows a daily curve (trough at 04:00, peak at 16:00 for 24
// periods) with 5% multiplicative noise, then is rescaled so the peak is a
// seeded fraction in [0.5, 0.9] of total capacity.
inline UcpInstance generate_synthetic(int n_units, int horizon, std::uint64_t seed) {
  if (n_units < 1) throw ValidationError("n_units must be >= 1");
  if (horizon < 1) throw ValidationError("horizon must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit01(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit01(rng); };
  auto uniform_int = [&](int lo, int hi) {
    return lo + static_cast<int>(std::min<double>(hi - lo, std::floor(unit01(rng) * (hi - lo + 1))));
  };

  UcpInstance inst;
  inst.horizon = horizon;
  for (int i = 0; i < n_units; ++i) {
    UnitSpec u;
    u.max_power = uniform(50.0, 400.0);
    u.linear_cost = uniform(10.0, 60.0);
    u.startup_cost = uniform(200.0, 2000.0);
    u.min_up = uniform_int(1, 4);
    u.min_down = uniform_int(1, 4);
    inst.units.push_back(u);
  }

  const double peak_fraction = uniform(0.5, 0.9);
  std::vector<double> shape(static_cast<std::size_t>(horizon));
  double peak = 0.0;
  for (int t = 0; t < horizon; ++t) {
    const double phase = 2.0 * std::numbers::pi * (static_cast<double>(t) - 4.0) / 24.0;
    const double base = 0.7 - 0.3 * std::cos(phase);
    shape[static_cast<std::size_t>(t)] = base * uniform(0.95, 1.05);
    peak = std::max(peak, shape[static_cast<std::size_t>(t)]);
  }
  const double target = peak_fraction * inst.total_capacity();
  for (double v : shape) inst.demand.push_back(v / peak * target);
  inst.validate();
  return inst;
}

}  // namespace ucq
