#pragma once

// Expansion of the penalized unit commitment objective into a QUBO
//   E(x) = sum_{i<=j} Q_ij x_i x_j + offset,   x in {0,1}^n
// over n = 2 * T * |I| variables (an ON and a START bit per unit and period).

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ucq/errors.hpp"
#include "ucq/ucp_model.hpp"

namespace ucq {

enum class VarKind : std::uint8_t { On = 0, Start = 1 };

struct VariableKey {
  int period = 0;
  std::size_t unit = 0;
  VarKind kind = VarKind::On;
  bool operator==(const VariableKey&) const = default;
};

// Variable k = 2 * (t * units + i) + kind.
class VariableMap {
 public:
  VariableMap() = default;
  VariableMap(int horizon, std::size_t units) : horizon_(horizon), units_(units) {}

  int horizon() const { return horizon_; }
  std::size_t unit_count() const { return units_; }
  std::size_t size() const { return 2 * static_cast<std::size_t>(horizon_) * units_; }

  std::size_t index(int t, std::size_t i, VarKind kind) const {
    return 2 * (static_cast<std::size_t>(t) * units_ + i) + static_cast<std::size_t>(kind);
  }
  std::size_t on(int t, std::size_t i) const { return index(t, i, VarKind::On); }
  std::size_t start(int t, std::size_t i) const { return index(t, i, VarKind::Start); }

  VariableKey key(std::size_t k) const {
    if (k >= size()) throw std::out_of_range("variable index " + std::to_string(k) + " out of range");
    const std::size_t cell = k / 2;
    return {static_cast<int>(cell / units_), cell % units_, static_cast<VarKind>(k % 2)};
  }

 private:
  int horizon_ = 0;
  std::size_t units_ = 0;
};

struct QuboTerm {
  std::size_t i = 0;  // i <= j; i == j holds a linear coefficient
  std::size_t j = 0;
  double value = 0.0;
};

struct QuboProblem {
  std::size_t n = 0;
  std::vector<QuboTerm> terms;  // sorted by (i, j), unique, nonzero
  double offset = 0.0;
  VariableMap varmap;
};

// Affine expression c + sum a_k x_k used while expanding products.
struct Affine {
  double constant = 0.0;
  std::vector<std::pair<std::size_t, double>> terms;

  static Affine variable(std::size_t k, double coef = 1.0) { return {0.0, {{k, coef}}}; }
  static Affine constant_of(double c) { return {c, {}}; }

  Affine& add(std::size_t k, double coef) {
    terms.emplace_back(k, coef);
    return *this;
  }
};

class QuboBuilder {
 public:
  explicit QuboBuilder(std::size_t n) : n_(n) {}

  void add_constant(double v) { offset_ += v; }
  void add_linear(std::size_t k, double v) { add_quadratic(k, k, v); }
  void add_quadratic(std::size_t a, std::size_t b, double v) {
    if (a >= n_ || b >= n_) throw std::out_of_range("QUBO variable index out of range");
    if (v == 0.0) return;
    if (a > b) std::swap(a, b);
    coef_[{a, b}] += v;  // x_a * x_a == x_a lands on the diagonal
  }

  // scale * lhs * rhs, fully expanded.
  void add_product(const Affine& lhs, const Affine& rhs, double scale) {
    add_constant(scale * lhs.constant * rhs.constant);
    for (const auto& [k, a] : lhs.terms) add_linear(k, scale * a * rhs.constant);
    for (const auto& [k, a] : rhs.terms) add_linear(k, scale * a * lhs.constant);
    for (const auto& [k, a] : lhs.terms)
      for (const auto& [l, b] : rhs.terms) add_quadratic(k, l, scale * a * b);
  }

  void add_square(const Affine& e, double scale) { add_product(e, e, scale); }

  QuboProblem build(VariableMap varmap) const {
    QuboProblem p;
    p.n = n_;
    p.offset = offset_;
    p.varmap = varmap;
    if (!std::isfinite(offset_)) throw CompileError("QUBO offset is not representable");
    for (const auto& [key, v] : coef_) {
      if (!std::isfinite(v)) {
        throw CompileError("QUBO coefficient (" + std::to_string(key.first) + ", " + std::to_string(key.second) +
                           ") is not representable");
      }
      if (v != 0.0) p.terms.push_back({key.first, key.second, v});
    }
    return p;
  }

 private:
  std::size_t n_;
  double offset_ = 0.0;
  std::map<std::pair<std::size_t, std::size_t>, double> coef_;
};

inline QuboProblem compile(const UcpInstance& inst, const Formulation& form = {}) {
  inst.validate();
  form.penalties.validate();
  const int horizon = inst.horizon;
  const std::size_t units = inst.unit_count();
  const VariableMap vm(horizon, units);
  QuboBuilder qb(vm.size());
  const auto& pen = form.penalties;

  auto prev_on = [&](int t, std::size_t i) {
    return t == 0 ? Affine::constant_of(inst.units[i].initial_on ? 1.0 : 0.0) : Affine::variable(vm.on(t - 1, i));
  };

  // Generation cost.
  for (int t = 0; t < horizon; ++t) {
    for (std::size_t i = 0; i < units; ++i) {
      const auto& u = inst.units[i];
      qb.add_linear(vm.on(t, i), u.linear_cost * u.max_power);
      qb.add_linear(vm.start(t, i), u.startup_cost);
    }
  }

  // Demand balance.
  if (pen.a != 0.0) {
    auto mismatch = [&](int t, Affine& e) {
      for (std::size_t i = 0; i < units; ++i) e.add(vm.on(t, i), inst.units[i].max_power);
      e.constant -= inst.demand[static_cast<std::size_t>(t)];
    };
    if (form.demand_mode == DemandSquareMode::PerPeriod) {
      for (int t = 0; t < horizon; ++t) {
        Affine e;
        mismatch(t, e);
        qb.add_square(e, pen.a);
      }
    } else {
      Affine e;
      for (int t = 0; t < horizon; ++t) mismatch(t, e);
      qb.add_square(e, pen.a);
    }
  }

  for (int t = 0; t < horizon; ++t) {
    for (std::size_t i = 0; i < units; ++i) {
      const auto& u = inst.units[i];
      const std::size_t on = vm.on(t, i);
      const std::size_t st = vm.start(t, i);
      const Affine prev = prev_on(t, i);

      // on_t (1 - on_{t-1}) + 2 s_t (on_{t-1} - on_t) + s_t
      if (pen.b != 0.0) {
        Affine not_prev = prev;
        not_prev.constant = 1.0 - prev.constant;
        for (auto& term : not_prev.terms) term.second = -term.second;
        qb.add_product(Affine::variable(on), not_prev, pen.b);
        Affine diff = prev;
        diff.add(on, -1.0);
        qb.add_product(Affine::variable(st), diff, 2.0 * pen.b);
        qb.add_linear(st, pen.b);
      }

      // s_t * |window| - sum_tau s_t on_tau
      if (pen.c != 0.0) {
        const Window w = min_up_window(t, u.min_up, horizon);
        qb.add_linear(st, pen.c * w.length());
        for (int tau = w.first; tau <= w.last; ++tau) qb.add_quadratic(st, vm.on(tau, i), -pen.c);
      }

      // sum_tau (s_t + on_{t-1} - on_t) on_tau
      if (pen.d != 0.0) {
        Affine lhs = prev;
        lhs.add(st, 1.0).add(on, -1.0);
        const Window w = min_down_window(t, u.min_down, horizon, form.min_down_mode);
        for (int tau = w.first; tau <= w.last; ++tau) qb.add_product(lhs, Affine::variable(vm.on(tau, i)), pen.d);
      }
    }
  }
  return qb.build(vm);
}

inline void check_length(std::size_t expected, std::size_t got, const char* what) {
  if (expected != got) {
    throw ValidationError(std::string(what) + ": expected " + std::to_string(expected) + " entries, got " +
                          std::to_string(got));
  }
}

inline double evaluate_qubo(const QuboProblem& p, std::span<const std::uint8_t> x) {
  check_length(p.n, x.size(), "evaluate_qubo");
  double e = p.offset;
  for (const auto& t : p.terms) {
    if (x[t.i] && x[t.j]) e += t.value;
  }
  return e;
}

inline Schedule decode(const VariableMap& vm, std::span<const std::uint8_t> x) {
  check_length(vm.size(), x.size(), "decode");
  Schedule s(vm.horizon(), vm.unit_count());
  for (int t = 0; t < vm.horizon(); ++t) {
    for (std::size_t i = 0; i < vm.unit_count(); ++i) {
      s.set_on(t, i, x[vm.on(t, i)] != 0);
      s.set_start(t, i, x[vm.start(t, i)] != 0);
    }
  }
  return s;
}

inline std::vector<std::uint8_t> encode(const VariableMap& vm, const Schedule& s) {
  if (s.horizon() != vm.horizon() || s.unit_count() != vm.unit_count()) {
    throw ValidationError("encode: schedule dimensions do not match the variable map");
  }
  std::vector<std::uint8_t> x(vm.size(), 0);
  for (int t = 0; t < vm.horizon(); ++t) {
    for (std::size_t i = 0; i < vm.unit_count(); ++i) {
      x[vm.on(t, i)] = s.on(t, i);
      x[vm.start(t, i)] = s.start(t, i);
    }
  }
  return x;
}

struct SparsityReport {
  std::size_t n = 0;
  std::size_t nnz = 0;  // full symmetric matrix, off-diagonals counted twice
  double density = 0.0;
  std::size_t dense_elements() const { return n * n; }
};

inline SparsityReport sparsity_report(const QuboProblem& p) {
  SparsityReport r;
  r.n = p.n;
  for (const auto& t : p.terms) {
    if (t.value == 0.0) continue;
    r.nnz += t.i == t.j ? 1 : 2;
  }
  r.density = p.n == 0 ? 0.0 : static_cast<double>(r.nnz) / (static_cast<double>(p.n) * static_cast<double>(p.n));
  return r;
}

// Sparse coordinate text: header "n offset", then one "i j value" per term.
inline void write_qubo(std::ostream& os, const QuboProblem& p) {
  os.precision(17);
  os << p.n << ' ' << p.offset << '\n';
  for (const auto& t : p.terms) os << t.i << ' ' << t.j << ' ' << t.value << '\n';
}

inline QuboProblem read_qubo(std::istream& is) {
  QuboProblem p;
  if (!(is >> p.n >> p.offset)) throw ParseError("qubo: missing header 'n offset'");
  QuboBuilder qb(p.n);
  std::size_t i = 0, j = 0;
  double v = 0.0;
  while (is >> i >> j >> v) {
    if (i >= p.n || j >= p.n) throw ParseError("qubo: term index out of range");
    qb.add_quadratic(i, j, v);
  }
  if (!is.eof()) throw ParseError("qubo: malformed term line");
  qb.add_constant(p.offset);
  return qb.build(VariableMap{});
}

}  // namespace ucq
