#pragma once

// Ising graphs: E(s) = e0 + sum_i h_i s_i + sum_{i<j} w_ij s_i s_j with
// s_i = 1 - 2 x_i, so bit 0 is spin +1.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ucq/errors.hpp"
#include "ucq/qubo.hpp"

namespace ucq {

inline constexpr double kEdgeThreshold = 1e-12;

struct Edge {
  std::size_t i = 0;
  std::size_t j = 0;
  double w = 0.0;
};

struct Neighbor {
  std::size_t node = 0;
  double w = 0.0;
};

inline int spin_of(std::uint8_t bit) { return bit ? -1 : 1; }

class IsingGraph {
 public:
  IsingGraph() = default;

  // Canonicalizes the input: duplicate edges are merged, self-couplings move
  // to the offset (s_i^2 = 1) and |w| < kEdgeThreshold is dropped. Labels
  // default to 0..n-1.
  IsingGraph(std::vector<double> biases, const std::vector<Edge>& edges, double offset,
             std::vector<std::size_t> labels = {})
      : h_(std::move(biases)), e0_(offset), labels_(std::move(labels)) {
    const std::size_t n = h_.size();
    if (labels_.empty()) {
      labels_.resize(n);
      std::iota(labels_.begin(), labels_.end(), std::size_t{0});
    }
    if (labels_.size() != n) throw ValidationError("ising graph: label count does not match node count");
    std::map<std::pair<std::size_t, std::size_t>, double> merged;
    for (const auto& e : edges) {
      if (e.i >= n || e.j >= n) throw ValidationError("ising graph: edge endpoint out of range");
      if (e.i == e.j) {
        e0_ += e.w;
        continue;
      }
      merged[std::minmax(e.i, e.j)] += e.w;
    }
    for (const auto& [key, w] : merged) {
      if (!std::isfinite(w)) throw ValidationError("ising graph: non-finite edge weight");
      if (std::abs(w) < kEdgeThreshold) continue;
      edges_.push_back({key.first, key.second, w});
    }
    for (double v : h_) {
      if (!std::isfinite(v)) throw ValidationError("ising graph: non-finite bias");
    }
    build_adjacency();
  }

  std::size_t size() const { return h_.size(); }
  std::span<const double> biases() const { return h_; }
  double bias(std::size_t i) const { return h_[i]; }
  std::span<const Edge> edges() const { return edges_; }
  double offset() const { return e0_; }
  std::span<const std::size_t> labels() const { return labels_; }

  std::span<const Neighbor> neighbors(std::size_t i) const {
    return std::span<const Neighbor>(adj_).subspan(adj_begin_[i], adj_begin_[i + 1] - adj_begin_[i]);
  }
  std::size_t degree(std::size_t i) const { return adj_begin_[i + 1] - adj_begin_[i]; }

 private:
  void build_adjacency() {
    const std::size_t n = h_.size();
    adj_begin_.assign(n + 1, 0);
    for (const auto& e : edges_) {
      ++adj_begin_[e.i + 1];
      ++adj_begin_[e.j + 1];
    }
    for (std::size_t i = 0; i < n; ++i) adj_begin_[i + 1] += adj_begin_[i];
    adj_.resize(adj_begin_[n]);
    std::vector<std::size_t> fill(adj_begin_.begin(), adj_begin_.end() - 1);
    for (const auto& e : edges_) {
      adj_[fill[e.i]++] = {e.j, e.w};
      adj_[fill[e.j]++] = {e.i, e.w};
    }
  }

  std::vector<double> h_;
  std::vector<Edge> edges_;
  double e0_ = 0.0;
  std::vector<std::size_t> labels_;
  std::vector<std::size_t> adj_begin_{0};
  std::vector<Neighbor> adj_;
};

inline void check_size(const IsingGraph& g, std::size_t n, const char* what) {
  if (g.size() != n) {
    throw ValidationError(std::string(what) + ": graph has " + std::to_string(g.size()) + " nodes, assignment has " +
                          std::to_string(n));
  }
}

inline double ising_energy(const IsingGraph& g, std::span<const std::uint8_t> bits) {
  check_size(g, bits.size(), "ising_energy");
  double e = g.offset();
  for (std::size_t i = 0; i < g.size(); ++i) e += g.bias(i) * spin_of(bits[i]);
  for (const auto& edge : g.edges()) e += edge.w * spin_of(bits[edge.i]) * spin_of(bits[edge.j]);
  return e;
}

// Bit vector with a cached energy that stays in sync through flip().
class Assignment {
 public:
  Assignment() = default;
  Assignment(const IsingGraph& g, std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
    energy_ = ising_energy(g, bits_);
  }
  static Assignment zeros(const IsingGraph& g) { return Assignment(g, std::vector<std::uint8_t>(g.size(), 0)); }

  std::size_t size() const { return bits_.size(); }
  std::uint8_t bit(std::size_t i) const { return bits_[i]; }
  int spin(std::size_t i) const { return spin_of(bits_[i]); }
  std::span<const std::uint8_t> bits() const { return bits_; }
  double energy() const { return energy_; }

  void flip(std::size_t i, double delta) {
    bits_[i] ^= 1;
    energy_ += delta;
  }
  void recompute(const IsingGraph& g) { energy_ = ising_energy(g, bits_); }

  bool operator==(const Assignment& o) const { return bits_ == o.bits_ && energy_ == o.energy_; }

 private:
  std::vector<std::uint8_t> bits_;
  double energy_ = 0.0;
};

// Local gain g_i = h_i s_i + sum_j w_ij s_i s_j; flipping node i changes the
// energy by exactly -2 g_i.
inline double gain(const IsingGraph& g, std::span<const std::uint8_t> bits, std::size_t i) {
  const int si = spin_of(bits[i]);
  double acc = g.bias(i) * si;
  for (const auto& nb : g.neighbors(i)) acc += nb.w * si * spin_of(bits[nb.node]);
  return acc;
}

inline std::vector<double> gains(const IsingGraph& g, const Assignment& a) {
  check_size(g, a.size(), "gains");
  std::vector<double> out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = gain(g, a.bits(), i);
  return out;
}

inline double flip_delta(const IsingGraph& g, const Assignment& a, std::size_t i) {
  check_size(g, a.size(), "flip_delta");
  if (i >= g.size()) throw std::out_of_range("flip_delta: node " + std::to_string(i) + " out of range");
  return -2.0 * gain(g, a.bits(), i);
}

inline void flip(const IsingGraph& g, Assignment& a, std::size_t i) { a.flip(i, flip_delta(g, a, i)); }

// Assignment plus its gain vector, updated in O(degree) per flip.
class GainState {
 public:
  GainState(const IsingGraph& g, Assignment a) : g_(&g), a_(std::move(a)), gains_(gains(g, a_)) {}

  const Assignment& assignment() const { return a_; }
  double energy() const { return a_.energy(); }
  double gain(std::size_t i) const { return gains_[i]; }
  double delta(std::size_t i) const { return -2.0 * gains_[i]; }
  std::span<const double> all() const { return gains_; }

  void flip(std::size_t i) {
    const int si = a_.spin(i);
    a_.flip(i, -2.0 * gains_[i]);
    gains_[i] = -gains_[i];
    for (const auto& nb : g_->neighbors(i)) gains_[nb.node] -= 2.0 * nb.w * si * a_.spin(nb.node);
  }

  void reset(Assignment a) {
    a_ = std::move(a);
    gains_ = gains(*g_, a_);
  }

 private:
  const IsingGraph* g_;
  Assignment a_;
  std::vector<double> gains_;
};

// Substitutes x = (1 - s) / 2 into the QUBO.
inline IsingGraph qubo_to_ising(const QuboProblem& p) {
  std::vector<double> h(p.n, 0.0);
  std::vector<Edge> edges;
  double e0 = p.offset;
  for (const auto& t : p.terms) {
    if (t.i == t.j) {
      e0 += t.value / 2.0;
      h[t.i] -= t.value / 2.0;
    } else {
      const double q = t.value / 4.0;
      e0 += q;
      h[t.i] -= q;
      h[t.j] -= q;
      edges.push_back({t.i, t.j, q});
    }
  }
  return IsingGraph(std::move(h), edges, e0);
}

// Induced subgraph over `nodes` with every other node frozen at its current
// spin. Boundary edges fold into biases, everything frozen into the offset,
// so sub-energy(y) equals the full energy of the combined assignment. The
// result's labels are indices into `g`.
inline IsingGraph extract_subproblem(const IsingGraph& g, const Assignment& a, std::span<const std::size_t> nodes) {
  check_size(g, a.size(), "extract_subproblem");
  if (nodes.empty()) throw ValidationError("extract_subproblem: empty node set");
  constexpr std::size_t kFrozen = static_cast<std::size_t>(-1);
  std::vector<std::size_t> local(g.size(), kFrozen);
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    if (nodes[k] >= g.size()) throw ValidationError("extract_subproblem: node out of range");
    if (local[nodes[k]] != kFrozen) throw ValidationError("extract_subproblem: duplicate node");
    local[nodes[k]] = k;
  }
  std::vector<double> h(nodes.size());
  for (std::size_t k = 0; k < nodes.size(); ++k) h[k] = g.bias(nodes[k]);
  double e0 = g.offset();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (local[i] == kFrozen) e0 += g.bias(i) * a.spin(i);
  }
  std::vector<Edge> edges;
  for (const auto& e : g.edges()) {
    const std::size_t li = local[e.i];
    const std::size_t lj = local[e.j];
    if (li != kFrozen && lj != kFrozen) {
      edges.push_back({li, lj, e.w});
    } else if (li != kFrozen) {
      h[li] += e.w * a.spin(e.j);
    } else if (lj != kFrozen) {
      h[lj] += e.w * a.spin(e.i);
    } else {
      e0 += e.w * a.spin(e.i) * a.spin(e.j);
    }
  }
  return IsingGraph(std::move(h), edges, e0, std::vector<std::size_t>(nodes.begin(), nodes.end()));
}

// Text form: "n e0", then "b i h_i" per nonzero bias and "e i j w" per edge.
inline void write_ising(std::ostream& os, const IsingGraph& g) {
  os.precision(17);
  os << g.size() << ' ' << g.offset() << '\n';
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.bias(i) != 0.0) os << "b " << i << ' ' << g.bias(i) << '\n';
  }
  for (const auto& e : g.edges()) os << "e " << e.i << ' ' << e.j << ' ' << e.w << '\n';
}

inline IsingGraph read_ising(std::istream& is) {
  std::size_t n = 0;
  double e0 = 0.0;
  if (!(is >> n >> e0)) throw ParseError("ising: missing header 'n e0'");
  std::vector<double> h(n, 0.0);
  std::vector<Edge> edges;
  std::string tag;
  while (is >> tag) {
    if (tag == "b") {
      std::size_t i = 0;
      double v = 0.0;
      if (!(is >> i >> v) || i >= n) throw ParseError("ising: malformed bias line");
      h[i] += v;
    } else if (tag == "e") {
      Edge e;
      if (!(is >> e.i >> e.j >> e.w) || e.i >= n || e.j >= n) throw ParseError("ising: malformed edge line");
      edges.push_back(e);
    } else {
      throw ParseError("ising: unknown line tag '" + tag + "'");
    }
  }
  return IsingGraph(std::move(h), edges, e0);
}

}  // namespace ucq
