#pragma once

// Multilevel coarsening of Ising graphs: sphere embedding that pushes
// coupled nodes apart, greedy nearest-neighbour pairing in the embedding,
// and contraction G' = P^T M P of the pairing.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "ucq/errors.hpp"
#include "ucq/ising.hpp"
#include "ucq/kdtree.hpp"

namespace ucq {

struct Embedding {
  std::size_t dim = 0;
  std::vector<double> positions;       // row-major, dim per node, unit norm
  std::vector<double> objective_trace;  // objective before the first and after every iteration

  std::size_t size() const { return dim == 0 ? 0 : positions.size() / dim; }
  std::span<const double> position(std::size_t i) const { return std::span<const double>(positions).subspan(i * dim, dim); }
};

struct EmbedOptions {
  std::size_t dim = 4;
  std::size_t iterations = 20;
  double step = 0.5;
};

namespace detail {

inline double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

inline double local_spread(const IsingGraph& g, const Embedding& emb, std::size_t i, std::span<const double> p) {
  double s = 0.0;
  for (const auto& nb : g.neighbors(i)) s += std::abs(nb.w) * distance(p, emb.position(nb.node));
  return s;
}

}  // namespace detail

// sum_i sum_{j in n(i)} |w_ij| * ||p_i - p_j||
inline double embedding_objective(const IsingGraph& g, const Embedding& emb) {
  double s = 0.0;
  for (const auto& e : g.edges()) s += 2.0 * std::abs(e.w) * detail::distance(emb.position(e.i), emb.position(e.j));
  return s;
}

// Each iteration visits nodes in order and proposes
//   p_i <- normalize(p_i + step * (p_i - c_i))
// with c_i the |w|-weighted centroid of the neighbours. A proposal is kept
// only if node i's weighted distance to its neighbours does not drop, so the
// global objective never decreases.
inline Embedding embed(const IsingGraph& g, const EmbedOptions& opt, std::uint64_t seed) {
  if (opt.dim < 2) throw ValidationError("embed: dimension must be >= 2");
  if (opt.iterations < 1) throw ValidationError("embed: iterations must be >= 1");
  const std::size_t n = g.size();
  const std::size_t d = opt.dim;
  Embedding emb;
  emb.dim = d;
  emb.positions.resize(n * d);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    double norm = 0.0;
    do {
      norm = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        emb.positions[i * d + k] = normal(rng);
        norm += emb.positions[i * d + k] * emb.positions[i * d + k];
      }
    } while (norm < 1e-24);
    norm = std::sqrt(norm);
    for (std::size_t k = 0; k < d; ++k) emb.positions[i * d + k] /= norm;
  }

  emb.objective_trace.push_back(embedding_objective(g, emb));
  std::vector<double> centroid(d), proposal(d);
  for (std::size_t it = 0; it < opt.iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      if (g.degree(i) == 0) continue;
      std::fill(centroid.begin(), centroid.end(), 0.0);
      double total = 0.0;
      for (const auto& nb : g.neighbors(i)) {
        const auto pj = emb.position(nb.node);
        for (std::size_t k = 0; k < d; ++k) centroid[k] += std::abs(nb.w) * pj[k];
        total += std::abs(nb.w);
      }
      if (total <= 0.0) continue;
      const auto pi = emb.position(i);
      double norm = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        proposal[k] = pi[k] + opt.step * (pi[k] - centroid[k] / total);
        norm += proposal[k] * proposal[k];
      }
      norm = std::sqrt(norm);
      if (norm < 1e-300) continue;
      for (double& v : proposal) v /= norm;
      if (detail::local_spread(g, emb, i, proposal) >= detail::local_spread(g, emb, i, pi)) {
        std::copy(proposal.begin(), proposal.end(), emb.positions.begin() + static_cast<std::ptrdiff_t>(i * d));
      }
    }
    emb.objective_trace.push_back(embedding_objective(g, emb));
  }
  return emb;
}

// Projection of fine nodes onto coarse clusters. Clusters are numbered in
// creation order; a cluster holds a pair or a singleton.
struct Matching {
  std::vector<std::size_t> cluster_of;
  std::vector<std::vector<std::size_t>> clusters;

  std::size_t fine_size() const { return cluster_of.size(); }
  std::size_t coarse_size() const { return clusters.size(); }

  static Matching identity(std::size_t n) {
    Matching m;
    m.cluster_of.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      m.cluster_of[i] = i;
      m.clusters.push_back({i});
    }
    return m;
  }

  void validate(std::size_t n) const {
    if (cluster_of.size() != n) throw ValidationError("matching: covers " + std::to_string(cluster_of.size()) +
                                                      " nodes, graph has " + std::to_string(n));
    std::vector<int> seen(n, 0);
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      if (clusters[c].empty() || clusters[c].size() > 2) throw ValidationError("matching: clusters must hold 1 or 2 nodes");
      for (std::size_t i : clusters[c]) {
        if (i >= n || cluster_of[i] != c) throw ValidationError("matching: inconsistent cluster map");
        ++seen[i];
      }
    }
    for (int s : seen) {
      if (s != 1) throw ValidationError("matching: every node must appear in exactly one cluster");
    }
  }
};

// Visits nodes in seeded random order; each unpaired node takes its nearest
// unpaired neighbour in the embedding. An odd leftover stays a singleton.
inline Matching match_nodes(const IsingGraph& g, const Embedding& emb, std::uint64_t seed) {
  const std::size_t n = g.size();
  if (emb.size() != n) throw ValidationError("match_nodes: embedding does not cover the graph");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  KdTree tree(emb.positions, emb.dim);
  Matching m;
  m.cluster_of.assign(n, 0);
  std::vector<std::uint8_t> done(n, 0);
  for (std::size_t u : order) {
    if (done[u]) continue;
    done[u] = 1;
    tree.remove(u);
    const auto partner = tree.nearest(emb.position(u));
    const std::size_t c = m.clusters.size();
    if (partner) {
      done[*partner] = 1;
      tree.remove(*partner);
      m.clusters.push_back({u, *partner});
      m.cluster_of[*partner] = c;
    } else {
      m.clusters.push_back({u});
    }
    m.cluster_of[u] = c;
  }
  return m;
}

// Cluster-constant assignments keep their energy: coarse biases add up,
// coarse couplings add up, couplings inside a pair become constants.
inline IsingGraph coarsen(const IsingGraph& g, const Matching& m) {
  m.validate(g.size());
  std::vector<double> h(m.coarse_size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) h[m.cluster_of[i]] += g.bias(i);
  double e0 = g.offset();
  std::vector<Edge> edges;
  for (const auto& e : g.edges()) {
    const std::size_t a = m.cluster_of[e.i];
    const std::size_t b = m.cluster_of[e.j];
    if (a == b) e0 += e.w;
    else edges.push_back({a, b, e.w});
  }
  return IsingGraph(std::move(h), edges, e0);
}

// Coupling absorbed into each coarse node: the fine nodes' own absorbed
// coupling plus the weight of the edge joining a pair.
inline std::vector<double> absorbed_coupling(const IsingGraph& fine, std::span<const double> fine_absorbed,
                                             const Matching& m) {
  std::vector<double> out(m.coarse_size(), 0.0);
  for (std::size_t i = 0; i < fine.size(); ++i) out[m.cluster_of[i]] += fine_absorbed[i];
  for (const auto& e : fine.edges()) {
    if (m.cluster_of[e.i] == m.cluster_of[e.j]) out[m.cluster_of[e.i]] += e.w;
  }
  return out;
}

struct Level {
  IsingGraph graph;
  std::vector<double> absorbed;  // per node; zero on the finest level
  std::vector<double> embedding_trace;
};

// Symmetric matrix of a level: couplings off the diagonal (both triangles),
// h_i + 2 * absorbed_i on the diagonal. This is the matrix that the chain of
// P^T M P products produces.
inline std::vector<double> level_matrix(const Level& level) {
  const std::size_t n = level.graph.size();
  std::vector<double> m(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) m[i * n + i] = level.graph.bias(i) + 2.0 * level.absorbed[i];
  for (const auto& e : level.graph.edges()) {
    m[e.i * n + e.j] += e.w;
    m[e.j * n + e.i] += e.w;
  }
  return m;
}

struct HierarchyOptions {
  std::size_t min_size = 16;  // stop once a level has at most this many nodes
  EmbedOptions embed;
};

struct Hierarchy {
  std::vector<Level> levels;            // levels[0] is the input graph
  std::vector<Matching> projections;    // projections[l] maps level l onto l + 1

  std::size_t depth() const { return projections.size(); }
  const IsingGraph& coarsest() const { return levels.back().graph; }
};

inline Hierarchy build_hierarchy(const IsingGraph& g, const HierarchyOptions& opt, std::uint64_t seed) {
  if (opt.min_size < 2) throw ValidationError("build_hierarchy: minimum size must be >= 2");
  Hierarchy h;
  h.levels.push_back({g, std::vector<double>(g.size(), 0.0), {}});
  std::seed_seq seq{seed};
  std::vector<std::uint64_t> level_seeds(64);
  seq.generate(level_seeds.begin(), level_seeds.end());
  while (h.levels.back().graph.size() > opt.min_size) {
    const std::size_t l = h.projections.size();
    Level& fine = h.levels.back();
    const std::uint64_t level_seed = level_seeds[l % level_seeds.size()] + l;
    Embedding emb = embed(fine.graph, opt.embed, level_seed);
    fine.embedding_trace = emb.objective_trace;
    Matching m = match_nodes(fine.graph, emb, level_seed ^ 0x9e3779b97f4a7c15ULL);
    Level coarse{coarsen(fine.graph, m), absorbed_coupling(fine.graph, fine.absorbed, m), {}};
    if (coarse.graph.size() >= fine.graph.size()) throw std::logic_error("build_hierarchy: level size did not decrease");
    h.projections.push_back(std::move(m));
    h.levels.push_back(std::move(coarse));
  }
  return h;
}

// x_i = x_{R(i)}: every fine node takes its cluster's bit.
inline Assignment interpolate(const IsingGraph& fine, const Assignment& coarse, const Matching& m) {
  if (coarse.size() != m.coarse_size()) throw ValidationError("interpolate: coarse assignment size mismatch");
  check_size(fine, m.fine_size(), "interpolate");
  std::vector<std::uint8_t> bits(m.fine_size());
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = coarse.bit(m.cluster_of[i]);
  return Assignment(fine, std::move(bits));
}

inline nlohmann::json hierarchy_to_json(const Hierarchy& h) {
  nlohmann::json levels = nlohmann::json::array();
  for (std::size_t l = 0; l < h.levels.size(); ++l) {
    nlohmann::json lv = {{"level", l},
                         {"nodes", h.levels[l].graph.size()},
                         {"edges", h.levels[l].graph.edges().size()},
                         {"embedding_objective", h.levels[l].embedding_trace}};
    if (l < h.projections.size()) lv["projection"] = h.projections[l].cluster_of;
    levels.push_back(std::move(lv));
  }
  return {{"levels", levels}};
}

}  // namespace ucq
