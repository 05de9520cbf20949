#include <catch_amalgamated.hpp>

#include <random>
#include <set>

#include "oracles.hpp"
#include "ucq/multilevel.hpp"

using namespace ucq;

namespace {

void check_unit_norm(const Embedding& emb) {
  for (std::size_t i = 0; i < emb.size(); ++i) {
    double s = 0.0;
    for (double v : emb.position(i)) s += v * v;
    REQUIRE(std::sqrt(s) == Catch::Approx(1.0).margin(1e-9));
  }
}

}  // namespace

TEST_CASE("embed") {
  SECTION("no edges keeps the random start") {
    const IsingGraph g({0, 0, 0, 0}, {}, 0.0);
    const auto emb = embed(g, {3, 5, 0.5}, 1);
    check_unit_norm(emb);
    for (double v : emb.objective_trace) CHECK(v == 0.0);
  }
  SECTION("single edge ends nearly antipodal") {
    const IsingGraph g({0, 0}, {{0, 1, 1.0}}, 0.0);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const auto emb = embed(g, {2, 10, 0.5}, seed);
      check_unit_norm(emb);
      REQUIRE(detail::distance(emb.position(0), emb.position(1)) >= 1.9);
    }
  }
  SECTION("objective is non-decreasing on a path and on random graphs") {
    const IsingGraph path({0, 0, 0, 0}, {{0, 1, 1.0}, {1, 2, -2.0}, {2, 3, 0.5}}, 0.0);
    std::mt19937_64 rng(4);
    std::vector<IsingGraph> graphs{path};
    for (int k = 0; k < 5; ++k) graphs.push_back(oracle::random_graph(30, 0.2, rng));
    for (const auto& g : graphs) {
      const auto emb = embed(g, {4, 20, 0.5}, rng());
      check_unit_norm(emb);
      for (std::size_t t = 1; t < emb.objective_trace.size(); ++t) {
        REQUIRE(emb.objective_trace[t] >= emb.objective_trace[t - 1] - 1e-12);
      }
    }
  }
  SECTION("argument checks") {
    const IsingGraph g({0}, {}, 0.0);
    CHECK_THROWS_AS(embed(g, {1, 5, 0.5}, 0), ValidationError);
    CHECK_THROWS_AS(embed(g, {2, 0, 0.5}, 0), ValidationError);
  }
}

TEST_CASE("KdTree nearest neighbour with removal matches a linear scan") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal;
  const std::size_t n = 200, d = 4;
  std::vector<double> pts(n * d);
  for (auto& v : pts) v = normal(rng);
  KdTree tree(pts, d);
  std::vector<bool> alive(n, true);
  for (int round = 0; round < 150; ++round) {
    std::vector<double> q(d);
    for (auto& v : q) v = normal(rng);
    std::size_t best = n;
    double best_d = 1e300;
    for (std::size_t i = 0; i < n; ++i) {
      if (!alive[i]) continue;
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += (pts[i * d + k] - q[k]) * (pts[i * d + k] - q[k]);
      if (s < best_d) {
        best_d = s;
        best = i;
      }
    }
    const auto got = tree.nearest(q);
    REQUIRE(got.has_value());
    REQUIRE(*got == best);
    const std::size_t victim = rng() % n;
    alive[victim] = false;
    tree.remove(victim);
  }
}

TEST_CASE("match_nodes") {
  SECTION("two nodes pair up") {
    const IsingGraph g({0, 0}, {}, 0.0);
    const auto m = match_nodes(g, embed(g, {}, 1), 1);
    CHECK(m.coarse_size() == 1);
    m.validate(2);
  }
  SECTION("five nodes give two pairs and a singleton") {
    const IsingGraph g({0, 0, 0, 0, 0}, {}, 0.0);
    const auto m = match_nodes(g, embed(g, {}, 2), 2);
    m.validate(5);
    std::size_t pairs = 0, singles = 0;
    for (const auto& c : m.clusters) (c.size() == 2 ? pairs : singles)++;
    CHECK(pairs == 2);
    CHECK(singles == 1);
  }
  SECTION("well separated dyads are recovered") {
    // 8 dyads on the unit circle in the plane x3 = x4 = 0, 45 degrees apart
    // (inter-dyad distance ~0.77), members 0.01 apart.
    Embedding emb;
    emb.dim = 4;
    std::vector<std::size_t> dyad_of(16);
    std::mt19937_64 rng(5);
    std::vector<std::size_t> slot(16);
    std::iota(slot.begin(), slot.end(), std::size_t{0});
    std::shuffle(slot.begin(), slot.end(), rng);
    emb.positions.assign(16 * 4, 0.0);
    for (std::size_t k = 0; k < 16; ++k) {
      const std::size_t node = slot[k];
      const double angle = (k / 2) * std::numbers::pi / 4 + (k % 2) * 0.01;
      emb.positions[node * 4 + 0] = std::cos(angle);
      emb.positions[node * 4 + 1] = std::sin(angle);
      dyad_of[node] = k / 2;
    }
    const IsingGraph g(std::vector<double>(16, 0.0), {}, 0.0);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto m = match_nodes(g, emb, seed);
      REQUIRE(m.coarse_size() == 8);
      for (const auto& c : m.clusters) {
        REQUIRE(c.size() == 2);
        REQUIRE(dyad_of[c[0]] == dyad_of[c[1]]);
      }
    }
  }
}

TEST_CASE("coarsen") {
  SECTION("pairing two nodes") {
    const double h0 = 0.7, h1 = -1.3, w = 2.5;
    const IsingGraph g({h0, h1}, {{0, 1, w}}, 0.25);
    Matching m;
    m.cluster_of = {0, 0};
    m.clusters = {{0, 1}};
    const auto coarse = coarsen(g, m);
    REQUIRE(coarse.size() == 1);
    const Level fine_level{g, {0.0, 0.0}, {}};
    const Level coarse_level{coarse, absorbed_coupling(g, fine_level.absorbed, m), {}};
    // Dense P^T M P with P = [1 1]^T: h0 + h1 + 2w.
    CHECK(level_matrix(coarse_level)[0] == Catch::Approx(h0 + h1 + 2 * w));
    CHECK(oracle::dense_ptmp(level_matrix(fine_level), 2, m)[0] == Catch::Approx(h0 + h1 + 2 * w));
    for (std::uint8_t x : {0, 1}) {
      const Assignment ca(coarse, {x});
      CHECK(interpolate(g, ca, m).energy() == Catch::Approx(ca.energy()));
    }
  }
  SECTION("all singletons is the identity") {
    std::mt19937_64 rng(7);
    const auto g = oracle::random_graph(9, 0.5, rng);
    const auto coarse = coarsen(g, Matching::identity(9));
    CHECK(coarse.offset() == g.offset());
    REQUIRE(coarse.edges().size() == g.edges().size());
    for (std::size_t e = 0; e < g.edges().size(); ++e) CHECK(coarse.edges()[e].w == g.edges()[e].w);
  }
  SECTION("random 12-node graph against the dense product") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 10; ++trial) {
      const auto g = oracle::random_graph(12, 0.5, rng);
      const auto m = match_nodes(g, embed(g, {}, rng()), rng());
      const Level fine{g, std::vector<double>(12, 0.0), {}};
      const Level coarse{coarsen(g, m), absorbed_coupling(g, fine.absorbed, m), {}};
      const auto expected = oracle::dense_ptmp(level_matrix(fine), 12, m);
      const auto got = level_matrix(coarse);
      REQUIRE(got.size() == expected.size());
      for (std::size_t k = 0; k < got.size(); ++k) REQUIRE(got[k] == Catch::Approx(expected[k]).margin(1e-9));
    }
  }
  SECTION("invalid matching") {
    const IsingGraph g({0, 0, 0}, {}, 0.0);
    Matching bad;
    bad.cluster_of = {0, 0, 0};
    bad.clusters = {{0, 1, 2}};
    CHECK_THROWS_AS(coarsen(g, bad), ValidationError);
  }
}

TEST_CASE("build_hierarchy") {
  SECTION("480 nodes down to 15") {
    const auto g = qubo_to_ising(compile(generate_synthetic(10, 24, 7)));
    const auto h = build_hierarchy(g, {16, {}}, 3);
    std::vector<std::size_t> sizes;
    for (const auto& l : h.levels) sizes.push_back(l.graph.size());
    CHECK(sizes == std::vector<std::size_t>{480, 240, 120, 60, 30, 15});
  }
  SECTION("small graph is a single level") {
    const IsingGraph g(std::vector<double>(10, 1.0), {}, 0.0);
    const auto h = build_hierarchy(g, {16, {}}, 3);
    CHECK(h.levels.size() == 1);
    CHECK(h.projections.empty());
  }
  SECTION("every level is the dense product of the previous one") {
    std::mt19937_64 rng(9);
    const auto g = oracle::random_graph(37, 0.2, rng);
    const auto h = build_hierarchy(g, {4, {}}, 11);
    for (std::size_t l = 0; l + 1 < h.levels.size(); ++l) {
      const std::size_t n = h.levels[l].graph.size();
      CHECK(h.levels[l + 1].graph.size() == (n + 1) / 2);
      const auto expected = oracle::dense_ptmp(level_matrix(h.levels[l]), n, h.projections[l]);
      const auto got = level_matrix(h.levels[l + 1]);
      for (std::size_t k = 0; k < got.size(); ++k) REQUIRE(got[k] == Catch::Approx(expected[k]).margin(1e-9));
    }
    CHECK(h.coarsest().size() <= 4);
  }
  SECTION("minimum size check") {
    CHECK_THROWS_AS(build_hierarchy(IsingGraph({0.0}, {}, 0.0), {1, {}}, 0), ValidationError);
  }
}

TEST_CASE("interpolate preserves energy across a hierarchy") {
  std::mt19937_64 rng(10);
  const auto g = oracle::random_graph(40, 0.15, rng, 3.0);
  const auto h = build_hierarchy(g, {5, {}}, 4);
  const auto& coarsest = h.coarsest();
  for (int trial = 0; trial < 20; ++trial) {
    Assignment a(coarsest, oracle::bits_of(rng(), coarsest.size()));
    for (std::size_t l = h.depth(); l-- > 0;) {
      const double coarse_energy = a.energy();
      a = interpolate(h.levels[l].graph, a, h.projections[l]);
      REQUIRE(a.energy() == Catch::Approx(coarse_energy).margin(1e-9));
    }
  }
  CHECK(interpolate(g, Assignment(g, oracle::bits_of(5, 40)), Matching::identity(40)).bits().size() == 40);
  CHECK_THROWS_AS(interpolate(g, Assignment::zeros(coarsest), h.projections[0]), ValidationError);
}
