#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "oracles.hpp"
#include "sme/errors.hpp"
#include "sme/eval.hpp"
#include "sme/rng.hpp"

using namespace sme;

TEST_CASE("pearson basics") {
  std::vector<double> xs{1, 2, 3, 4, 5};
  std::vector<double> lin(5), neg(5);
  for (int i = 0; i < 5; ++i) {
    lin[i] = 2.0 * xs[i] + 1.0;
    neg[i] = -xs[i];
  }
  CHECK(pearson(xs, lin) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pearson(xs, neg) == doctest::Approx(-1.0).epsilon(1e-12));

  // fixed 5-point dataset, value from the direct formula
  std::vector<double> a{1.0, 2.0, 4.0, 5.0, 8.0};
  std::vector<double> b{2.0, 3.0, 3.0, 6.0, 7.5};
  double ma = 0, mb = 0;
  for (int i = 0; i < 5; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= 5;
  mb /= 5;
  double cov = 0, va = 0, vb = 0;
  for (int i = 0; i < 5; ++i) {
    cov += (a[i] - ma) * (b[i] - mb);
    va += (a[i] - ma) * (a[i] - ma);
    vb += (b[i] - mb) * (b[i] - mb);
  }
  CHECK(pearson(a, b) == doctest::Approx(cov / std::sqrt(va * vb)).epsilon(1e-12));

  CHECK_THROWS_AS(pearson(std::vector<double>{1.0}, std::vector<double>{2.0}), validation_error);
  CHECK_THROWS_AS(pearson(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}),
                  validation_error);
}

TEST_CASE("pearson and spearman match brute-force formulas on random data") {
  Rng rng(77);
  for (int rep = 0; rep < 5; ++rep) {
    std::vector<double> xs(50), ys(50);
    for (auto& x : xs) x = rng.uniform(-3.0, 3.0);
    for (auto& y : ys) y = rng.uniform(-3.0, 3.0);
    // brute-force pearson
    double sx = 0, sy = 0;
    for (int i = 0; i < 50; ++i) {
      sx += xs[i];
      sy += ys[i];
    }
    sx /= 50;
    sy /= 50;
    double cov = 0, vx = 0, vy = 0;
    for (int i = 0; i < 50; ++i) {
      cov += (xs[i] - sx) * (ys[i] - sy);
      vx += (xs[i] - sx) * (xs[i] - sx);
      vy += (ys[i] - sy) * (ys[i] - sy);
    }
    CHECK(std::abs(pearson(xs, ys) - cov / std::sqrt(vx * vy)) < 1e-12);

    auto rx = oracle::brute_force_ranks(xs);
    auto ry = oracle::brute_force_ranks(ys);
    CHECK(std::abs(spearman(xs, ys) - pearson(rx, ry)) < 1e-12);
  }
}

TEST_CASE("spearman rank behavior") {
  std::vector<double> xs{0.1, 0.7, 1.3, 2.9, 4.0};
  std::vector<double> mono(5);
  for (int i = 0; i < 5; ++i) mono[i] = std::exp(xs[i]);  // strictly monotone transform
  CHECK(spearman(xs, mono) == doctest::Approx(1.0).epsilon(1e-12));

  std::vector<double> rev(xs.rbegin(), xs.rend());
  CHECK(spearman(xs, rev) == doctest::Approx(-1.0).epsilon(1e-12));

  // ties handled by average ranks
  std::vector<double> tx{1, 2, 2, 3, 4, 4, 4};
  std::vector<double> ty{2, 1, 3, 5, 4, 6, 7};
  auto rx = oracle::brute_force_ranks(tx);
  auto ry = oracle::brute_force_ranks(ty);
  CHECK(spearman(tx, ty) == doctest::Approx(pearson(rx, ry)).epsilon(1e-12));
}

TEST_CASE("MI estimator calibration") {
  Rng rng(2024);
  const int n = 10000;

  SUBCASE("independent uniforms give near-zero MI") {
    std::vector<double> xs(n), ys(n);
    for (auto& x : xs) x = rng.uniform();
    for (auto& y : ys) y = rng.uniform();
    CHECK(std::abs(mutual_information_knn(xs, ys, 5, 1)) < 0.02);
  }

  SUBCASE("bivariate normal rho=0.9 matches the analytic value") {
    const double rho = 0.9;
    std::vector<double> xs(n), ys(n);
    for (int i = 0; i < n; ++i) {
      const double z1 = rng.normal(), z2 = rng.normal();
      xs[i] = z1;
      ys[i] = rho * z1 + std::sqrt(1.0 - rho * rho) * z2;
    }
    const double truth = 0.83036560341082545;  // -0.5 ln(1 - 0.81)
    CHECK(std::abs(mutual_information_knn(xs, ys, 5, 2) - truth) < 0.05);
  }

  SUBCASE("functional dependence gives large MI, monotone in noise") {
    std::vector<double> xs(n), y1(n), y2(n);
    for (int i = 0; i < n; ++i) {
      xs[i] = rng.uniform();
      const double noise = rng.normal();
      y1[i] = xs[i] + 1e-2 * noise;
      y2[i] = xs[i] + 1e-3 * noise;
    }
    const double mi1 = mutual_information_knn(xs, y1, 5, 3);
    const double mi2 = mutual_information_knn(xs, y2, 5, 3);
    CHECK(mi1 > 1.0);
    CHECK(mi2 > mi1);
  }

  SUBCASE("validation") {
    std::vector<double> xs{1, 2, 3};
    CHECK_THROWS_AS(mutual_information_knn(xs, xs, 3, 0), validation_error);
  }
}

namespace {

// Model whose KL encodes 1/(d+1)-like similarity: mu spread along a line.
EmbeddingModel line_model(NodeId n, int k) {
  EmbeddingModel m;
  m.cfg.k = k;
  m.n = n;
  m.tau = 1.0;
  for (NodeId u = 0; u < n; ++u) {
    for (int i = 0; i < k; ++i) m.mu.push_back(i == 0 ? static_cast<double>(u) : 0.0);
    for (int i = 0; i < k; ++i) m.sigma.push_back(1.0);
  }
  return m;
}

}  // namespace

TEST_CASE("evaluate_model on a monotone-consistent model") {
  // Chain graph: d(u,v) grows with |v-u| forward; the line model's KL grows
  // the same way, so spearman over finite pairs is 1. Restrict to finite
  // pairs by evaluating a pair list.
  auto g = parse_edge_list_string("0 1\n1 2\n2 3\n3 4\n");
  auto d = all_pairs_shortest_paths(g);
  auto model = line_model(5, 2);

  std::vector<TrainingPair> finite;
  for (NodeId u = 0; u < 5; ++u)
    for (NodeId v = 0; v < 5; ++v)
      if (u != v && !d.is_infinite(u, v)) finite.push_back({u, v, d.at(u, v)});

  EvalOptions opts;
  opts.bootstrap = 8;
  opts.mi_neighbors = 2;
  auto report = evaluate_model(model, finite, opts);
  CHECK(report.spearman == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(report.n_pairs == finite.size());
}

TEST_CASE("pair-subset mode with all pairs equals matrix mode") {
  auto g = generate_erdos_renyi(30, 0.15, 10);
  auto d = all_pairs_shortest_paths(g);
  ManifoldConfig cfg;
  cfg.k = 2;
  auto model = init_model(g, cfg, 10);

  std::vector<TrainingPair> all;
  for (NodeId u = 0; u < g.num_nodes(); ++u)
    for (NodeId v = 0; v < g.num_nodes(); ++v)
      if (u != v) all.push_back({u, v, d.at(u, v)});

  EvalOptions opts;
  opts.bootstrap = 6;
  opts.seed = 3;
  auto r1 = evaluate_model(model, d, opts);
  auto r2 = evaluate_model(model, all, opts);
  CHECK(r1.pearson == doctest::Approx(r2.pearson).epsilon(1e-12));
  CHECK(r1.spearman == doctest::Approx(r2.spearman).epsilon(1e-12));
  CHECK(r1.mi_mean == doctest::Approx(r2.mi_mean).epsilon(1e-12));
  CHECK(r1.n_pairs == r2.n_pairs);
}

TEST_CASE("evaluate_model is invariant to pair order and serialization round-trip") {
  auto g = generate_erdos_renyi(20, 0.2, 8);
  auto d = all_pairs_shortest_paths(g);
  ManifoldConfig cfg;
  cfg.k = 2;
  auto model = init_model(g, cfg, 8);

  std::vector<TrainingPair> pairs;
  for (NodeId u = 0; u < g.num_nodes(); ++u)
    for (NodeId v = 0; v < g.num_nodes(); ++v)
      if (u != v) pairs.push_back({u, v, d.at(u, v)});
  auto shuffled = pairs;
  Rng rng(55);
  for (std::size_t i = shuffled.size(); i > 1; --i)
    std::swap(shuffled[i - 1], shuffled[rng.uniform_int(i)]);

  EvalOptions opts;
  opts.bootstrap = 4;
  auto r1 = evaluate_model(model, pairs, opts);
  auto r2 = evaluate_model(model, shuffled, opts);
  CHECK(r1.pearson == doctest::Approx(r2.pearson).epsilon(1e-12));
  CHECK(r1.spearman == doctest::Approx(r2.spearman).epsilon(1e-12));

  // tau-preserving round trip through the model file
  const std::string path = "test_eval_model.txt";
  save_model(model, ModelFileMeta{}, path);
  auto [loaded, meta] = load_model(path);
  auto r3 = evaluate_model(loaded, pairs, opts);
  CHECK(r3.pearson == doctest::Approx(r1.pearson).epsilon(1e-12));
  std::remove(path.c_str());
}

TEST_CASE("reconstruction precision on an adjacency-encoding model") {
  // Reciprocated partner pairs; each node's KL-nearest neighbor is exactly
  // its unique successor (unit sigmas make KL half the squared mu distance).
  auto g = parse_edge_list_string("0 1\n1 0\n2 3\n3 2\n");
  EmbeddingModel m;
  m.cfg.k = 2;
  m.n = 4;
  m.tau = 1.0;
  const double coords[4][2] = {{0, 0}, {0.5, 0}, {10, 0}, {10.5, 0}};
  for (int u = 0; u < 4; ++u) {
    m.mu.push_back(coords[u][0]);
    m.mu.push_back(coords[u][1]);
    m.sigma.push_back(1.0);
    m.sigma.push_back(1.0);
  }
  CHECK(reconstruction_precision(m, g, Direction::kOut) == doctest::Approx(1.0));
  CHECK(reconstruction_precision(m, g, Direction::kIn) == doctest::Approx(1.0));
}

TEST_CASE("reconstruction precision of a random model is near density") {
  auto g = generate_erdos_renyi(100, 0.15, 33);
  ManifoldConfig cfg;
  cfg.k = 2;
  auto model = init_model(g, cfg, 33);
  const double density = static_cast<double>(g.num_edges()) / (100.0 * 99.0);
  const double out_p = reconstruction_precision(model, g, Direction::kOut);
  const double in_p = reconstruction_precision(model, g, Direction::kIn);
  CHECK(out_p > density * 0.4);
  CHECK(out_p < density * 2.5);
  CHECK(in_p > density * 0.4);
  CHECK(in_p < density * 2.5);
}

TEST_CASE("bourgain embedding on the toy graph") {
  auto g = generate_toy_graph();
  auto d = all_pairs_shortest_paths(g);
  auto emb = bourgain_embed(g, d, 7);
  CHECK(emb.m == 4);  // ceil(ln 25)
  CHECK(emb.coords.size() == 25u * 4u);

  auto rep = bourgain_distortion(emb, d);
  CHECK(rep.bound_violations == 0);
  CHECK(rep.finite_pairs + rep.infinite_excluded == 25 * 24 / 2);
  CHECK(rep.infinite_excluded > 0);  // source-source and sink-sink pairs

  // mutually adjacent pair: symmetrized distance 1, L1 bounded by m.
  std::uint64_t l1 = 0;
  for (int i = 0; i < emb.m; ++i) {
    const std::int64_t delta =
        static_cast<std::int64_t>(emb.coord(10, i)) - static_cast<std::int64_t>(emb.coord(11, i));
    l1 += static_cast<std::uint64_t>(std::abs(delta));
  }
  CHECK(std::min(d.at(10, 11), d.at(11, 10)) == 1);
  CHECK(l1 <= 4);
}

TEST_CASE("bourgain bound holds across seeds and graphs") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto g = seed % 2 == 0 ? generate_toy_graph() : generate_erdos_renyi(40, 0.1, 123 + seed);
    auto d = all_pairs_shortest_paths(g);
    auto emb = bourgain_embed(g, d, seed);
    auto rep = bourgain_distortion(emb, d);
    CHECK(rep.bound_violations == 0);
  }
}
