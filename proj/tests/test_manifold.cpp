#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "sme/errors.hpp"
#include "sme/manifold.hpp"
#include "sme/rng.hpp"

using namespace sme;

namespace {

EmbeddingPoint random_point(Rng& rng, int k, double mu_lo = 0.0, double mu_hi = 10.0,
                            double sg_lo = 4.0, double sg_hi = 7.0) {
  EmbeddingPoint p;
  for (int i = 0; i < k; ++i) p.mu.push_back(rng.uniform(mu_lo, mu_hi));
  for (int i = 0; i < k; ++i) p.sigma.push_back(rng.uniform(sg_lo, sg_hi));
  return p;
}

double density(const EmbeddingPoint& p, double x, const ManifoldConfig& cfg) {
  const double xv[1] = {x};
  return std::exp(log_density(p, std::span<const double>(xv, 1), cfg));
}

}  // namespace

TEST_CASE("manifold constants") {
  const auto c2 = ManifoldConstants::from_lambda(2);
  CHECK(c2.c1 == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(c2.c2 == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(c2.c3 == doctest::Approx(1.0).epsilon(1e-12));

  // 12 * Gamma(3/4) / Gamma(1/4), frozen from an independent high-precision
  // evaluation.
  const auto c4 = ManifoldConstants::from_lambda(4);
  CHECK(c4.c1 == doctest::Approx(4.05586944040371).epsilon(1e-10));
  CHECK(c4.c2 == doctest::Approx(4.0));
  CHECK(c4.c3 == doctest::Approx(0.99308863639131).epsilon(1e-10));
  CHECK(c4.c3 == doctest::Approx(std::sqrt(c4.c2 / c4.c1)).epsilon(1e-12));
}

TEST_CASE("log_density at the standard normal mode") {
  ManifoldConfig cfg;
  cfg.lambda = 2;
  cfg.k = 1;
  EmbeddingPoint p{{0.0}, {1.0}};
  const double x[1] = {0.0};
  CHECK(log_density(p, std::span<const double>(x, 1), cfg) ==
        doctest::Approx(-0.91893853320467274).epsilon(1e-14));
}

TEST_CASE("density integrates to 1 (quadrature oracle, k=1)") {
  for (int lambda : {2, 4}) {
    ManifoldConfig cfg;
    cfg.lambda = lambda;
    cfg.k = 1;
    Rng rng(42 + lambda);
    for (int rep = 0; rep < 3; ++rep) {
      auto p = random_point(rng, 1, -2.0, 2.0, 0.5, 2.0);
      const double lo = p.mu[0] - 14.0 * p.sigma[0];
      const double hi = p.mu[0] + 14.0 * p.sigma[0];
      const double integral =
          oracle::simpson([&](double x) { return density(p, x, cfg); }, lo, hi, 20000);
      CHECK(integral == doctest::Approx(1.0).epsilon(1e-4));
    }
  }
}

TEST_CASE("lambda=2 log density equals the direct normal oracle") {
  ManifoldConfig cfg;
  cfg.lambda = 2;
  cfg.k = 3;
  Rng rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    auto p = random_point(rng, 3, -5.0, 5.0, 0.3, 4.0);
    std::vector<double> x(3);
    for (auto& xi : x) xi = rng.uniform(-8.0, 8.0);
    CHECK(log_density(p, x, cfg) ==
          doctest::Approx(oracle::normal_log_pdf(p.mu, p.sigma, x)).epsilon(1e-12));
  }
}

TEST_CASE("log_density rejects non-finite input") {
  ManifoldConfig cfg;
  cfg.k = 1;
  EmbeddingPoint p{{0.0}, {1.0}};
  const double bad[1] = {std::numeric_limits<double>::quiet_NaN()};
  CHECK_THROWS_AS(log_density(p, std::span<const double>(bad, 1), cfg), validation_error);
}

TEST_CASE("closed-form KL worked examples") {
  EmbeddingPoint a{{0.0}, {1.0}};
  EmbeddingPoint b{{1.0}, {1.0}};
  EmbeddingPoint c{{0.0}, {2.0}};
  CHECK(kl_gaussian_closed(a, a) == 0.0);
  CHECK(kl_gaussian_closed(a, b) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(kl_gaussian_closed(a, c) == doctest::Approx(0.31814718055994531).epsilon(1e-14));
  CHECK(kl_gaussian_closed(c, a) == doctest::Approx(0.80685281944005469).epsilon(1e-14));
}

TEST_CASE("closed-form KL is non-negative and zero only at equality") {
  Rng rng(3);
  for (int rep = 0; rep < 2000; ++rep) {
    auto u = random_point(rng, 2, -10, 10, 0.1, 9.0);
    auto v = random_point(rng, 2, -10, 10, 0.1, 9.0);
    const double kl = kl_gaussian_closed(u, v);
    CHECK(kl >= 0.0);
    if (kl == 0.0) {
      CHECK(u.mu == v.mu);
      CHECK(u.sigma == v.sigma);
    }
  }
  CHECK_THROWS_AS(kl_gaussian_closed(EmbeddingPoint{{0.0}, {1.0}}, EmbeddingPoint{{0, 0}, {1, 1}}),
                  validation_error);
}

TEST_CASE("importance sampling matches the closed form at lambda=2") {
  ManifoldConfig cfg;
  cfg.lambda = 2;
  cfg.k = 2;
  cfg.mc_samples = 200000;
  Rng rng(11);
  double total_rel_err = 0.0;
  const int pairs = 20;
  for (int rep = 0; rep < pairs; ++rep) {
    auto u = random_point(rng, 2);
    auto v = random_point(rng, 2);
    const double exact = kl_gaussian_closed(u, v);
    const double est = kl_importance_sampling(u, v, cfg, 100 + rep);
    total_rel_err += std::abs(est - exact) / exact;
  }
  CHECK(total_rel_err / pairs < 0.02);
}

TEST_CASE("importance sampling of identical points") {
  ManifoldConfig cfg;
  cfg.k = 2;
  cfg.mc_samples = 5000;
  EmbeddingPoint u{{1.0, -2.0}, {0.7, 1.3}};

  cfg.lambda = 2;
  CHECK(kl_importance_sampling(u, u, cfg, 5) == doctest::Approx(0.0).epsilon(1e-12));

  cfg.lambda = 4;
  CHECK(std::abs(kl_importance_sampling(u, u, cfg, 5)) < 1e-12);  // log-ratio is identically 0
}

TEST_CASE("lambda=4 importance sampling agrees with quadrature KL (k=1)") {
  ManifoldConfig cfg;
  cfg.lambda = 4;
  cfg.k = 1;
  cfg.mc_samples = 40000;
  EmbeddingPoint u{{0.3}, {1.1}};
  EmbeddingPoint v{{-0.5}, {1.7}};

  const double quad = oracle::simpson(
      [&](double x) {
        const double xv[1] = {x};
        std::span<const double> xs(xv, 1);
        const double lp = log_density(u, xs, cfg);
        const double lq = log_density(v, xs, cfg);
        return std::exp(lp) * (lp - lq);
      },
      -14.0, 14.0, 40000);

  std::vector<double> estimates;
  for (int seed = 0; seed < 20; ++seed)
    estimates.push_back(kl_importance_sampling(u, v, cfg, 9000 + seed));
  double mean = 0.0;
  for (double e : estimates) mean += e;
  mean /= estimates.size();
  double var = 0.0;
  for (double e : estimates) var += (e - mean) * (e - mean);
  var /= (estimates.size() - 1);
  const double sem = std::sqrt(var / estimates.size());
  CHECK(std::abs(mean - quad) < 3.0 * std::max(sem, 1e-6));
}

TEST_CASE("Monte Carlo variance shrinks as 1/m") {
  ManifoldConfig cfg;
  cfg.lambda = 4;
  cfg.k = 1;
  EmbeddingPoint u{{0.0}, {1.0}};
  EmbeddingPoint v{{1.0}, {1.5}};

  std::vector<int> ms = {100, 400, 1600, 6400};
  std::vector<double> log_m, log_var;
  int seed = 1;
  for (int m : ms) {
    cfg.mc_samples = m;
    const int reps = 200;
    std::vector<double> est(reps);
    double mean = 0.0;
    for (int r = 0; r < reps; ++r) {
      est[r] = kl_importance_sampling(u, v, cfg, seed++);
      mean += est[r];
    }
    mean /= reps;
    double var = 0.0;
    for (double e : est) var += (e - mean) * (e - mean);
    var /= (reps - 1);
    log_m.push_back(std::log(static_cast<double>(m)));
    log_var.push_back(std::log(var));
  }
  // least-squares slope of log var vs log m
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < log_m.size(); ++i) {
    mx += log_m[i];
    my += log_var[i];
  }
  mx /= log_m.size();
  my /= log_var.size();
  double num = 0, den = 0;
  for (std::size_t i = 0; i < log_m.size(); ++i) {
    num += (log_m[i] - mx) * (log_var[i] - my);
    den += (log_m[i] - mx) * (log_m[i] - mx);
  }
  const double slope = num / den;
  CHECK(slope == doctest::Approx(-1.0).epsilon(0.15));
}

TEST_CASE("fisher metric values") {
  ManifoldConfig cfg;
  cfg.k = 1;

  cfg.lambda = 2;
  auto g1 = fisher_metric(EmbeddingPoint{{0.0}, {1.0}}, cfg);
  REQUIRE(g1.diag.size() == 2);
  CHECK(g1.diag[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(g1.diag[1] == doctest::Approx(2.0).epsilon(1e-12));

  auto g2 = fisher_metric(EmbeddingPoint{{0.0}, {2.0}}, cfg);
  CHECK(g2.diag[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(g2.diag[1] == doctest::Approx(0.5).epsilon(1e-12));

  cfg.lambda = 4;
  auto g3 = fisher_metric(EmbeddingPoint{{0.0}, {1.0}}, cfg);
  CHECK(g3.diag[0] == doctest::Approx(4.05586944040371).epsilon(1e-10));
  CHECK(g3.diag[1] == doctest::Approx(4.0).epsilon(1e-12));

  for (double d : g3.diag) CHECK(d > 0.0);
}

TEST_CASE("fisher distance worked examples") {
  ManifoldConfig cfg;
  cfg.k = 1;
  EmbeddingPoint a{{0.0}, {1.0}};
  EmbeddingPoint b{{0.0}, {2.0}};

  cfg.lambda = 2;
  CHECK(fisher_distance(a, a, cfg) == 0.0);
  CHECK(fisher_distance(a, b, cfg) == doctest::Approx(0.98025814346854719).epsilon(1e-12));
  CHECK(fisher_distance(a, b, cfg) == fisher_distance(b, a, cfg));

  // Pure sqrt(lambda) scaling when mu is fixed: c3 drops out.
  cfg.lambda = 8;
  CHECK(fisher_distance(a, b, cfg) == doctest::Approx(1.9605162869370944).epsilon(1e-12));
}

TEST_CASE("fisher distance is a metric on random samples") {
  ManifoldConfig cfg;
  cfg.lambda = 2;
  cfg.k = 2;
  Rng rng(23);
  for (int rep = 0; rep < 10000; ++rep) {
    auto a = random_point(rng, 2, -5, 5, 0.5, 5.0);
    auto b = random_point(rng, 2, -5, 5, 0.5, 5.0);
    auto c = random_point(rng, 2, -5, 5, 0.5, 5.0);
    const double ab = fisher_distance(a, b, cfg);
    const double ba = fisher_distance(b, a, cfg);
    const double ac = fisher_distance(a, c, cfg);
    const double cb = fisher_distance(c, b, cfg);
    CHECK(ab >= 0.0);
    CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
    CHECK(ab <= ac + cb + 1e-9);
  }
}

TEST_CASE("natural gradient correction") {
  ManifoldConfig cfg;
  cfg.lambda = 2;
  cfg.k = 1;

  EmbeddingPoint p{{0.0}, {1.0}};
  const std::vector<double> zero{0.0, 0.0};
  auto z = natural_gradient_correct(p, zero, cfg);
  CHECK(z[0] == 0.0);
  CHECK(z[1] == 0.0);

  const std::vector<double> ones{1.0, 1.0};
  auto h = natural_gradient_correct(p, ones, cfg);
  CHECK(h[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(h[1] == doctest::Approx(0.5).epsilon(1e-12));

  EmbeddingPoint p2{{0.0}, {2.0}};
  auto d = natural_gradient_correct(p2, ones, cfg);
  CHECK(d[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(d[1] == doctest::Approx(2.0).epsilon(1e-12));

  CHECK_THROWS_AS(natural_gradient_correct(p, std::vector<double>{1.0}, cfg), validation_error);
}

TEST_CASE("hyperbolic map worked examples") {
  ManifoldConfig cfg;
  cfg.lambda = 2;
  cfg.k = 1;

  auto h1 = to_hyperbolic_models(EmbeddingPoint{{0.0}, {1.0}}, cfg);
  REQUIRE(h1.size() == 1);
  CHECK(h1[0].hp_x == doctest::Approx(0.0));
  CHECK(h1[0].hp_y == doctest::Approx(1.0));
  CHECK(h1[0].disc_x == doctest::Approx(0.0));
  CHECK(h1[0].disc_y == doctest::Approx(0.0));
  CHECK(h1[0].hyp.x == doctest::Approx(0.0));
  CHECK(h1[0].hyp.y == doctest::Approx(0.0));
  CHECK(h1[0].hyp.z == doctest::Approx(1.0));

  auto h2 = to_hyperbolic_models(EmbeddingPoint{{0.0}, {2.0}}, cfg);
  CHECK(h2[0].disc_x == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(h2[0].disc_y == doctest::Approx(0.0));
  CHECK(h2[0].hyp.x == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(h2[0].hyp.y == doctest::Approx(0.0));
  CHECK(h2[0].hyp.z == doctest::Approx(1.25).epsilon(1e-14));

  // Minkowski distance identity on this pair.
  const double mink = h1[0].hyp.z * h2[0].hyp.z - h1[0].hyp.x * h2[0].hyp.x -
                      h1[0].hyp.y * h2[0].hyp.y;
  const double via_hyp = std::sqrt(2.0) * std::acosh(mink);
  CHECK(via_hyp == doctest::Approx(fisher_distance(EmbeddingPoint{{0.0}, {1.0}},
                                                   EmbeddingPoint{{0.0}, {2.0}}, cfg))
                       .epsilon(1e-12));
}

TEST_CASE("hyperboloid invariant and isometry identity across lambda") {
  Rng rng(31);
  for (int lambda : {2, 4, 8}) {
    ManifoldConfig cfg;
    cfg.lambda = lambda;
    cfg.k = 2;
    for (int rep = 0; rep < 2000; ++rep) {
      auto u = random_point(rng, 2);
      auto v = random_point(rng, 2);
      auto hu = to_hyperbolic_models(u, cfg);
      auto hv = to_hyperbolic_models(v, cfg);
      double acc = 0.0;
      for (int i = 0; i < 2; ++i) {
        CHECK(hu[i].hyp.z * hu[i].hyp.z - hu[i].hyp.x * hu[i].hyp.x - hu[i].hyp.y * hu[i].hyp.y ==
              doctest::Approx(1.0).epsilon(1e-9));
        CHECK(hu[i].hyp.z >= 1.0);
        const double mink = hu[i].hyp.z * hv[i].hyp.z - hu[i].hyp.x * hv[i].hyp.x -
                            hu[i].hyp.y * hv[i].hyp.y;
        const double a = std::acosh(std::max(1.0, mink));
        acc += a * a;
      }
      const double via_hyp = std::sqrt(static_cast<double>(lambda)) * std::sqrt(acc);
      CHECK(std::abs(via_hyp - fisher_distance(u, v, cfg)) < 1e-9);
    }
  }
}

TEST_CASE("local KL-Fisher relation at lambda=2") {
  ManifoldConfig cfg;
  cfg.lambda = 2;
  cfg.k = 1;
  const EmbeddingPoint base{{0.0}, {1.0}};

  // sigma-direction perturbations: 2 KL / d_F^2 -> 1
  {
    const double eps = 1e-2;
    EmbeddingPoint v{{0.0}, {1.0 + eps}};
    const double ratio = 2.0 * kl_gaussian_closed(base, v) /
                         std::pow(fisher_distance(base, v, cfg), 2.0);
    CHECK(ratio == doctest::Approx(1.0).epsilon(0.02));
    // numeric limit: the ratio approaches 1 as eps shrinks
    EmbeddingPoint v2{{0.0}, {1.0 + eps / 10.0}};
    const double ratio2 = 2.0 * kl_gaussian_closed(base, v2) /
                          std::pow(fisher_distance(base, v2, cfg), 2.0);
    CHECK(std::abs(ratio2 - 1.0) < std::abs(ratio - 1.0));
  }

  // mu-direction perturbations: 2 KL / d_F^2 -> 1/2
  {
    const double eps = 1e-2;
    EmbeddingPoint v{{eps}, {1.0}};
    const double ratio = 2.0 * kl_gaussian_closed(base, v) /
                         std::pow(fisher_distance(base, v, cfg), 2.0);
    CHECK(ratio == doctest::Approx(0.5).epsilon(0.02));
    EmbeddingPoint v2{{eps / 10.0}, {1.0}};
    const double ratio2 = 2.0 * kl_gaussian_closed(base, v2) /
                          std::pow(fisher_distance(base, v2, cfg), 2.0);
    CHECK(std::abs(ratio2 - 0.5) < std::abs(ratio - 0.5));
  }
}

TEST_CASE("config validation") {
  ManifoldConfig cfg;
  cfg.lambda = 3;
  CHECK_THROWS_AS(cfg.validate(), validation_error);
  cfg.lambda = 0;
  CHECK_THROWS_AS(cfg.validate(), validation_error);
  cfg.lambda = 2;
  cfg.k = 0;
  CHECK_THROWS_AS(cfg.validate(), validation_error);
  cfg.k = 2;
  CHECK_NOTHROW(cfg.validate());

  ManifoldConfig bad_m;
  bad_m.mc_samples = 0;
  EmbeddingPoint p{{0.0, 0.0}, {1.0, 1.0}};
  CHECK_THROWS_AS(kl_importance_sampling(p, p, bad_m, 1), validation_error);
}
