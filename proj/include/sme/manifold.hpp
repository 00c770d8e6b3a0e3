#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace sme {

// Shape/dimension configuration for the exponential power family. lambda = 2
// is the Gaussian member with closed-form KL; larger even lambda uses
// importance-sampled Monte Carlo against the lambda* = 2 proposal.
struct ManifoldConfig {
  int lambda = 2;          // even, >= 2
  int k = 2;               // base-space dimensions
  int lambda_star = 2;     // proposal shape, fixed
  int mc_samples = 1024;   // Monte Carlo sample count (2e5 for validation runs)

  void validate() const;
};

// Metric constants for a given shape. c1 scales the sigma block of the
// Fisher metric, c2 the mu block; c3 = sqrt(c2 / c1) rescales mu so each
// (mu/c3, sigma) plane carries the standard half-plane metric times lambda.
struct ManifoldConstants {
  double c1;
  double c2;
  double c3;

  static ManifoldConstants from_lambda(int lambda);
};

// One embedded node: componentwise means and strictly positive scales.
// For lambda = 2 the covariance is diag(sigma_i^2).
struct EmbeddingPoint {
  std::vector<double> mu;
  std::vector<double> sigma;

  int dims() const { return static_cast<int>(mu.size()); }
};

inline constexpr double kSigmaMinDefault = 1e-3;
inline constexpr double kSigmaMaxDefault = 1e3;

// Diagonal Fisher metric, sigma block first then mu block.
struct MetricTensor {
  std::vector<double> diag;  // 2k positive entries
};

struct HyperboloidPoint {
  double x, y, z;  // z^2 - x^2 - y^2 = 1, z >= 1
};

// One base-space dimension exported to the three hyperbolic models.
struct HyperbolicCoords {
  double hp_x, hp_y;      // Poincare half-plane (mu/c3, sigma)
  double disc_x, disc_y;  // Poincare disc via the Cayley map
  HyperboloidPoint hyp;   // upper hyperboloid sheet
};

// log of the exponential power density at x, covariance diag(sigma_i^2).
double log_density(const EmbeddingPoint& p, std::span<const double> x,
                   const ManifoldConfig& cfg);

// Closed-form Gaussian KL(u || v) for diagonal covariances (lambda = 2).
double kl_gaussian_closed(const EmbeddingPoint& u, const EmbeddingPoint& v);

// Importance-sampled KL(u || v) with the Gaussian proposal centered at u,
// reparameterized as x = mu_u + sigma_u * eps. Equals the closed form in
// expectation for lambda = 2 (unit weights).
double kl_importance_sampling(const EmbeddingPoint& u, const EmbeddingPoint& v,
                              const ManifoldConfig& cfg, std::uint64_t seed);

// KL(u || v) by whichever route the shape admits: closed form for lambda = 2,
// importance sampling otherwise.
double kl_divergence(const EmbeddingPoint& u, const EmbeddingPoint& v,
                     const ManifoldConfig& cfg, std::uint64_t seed = 0);

// Fisher information metric at p, diagonal in (sigma..., mu...) order.
MetricTensor fisher_metric(const EmbeddingPoint& p, const ManifoldConfig& cfg);

// Riemannian distance induced by the Fisher metric (Theorem-form product of
// per-dimension hyperbolic distances, scaled by sqrt(lambda)).
double fisher_distance(const EmbeddingPoint& u, const EmbeddingPoint& v,
                       const ManifoldConfig& cfg);

// Preconditions a Euclidean gradient by the inverse metric: sigma components
// scale by sigma_i^2 / c1, mu components by sigma_i^2 / c2. Layout matches
// MetricTensor: sigma block first.
std::vector<double> natural_gradient_correct(const EmbeddingPoint& p,
                                             std::span<const double> grad,
                                             const ManifoldConfig& cfg);

// Per-dimension export chain: half-plane (mu/c3, sigma) -> Cayley -> disc ->
// inverse stereographic projection (through (0,0,-1)) -> hyperboloid.
std::vector<HyperbolicCoords> to_hyperbolic_models(const EmbeddingPoint& p,
                                                   const ManifoldConfig& cfg);

// --- flat-array views used by the training hot path ------------------------

struct PointView {
  const double* mu;
  const double* sigma;
  int k;
};

double kl_gaussian_closed_view(PointView u, PointView v);

}  // namespace sme
