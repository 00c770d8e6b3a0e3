#include "sme/manifold.hpp"

#include <cmath>
#include <string>

#include "sme/errors.hpp"
#include "sme/rng.hpp"

namespace sme {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_same_dims(const EmbeddingPoint& u, const EmbeddingPoint& v) {
  if (u.dims() != v.dims())
    throw validation_error("embedding points have mismatched dimensions: " +
                           std::to_string(u.dims()) + " vs " + std::to_string(v.dims()));
}

// log normalizer of the exponential power density for shape lambda in k dims.
double log_norm_constant(int lambda, int k) {
  const double lam = static_cast<double>(lambda);
  const double kk = static_cast<double>(k);
  return std::log(lam) + std::lgamma(kk / 2.0) - (1.0 + kk / lam) * std::log(2.0) -
         (kk / 2.0) * std::log(kPi) - std::lgamma(kk / lam);
}

// log density with the squared Mahalanobis form Q already known.
double log_density_from_q(double q, double log_sigma_sum, int lambda, int k) {
  return log_norm_constant(lambda, k) - log_sigma_sum -
         0.5 * std::pow(q, static_cast<double>(lambda) / 2.0);
}

}  // namespace

void ManifoldConfig::validate() const {
  if (lambda < 2 || lambda % 2 != 0)
    throw validation_error("lambda must be an even integer >= 2");
  if (lambda_star != 2) throw validation_error("the proposal shape lambda* is fixed at 2");
  if (k < 1 || k > 64) throw validation_error("dimension count k must be in [1, 64]");
}

ManifoldConstants ManifoldConstants::from_lambda(int lambda) {
  const double lam = static_cast<double>(lambda);
  ManifoldConstants c{};
  c.c1 = lam * (lam - 1.0) * std::exp(std::lgamma(1.0 - 1.0 / lam) - std::lgamma(1.0 / lam));
  c.c2 = lam;
  c.c3 = std::sqrt(std::exp(std::lgamma(1.0 / lam) - std::lgamma(1.0 - 1.0 / lam)) / (lam - 1.0));
  return c;
}

double log_density(const EmbeddingPoint& p, std::span<const double> x,
                   const ManifoldConfig& cfg) {
  cfg.validate();
  if (static_cast<int>(x.size()) != p.dims())
    throw validation_error("sample dimension does not match embedding point");
  double q = 0.0;
  double log_sigma_sum = 0.0;
  for (int i = 0; i < p.dims(); ++i) {
    if (!std::isfinite(x[i])) throw validation_error("non-finite sample coordinate");
    const double z = (x[i] - p.mu[i]) / p.sigma[i];
    q += z * z;
    log_sigma_sum += std::log(p.sigma[i]);
  }
  return log_density_from_q(q, log_sigma_sum, cfg.lambda, p.dims());
}

double kl_gaussian_closed_view(PointView u, PointView v) {
  double acc = 0.0;
  for (int i = 0; i < u.k; ++i) {
    const double r = u.sigma[i] / v.sigma[i];
    const double dmu = (v.mu[i] - u.mu[i]) / v.sigma[i];
    acc += r * r + dmu * dmu - 1.0 - 2.0 * std::log(r);
  }
  const double kl = 0.5 * acc;
  return kl < 0.0 ? 0.0 : kl;  // exact zero at equal parameters, guard rounding
}

double kl_gaussian_closed(const EmbeddingPoint& u, const EmbeddingPoint& v) {
  check_same_dims(u, v);
  return kl_gaussian_closed_view({u.mu.data(), u.sigma.data(), u.dims()},
                                 {v.mu.data(), v.sigma.data(), v.dims()});
}

double kl_importance_sampling(const EmbeddingPoint& u, const EmbeddingPoint& v,
                              const ManifoldConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  check_same_dims(u, v);
  if (cfg.mc_samples < 1) throw validation_error("mc_samples must be >= 1");
  const int k = u.dims();
  const int lambda = cfg.lambda;
  const double half_lam = static_cast<double>(lambda) / 2.0;

  // Constant pieces of log p_lambda(x|u) - log psi_2(x|u): the sigma terms
  // cancel, only the normalizers and the exponent differ.
  const double log_c_lambda = log_norm_constant(lambda, k);
  const double log_c_2 = log_norm_constant(2, k);

  double log_sigma_u = 0.0, log_sigma_v = 0.0;
  for (int i = 0; i < k; ++i) {
    log_sigma_u += std::log(u.sigma[i]);
    log_sigma_v += std::log(v.sigma[i]);
  }

  Rng rng(seed);
  std::vector<double> eps(k);
  double acc = 0.0;
  for (int s = 0; s < cfg.mc_samples; ++s) {
    double qu = 0.0;  // Mahalanobis form under u; equals |eps|^2 by construction
    double qv = 0.0;
    for (int i = 0; i < k; ++i) {
      eps[i] = rng.normal();
      qu += eps[i] * eps[i];
      const double x = u.mu[i] + u.sigma[i] * eps[i];
      const double zv = (x - v.mu[i]) / v.sigma[i];
      qv += zv * zv;
    }
    const double log_w = (log_c_lambda - log_c_2) + 0.5 * qu - 0.5 * std::pow(qu, half_lam);
    const double log_ratio = (log_sigma_v - log_sigma_u) +
                             0.5 * (std::pow(qv, half_lam) - std::pow(qu, half_lam));
    acc += std::exp(log_w) * log_ratio;
  }
  return acc / static_cast<double>(cfg.mc_samples);
}

double kl_divergence(const EmbeddingPoint& u, const EmbeddingPoint& v, const ManifoldConfig& cfg,
                     std::uint64_t seed) {
  if (cfg.lambda == 2) return kl_gaussian_closed(u, v);
  return kl_importance_sampling(u, v, cfg, seed);
}

MetricTensor fisher_metric(const EmbeddingPoint& p, const ManifoldConfig& cfg) {
  cfg.validate();
  const auto c = ManifoldConstants::from_lambda(cfg.lambda);
  MetricTensor g;
  g.diag.resize(2 * static_cast<std::size_t>(p.dims()));
  for (int i = 0; i < p.dims(); ++i) {
    const double s2 = p.sigma[i] * p.sigma[i];
    g.diag[i] = c.c1 / s2;
    g.diag[p.dims() + i] = c.c2 / s2;
  }
  return g;
}

double fisher_distance(const EmbeddingPoint& u, const EmbeddingPoint& v,
                       const ManifoldConfig& cfg) {
  cfg.validate();
  check_same_dims(u, v);
  const auto c = ManifoldConstants::from_lambda(cfg.lambda);
  double acc = 0.0;
  for (int i = 0; i < u.dims(); ++i) {
    const double dmu = (u.mu[i] - v.mu[i]) / c.c3;
    const double dsg = u.sigma[i] - v.sigma[i];
    const double arg = 1.0 + (dmu * dmu + dsg * dsg) / (2.0 * u.sigma[i] * v.sigma[i]);
    const double a = std::acosh(arg);
    acc += a * a;
  }
  return std::sqrt(static_cast<double>(cfg.lambda) * acc);
}

std::vector<double> natural_gradient_correct(const EmbeddingPoint& p,
                                             std::span<const double> grad,
                                             const ManifoldConfig& cfg) {
  cfg.validate();
  const int k = p.dims();
  if (static_cast<int>(grad.size()) != 2 * k)
    throw validation_error("gradient must have 2k components (sigma block then mu block)");
  const auto c = ManifoldConstants::from_lambda(cfg.lambda);
  std::vector<double> out(grad.size());
  for (int i = 0; i < k; ++i) {
    const double s2 = p.sigma[i] * p.sigma[i];
    out[i] = s2 / c.c1 * grad[i];
    out[k + i] = s2 / c.c2 * grad[k + i];
  }
  return out;
}

std::vector<HyperbolicCoords> to_hyperbolic_models(const EmbeddingPoint& p,
                                                   const ManifoldConfig& cfg) {
  cfg.validate();
  const auto c = ManifoldConstants::from_lambda(cfg.lambda);
  std::vector<HyperbolicCoords> out(p.dims());
  for (int i = 0; i < p.dims(); ++i) {
    HyperbolicCoords& h = out[i];
    h.hp_x = p.mu[i] / c.c3;
    h.hp_y = p.sigma[i];

    // Cayley map, half-plane -> unit disc.
    const double x = h.hp_x, y = h.hp_y;
    const double denom = x * x + (y + 1.0) * (y + 1.0);
    h.disc_x = (x * x + y * y - 1.0) / denom;
    h.disc_y = -2.0 * x / denom;

    const double r2 = h.disc_x * h.disc_x + h.disc_y * h.disc_y;
    if (r2 >= 1.0)
      throw numeric_error("disc point escaped the unit disc (dimension " + std::to_string(i) +
                          ")");
    // Inverse stereographic projection through (0, 0, -1).
    const double scale = 1.0 - r2;
    h.hyp.x = 2.0 * h.disc_x / scale;
    h.hyp.y = 2.0 * h.disc_y / scale;
    h.hyp.z = (1.0 + r2) / scale;
  }
  return out;
}

}  // namespace sme
