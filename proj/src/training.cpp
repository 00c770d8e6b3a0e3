#include "sme/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sme/errors.hpp"
#include "sme/parallel.hpp"
#include "sme/rng.hpp"

namespace sme {

namespace {

constexpr double kPi = 3.14159265358979323846;

double inverse_distance(std::uint32_t d) {
  return d == DistanceMatrix::kInfinity ? 0.0 : 1.0 / static_cast<double>(d);
}

constexpr int kMaxDims = 64;  // matches ManifoldConfig::validate

double log_norm_constant(int lambda, int k) {
  const double lam = static_cast<double>(lambda);
  const double kk = static_cast<double>(k);
  return std::log(lam) + std::lgamma(kk / 2.0) - (1.0 + kk / lam) * std::log(2.0) -
         (kk / 2.0) * std::log(kPi) - std::lgamma(kk / lam);
}

// Shared reparameterization noise for one optimization step (lambda > 2).
// The importance weights and the proposal-side Mahalanobis powers depend only
// on eps, never on model parameters, so they are precomputed here.
struct McNoise {
  int m = 0;
  int k = 0;
  std::vector<double> eps;     // m * k
  std::vector<double> w;      // m
  std::vector<double> qu_pow; // (|eps|^2)^(lambda/2)

  static McNoise build(const ManifoldConfig& cfg, std::uint64_t seed) {
    McNoise noise;
    noise.m = cfg.mc_samples;
    noise.k = cfg.k;
    noise.eps.resize(static_cast<std::size_t>(noise.m) * noise.k);
    noise.w.resize(noise.m);
    noise.qu_pow.resize(noise.m);
    const double half_lam = cfg.lambda / 2.0;
    const double log_c_gap = log_norm_constant(cfg.lambda, cfg.k) - log_norm_constant(2, cfg.k);
    Rng rng(seed);
    for (int s = 0; s < noise.m; ++s) {
      double qu = 0.0;
      for (int j = 0; j < noise.k; ++j) {
        const double e = rng.normal();
        noise.eps[static_cast<std::size_t>(s) * noise.k + j] = e;
        qu += e * e;
      }
      const double qu_pow = std::pow(qu, half_lam);
      noise.qu_pow[s] = qu_pow;
      noise.w[s] = std::exp(log_c_gap + 0.5 * qu - 0.5 * qu_pow);
    }
    return noise;
  }
};

// KL estimate under fixed noise; matches kl_importance_sampling for the same
// seed the noise was built from.
double kl_mc_view(PointView u, PointView v, int lambda, const McNoise& noise) {
  const int k = u.k;
  const double half_lam = lambda / 2.0;
  double dlogsig = 0.0;
  for (int j = 0; j < k; ++j) dlogsig += std::log(v.sigma[j]) - std::log(u.sigma[j]);
  double acc = 0.0;
  for (int s = 0; s < noise.m; ++s) {
    const double* e = noise.eps.data() + static_cast<std::size_t>(s) * k;
    double qv = 0.0;
    for (int j = 0; j < k; ++j) {
      const double r = (u.mu[j] + u.sigma[j] * e[j] - v.mu[j]) / v.sigma[j];
      qv += r * r;
    }
    acc += noise.w[s] * (dlogsig + 0.5 * (std::pow(qv, half_lam) - noise.qu_pow[s]));
  }
  return acc / noise.m;
}

struct PairGrad {
  double kl = 0.0;
  // d KL / d parameter, sigma and mu blocks for both endpoints.
  std::vector<double> du_mu, du_sigma, dv_mu, dv_sigma;

  explicit PairGrad(int k) : du_mu(k), du_sigma(k), dv_mu(k), dv_sigma(k) {}
  void reset() {
    kl = 0.0;
    std::fill(du_mu.begin(), du_mu.end(), 0.0);
    std::fill(du_sigma.begin(), du_sigma.end(), 0.0);
    std::fill(dv_mu.begin(), dv_mu.end(), 0.0);
    std::fill(dv_sigma.begin(), dv_sigma.end(), 0.0);
  }
};

void kl_grad_closed(PointView u, PointView v, PairGrad& g) {
  g.reset();
  double acc = 0.0;
  for (int i = 0; i < u.k; ++i) {
    const double su = u.sigma[i], sv = v.sigma[i];
    const double dmu = v.mu[i] - u.mu[i];
    const double sv2 = sv * sv;
    acc += (su * su + dmu * dmu) / sv2 - 1.0 - 2.0 * std::log(su / sv);
    g.du_mu[i] = -dmu / sv2;
    g.dv_mu[i] = dmu / sv2;
    g.du_sigma[i] = su / sv2 - 1.0 / su;
    g.dv_sigma[i] = 1.0 / sv - (su * su + dmu * dmu) / (sv2 * sv);
  }
  g.kl = std::max(0.0, 0.5 * acc);
}

void kl_grad_mc(PointView u, PointView v, int lambda, const McNoise& noise, PairGrad& g) {
  g.reset();
  const int k = u.k;
  const double half_lam = lambda / 2.0;
  double dlogsig = 0.0;
  for (int j = 0; j < k; ++j) dlogsig += std::log(v.sigma[j]) - std::log(u.sigma[j]);

  double kl_acc = 0.0;
  double r[kMaxDims];
  for (int s = 0; s < noise.m; ++s) {
    const double* e = noise.eps.data() + static_cast<std::size_t>(s) * k;
    const double w = noise.w[s];
    double qv = 0.0;
    for (int j = 0; j < k; ++j) {
      r[j] = (u.mu[j] + u.sigma[j] * e[j] - v.mu[j]) / v.sigma[j];
      qv += r[j] * r[j];
    }
    const double qv_pow = std::pow(qv, half_lam);
    const double qv_pow_m1 = std::pow(qv, half_lam - 1.0);  // half_lam >= 2 here
    kl_acc += w * (dlogsig + 0.5 * (qv_pow - noise.qu_pow[s]));
    for (int j = 0; j < k; ++j) {
      const double common = w * half_lam * qv_pow_m1 * r[j] / v.sigma[j];
      g.du_mu[j] += common;
      g.dv_mu[j] -= common;
      g.du_sigma[j] += common * e[j] - w / u.sigma[j];
      g.dv_sigma[j] += w / v.sigma[j] - common * r[j];
    }
  }
  const double inv_m = 1.0 / noise.m;
  g.kl = kl_acc * inv_m;
  for (int j = 0; j < k; ++j) {
    g.du_mu[j] *= inv_m;
    g.dv_mu[j] *= inv_m;
    g.du_sigma[j] *= inv_m;
    g.dv_sigma[j] *= inv_m;
  }
}

struct BatchAccum {
  double loss = 0.0;
  double g_tau = 0.0;
  std::vector<double> g_mu;
  std::vector<double> g_sigma;
};

// Loss and gradient of one batch; deterministic for a fixed chunk count.
void accumulate_batch(const EmbeddingModel& model, std::span<const TrainingPair> pairs,
                      std::span<const std::size_t> order, double beta, const McNoise* noise,
                      unsigned threads, BatchAccum& out) {
  const int k = model.cfg.k;
  const int lambda = model.cfg.lambda;
  const double tau = model.tau;
  const std::size_t param_count = static_cast<std::size_t>(model.n) * k;

  out.loss = 0.0;
  out.g_tau = 0.0;
  out.g_mu.assign(param_count, 0.0);
  out.g_sigma.assign(param_count, 0.0);

  threads = resolve_threads(threads);
  const std::size_t nchunks = std::min<std::size_t>(threads, std::max<std::size_t>(order.size(), 1));
  std::vector<BatchAccum> partial(nchunks);
  for (auto& p : partial) {
    p.g_mu.assign(param_count, 0.0);
    p.g_sigma.assign(param_count, 0.0);
  }

  parallel_chunks(order.size(), static_cast<unsigned>(nchunks), [&](std::size_t lo, std::size_t hi) {
    // Identify the chunk by its start; chunk boundaries are a pure function
    // of (size, nchunks).
    const std::size_t per = (order.size() + nchunks - 1) / nchunks;
    BatchAccum& acc = partial[lo / per];
    PairGrad pg(k);
    for (std::size_t idx = lo; idx < hi; ++idx) {
      const TrainingPair& pr = pairs[order[idx]];
      const PointView pu = model.view(pr.u);
      const PointView pv = model.view(pr.v);
      if (lambda == 2) {
        kl_grad_closed(pu, pv, pg);
      } else {
        kl_grad_mc(pu, pv, lambda, *noise, pg);
      }
      const double t = target_similarity(pr.distance, beta);
      const double s = 1.0 / (1.0 + tau * pg.kl);
      const double diff = s - t;
      acc.loss += diff * diff;
      const double d_dkl = -2.0 * diff * tau * s * s;
      acc.g_tau += -2.0 * diff * pg.kl * s * s;
      double* gmu_u = acc.g_mu.data() + static_cast<std::size_t>(pr.u) * k;
      double* gsg_u = acc.g_sigma.data() + static_cast<std::size_t>(pr.u) * k;
      double* gmu_v = acc.g_mu.data() + static_cast<std::size_t>(pr.v) * k;
      double* gsg_v = acc.g_sigma.data() + static_cast<std::size_t>(pr.v) * k;
      for (int i = 0; i < k; ++i) {
        gmu_u[i] += d_dkl * pg.du_mu[i];
        gsg_u[i] += d_dkl * pg.du_sigma[i];
        gmu_v[i] += d_dkl * pg.dv_mu[i];
        gsg_v[i] += d_dkl * pg.dv_sigma[i];
      }
    }
  });

  for (const auto& p : partial) {
    out.loss += p.loss;
    out.g_tau += p.g_tau;
    for (std::size_t i = 0; i < param_count; ++i) {
      out.g_mu[i] += p.g_mu[i];
      out.g_sigma[i] += p.g_sigma[i];
    }
  }
}

struct AdamState {
  std::vector<double> m1, m2;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::size_t t = 0;

  explicit AdamState(std::size_t n) : m1(n, 0.0), m2(n, 0.0) {}

  void step(std::span<double> params, std::span<const double> grad, double lr) {
    ++t;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m1[i] = beta1 * m1[i] + (1.0 - beta1) * grad[i];
      m2[i] = beta2 * m2[i] + (1.0 - beta2) * grad[i] * grad[i];
      const double mhat = m1[i] / c1;
      const double vhat = m2[i] / c2;
      params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
};

}  // namespace

void TrainConfig::validate() const {
  if (beta <= 0.0) throw validation_error("beta must be positive");
  if (lr <= 0.0) throw validation_error("learning rate must be positive");
  if (epochs < 1) throw validation_error("epochs must be >= 1");
  if (batches < 1) throw validation_error("batches must be >= 1");
  if (eval_every < 1) throw validation_error("eval_every must be >= 1");
  if (sigma_min <= 0.0 || sigma_max < sigma_min)
    throw validation_error("invalid sigma clamp bounds");
  if (tau_min <= 0.0) throw validation_error("tau_min must be positive");
}

EmbeddingModel init_model(const DirectedGraph& g, const ManifoldConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  EmbeddingModel model;
  model.cfg = cfg;
  model.n = g.num_nodes();
  const std::size_t nk = static_cast<std::size_t>(model.n) * cfg.k;
  model.mu.resize(nk);
  model.sigma.resize(nk);
  Rng rng(seed);
  for (NodeId u = 0; u < model.n; ++u) {
    for (int i = 0; i < cfg.k; ++i) model.mu[static_cast<std::size_t>(u) * cfg.k + i] = rng.uniform(0.0, 10.0);
    for (int i = 0; i < cfg.k; ++i)
      model.sigma[static_cast<std::size_t>(u) * cfg.k + i] = rng.uniform(4.0, 7.0);
  }
  model.tau = 2.5;
  return model;
}

double target_similarity(std::uint32_t distance, double beta) {
  if (distance == DistanceMatrix::kInfinity) return 0.0;
  return std::pow(static_cast<double>(distance), -beta);
}

double pair_term(const EmbeddingModel& model, NodeId u, NodeId v, std::uint32_t distance,
                 double beta, std::uint64_t mc_seed) {
  if (u == v) throw validation_error("pair_term requires u != v");
  const double kl = model.cfg.lambda == 2
                        ? kl_gaussian_closed_view(model.view(u), model.view(v))
                        : kl_mc_view(model.view(u), model.view(v), model.cfg.lambda,
                                     McNoise::build(model.cfg, mc_seed));
  const double s = 1.0 / (1.0 + model.tau * kl);
  const double diff = s - target_similarity(distance, beta);
  return diff * diff;
}

double loss(const EmbeddingModel& model, std::span<const TrainingPair> pairs, double beta,
            std::uint64_t mc_seed) {
  McNoise noise;
  const bool mc = model.cfg.lambda != 2;
  if (mc) noise = McNoise::build(model.cfg, mc_seed);
  double acc = 0.0;
  for (const auto& p : pairs) {
    const double kl = mc ? kl_mc_view(model.view(p.u), model.view(p.v), model.cfg.lambda, noise)
                         : kl_gaussian_closed_view(model.view(p.u), model.view(p.v));
    const double s = 1.0 / (1.0 + model.tau * kl);
    const double diff = s - target_similarity(p.distance, beta);
    acc += diff * diff;
  }
  return acc;
}

double loss(const EmbeddingModel& model, const TrainingSet& ts, double beta,
            std::uint64_t mc_seed) {
  const auto pairs = ts.all_pairs();
  return loss(model, pairs, beta, mc_seed);
}

Gradients gradients(const EmbeddingModel& model, std::span<const TrainingPair> batch, double beta,
                    std::uint64_t mc_seed) {
  model.cfg.validate();
  McNoise noise;
  if (model.cfg.lambda != 2) noise = McNoise::build(model.cfg, mc_seed);
  std::vector<std::size_t> order(batch.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  BatchAccum acc;
  accumulate_batch(model, batch, order, beta, model.cfg.lambda != 2 ? &noise : nullptr, 1, acc);
  Gradients g;
  g.mu = std::move(acc.g_mu);
  g.sigma = std::move(acc.g_sigma);
  g.tau = acc.g_tau;
  return g;
}

namespace {

// Pearson of the checkpoint metric: similarity vs inverse true distance.
double checkpoint_pearson(const EmbeddingModel& model, std::span<const TrainingPair> pairs,
                          const McNoise* noise, unsigned threads, std::vector<double>& ys) {
  ys.resize(pairs.size());
  parallel_chunks(pairs.size(), threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const auto& p = pairs[i];
      const double kl = noise ? kl_mc_view(model.view(p.u), model.view(p.v), model.cfg.lambda, *noise)
                              : kl_gaussian_closed_view(model.view(p.u), model.view(p.v));
      ys[i] = 1.0 / (1.0 + model.tau * kl);
    }
  });
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  const std::size_t n = pairs.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double x = inverse_distance(pairs[i].distance);
    const double y = ys[i];
    sx += x;
    sy += y;
    sxx += x * x;
    syy += y * y;
    sxy += x * y;
  }
  const double dn = static_cast<double>(n);
  const double cov = sxy - sx * sy / dn;
  const double vx = sxx - sx * sx / dn;
  const double vy = syy - sy * sy / dn;
  if (vx <= 0.0 || vy <= 0.0) return -1.0;  // degenerate: treat as worst
  return cov / std::sqrt(vx * vy);
}

}  // namespace

TrainReport train(const DirectedGraph& g, const TrainingSet& ts, EmbeddingModel model,
                  const TrainConfig& tcfg) {
  tcfg.validate();
  model.cfg.validate();
  if (model.n != g.num_nodes()) throw validation_error("model does not match graph node count");

  const std::vector<TrainingPair> pairs = ts.all_pairs();
  if (pairs.empty()) throw validation_error("no training pairs");
  const int k = model.cfg.k;
  const std::size_t nk = static_cast<std::size_t>(model.n) * k;
  const bool mc = model.cfg.lambda != 2;
  const auto constants = ManifoldConstants::from_lambda(model.cfg.lambda);

  TrainReport report;
  report.loss_history.reserve(tcfg.epochs);

  AdamState adam(2 * nk + 1);
  std::vector<std::size_t> order(pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng shuffle_rng = Rng(tcfg.seed).fork(0x5AFF1EULL);

  McNoise eval_noise;
  if (mc) eval_noise = McNoise::build(model.cfg, Rng(tcfg.seed).fork(0xE7A1ULL).next_u64());

  BatchAccum acc;
  std::vector<double> packed_grad(2 * nk + 1);
  std::vector<double> packed_params(2 * nk + 1);
  std::vector<double> ys_buffer;
  std::uint64_t step = 0;

  for (int epoch = 1; epoch <= tcfg.epochs; ++epoch) {
    if (tcfg.shuffle) {
      for (std::size_t i = order.size(); i > 1; --i) {
        const std::size_t j = shuffle_rng.uniform_int(i);
        std::swap(order[i - 1], order[j]);
      }
    }

    double epoch_loss = 0.0;
    const std::size_t per_batch = (pairs.size() + tcfg.batches - 1) / tcfg.batches;
    for (int b = 0; b < tcfg.batches; ++b) {
      const std::size_t lo = static_cast<std::size_t>(b) * per_batch;
      const std::size_t hi = std::min(pairs.size(), lo + per_batch);
      if (lo >= hi) break;
      McNoise step_noise;
      if (mc) step_noise = McNoise::build(model.cfg, Rng(tcfg.seed).fork(step + 1).next_u64());

      accumulate_batch(model, pairs, std::span<const std::size_t>(order).subspan(lo, hi - lo),
                       tcfg.beta, mc ? &step_noise : nullptr, tcfg.threads, acc);

      if (!std::isfinite(acc.loss)) {
        for (std::size_t idx = lo; idx < hi; ++idx) {
          const auto& p = pairs[order[idx]];
          const double term = pair_term(model, p.u, p.v, p.distance, tcfg.beta, 0);
          if (!std::isfinite(term)) {
            throw numeric_error("non-finite loss at epoch " + std::to_string(epoch) + ", pair (" +
                                std::to_string(p.u) + ", " + std::to_string(p.v) + ")");
          }
        }
        throw numeric_error("non-finite loss at epoch " + std::to_string(epoch));
      }
      epoch_loss += acc.loss;

      if (tcfg.use_natural_gradient) {
        for (std::size_t i = 0; i < nk; ++i) {
          const double s2 = model.sigma[i] * model.sigma[i];
          acc.g_sigma[i] *= s2 / constants.c1;
          acc.g_mu[i] *= s2 / constants.c2;
        }
      }

      std::copy(acc.g_sigma.begin(), acc.g_sigma.end(), packed_grad.begin());
      std::copy(acc.g_mu.begin(), acc.g_mu.end(), packed_grad.begin() + nk);
      packed_grad[2 * nk] = acc.g_tau;
      std::copy(model.sigma.begin(), model.sigma.end(), packed_params.begin());
      std::copy(model.mu.begin(), model.mu.end(), packed_params.begin() + nk);
      packed_params[2 * nk] = model.tau;

      adam.step(packed_params, packed_grad, tcfg.lr);

      for (std::size_t i = 0; i < nk; ++i)
        model.sigma[i] = std::clamp(packed_params[i], tcfg.sigma_min, tcfg.sigma_max);
      std::copy(packed_params.begin() + nk, packed_params.begin() + 2 * nk, model.mu.begin());
      model.tau = std::max(packed_params[2 * nk], tcfg.tau_min);
      ++step;
    }
    report.loss_history.push_back(epoch_loss);

    if (epoch % tcfg.eval_every == 0 || epoch == tcfg.epochs) {
      const double rho =
          checkpoint_pearson(model, pairs, mc ? &eval_noise : nullptr, tcfg.threads, ys_buffer);
      report.pearson_history.emplace_back(epoch, rho);
      if (rho > report.best_pearson) {
        report.best_pearson = rho;
        report.best_epoch = epoch;
        report.best_model = model;
      }
    }
  }

  if (report.best_model.n == 0) report.best_model = model;
  report.final_loss = loss(model, pairs, tcfg.beta, Rng(tcfg.seed).fork(0xF17a1ULL).next_u64());
  report.final_model = std::move(model);
  return report;
}

void save_model(const EmbeddingModel& model, const ModelFileMeta& meta, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw validation_error("cannot write model file: " + path);
  nlohmann::json header = {{"lambda", model.cfg.lambda}, {"k", model.cfg.k},
                           {"tau", model.tau},           {"beta", meta.beta},
                           {"seed", meta.seed},          {"epoch", meta.epoch}};
  out << header.dump() << '\n';
  char buf[64];
  for (NodeId u = 0; u < model.n; ++u) {
    out << u;
    for (int i = 0; i < model.cfg.k; ++i) {
      std::snprintf(buf, sizeof buf, " %.17g", model.mu[static_cast<std::size_t>(u) * model.cfg.k + i]);
      out << buf;
    }
    for (int i = 0; i < model.cfg.k; ++i) {
      std::snprintf(buf, sizeof buf, " %.17g",
                    model.sigma[static_cast<std::size_t>(u) * model.cfg.k + i]);
      out << buf;
    }
    out << '\n';
  }
}

std::pair<EmbeddingModel, ModelFileMeta> load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw validation_error("cannot open model file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw validation_error("empty model file: " + path);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw validation_error("bad model header: " + std::string(e.what()));
  }

  EmbeddingModel model;
  ModelFileMeta meta;
  model.cfg.lambda = header.at("lambda").get<int>();
  model.cfg.k = header.at("k").get<int>();
  model.tau = header.at("tau").get<double>();
  meta.beta = header.at("beta").get<double>();
  meta.seed = header.at("seed").get<std::uint64_t>();
  meta.epoch = header.at("epoch").get<int>();
  model.cfg.validate();

  std::size_t expected = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    NodeId id;
    if (!(ls >> id) || id != expected)
      throw validation_error("model records must be contiguous node ids");
    for (int i = 0; i < model.cfg.k; ++i) {
      double v;
      if (!(ls >> v)) throw validation_error("model record truncated (mu)");
      model.mu.push_back(v);
    }
    for (int i = 0; i < model.cfg.k; ++i) {
      double v;
      if (!(ls >> v)) throw validation_error("model record truncated (sigma)");
      model.sigma.push_back(v);
    }
    ++expected;
  }
  model.n = static_cast<NodeId>(expected);
  if (model.n == 0) throw validation_error("model file has no node records");
  return {std::move(model), meta};
}

}  // namespace sme
