#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sme/graph.hpp"
#include "sme/manifold.hpp"
#include "sme/sampling.hpp"

namespace sme {

// Per-node distribution parameters stored flat (node-major), plus the
// trainable global tau of the similarity transform. 2k|V| + 1 degrees of
// freedom.
struct EmbeddingModel {
  ManifoldConfig cfg;
  NodeId n = 0;
  std::vector<double> mu;     // n * k
  std::vector<double> sigma;  // n * k
  double tau = 2.5;

  EmbeddingPoint point(NodeId u) const {
    const int k = cfg.k;
    EmbeddingPoint p;
    p.mu.assign(mu.begin() + static_cast<std::size_t>(u) * k,
                mu.begin() + static_cast<std::size_t>(u + 1) * k);
    p.sigma.assign(sigma.begin() + static_cast<std::size_t>(u) * k,
                   sigma.begin() + static_cast<std::size_t>(u + 1) * k);
    return p;
  }
  PointView view(NodeId u) const {
    const std::size_t off = static_cast<std::size_t>(u) * cfg.k;
    return {mu.data() + off, sigma.data() + off, cfg.k};
  }
  std::size_t degrees_of_freedom() const {
    return 2 * static_cast<std::size_t>(cfg.k) * n + 1;
  }
};

struct TrainConfig {
  double beta = 0.5;       // target exponent in d^(-beta)
  double lr = 0.1;
  int epochs = 1000;
  int batches = 1;
  bool shuffle = false;
  bool use_natural_gradient = true;
  std::uint64_t seed = 0;
  int eval_every = 25;     // epochs between checkpoint evaluations
  double sigma_min = kSigmaMinDefault;
  double sigma_max = kSigmaMaxDefault;
  double tau_min = 1e-6;
  unsigned threads = 1;    // 1 = deterministic reduction

  void validate() const;
};

struct TrainReport {
  std::vector<double> loss_history;                    // per epoch, pre-update
  std::vector<std::pair<int, double>> pearson_history; // (epoch, pearson)
  int best_epoch = 0;
  double best_pearson = -1.0;
  double final_loss = 0.0;
  EmbeddingModel final_model;
  EmbeddingModel best_model;
};

// mu ~ U[0,10] and sigma ~ U[4,7] per node and dimension, tau = 2.5.
EmbeddingModel init_model(const DirectedGraph& g, const ManifoldConfig& cfg, std::uint64_t seed);

// ((1 + tau KL_uv)^-1 - t)^2 with t = d^(-beta), t = 0 for infinite d.
double target_similarity(std::uint32_t distance, double beta);
double pair_term(const EmbeddingModel& model, NodeId u, NodeId v, std::uint32_t distance,
                 double beta, std::uint64_t mc_seed = 0);

// Sum of pair_term over the supplied pairs. For lambda > 2, mc_seed fixes the
// shared reparameterization noise.
double loss(const EmbeddingModel& model, std::span<const TrainingPair> pairs, double beta,
            std::uint64_t mc_seed = 0);
double loss(const EmbeddingModel& model, const TrainingSet& ts, double beta,
            std::uint64_t mc_seed = 0);

// Batch-loss gradient for every mu, sigma (flat, node-major) and tau.
// lambda = 2 differentiates the closed-form KL; lambda > 2 differentiates the
// reparameterized Monte Carlo estimate under noise fixed by mc_seed.
struct Gradients {
  std::vector<double> mu;     // n * k
  std::vector<double> sigma;  // n * k
  double tau = 0.0;
};

Gradients gradients(const EmbeddingModel& model, std::span<const TrainingPair> batch, double beta,
                    std::uint64_t mc_seed = 0);

// Adam loop over shuffled batches with optional natural-gradient correction,
// sigma/tau clamping, and periodic Pearson checkpointing against d^-1.
TrainReport train(const DirectedGraph& g, const TrainingSet& pairs, EmbeddingModel model,
                  const TrainConfig& tcfg);

// Model file: one JSON metadata line (lambda, k, tau, beta, seed, epoch),
// then per node "id mu... sigma..." at 17 significant digits.
struct ModelFileMeta {
  double beta = 0.5;
  std::uint64_t seed = 0;
  int epoch = 0;
};

void save_model(const EmbeddingModel& model, const ModelFileMeta& meta, const std::string& path);
std::pair<EmbeddingModel, ModelFileMeta> load_model(const std::string& path);

}  // namespace sme
