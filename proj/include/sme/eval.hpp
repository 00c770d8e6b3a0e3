#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sme/distance.hpp"
#include "sme/graph.hpp"
#include "sme/sampling.hpp"
#include "sme/training.hpp"

namespace sme {

// Sample Pearson correlation. Throws validation_error for length < 2 or a
// constant input.
double pearson(std::span<const double> xs, std::span<const double> ys);

// Pearson of average ranks (ties share their mean rank).
double spearman(std::span<const double> xs, std::span<const double> ys);

// Kraskov-style kNN mutual information estimate in nats, floored at 0.
// Seeded jitter of scale 1e-10 breaks ties.
double mutual_information_knn(std::span<const double> xs, std::span<const double> ys,
                              int k_neighbors, std::uint64_t seed);

struct EvalReport {
  double pearson = 0.0;
  double spearman = 0.0;
  double mi_mean = 0.0;
  double mi_std = 0.0;
  std::size_t n_pairs = 0;
  double target_exponent = 1.0;
  std::string pair_source;
};

struct EvalOptions {
  int bootstrap = 40;
  std::uint64_t seed = 0;
  double target_exponent = 1.0;  // evaluation target d^-exponent
  int mi_neighbors = 5;
  std::size_t mi_subsample_threshold = 1000000;  // beyond this, subsample for MI
  std::size_t mi_subsample_size = 100000;
  unsigned threads = 0;
};

// Paired vectors (d^-exponent with inf -> 0, (1 + tau KL)^-1) for plotting or
// external analysis.
struct PairValues {
  std::vector<double> target;      // inverse distances
  std::vector<double> similarity;  // model side
};

PairValues build_pair_values(const EmbeddingModel& model, const DistanceMatrix& d,
                             double target_exponent = 1.0, std::uint64_t seed = 0,
                             unsigned threads = 0);
PairValues build_pair_values(const EmbeddingModel& model, std::span<const TrainingPair> pairs,
                             double target_exponent = 1.0, std::uint64_t seed = 0,
                             unsigned threads = 0);

EvalReport evaluate_model(const EmbeddingModel& model, const DistanceMatrix& d,
                          const EvalOptions& opts = {});
EvalReport evaluate_model(const EmbeddingModel& model, std::span<const TrainingPair> pairs,
                          const EvalOptions& opts = {});

// Graph-reconstruction precision: per node take its degree-many best KL
// candidates (ascending KL, ties by node id) and count hits against the true
// neighbors, normalized by |E|.
enum class Direction { kOut, kIn };
double reconstruction_precision(const EmbeddingModel& model, const DirectedGraph& g,
                                Direction direction, std::uint64_t seed = 0, unsigned threads = 0);

// Random-subset L1 baseline on the symmetrized distance. Coordinates are
// distance-to-set values under the metric closure of min(d_uv, d_vu), i.e.
// hop distance on the underlying undirected graph, so the m * d~ bound is a
// deterministic consequence of the construction; unreachable sets take the
// diameter bound n.
struct BourgainEmbedding {
  int m = 0;                              // ceil(log n)
  NodeId n = 0;
  std::vector<std::uint32_t> coords;      // n x m row-major
  std::vector<std::vector<NodeId>> subsets;

  std::uint32_t coord(NodeId j, int i) const {
    return coords[static_cast<std::size_t>(j) * m + i];
  }
};

BourgainEmbedding bourgain_embed(const DirectedGraph& g, const DistanceMatrix& d,
                                 std::uint64_t seed, double log_base = 2.718281828459045);

struct BourgainReport {
  std::size_t finite_pairs = 0;      // unordered pairs with finite symmetrized distance
  std::size_t infinite_excluded = 0; // unordered pairs skipped (d~ = inf)
  std::size_t bound_violations = 0;  // pairs with ||dx||_1 > m * d~
  double min_ratio = 0.0;            // ||dx||_1 / d~ extremes over finite pairs
  double max_ratio = 0.0;
  double mean_ratio = 0.0;
};

BourgainReport bourgain_distortion(const BourgainEmbedding& emb, const DistanceMatrix& d);

// key=value text block, one-line CSV, and the raw pair-value dump.
void save_eval_report_txt(const EvalReport& r, const std::string& path);
void save_eval_report_csv(const EvalReport& r, const std::string& path);
void save_pair_values_csv(const PairValues& pv, const std::string& path);

}  // namespace sme
