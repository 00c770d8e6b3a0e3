#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sme/distance.hpp"
#include "sme/graph.hpp"
#include "sme/scc.hpp"

namespace sme {

// One supervised pair: hop distance from u to v, kInfinity when unreachable.
struct TrainingPair {
  NodeId u;
  NodeId v;
  std::uint32_t distance;

  bool operator==(const TrainingPair&) const = default;
};

// Scalable training pairs: per-node nearest finite pairs plus sampled
// infinite pairs drawn via the SCC topological order.
struct SampleSets {
  std::vector<TrainingPair> close_pairs;
  std::vector<TrainingPair> inf_pairs;
  std::uint32_t budget = 0;  // per-node sample budget B
};

// For each node u, up to B finite-distance pairs from interleaved forward and
// backward BFS layers (forward layer 1, backward layer 1, forward layer 2,
// ...), ties inside a layer broken by ascending node id. Forward discovery of
// v emits (u, v, d_uv); backward discovery emits (v, u, d_vu). Duplicate
// ordered pairs across source nodes are removed.
std::vector<TrainingPair> sample_close_pairs(const DirectedGraph& g, std::uint32_t B);

// For each node u, up to B nodes drawn uniformly without replacement from the
// strictly earlier topological components; every emitted pair is infinite
// because edges only cross components toward higher topological index.
std::vector<TrainingPair> sample_infinite_pairs(const DirectedGraph& g,
                                                const SCCDecomposition& scc, std::uint32_t B,
                                                std::uint64_t seed);

enum class SampleMode { kFull, kSampled };

// Either a handle to the full APSP matrix or the sampled pair sets.
struct TrainingSet {
  SampleMode mode = SampleMode::kSampled;
  DistanceMatrix matrix;  // full mode
  SampleSets sets;        // sampled mode

  // Materializes the supervised pairs (all ordered u != v in full mode).
  std::vector<TrainingPair> all_pairs() const;
  std::size_t num_terms() const;
};

TrainingSet build_training_set(const DirectedGraph& g, SampleMode mode, std::uint32_t B,
                               std::uint64_t seed, NodeId apsp_limit = kDefaultApspNodeLimit,
                               unsigned threads = 0);

// CSV "u,v,distance" with "inf" for infinity; the leading comment line keeps
// mode, B, and seed.
void save_pairs_csv(const SampleSets& sets, SampleMode mode, std::uint64_t seed,
                    const std::string& path);
SampleSets load_pairs_csv(const std::string& path);

}  // namespace sme
