#include "sme/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <unordered_set>

#include "sme/errors.hpp"
#include "sme/manifold.hpp"
#include "sme/parallel.hpp"
#include "sme/rng.hpp"

namespace sme {

namespace {

double digamma(double x) {
  // Recurrence up into the asymptotic regime, then the standard series.
  double result = 0.0;
  while (x < 6.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  result += std::log(x) - 0.5 * inv -
            inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 / 240.0)));
  return result;
}

// Static 2D kd-tree, Chebyshev metric, used for the joint-space kNN step.
class KdTree2 {
 public:
  KdTree2(std::span<const double> xs, std::span<const double> ys)
      : xs_(xs), ys_(ys), idx_(xs.size()) {
    std::iota(idx_.begin(), idx_.end(), std::size_t{0});
    build(0, idx_.size(), 0);
  }

  // Distance to the k-th nearest neighbor of point qi, self excluded.
  double kth_distance(std::size_t qi, int k) const {
    best_.assign(static_cast<std::size_t>(k), std::numeric_limits<double>::infinity());
    query(0, idx_.size(), 0, qi);
    return best_.back();
  }

 private:
  void build(std::size_t lo, std::size_t hi, int axis) {
    if (hi - lo <= 1) return;
    const std::size_t mid = (lo + hi) / 2;
    auto key = [&](std::size_t i) { return axis == 0 ? xs_[i] : ys_[i]; };
    std::nth_element(idx_.begin() + lo, idx_.begin() + mid, idx_.begin() + hi,
                     [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
    build(lo, mid, 1 - axis);
    build(mid + 1, hi, 1 - axis);
  }

  void push_candidate(double dist) const {
    // best_ kept sorted ascending; size is tiny (k ~ 5).
    if (dist >= best_.back()) return;
    auto pos = std::upper_bound(best_.begin(), best_.end(), dist);
    best_.insert(pos, dist);
    best_.pop_back();
  }

  void query(std::size_t lo, std::size_t hi, int axis, std::size_t qi) const {
    if (lo >= hi) return;
    const std::size_t mid = (lo + hi) / 2;
    const std::size_t p = idx_[mid];
    if (p != qi) {
      const double d = std::max(std::abs(xs_[p] - xs_[qi]), std::abs(ys_[p] - ys_[qi]));
      push_candidate(d);
    }
    const double qv = axis == 0 ? xs_[qi] : ys_[qi];
    const double pv = axis == 0 ? xs_[p] : ys_[p];
    const double delta = qv - pv;
    const std::size_t near_lo = delta < 0 ? lo : mid + 1;
    const std::size_t near_hi = delta < 0 ? mid : hi;
    const std::size_t far_lo = delta < 0 ? mid + 1 : lo;
    const std::size_t far_hi = delta < 0 ? hi : mid;
    query(near_lo, near_hi, 1 - axis, qi);
    if (std::abs(delta) < best_.back()) query(far_lo, far_hi, 1 - axis, qi);
  }

  std::span<const double> xs_, ys_;
  std::vector<std::size_t> idx_;
  mutable std::vector<double> best_;
};

std::vector<double> average_ranks(std::span<const double> v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

double similarity_of(const EmbeddingModel& model, NodeId u, NodeId v, std::uint64_t mc_seed) {
  const double kl = model.cfg.lambda == 2
                        ? kl_gaussian_closed_view(model.view(u), model.view(v))
                        : kl_importance_sampling(model.point(u), model.point(v), model.cfg, mc_seed);
  return 1.0 / (1.0 + model.tau * kl);
}

}  // namespace

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw validation_error("pearson: length mismatch");
  if (xs.size() < 2) throw validation_error("pearson: need at least two observations");
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx / n, my = sy / n;
  double cov = 0, vx = 0, vy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    cov += dx * dy;
    vx += dx * dx;
    vy += dy * dy;
  }
  if (vx == 0.0 || vy == 0.0)
    throw validation_error("pearson: correlation undefined for a constant sequence");
  return cov / std::sqrt(vx * vy);
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw validation_error("spearman: length mismatch");
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  return pearson(rx, ry);
}

double mutual_information_knn(std::span<const double> xs, std::span<const double> ys,
                              int k_neighbors, std::uint64_t seed) {
  if (xs.size() != ys.size()) throw validation_error("MI: length mismatch");
  const std::size_t n = xs.size();
  if (k_neighbors < 1) throw validation_error("MI: k_neighbors must be >= 1");
  if (static_cast<std::size_t>(k_neighbors) >= n)
    throw validation_error("MI: k_neighbors must be smaller than the sample count");

  // Tie-breaking jitter.
  Rng rng(seed);
  std::vector<double> jx(n), jy(n);
  for (std::size_t i = 0; i < n; ++i) jx[i] = xs[i] + 1e-10 * (rng.uniform() - 0.5);
  for (std::size_t i = 0; i < n; ++i) jy[i] = ys[i] + 1e-10 * (rng.uniform() - 0.5);

  KdTree2 tree(jx, jy);
  std::vector<double> sorted_x = jx, sorted_y = jy;
  std::sort(sorted_x.begin(), sorted_x.end());
  std::sort(sorted_y.begin(), sorted_y.end());

  auto strict_count = [](const std::vector<double>& sorted, double center, double eps) {
    // #{v : center - eps < v < center + eps}, self included.
    auto lo = std::upper_bound(sorted.begin(), sorted.end(), center - eps);
    auto hi = std::lower_bound(sorted.begin(), sorted.end(), center + eps);
    return static_cast<std::ptrdiff_t>(hi - lo);
  };

  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double eps = tree.kth_distance(i, k_neighbors);
    const auto cx = strict_count(sorted_x, jx[i], eps) - 1;  // exclude self
    const auto cy = strict_count(sorted_y, jy[i], eps) - 1;
    acc += digamma(static_cast<double>(cx) + 1.0) + digamma(static_cast<double>(cy) + 1.0);
  }
  const double mi = digamma(static_cast<double>(k_neighbors)) + digamma(static_cast<double>(n)) -
                    acc / static_cast<double>(n);
  return mi < 0.0 ? 0.0 : mi;
}

PairValues build_pair_values(const EmbeddingModel& model, const DistanceMatrix& d,
                             double target_exponent, std::uint64_t seed, unsigned threads) {
  if (model.n != d.num_nodes())
    throw validation_error("model and distance matrix node counts differ");
  const NodeId n = model.n;
  PairValues pv;
  const std::size_t count = static_cast<std::size_t>(n) * (n - 1);
  pv.target.resize(count);
  pv.similarity.resize(count);
  parallel_chunks(n, threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t u = lo; u < hi; ++u) {
      std::size_t w = static_cast<std::size_t>(u) * (n - 1);
      for (NodeId v = 0; v < n; ++v) {
        if (v == static_cast<NodeId>(u)) continue;
        const std::uint32_t dist = d.at(static_cast<NodeId>(u), v);
        pv.target[w] = dist == DistanceMatrix::kInfinity
                           ? 0.0
                           : std::pow(static_cast<double>(dist), -target_exponent);
        pv.similarity[w] = similarity_of(model, static_cast<NodeId>(u), v, seed);
        ++w;
      }
    }
  });
  return pv;
}

PairValues build_pair_values(const EmbeddingModel& model, std::span<const TrainingPair> pairs,
                             double target_exponent, std::uint64_t seed, unsigned threads) {
  for (const auto& p : pairs) {
    if (p.u >= model.n || p.v >= model.n)
      throw validation_error("pair references node outside the model");
  }
  PairValues pv;
  pv.target.resize(pairs.size());
  pv.similarity.resize(pairs.size());
  parallel_chunks(pairs.size(), threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const auto& p = pairs[i];
      pv.target[i] = p.distance == DistanceMatrix::kInfinity
                         ? 0.0
                         : std::pow(static_cast<double>(p.distance), -target_exponent);
      pv.similarity[i] = similarity_of(model, p.u, p.v, seed);
    }
  });
  return pv;
}

namespace {

EvalReport evaluate_values(PairValues pv, const EvalOptions& opts, std::string source) {
  EvalReport r;
  r.n_pairs = pv.target.size();
  r.target_exponent = opts.target_exponent;
  r.pearson = pearson(pv.target, pv.similarity);
  r.spearman = spearman(pv.target, pv.similarity);

  // MI population, subsampled at scale.
  std::vector<double>* mx = &pv.target;
  std::vector<double>* my = &pv.similarity;
  std::vector<double> sub_x, sub_y;
  Rng rng(opts.seed);
  if (pv.target.size() > opts.mi_subsample_threshold) {
    const std::size_t total = pv.target.size();
    const std::size_t want = opts.mi_subsample_size;
    // Floyd's uniform subset, then sorted for cache-friendly gathers.
    std::unordered_set<std::size_t> chosen;
    Rng sub_rng = rng.fork(0x5AB5ULL);
    for (std::size_t j = total - want; j < total; ++j) {
      const std::size_t t = sub_rng.uniform_int(j + 1);
      if (!chosen.insert(t).second) chosen.insert(j);
    }
    std::vector<std::size_t> picks(chosen.begin(), chosen.end());
    std::sort(picks.begin(), picks.end());
    sub_x.reserve(want);
    sub_y.reserve(want);
    for (std::size_t p : picks) {
      sub_x.push_back(pv.target[p]);
      sub_y.push_back(pv.similarity[p]);
    }
    mx = &sub_x;
    my = &sub_y;
    source += "+mi-subsample";
  }

  const std::size_t pop = mx->size();
  std::vector<double> mi_values(static_cast<std::size_t>(opts.bootstrap));
  parallel_chunks(mi_values.size(), opts.threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t b = lo; b < hi; ++b) {
      Rng boot = Rng(opts.seed).fork(0xB007 + b);
      std::vector<double> bx(pop), by(pop);
      for (std::size_t i = 0; i < pop; ++i) {
        const std::size_t pick = boot.uniform_int(pop);
        bx[i] = (*mx)[pick];
        by[i] = (*my)[pick];
      }
      mi_values[b] = mutual_information_knn(bx, by, opts.mi_neighbors, boot.next_u64());
    }
  });
  double mean = 0.0;
  for (double v : mi_values) mean += v;
  mean /= static_cast<double>(mi_values.size());
  double var = 0.0;
  for (double v : mi_values) var += (v - mean) * (v - mean);
  if (mi_values.size() > 1) var /= static_cast<double>(mi_values.size() - 1);
  r.mi_mean = mean;
  r.mi_std = std::sqrt(var);
  r.pair_source = std::move(source);
  return r;
}

}  // namespace

EvalReport evaluate_model(const EmbeddingModel& model, const DistanceMatrix& d,
                          const EvalOptions& opts) {
  return evaluate_values(build_pair_values(model, d, opts.target_exponent, opts.seed, opts.threads),
                         opts, "matrix");
}

EvalReport evaluate_model(const EmbeddingModel& model, std::span<const TrainingPair> pairs,
                          const EvalOptions& opts) {
  return evaluate_values(
      build_pair_values(model, pairs, opts.target_exponent, opts.seed, opts.threads), opts,
      "pairs");
}

double reconstruction_precision(const EmbeddingModel& model, const DirectedGraph& g,
                                Direction direction, std::uint64_t seed, unsigned threads) {
  if (model.n != g.num_nodes()) throw validation_error("model does not match graph node count");
  const NodeId n = g.num_nodes();
  if (g.num_edges() == 0) return 0.0;
  std::vector<std::size_t> hits(n, 0);

  parallel_chunks(n, threads, [&](std::size_t lo, std::size_t hi) {
    std::vector<std::pair<double, NodeId>> cand;
    for (std::size_t ui = lo; ui < hi; ++ui) {
      const NodeId u = static_cast<NodeId>(ui);
      const auto& truth = direction == Direction::kOut ? g.out_neighbors(u) : g.in_neighbors(u);
      const std::size_t degree = truth.size();
      if (degree == 0) continue;
      cand.clear();
      cand.reserve(n - 1);
      for (NodeId v = 0; v < n; ++v) {
        if (v == u) continue;
        const double kl = direction == Direction::kOut
                              ? (model.cfg.lambda == 2
                                     ? kl_gaussian_closed_view(model.view(u), model.view(v))
                                     : kl_importance_sampling(model.point(u), model.point(v),
                                                              model.cfg, seed))
                              : (model.cfg.lambda == 2
                                     ? kl_gaussian_closed_view(model.view(v), model.view(u))
                                     : kl_importance_sampling(model.point(v), model.point(u),
                                                              model.cfg, seed));
        cand.emplace_back(kl, v);
      }
      std::nth_element(cand.begin(), cand.begin() + (degree - 1), cand.end());
      std::sort(cand.begin(), cand.begin() + degree);
      std::size_t h = 0;
      for (std::size_t i = 0; i < degree; ++i) {
        if (std::binary_search(truth.begin(), truth.end(), cand[i].second)) ++h;
      }
      hits[u] = h;
    }
  });

  std::size_t total = 0;
  for (auto h : hits) total += h;
  return static_cast<double>(total) / static_cast<double>(g.num_edges());
}

BourgainEmbedding bourgain_embed(const DirectedGraph& g, const DistanceMatrix& d,
                                 std::uint64_t seed, double log_base) {
  if (g.num_nodes() != d.num_nodes())
    throw validation_error("graph and distance matrix node counts differ");
  const NodeId n = g.num_nodes();
  if (n == 0) throw validation_error("empty graph");
  BourgainEmbedding emb;
  emb.n = n;
  emb.m = std::max(1, static_cast<int>(std::ceil(std::log(static_cast<double>(n)) /
                                                 std::log(log_base))));
  emb.coords.assign(static_cast<std::size_t>(n) * emb.m, 0);
  emb.subsets.resize(emb.m);

  Rng rng(seed);
  for (int i = 0; i < emb.m; ++i) {
    const double p = std::pow(0.5, i + 1);
    for (NodeId v = 0; v < n; ++v)
      if (rng.uniform() < p) emb.subsets[i].push_back(v);
  }

  // Multi-source BFS on the underlying undirected graph, i.e. the metric
  // closure of min(d_uv, d_vu); empty or unreachable sets take the diameter
  // bound n.
  std::vector<std::uint32_t> dist(n);
  std::vector<NodeId> queue;
  for (int i = 0; i < emb.m; ++i) {
    std::fill(dist.begin(), dist.end(), DistanceMatrix::kInfinity);
    queue.clear();
    for (NodeId s : emb.subsets[i]) {
      dist[s] = 0;
      queue.push_back(s);
    }
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const NodeId u = queue[head];
      auto relax = [&](NodeId v) {
        if (dist[v] == DistanceMatrix::kInfinity) {
          dist[v] = dist[u] + 1;
          queue.push_back(v);
        }
      };
      for (NodeId v : g.out_neighbors(u)) relax(v);
      for (NodeId v : g.in_neighbors(u)) relax(v);
    }
    for (NodeId v = 0; v < n; ++v) {
      emb.coords[static_cast<std::size_t>(v) * emb.m + i] =
          dist[v] == DistanceMatrix::kInfinity ? n : dist[v];
    }
  }
  return emb;
}

BourgainReport bourgain_distortion(const BourgainEmbedding& emb, const DistanceMatrix& d) {
  if (emb.n != d.num_nodes())
    throw validation_error("embedding and distance matrix node counts differ");
  BourgainReport rep;
  rep.min_ratio = std::numeric_limits<double>::infinity();
  double ratio_sum = 0.0;
  for (NodeId u = 0; u < emb.n; ++u) {
    for (NodeId v = u + 1; v < emb.n; ++v) {
      const std::uint32_t duv = d.at(u, v), dvu = d.at(v, u);
      const std::uint32_t sym = std::min(duv, dvu);
      if (sym == DistanceMatrix::kInfinity) {
        ++rep.infinite_excluded;
        continue;
      }
      ++rep.finite_pairs;
      std::uint64_t l1 = 0;
      for (int i = 0; i < emb.m; ++i) {
        const std::int64_t delta = static_cast<std::int64_t>(emb.coord(u, i)) -
                                   static_cast<std::int64_t>(emb.coord(v, i));
        l1 += static_cast<std::uint64_t>(delta < 0 ? -delta : delta);
      }
      if (l1 > static_cast<std::uint64_t>(emb.m) * sym) ++rep.bound_violations;
      const double ratio = static_cast<double>(l1) / static_cast<double>(sym);
      ratio_sum += ratio;
      rep.min_ratio = std::min(rep.min_ratio, ratio);
      rep.max_ratio = std::max(rep.max_ratio, ratio);
    }
  }
  if (rep.finite_pairs > 0) rep.mean_ratio = ratio_sum / static_cast<double>(rep.finite_pairs);
  if (rep.finite_pairs == 0) rep.min_ratio = 0.0;
  return rep;
}

void save_eval_report_txt(const EvalReport& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw validation_error("cannot write eval report: " + path);
  out.precision(17);
  out << "pearson=" << r.pearson << '\n'
      << "spearman=" << r.spearman << '\n'
      << "mi_mean=" << r.mi_mean << '\n'
      << "mi_std=" << r.mi_std << '\n'
      << "n_pairs=" << r.n_pairs << '\n'
      << "target_exponent=" << r.target_exponent << '\n'
      << "pair_source=" << r.pair_source << '\n';
}

void save_eval_report_csv(const EvalReport& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw validation_error("cannot write eval CSV: " + path);
  out.precision(17);
  out << "pearson,spearman,mi_mean,mi_std,n_pairs,target_exponent,pair_source\n";
  out << r.pearson << ',' << r.spearman << ',' << r.mi_mean << ',' << r.mi_std << ','
      << r.n_pairs << ',' << r.target_exponent << ',' << r.pair_source << '\n';
}

void save_pair_values_csv(const PairValues& pv, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw validation_error("cannot write pair values: " + path);
  out.precision(17);
  out << "target,similarity\n";
  for (std::size_t i = 0; i < pv.target.size(); ++i)
    out << pv.target[i] << ',' << pv.similarity[i] << '\n';
}

}  // namespace sme
