// sme: embed directed graphs as distributions on a statistical manifold.
// One subcommand per pipeline stage so expensive artifacts (APSP matrices,
// sample sets) can be cached across runs.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>

#include <CLI11.hpp>

#include "sme/errors.hpp"
#include "sme/eval.hpp"
#include "sme/graph.hpp"
#include "sme/manifest.hpp"
#include "sme/sampling.hpp"
#include "sme/training.hpp"

namespace {

using namespace sme;

std::string resolve_out(const std::string& cli_out, const std::string& default_name) {
  if (!cli_out.empty()) return cli_out;
  const char* root = std::getenv("SME_OUT_ROOT");
  std::string base = root && *root ? root : ".";
  if (!base.empty() && base.back() != '/') base += '/';
  return base + default_name;
}

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

struct CommonOpts {
  std::uint64_t seed = 0;
  bool deterministic = false;
  unsigned threads = 0;

  unsigned effective_threads() const { return deterministic ? 1u : threads; }
};

void add_common(CLI::App* cmd, CommonOpts& c) {
  cmd->add_option("--seed", c.seed, "RNG seed");
  cmd->add_flag("--deterministic", c.deterministic,
                "single-threaded reductions, byte-identical outputs");
  cmd->add_option("--threads", c.threads, "worker threads (0 = auto)");
}

void finish_manifest(RunManifest& m, const Timer& t, const CommonOpts& c,
                     const std::string& main_out) {
  m.seed = c.seed;
  m.deterministic = c.deterministic;
  m.duration_seconds = t.seconds();
  write_manifest(m, main_out + ".manifest.json");
}

int cmd_generate(const std::string& kind, NodeId n, double p, const CommonOpts& c,
                 const std::string& out_opt) {
  Timer timer;
  const std::string out = resolve_out(out_opt, kind == "toy" ? "toy.edges" : "er.edges");
  DirectedGraph g = kind == "toy" ? generate_toy_graph() : generate_erdos_renyi(n, p, c.seed);
  save_edge_list_file(g, out);
  std::printf("generated %s graph: %u nodes, %zu edges -> %s\n", kind.c_str(), g.num_nodes(),
              g.num_edges(), out.c_str());

  RunManifest m;
  m.command = "generate";
  m.parameters = {{"kind", kind}, {"n", n}, {"p", p}};
  m.outputs = {out};
  finish_manifest(m, timer, c, out);
  return exit_ok;
}

int cmd_distances(const std::string& graph_path, const std::string& csv_path, NodeId max_nodes,
                  const CommonOpts& c, const std::string& out_opt) {
  Timer timer;
  const std::string out = resolve_out(out_opt, "distances.smd");
  DirectedGraph g = load_edge_list_file(graph_path);
  DistanceMatrix d = all_pairs_shortest_paths(g, max_nodes, c.effective_threads());
  save_distance_matrix(d, out);
  RunManifest m;
  m.command = "distances";
  m.parameters = {{"graph", graph_path}, {"max_nodes", max_nodes}};
  m.inputs = {graph_path};
  m.outputs = {out};
  if (!csv_path.empty()) {
    save_distance_matrix_csv(d, csv_path);
    m.outputs.push_back(csv_path);
    m.parameters["csv"] = csv_path;
  }

  const GraphStats stats = graph_stats(g, d);
  std::printf("nodes=%u edges=%zu infinite_ratio=%.6f reciprocity=%.6f\n", stats.n_nodes,
              stats.n_edges, stats.infinite_ratio, stats.reciprocity);
  std::printf("distance matrix -> %s\n", out.c_str());
  finish_manifest(m, timer, c, out);
  return exit_ok;
}

int cmd_sample(const std::string& graph_path, std::uint32_t B, const CommonOpts& c,
               const std::string& out_opt) {
  Timer timer;
  const std::string out = resolve_out(out_opt, "pairs.csv");
  DirectedGraph g = load_edge_list_file(graph_path);
  TrainingSet ts = build_training_set(g, SampleMode::kSampled, B, c.seed, kDefaultApspNodeLimit,
                                      c.effective_threads());
  save_pairs_csv(ts.sets, SampleMode::kSampled, c.seed, out);
  std::printf("sampled %zu close + %zu infinite pairs (B=%u) -> %s\n",
              ts.sets.close_pairs.size(), ts.sets.inf_pairs.size(), B, out.c_str());

  RunManifest m;
  m.command = "sample";
  m.parameters = {{"graph", graph_path}, {"B", B}};
  m.inputs = {graph_path};
  m.outputs = {out};
  finish_manifest(m, timer, c, out);
  return exit_ok;
}

struct EmbedOpts {
  std::string graph;
  std::string distances;
  std::string pairs;
  std::string mode = "full";
  std::uint32_t B = 10;
  int lambda = 2;
  int k = 2;
  double beta = 0.5;
  double lr = 0.0;  // 0 = pick by dataset size
  int epochs = 2000;
  int batches = 1;
  bool shuffle = false;
  bool natural_gradient = true;
  int eval_every = 25;
  int mc_samples = 1024;
  NodeId max_nodes = kDefaultApspNodeLimit;
};

int cmd_embed(const EmbedOpts& o, const CommonOpts& c, const std::string& out_opt) {
  Timer timer;
  const std::string out = resolve_out(out_opt, "model.txt");
  const std::string history = out + ".history.csv";
  DirectedGraph g = load_edge_list_file(o.graph);

  ManifoldConfig cfg;
  cfg.lambda = o.lambda;
  cfg.k = o.k;
  cfg.mc_samples = o.mc_samples;
  cfg.validate();

  TrainingSet ts;
  if (o.mode == "full") {
    if (!o.distances.empty()) {
      ts.mode = SampleMode::kFull;
      ts.matrix = load_distance_matrix(o.distances);
      if (ts.matrix.num_nodes() != g.num_nodes())
        throw validation_error("distance matrix node count does not match graph");
    } else {
      ts = build_training_set(g, SampleMode::kFull, 0, c.seed, o.max_nodes,
                              c.effective_threads());
    }
  } else if (o.mode == "sampled") {
    if (!o.pairs.empty()) {
      ts.mode = SampleMode::kSampled;
      ts.sets = load_pairs_csv(o.pairs);
    } else {
      ts = build_training_set(g, SampleMode::kSampled, o.B, c.seed, o.max_nodes,
                              c.effective_threads());
    }
  } else {
    throw validation_error("mode must be 'full' or 'sampled'");
  }

  TrainConfig tcfg;
  tcfg.beta = o.beta;
  tcfg.lr = o.lr > 0.0 ? o.lr : (g.num_nodes() <= 5000 ? 0.1 : 0.001);
  tcfg.epochs = o.epochs;
  tcfg.batches = o.batches;
  tcfg.shuffle = o.shuffle;
  tcfg.use_natural_gradient = o.natural_gradient;
  tcfg.seed = c.seed;
  tcfg.eval_every = o.eval_every;
  tcfg.threads = c.effective_threads();

  RunManifest m;
  m.command = "embed";
  m.parameters = {{"graph", o.graph},     {"mode", o.mode},
                  {"B", o.B},             {"lambda", o.lambda},
                  {"k", o.k},             {"beta", o.beta},
                  {"lr", tcfg.lr},        {"epochs", o.epochs},
                  {"batches", o.batches}, {"shuffle", o.shuffle},
                  {"natural_gradient", o.natural_gradient},
                  {"eval_every", o.eval_every}};
  m.inputs = {o.graph};
  if (!o.distances.empty()) m.inputs.push_back(o.distances);
  if (!o.pairs.empty()) m.inputs.push_back(o.pairs);

  EmbeddingModel model = init_model(g, cfg, c.seed);
  TrainReport report;
  try {
    report = train(g, ts, std::move(model), tcfg);
  } catch (const numeric_error&) {
    m.status = "failed";
    m.seed = c.seed;
    m.deterministic = c.deterministic;
    m.duration_seconds = timer.seconds();
    write_manifest(m, out + ".manifest.json");
    throw;
  }

  ModelFileMeta meta{tcfg.beta, c.seed, report.best_epoch};
  save_model(report.best_model, meta, out);
  {
    std::ofstream h(history);
    h.precision(17);
    h << "epoch,loss,pearson\n";
    std::size_t pi = 0;
    for (std::size_t e = 0; e < report.loss_history.size(); ++e) {
      h << (e + 1) << ',' << report.loss_history[e] << ',';
      if (pi < report.pearson_history.size() &&
          report.pearson_history[pi].first == static_cast<int>(e + 1)) {
        h << report.pearson_history[pi].second;
        ++pi;
      }
      h << '\n';
    }
  }
  std::printf("trained %d epochs; best epoch %d with pearson %.4f; final loss %.6g\n",
              o.epochs, report.best_epoch, report.best_pearson, report.final_loss);
  std::printf("model -> %s\nhistory -> %s\n", out.c_str(), history.c_str());

  m.outputs = {out, history};
  finish_manifest(m, timer, c, out);
  return exit_ok;
}

int cmd_eval(const std::string& model_path, const std::string& distances_path,
             const std::string& pairs_path, int bootstrap, double exponent, const CommonOpts& c,
             const std::string& out_opt) {
  Timer timer;
  const std::string out = resolve_out(out_opt, "eval.txt");
  auto [model, meta] = load_model(model_path);

  EvalOptions opts;
  opts.bootstrap = bootstrap;
  opts.seed = c.seed;
  opts.target_exponent = exponent;
  opts.threads = c.effective_threads();

  EvalReport report;
  PairValues pv;
  if (!distances_path.empty()) {
    DistanceMatrix d = load_distance_matrix(distances_path);
    if (d.num_nodes() != model.n)
      throw validation_error("model and distance matrix node counts differ");
    report = evaluate_model(model, d, opts);
    pv = build_pair_values(model, d, exponent, c.seed, opts.threads);
  } else if (!pairs_path.empty()) {
    SampleSets sets = load_pairs_csv(pairs_path);
    std::vector<TrainingPair> pairs = sets.close_pairs;
    pairs.insert(pairs.end(), sets.inf_pairs.begin(), sets.inf_pairs.end());
    report = evaluate_model(model, pairs, opts);
    pv = build_pair_values(model, pairs, exponent, c.seed, opts.threads);
  } else {
    throw validation_error("eval needs --distances or --pairs");
  }

  save_eval_report_txt(report, out);
  save_eval_report_csv(report, out + ".csv");
  save_pair_values_csv(pv, out + ".pairs.csv");
  std::printf("pearson=%.6f spearman=%.6f mi=%.6f+-%.6f n_pairs=%zu\n", report.pearson,
              report.spearman, report.mi_mean, report.mi_std, report.n_pairs);

  RunManifest m;
  m.command = "eval";
  m.parameters = {{"model", model_path},
                  {"distances", distances_path},
                  {"pairs", pairs_path},
                  {"bootstrap", bootstrap},
                  {"target_exponent", exponent}};
  m.inputs = {model_path};
  if (!distances_path.empty()) m.inputs.push_back(distances_path);
  if (!pairs_path.empty()) m.inputs.push_back(pairs_path);
  m.outputs = {out, out + ".csv", out + ".pairs.csv"};
  finish_manifest(m, timer, c, out);
  return exit_ok;
}

int cmd_export_hyperbolic(const std::string& model_path, const CommonOpts& c,
                          const std::string& out_opt) {
  Timer timer;
  const std::string out = resolve_out(out_opt, "hyperbolic.csv");
  auto [model, meta] = load_model(model_path);

  std::ofstream f(out);
  if (!f) throw validation_error("cannot write: " + out);
  f.precision(17);
  f << "node,dim,hp_x,hp_y,disc_x,disc_y,hyp_x,hyp_y,hyp_z\n";
  for (NodeId u = 0; u < model.n; ++u) {
    const auto coords = to_hyperbolic_models(model.point(u), model.cfg);
    for (std::size_t i = 0; i < coords.size(); ++i) {
      const auto& hc = coords[i];
      f << u << ',' << i << ',' << hc.hp_x << ',' << hc.hp_y << ',' << hc.disc_x << ','
        << hc.disc_y << ',' << hc.hyp.x << ',' << hc.hyp.y << ',' << hc.hyp.z << '\n';
    }
  }
  std::printf("hyperbolic coordinates for %u nodes -> %s\n", model.n, out.c_str());

  RunManifest m;
  m.command = "export-hyperbolic";
  m.parameters = {{"model", model_path}};
  m.inputs = {model_path};
  m.outputs = {out};
  finish_manifest(m, timer, c, out);
  return exit_ok;
}

int cmd_bourgain(const std::string& graph_path, NodeId max_nodes, const CommonOpts& c,
                 const std::string& out_opt) {
  Timer timer;
  const std::string out = resolve_out(out_opt, "bourgain.csv");
  const std::string report_path = out + ".report.txt";
  DirectedGraph g = load_edge_list_file(graph_path);
  DistanceMatrix d = all_pairs_shortest_paths(g, max_nodes, c.effective_threads());
  BourgainEmbedding emb = bourgain_embed(g, d, c.seed);
  BourgainReport rep = bourgain_distortion(emb, d);

  {
    std::ofstream f(out);
    if (!f) throw validation_error("cannot write: " + out);
    f << "node";
    for (int i = 0; i < emb.m; ++i) f << ",c" << i;
    f << '\n';
    for (NodeId u = 0; u < emb.n; ++u) {
      f << u;
      for (int i = 0; i < emb.m; ++i) f << ',' << emb.coord(u, i);
      f << '\n';
    }
  }
  {
    std::ofstream f(report_path);
    f.precision(17);
    f << "m=" << emb.m << '\n'
      << "finite_pairs=" << rep.finite_pairs << '\n'
      << "infinite_excluded=" << rep.infinite_excluded << '\n'
      << "bound_violations=" << rep.bound_violations << '\n'
      << "min_ratio=" << rep.min_ratio << '\n'
      << "max_ratio=" << rep.max_ratio << '\n'
      << "mean_ratio=" << rep.mean_ratio << '\n';
  }
  std::printf("bourgain m=%d; %zu finite pairs, %zu excluded, %zu bound violations\n", emb.m,
              rep.finite_pairs, rep.infinite_excluded, rep.bound_violations);

  RunManifest m;
  m.command = "bourgain";
  m.parameters = {{"graph", graph_path}, {"max_nodes", max_nodes}};
  m.inputs = {graph_path};
  m.outputs = {out, report_path};
  finish_manifest(m, timer, c, out);
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"statistical manifold embedding of directed graphs"};
  app.require_subcommand(1);

  CommonOpts common;
  std::string out;

  // generate
  auto* gen = app.add_subcommand("generate", "write a toy or Erdos-Renyi edge list");
  std::string gen_kind = "toy";
  NodeId gen_n = 50;
  double gen_p = 0.15;
  gen->add_option("kind", gen_kind, "toy | erdos-renyi")->required();
  gen->add_option("--n", gen_n, "node count (erdos-renyi)");
  gen->add_option("--p", gen_p, "edge probability (erdos-renyi)");
  gen->add_option("--out", out, "output edge list path");
  add_common(gen, common);

  // distances
  auto* dist = app.add_subcommand("distances", "all-pairs shortest paths to an SMD1 file");
  std::string graph_path, csv_path;
  NodeId max_nodes = kDefaultApspNodeLimit;
  dist->add_option("--graph", graph_path, "input edge list")->required();
  dist->add_option("--csv", csv_path, "also export the matrix as CSV");
  dist->add_option("--max-nodes", max_nodes, "dense matrix size limit");
  dist->add_option("--out", out, "output .smd path");
  add_common(dist, common);

  // sample
  auto* smp = app.add_subcommand("sample", "training pairs for the scalable variant");
  std::uint32_t B = 10;
  smp->add_option("--graph", graph_path, "input edge list")->required();
  smp->add_option("--B", B, "per-node sample budget");
  smp->add_option("--out", out, "output pairs CSV");
  add_common(smp, common);

  // embed
  auto* emb = app.add_subcommand("embed", "train the embedding");
  EmbedOpts eo;
  emb->add_option("--graph", eo.graph, "input edge list")->required();
  emb->add_option("--distances", eo.distances, "cached SMD1 matrix (full mode)");
  emb->add_option("--pairs", eo.pairs, "cached pairs CSV (sampled mode)");
  emb->add_option("--mode", eo.mode, "full | sampled");
  emb->add_option("--B", eo.B, "per-node sample budget (sampled mode)");
  emb->add_option("--lambda", eo.lambda, "exponential power shape (even)");
  emb->add_option("--k", eo.k, "embedding dimensions");
  emb->add_option("--beta", eo.beta, "target exponent");
  emb->add_option("--lr", eo.lr, "learning rate (0 = pick by size)");
  emb->add_option("--epochs", eo.epochs, "training epochs");
  emb->add_option("--batches", eo.batches, "batches per epoch");
  emb->add_flag("--shuffle", eo.shuffle, "shuffle pairs between epochs");
  emb->add_flag("--natural-gradient,!--no-natural-gradient", eo.natural_gradient,
                "metric-corrected gradients (default on)");
  emb->add_option("--eval-every", eo.eval_every, "epochs between checkpoint evaluations");
  emb->add_option("--mc-samples", eo.mc_samples, "Monte Carlo samples (lambda > 2)");
  emb->add_option("--max-nodes", eo.max_nodes, "dense matrix size limit");
  emb->add_option("--out", out, "output model path");
  add_common(emb, common);

  // eval
  auto* ev = app.add_subcommand("eval", "correlation / MI report for a model");
  std::string model_path, pairs_path, distances_path;
  int bootstrap = 40;
  double exponent = 1.0;
  ev->add_option("--model", model_path, "model file")->required();
  ev->add_option("--distances", distances_path, "SMD1 matrix");
  ev->add_option("--pairs", pairs_path, "pairs CSV");
  ev->add_option("--bootstrap", bootstrap, "MI bootstrap resamples");
  ev->add_option("--exponent", exponent, "evaluation target exponent");
  ev->add_option("--out", out, "output report path");
  add_common(ev, common);

  // export-hyperbolic
  auto* ex = app.add_subcommand("export-hyperbolic",
                                "half-plane / disc / hyperboloid coordinates per dimension");
  ex->add_option("--model", model_path, "model file")->required();
  ex->add_option("--out", out, "output CSV path");
  add_common(ex, common);

  // bourgain
  auto* bg = app.add_subcommand("bourgain", "random-subset L1 baseline with distortion report");
  bg->add_option("--graph", graph_path, "input edge list")->required();
  bg->add_option("--max-nodes", max_nodes, "dense matrix size limit");
  bg->add_option("--out", out, "output CSV path");
  add_common(bg, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : sme::exit_validation;
  }

  try {
    if (gen->parsed()) {
      if (gen_kind != "toy" && gen_kind != "erdos-renyi")
        throw sme::validation_error("kind must be toy or erdos-renyi");
      return cmd_generate(gen_kind, gen_n, gen_p, common, out);
    }
    if (dist->parsed()) return cmd_distances(graph_path, csv_path, max_nodes, common, out);
    if (smp->parsed()) return cmd_sample(graph_path, B, common, out);
    if (emb->parsed()) return cmd_embed(eo, common, out);
    if (ev->parsed())
      return cmd_eval(model_path, distances_path, pairs_path, bootstrap, exponent, common, out);
    if (ex->parsed()) return cmd_export_hyperbolic(model_path, common, out);
    if (bg->parsed()) return cmd_bourgain(graph_path, max_nodes, common, out);
  } catch (const sme::capacity_error& e) {
    std::fprintf(stderr, "capacity error: %s\n", e.what());
    return sme::exit_capacity;
  } catch (const sme::numeric_error& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return sme::exit_numeric;
  } catch (const sme::validation_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return sme::exit_validation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return sme::exit_validation;
  }
  return sme::exit_ok;
}
