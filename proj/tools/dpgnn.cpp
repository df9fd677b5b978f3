// dpgnn command-line tool: experiments, sweeps, ablations and dataset helpers.

#include "dpgnn/data.hpp"
#include "dpgnn/error.hpp"
#include "dpgnn/experiment.hpp"
#include "dpgnn/graph.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace {

using dpgnn::ExperimentConfig;

// Flags shared by the experiment subcommands; unset flags leave the config
// file (or default) value alone.
struct ExperimentFlags {
  std::optional<std::string> config, dataset, model, out;
  std::optional<int> splits, epochs, k, threads, minority_classes;
  std::optional<std::uint64_t> seed;
  std::optional<double> lr, metric_lr, lambda1, lambda2, eta, dropout;
  std::vector<double> eta_grid;
  std::vector<std::size_t> majority_grid;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "JSON config file; flags override its values");
    app->add_option("--dataset", dataset, "dataset directory");
    app->add_option("--model", model, "dpgnn, gcn, gcn_reweight or gcn_upsample");
    app->add_option("--splits", splits, "number of seeded splits");
    app->add_option("--seed", seed, "master seed");
    app->add_option("--epochs", epochs, "training epochs per run");
    app->add_option("--lr", lr, "Adam learning rate (default 1e-3 for dpgnn, 1e-2 for baselines)");
    app->add_option("--metric-lr", metric_lr, "learning rate of the distance-metric layer");
    app->add_option("--lambda1", lambda1, "prototype separation weight");
    app->add_option("--lambda2", lambda2, "smoothing weight");
    app->add_option("--eta", eta, "pseudo-label TIG threshold");
    app->add_option("--k", k, "label propagation steps");
    app->add_option("--dropout", dropout, "dropout rate");
    app->add_option("--out", out, "JSON-lines output path");
    app->add_option("--threads", threads, "worker threads (capped by DPGNN_THREADS)");
    app->add_option("--minority-classes", minority_classes, "number of leading minority classes");
  }

  ExperimentConfig resolve() const {
    ExperimentConfig cfg;
    if (config) {
      std::ifstream in(*config);
      if (!in) throw dpgnn::InputError(*config, 0, "cannot open config file");
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(in);
      } catch (const nlohmann::json::exception& e) {
        throw dpgnn::InputError(*config, 0, e.what());
      }
      cfg = dpgnn::config_from_json(j);
    }
    if (dataset) cfg.dataset = *dataset;
    if (model) cfg.train.model = dpgnn::parse_model_kind(*model);
    if (splits) cfg.num_splits = *splits;
    if (seed) cfg.seed = *seed;
    if (epochs) cfg.train.epochs = *epochs;
    if (lr) cfg.train.learning_rate = *lr;
    if (metric_lr) cfg.train.metric_learning_rate = *metric_lr;
    if (lambda1) cfg.train.lambda1 = *lambda1;
    if (lambda2) cfg.train.lambda2 = *lambda2;
    if (eta) cfg.train.eta = *eta;
    if (k) cfg.train.k = *k;
    if (dropout) cfg.train.dropout = *dropout;
    if (out) cfg.out = *out;
    if (threads) cfg.threads = *threads;
    if (minority_classes) cfg.split.minority_classes = *minority_classes;
    if (!eta_grid.empty()) cfg.eta_grid = eta_grid;
    if (!majority_grid.empty()) cfg.majority_grid = majority_grid;
    if (cfg.dataset.empty()) throw dpgnn::InputError("no dataset given (--dataset or config)");
    return cfg;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prototype-based GNN for class-imbalanced node classification"};
  app.require_subcommand(1);

  ExperimentFlags run_flags, eta_flags, ratio_flags, ablate_flags;
  auto* run = app.add_subcommand("run", "train on seeded splits and summarize");
  run_flags.attach(run);
  auto* sweep_eta = app.add_subcommand("sweep-eta", "pseudo labels and F1 across eta");
  eta_flags.attach(sweep_eta);
  sweep_eta->add_option("--eta-grid", eta_flags.eta_grid, "eta values")->delimiter(',');
  auto* sweep_ratio = app.add_subcommand("sweep-ratio", "F1 across imbalance ratios");
  ratio_flags.attach(sweep_ratio);
  sweep_ratio->add_option("--majority-grid", ratio_flags.majority_grid, "majority train counts")
      ->delimiter(',');
  auto* ablate = app.add_subcommand("ablate", "component ablation against baselines");
  ablate_flags.attach(ablate);

  std::string homophily_dir;
  auto* homophily = app.add_subcommand("homophily", "edge homophily of a dataset");
  homophily->add_option("--dataset", homophily_dir, "dataset directory")->required();

  dpgnn::PlantedGraphConfig synth_cfg;
  std::size_t per_class = 100;
  int classes = 3;
  std::uint64_t synth_seed = 0;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "write a planted-partition dataset");
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--nodes-per-class", per_class, "nodes in every class");
  synth->add_option("--classes", classes, "number of classes");
  synth->add_option("--intra", synth_cfg.intra_edge_prob, "within-class edge probability");
  synth->add_option("--inter", synth_cfg.inter_edge_prob, "between-class edge probability");
  synth->add_option("--noise", synth_cfg.feature_noise, "feature noise standard deviation");
  synth->add_option("--noise-dims", synth_cfg.noise_dims, "extra pure-noise feature columns");
  synth->add_option("--seed", synth_seed, "random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (run->parsed()) return dpgnn::cmd_run(run_flags.resolve(), std::cout);
    if (sweep_eta->parsed()) return dpgnn::cmd_sweep_eta(eta_flags.resolve(), std::cout);
    if (sweep_ratio->parsed()) return dpgnn::cmd_sweep_ratio(ratio_flags.resolve(), std::cout);
    if (ablate->parsed()) return dpgnn::cmd_ablate(ablate_flags.resolve(), std::cout);
    if (homophily->parsed()) {
      dpgnn::Dataset ds = dpgnn::load_dataset(homophily_dir);
      std::cout << ds.name << ' ' << std::fixed << std::setprecision(4)
                << dpgnn::edge_homophily(ds.graph, ds.labels) << '\n';
      return 0;
    }
    if (synth->parsed()) {
      if (classes < 1) throw dpgnn::InputError("--classes must be positive");
      synth_cfg.nodes_per_class.assign(static_cast<std::size_t>(classes), per_class);
      std::mt19937_64 rng(synth_seed);
      dpgnn::save_dataset(dpgnn::synthesize_planted_graph(synth_cfg, rng), synth_out);
      return 0;
    }
  } catch (const dpgnn::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
