#pragma once

// Multi-split experiment driver behind the command-line tool: configuration,
// seeded splits, a worker pool with an order-preserving sink, and the run,
// eta-sweep, imbalance-ratio-sweep and ablation commands.

#include "dpgnn/data.hpp"
#include "dpgnn/trainer.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dpgnn {

enum class SplitMode { automatic, imbalanced, proportional };
enum class SweepAxis { none, imbalance_ratio, eta };

std::string_view to_string(SplitMode mode);
std::string_view to_string(SweepAxis axis);
SplitMode parse_split_mode(std::string_view name);
SweepAxis parse_sweep_axis(std::string_view name);

struct SplitSpec {
  // automatic: proportional for datasets with a known proportional budget,
  // imbalanced otherwise.
  SplitMode mode = SplitMode::automatic;
  std::optional<int> minority_classes;  // default looked up by dataset name
  std::size_t minority_train = 2;
  std::size_t majority_train = 20;
  std::optional<std::size_t> total_train;  // proportional mode
  std::size_t val = 500;
  std::size_t test = 1000;
};

struct ExperimentConfig {
  std::string dataset;  // dataset directory
  TrainConfig train;
  std::vector<ModelKind> baselines{ModelKind::gcn};  // compared in sweeps and ablations
  int num_splits = 20;
  std::uint64_t seed = 0;
  SplitSpec split;
  SweepAxis sweep = SweepAxis::none;
  std::vector<double> eta_grid{0, 1, 2, 3, 4, 5, 6, 7};
  std::vector<std::size_t> majority_grid{2, 4, 8, 12, 16, 20, 30, 40};
  // JSON-lines records go here; sweeps also write <stem>.csv next to it.
  std::string out;
  int history_stride = 10;  // keep every n-th epoch in records
  int threads = 0;          // 0 = available parallelism
};

// Overlays the keys of `j` onto `base`. Unknown keys, wrong types and invalid
// values raise InputError naming the key.
ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig base = {});
nlohmann::json config_to_json(const ExperimentConfig& cfg);
nlohmann::json train_config_to_json(const TrainConfig& cfg);
void validate(const ExperimentConfig& cfg);

// Minority-class count of the imbalanced protocol for known dataset names
// (case and punctuation insensitive), e.g. "Cora" -> 5.
std::optional<int> known_minority_classes(std::string_view dataset_name);
// Training-node budget of the proportional protocol, e.g. "Amazon Photo" -> 30.
std::optional<std::size_t> known_proportional_budget(std::string_view dataset_name);

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

// Split for one seed under `split_spec`. Throws InputError when the dataset name has
// no known default and `split_spec` leaves it open.
Split make_split(const Dataset& ds, const SplitSpec& split_spec, std::uint64_t seed);

// min(requested or hardware concurrency, DPGNN_THREADS), at least 1.
std::size_t worker_count(int requested);

// Runs job(i) for i in [0, count) on `workers` threads and hands each result
// to `sink` in index order, one call at a time.
void run_ordered(std::size_t count, std::size_t workers,
                 const std::function<nlohmann::json(std::size_t)>& job,
                 const std::function<void(std::size_t, const nlohmann::json&)>& sink);

// One training run, already bound to a split.
struct RunSpec {
  nlohmann::json tags;  // variant / ratio / eta labels copied into the record
  TrainConfig train;
  SplitSpec split;
  int split_index = 0;
};

// Trains and returns the record; training errors produce a "failed" record
// instead of throwing.
nlohmann::json execute_run(const Dataset& ds, const RunSpec& run, const ExperimentConfig& cfg);

// Mean and sample standard deviation of the test scores of successful
// records, grouped by `keys` (in first-seen order).
struct SummaryRow {
  nlohmann::json group;
  std::size_t runs = 0;
  std::size_t failed = 0;
  double f1_macro = 0.0, f1_macro_std = 0.0;
  double f1_weighted = 0.0, f1_weighted_std = 0.0;
  double f1_micro = 0.0, f1_micro_std = 0.0;
  std::optional<double> pseudo_count, pseudo_accuracy;
};
std::vector<SummaryRow> summarize(const std::vector<nlohmann::json>& records,
                                  const std::vector<std::string>& keys);
void print_summary(std::ostream& os, const std::vector<SummaryRow>& rows,
                   const std::vector<std::string>& keys);

// Commands. Each loads cfg.dataset, prints a summary table to `os`, writes
// records to cfg.out when set and returns the process exit code: 0, or 1
// when no run succeeded. Failed runs are marked in the records and summary.
int cmd_run(const ExperimentConfig& cfg, std::ostream& os);
int cmd_sweep_eta(const ExperimentConfig& cfg, std::ostream& os);
int cmd_sweep_ratio(const ExperimentConfig& cfg, std::ostream& os);
int cmd_ablate(const ExperimentConfig& cfg, std::ostream& os);

// Same commands on an in-memory dataset; records are also returned.
std::vector<nlohmann::json> run_records(const Dataset& ds, const ExperimentConfig& cfg);
std::vector<nlohmann::json> sweep_eta_records(const Dataset& ds, const ExperimentConfig& cfg);
std::vector<nlohmann::json> sweep_ratio_records(const Dataset& ds, const ExperimentConfig& cfg);
std::vector<nlohmann::json> ablate_records(const Dataset& ds, const ExperimentConfig& cfg);

}  // namespace dpgnn
