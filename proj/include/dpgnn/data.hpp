#pragma once

#include "dpgnn/graph.hpp"
#include "dpgnn/matrix.hpp"

#include <json.hpp>

#include <cstddef>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace dpgnn {

struct Dataset {
  std::string name;
  SparseGraph graph;
  Matrix features;          // n x d
  std::vector<int> labels;  // per node, in [0, num_classes)
  int num_classes = 0;

  std::size_t num_nodes() const { return graph.num_nodes(); }
  Index num_features() const { return features.cols(); }
};

// Throws InputError unless feature rows == n, labels in [0, C) and every class
// is non-empty.
void validate_dataset(const Dataset& ds);

// Directory layout:
//   edges.tsv     "u<TAB>v" per line, 0-based, '#' comments
//   features.csv  n lines of d comma-separated reals
//   labels.txt    one integer class per line
//   meta.json     optional {"name", "num_classes", "num_features", "num_nodes"}
// Errors name the offending file and line.
Dataset load_dataset(const std::filesystem::path& dir);
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
  std::vector<std::size_t> train_counts;  // per class
};

struct ImbalancedSplitConfig {
  int minority_classes = 0;  // the first m classes by index
  std::size_t minority_train = 2;
  std::size_t majority_train = 20;
  std::size_t val = 500;
  std::size_t test = 1000;
};

// Draws the per-class training quota, then validation and test uniformly from
// the remaining nodes. When fewer than val + test remain, both shrink in
// proportion to their requested sizes. Throws InputError when a class
// is too small for its quota.
Split make_imbalanced_split(const Dataset& ds, const ImbalancedSplitConfig& cfg,
                            std::mt19937_64& rng);

// Training nodes allocated in proportion to class frequency (largest remainder,
// at least one per class), for genuinely imbalanced datasets.
Split make_proportional_split(const Dataset& ds, std::size_t total_train, std::size_t val,
                              std::size_t test, std::mt19937_64& rng);

nlohmann::json split_to_json(const Split& s);
Split split_from_json(const nlohmann::json& j);
void save_split(const Split& s, const std::filesystem::path& path);
Split load_split(const std::filesystem::path& path);

// Stochastic block model with class-indicator features plus Gaussian noise.
struct PlantedGraphConfig {
  std::vector<std::size_t> nodes_per_class;
  double intra_edge_prob = 0.1;
  double inter_edge_prob = 0.01;
  double feature_noise = 0.1;
  // Extra pure-noise feature columns appended after the C indicator columns.
  std::size_t noise_dims = 0;
  std::string name = "planted";
};

Dataset synthesize_planted_graph(const PlantedGraphConfig& cfg, std::mt19937_64& rng);

}  // namespace dpgnn
