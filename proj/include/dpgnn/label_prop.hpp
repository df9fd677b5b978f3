#pragma once

#include "dpgnn/graph.hpp"
#include "dpgnn/matrix.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace dpgnn {

struct PropagationConfig {
  int k = 2;         // power-iteration steps
  double eta = 3.0;  // TIG threshold
};

// All n x C label matrices of one propagation run.
struct LabelSet {
  Matrix y;                   // one-hot on labeled rows, zero elsewhere
  std::vector<char> labeled;  // node in the labeled training set
  Matrix y_tilde;             // class-balanced reweighting of y
  Matrix y_hat;               // Â^k y_tilde
  std::vector<double> tig;    // topological information gain per node
  Matrix y_check;             // hard pseudo labels (unlabeled rows only)
  Matrix y_bar;               // y on labeled rows, y_check elsewhere

  int num_classes() const { return static_cast<int>(y.cols()); }
};

// One-hot Y and the labeled mask for the given training nodes.
// Throws InputError for an out-of-range node or label.
LabelSet make_label_set(std::span<const int> labels, std::span<const std::size_t> train_nodes,
                        int num_classes);

// Y~_i = gamma_i Y_i with gamma_i = |V_l| / |labeled nodes of class(i)|.
// Throws InputError when a class has no labeled node.
Matrix reweight_labels(const Matrix& y, std::span<const char> labeled);

// Â^k Y~ via k sparse products. Throws InputError for k < 1.
Matrix propagate(const NormalizedAdjacency& adj, const Matrix& y_tilde, int k);

// t_i = (max_i - (sum_i - max_i)/(C-1)) / (sum_i / C); rows summing to zero get 0.
// Throws InputError for C < 2.
std::vector<double> tig_scores(const Matrix& y_hat);

// One-hot at argmax (lowest index on ties) for unlabeled rows with t_i > eta.
Matrix threshold_labels(const Matrix& y_hat, std::span<const double> tig, double eta,
                        std::span<const char> labeled);

Matrix merge_labels(const Matrix& y, const Matrix& y_check, std::span<const char> labeled);

// Runs reweight -> propagate -> tig -> threshold -> merge.
LabelSet run_label_propagation(const NormalizedAdjacency& adj, std::span<const int> labels,
                               std::span<const std::size_t> train_nodes, int num_classes,
                               const PropagationConfig& cfg);

// Class index of every one-hot row, -1 for zero rows.
std::vector<int> hard_labels(const Matrix& rows);

struct PseudoLabelStats {
  std::size_t count = 0;              // pseudo-labeled nodes overall
  std::size_t validation_count = 0;   // pseudo-labeled validation nodes
  std::size_t validation_correct = 0;
  // validation_correct / validation_count, 0 when nothing was labeled.
  double validation_accuracy = 0.0;
};

PseudoLabelStats pseudo_label_stats(const Matrix& y_check, std::span<const int> truth,
                                    std::span<const std::size_t> validation_nodes);

}  // namespace dpgnn
