#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dpgnn {

struct MetricsReport {
  double f1_macro = 0.0;
  double f1_weighted = 0.0;
  double f1_micro = 0.0;
  std::vector<double> per_class_f1;
  // confusion[truth * C + predicted]
  std::vector<std::size_t> confusion;
  std::size_t num_classes = 0;
  std::size_t total = 0;
  std::size_t correct = 0;

  std::size_t confusion_at(std::size_t truth, std::size_t predicted) const {
    return confusion[truth * num_classes + predicted];
  }
};

// Per-class F1 from the confusion counts; a class with no true and no
// predicted members scores 0. Macro is the plain mean, weighted uses class
// support, micro is global (equals accuracy). Throws InputError on empty or
// mismatched input and on labels outside [0, C).
MetricsReport compute_f1(std::span<const int> predictions, std::span<const int> truths,
                         int num_classes);

// Restricts both label vectors to the listed nodes before scoring.
MetricsReport compute_f1_on(std::span<const int> predictions, std::span<const int> truths,
                            std::span<const std::size_t> nodes, int num_classes);

}  // namespace dpgnn
