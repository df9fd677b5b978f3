#pragma once

#include "dpgnn/autodiff.hpp"

#include <cstddef>
#include <random>
#include <span>
#include <vector>

namespace dpgnn {

// One training episode, indexed by class.
//   query[c]   - the single held-out node of class c
//   support[c] - the remaining available nodes of class c, ascending
// A class with exactly one available node uses it as both query and support.
struct Episode {
  std::vector<std::vector<std::size_t>> support;
  std::vector<std::size_t> query;

  int num_classes() const { return static_cast<int>(query.size()); }
};

// Groups nodes by label; labels < 0 mark nodes that are unavailable.
std::vector<std::vector<std::size_t>> nodes_by_class(std::span<const int> labels, int num_classes);

// Draws one query per class uniformly from the available nodes.
// Throws InputError naming the first class with no available node.
Episode sample_episode(std::span<const int> labels, int num_classes, std::mt19937_64& rng);

// Row c is the mean of h over groups[c] (differentiable; every member row
// receives 1/|group| of the upstream gradient). Throws InputError for an empty
// group and ShapeError for an index outside h.
ad::Tensor compute_prototypes(const ad::Tensor& h, const std::vector<std::vector<std::size_t>>& groups);

}  // namespace dpgnn
