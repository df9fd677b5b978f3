#include "dpgnn/episodic.hpp"

#include "dpgnn/error.hpp"

namespace dpgnn {

std::vector<std::vector<std::size_t>> nodes_by_class(std::span<const int> labels, int num_classes) {
  std::vector<std::vector<std::size_t>> groups(static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) continue;
    if (labels[i] >= num_classes) {
      throw InputError("node " + std::to_string(i) + " has label " + std::to_string(labels[i]) +
                       " outside [0, " + std::to_string(num_classes) + ")");
    }
    groups[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  return groups;
}

Episode sample_episode(std::span<const int> labels, int num_classes, std::mt19937_64& rng) {
  auto groups = nodes_by_class(labels, num_classes);
  Episode ep;
  ep.support.resize(groups.size());
  ep.query.resize(groups.size());
  for (std::size_t c = 0; c < groups.size(); ++c) {
    const auto& members = groups[c];
    if (members.empty()) {
      throw InputError("class " + std::to_string(c) + " has no labeled or pseudo-labeled node");
    }
    std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
    const std::size_t q = pick(rng);
    ep.query[c] = members[q];
    if (members.size() == 1) {
      ep.support[c] = members;
      continue;
    }
    ep.support[c].reserve(members.size() - 1);
    for (std::size_t i = 0; i < members.size(); ++i) {
      if (i != q) ep.support[c].push_back(members[i]);
    }
  }
  return ep;
}

ad::Tensor compute_prototypes(const ad::Tensor& h, const std::vector<std::vector<std::size_t>>& groups) {
  if (!h.valid()) throw ShapeError("compute_prototypes", "uninitialised tensor");
  const Index n = h.rows();
  Matrix out = Matrix::Zero(static_cast<Index>(groups.size()), h.cols());
  for (std::size_t c = 0; c < groups.size(); ++c) {
    if (groups[c].empty()) {
      throw InputError("compute_prototypes: class " + std::to_string(c) + " has an empty support set");
    }
    for (std::size_t i : groups[c]) {
      if (static_cast<Index>(i) >= n) {
        throw ShapeError("compute_prototypes", "support node " + std::to_string(i) +
                                                   " outside " + std::to_string(n) + " rows");
      }
      out.row(static_cast<Index>(c)) += h.value().row(static_cast<Index>(i));
    }
    out.row(static_cast<Index>(c)) /= static_cast<double>(groups[c].size());
  }
  return h.tape()->record("compute_prototypes", std::move(out), {h},
                          [h, groups](const Matrix& g, ad::GradSink& s) {
                            Matrix grad = Matrix::Zero(h.rows(), h.cols());
                            for (std::size_t c = 0; c < groups.size(); ++c) {
                              const double inv = 1.0 / static_cast<double>(groups[c].size());
                              for (std::size_t i : groups[c]) {
                                grad.row(static_cast<Index>(i)) += inv * g.row(static_cast<Index>(c));
                              }
                            }
                            s.add(h, grad);
                          });
}

}  // namespace dpgnn
