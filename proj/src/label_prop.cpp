#include "dpgnn/label_prop.hpp"

#include "dpgnn/error.hpp"

#include <string>

namespace dpgnn {

LabelSet make_label_set(std::span<const int> labels, std::span<const std::size_t> train_nodes,
                        int num_classes) {
  LabelSet ls;
  const Index n = static_cast<Index>(labels.size());
  ls.y = Matrix::Zero(n, num_classes);
  ls.labeled.assign(labels.size(), 0);
  for (std::size_t i : train_nodes) {
    if (static_cast<Index>(i) >= n) {
      throw InputError("training node " + std::to_string(i) + " outside " + std::to_string(n) +
                       " nodes");
    }
    const int c = labels[i];
    if (c < 0 || c >= num_classes) {
      throw InputError("training node " + std::to_string(i) + " has label " + std::to_string(c));
    }
    ls.y(static_cast<Index>(i), c) = 1.0;
    ls.labeled[i] = 1;
  }
  return ls;
}

Matrix reweight_labels(const Matrix& y, std::span<const char> labeled) {
  Eigen::VectorXd per_class = Eigen::VectorXd::Zero(y.cols());
  double total = 0.0;
  for (Index i = 0; i < y.rows(); ++i) {
    if (!labeled[static_cast<std::size_t>(i)]) continue;
    per_class += y.row(i).transpose();
    total += 1.0;
  }
  for (Index c = 0; c < y.cols(); ++c) {
    if (per_class(c) == 0.0) {
      throw InputError("reweight_labels: class " + std::to_string(c) + " has no labeled node");
    }
  }
  Matrix out = Matrix::Zero(y.rows(), y.cols());
  for (Index i = 0; i < y.rows(); ++i) {
    if (!labeled[static_cast<std::size_t>(i)]) continue;
    Index c = 0;
    y.row(i).maxCoeff(&c);
    out(i, c) = total / per_class(c);
  }
  return out;
}

Matrix propagate(const NormalizedAdjacency& adj, const Matrix& y_tilde, int k) {
  if (k < 1) throw InputError("propagate: k must be at least 1, got " + std::to_string(k));
  Matrix y = y_tilde;
  for (int step = 0; step < k; ++step) y = spmm(adj, y);
  return y;
}

std::vector<double> tig_scores(const Matrix& y_hat) {
  const Index c = y_hat.cols();
  if (c < 2) throw InputError("tig_scores: need at least 2 classes");
  std::vector<double> t(static_cast<std::size_t>(y_hat.rows()), 0.0);
  for (Index i = 0; i < y_hat.rows(); ++i) {
    const double sum = y_hat.row(i).sum();
    if (sum == 0.0) continue;
    const double top = y_hat.row(i).maxCoeff();
    const double rest_mean = (sum - top) / static_cast<double>(c - 1);
    // divide by sum first: a row with one nonzero class then scores exactly C
    t[static_cast<std::size_t>(i)] = (top - rest_mean) / sum * static_cast<double>(c);
  }
  return t;
}

Matrix threshold_labels(const Matrix& y_hat, std::span<const double> tig, double eta,
                        std::span<const char> labeled) {
  Matrix out = Matrix::Zero(y_hat.rows(), y_hat.cols());
  for (Index i = 0; i < y_hat.rows(); ++i) {
    const std::size_t u = static_cast<std::size_t>(i);
    if (labeled[u] || !(tig[u] > eta)) continue;
    Index best = 0;
    for (Index c = 1; c < y_hat.cols(); ++c) {
      if (y_hat(i, c) > y_hat(i, best)) best = c;
    }
    out(i, best) = 1.0;
  }
  return out;
}

Matrix merge_labels(const Matrix& y, const Matrix& y_check, std::span<const char> labeled) {
  Matrix out = y_check;
  for (Index i = 0; i < y.rows(); ++i) {
    if (labeled[static_cast<std::size_t>(i)]) out.row(i) = y.row(i);
  }
  return out;
}

LabelSet run_label_propagation(const NormalizedAdjacency& adj, std::span<const int> labels,
                               std::span<const std::size_t> train_nodes, int num_classes,
                               const PropagationConfig& cfg) {
  LabelSet ls = make_label_set(labels, train_nodes, num_classes);
  ls.y_tilde = reweight_labels(ls.y, ls.labeled);
  ls.y_hat = propagate(adj, ls.y_tilde, cfg.k);
  ls.tig = tig_scores(ls.y_hat);
  ls.y_check = threshold_labels(ls.y_hat, ls.tig, cfg.eta, ls.labeled);
  ls.y_bar = merge_labels(ls.y, ls.y_check, ls.labeled);
  return ls;
}

std::vector<int> hard_labels(const Matrix& rows) {
  std::vector<int> out(static_cast<std::size_t>(rows.rows()), -1);
  for (Index i = 0; i < rows.rows(); ++i) {
    for (Index c = 0; c < rows.cols(); ++c) {
      if (rows(i, c) != 0.0) {
        out[static_cast<std::size_t>(i)] = static_cast<int>(c);
        break;
      }
    }
  }
  return out;
}

PseudoLabelStats pseudo_label_stats(const Matrix& y_check, std::span<const int> truth,
                                    std::span<const std::size_t> validation_nodes) {
  PseudoLabelStats stats;
  const std::vector<int> pseudo = hard_labels(y_check);
  for (int p : pseudo) stats.count += p >= 0 ? 1 : 0;
  for (std::size_t v : validation_nodes) {
    if (pseudo[v] < 0) continue;
    ++stats.validation_count;
    if (pseudo[v] == truth[v]) ++stats.validation_correct;
  }
  if (stats.validation_count > 0) {
    stats.validation_accuracy =
        static_cast<double>(stats.validation_correct) / static_cast<double>(stats.validation_count);
  }
  return stats;
}

}  // namespace dpgnn
