#include "dpgnn/metrics.hpp"

#include "dpgnn/error.hpp"

#include <string>

namespace dpgnn {

MetricsReport compute_f1(std::span<const int> predictions, std::span<const int> truths,
                         int num_classes) {
  if (predictions.empty()) throw InputError("compute_f1: no predictions");
  if (predictions.size() != truths.size()) {
    throw InputError("compute_f1: " + std::to_string(predictions.size()) + " predictions vs " +
                     std::to_string(truths.size()) + " truths");
  }
  if (num_classes < 1) throw InputError("compute_f1: need at least one class");
  const std::size_t c_count = static_cast<std::size_t>(num_classes);

  MetricsReport r;
  r.num_classes = c_count;
  r.total = predictions.size();
  r.confusion.assign(c_count * c_count, 0);
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const int p = predictions[i];
    const int t = truths[i];
    if (p < 0 || p >= num_classes || t < 0 || t >= num_classes) {
      throw InputError("compute_f1: label outside [0, " + std::to_string(num_classes) +
                       ") at position " + std::to_string(i));
    }
    ++r.confusion[static_cast<std::size_t>(t) * c_count + static_cast<std::size_t>(p)];
    if (p == t) ++r.correct;
  }

  r.per_class_f1.assign(c_count, 0.0);
  double macro = 0.0;
  double weighted = 0.0;
  for (std::size_t c = 0; c < c_count; ++c) {
    std::size_t tp = r.confusion_at(c, c);
    std::size_t support = 0;
    std::size_t predicted = 0;
    for (std::size_t k = 0; k < c_count; ++k) {
      support += r.confusion_at(c, k);
      predicted += r.confusion_at(k, c);
    }
    const std::size_t denom = support + predicted;
    const double f1 = denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
    r.per_class_f1[c] = f1;
    macro += f1;
    weighted += f1 * static_cast<double>(support);
  }
  r.f1_macro = macro / static_cast<double>(c_count);
  r.f1_weighted = weighted / static_cast<double>(r.total);
  r.f1_micro = static_cast<double>(r.correct) / static_cast<double>(r.total);
  return r;
}

MetricsReport compute_f1_on(std::span<const int> predictions, std::span<const int> truths,
                            std::span<const std::size_t> nodes, int num_classes) {
  std::vector<int> p;
  std::vector<int> t;
  p.reserve(nodes.size());
  t.reserve(nodes.size());
  for (std::size_t v : nodes) {
    if (v >= predictions.size() || v >= truths.size()) {
      throw InputError("compute_f1_on: node " + std::to_string(v) + " out of range");
    }
    p.push_back(predictions[v]);
    t.push_back(truths[v]);
  }
  return compute_f1(p, t, num_classes);
}

}  // namespace dpgnn
