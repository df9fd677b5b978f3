#include "dpgnn/trainer.hpp"

#include "dpgnn/error.hpp"
#include "dpgnn/optim.hpp"
#include "dpgnn/ssl.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <mutex>
#include <numeric>

#ifdef __GLIBC__
#include <malloc.h>
#endif

namespace dpgnn {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::dpgnn: return "dpgnn";
    case ModelKind::gcn: return "gcn";
    case ModelKind::gcn_reweight: return "gcn_reweight";
    case ModelKind::gcn_upsample: return "gcn_upsample";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  for (ModelKind k : {ModelKind::dpgnn, ModelKind::gcn, ModelKind::gcn_reweight,
                      ModelKind::gcn_upsample}) {
    if (to_string(k) == name) return k;
  }
  throw InputError("unknown model '" + std::string(name) +
                   "' (expected dpgnn, gcn, gcn_reweight or gcn_upsample)");
}

double effective_learning_rate(const TrainConfig& cfg) {
  if (cfg.learning_rate) return *cfg.learning_rate;
  return cfg.model == ModelKind::dpgnn ? 1e-3 : 1e-2;
}

void validate(const TrainConfig& cfg) {
  auto non_negative = [](double v, const char* what) {
    if (!std::isfinite(v) || v < 0.0) {
      throw InputError(std::string(what) + " must be finite and non-negative");
    }
  };
  if (cfg.epochs <= 0) throw InputError("epochs must be positive");
  if (cfg.learning_rate && (!std::isfinite(*cfg.learning_rate) || *cfg.learning_rate <= 0.0)) {
    throw InputError("learning rate must be finite and positive");
  }
  if (cfg.metric_learning_rate &&
      (!std::isfinite(*cfg.metric_learning_rate) || *cfg.metric_learning_rate <= 0.0)) {
    throw InputError("metric learning rate must be finite and positive");
  }
  if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0)) throw InputError("dropout must lie in [0, 1)");
  non_negative(cfg.lambda1, "lambda1");
  non_negative(cfg.lambda2, "lambda2");
  non_negative(cfg.weight_decay, "weight decay");
  non_negative(cfg.metric_weight_decay, "metric weight decay");
  if (!std::isfinite(cfg.eta)) throw InputError("eta must be finite");
  if (cfg.k < 1) throw InputError("k must be at least 1");
  if (cfg.hidden_dim <= 0 || cfg.metric_dim <= 0) throw InputError("widths must be positive");
  if (cfg.eval_every <= 0) throw InputError("eval_every must be positive");
  if (cfg.upsample_factor < 0) throw InputError("upsample factor must be non-negative");
}

ad::Tensor total_loss(const LossParts& parts, const TrainConfig& cfg) {
  auto check = [](const ad::Tensor& t, const char* what) {
    if (!t.valid()) return;
    if (t.rows() != 1 || t.cols() != 1) throw ShapeError("total_loss", std::string(what) + " is not 1x1");
    if (!std::isfinite(t.scalar())) {
      throw NumericError(std::string(what) + " loss is not finite");
    }
  };
  if (!parts.classification.valid()) throw ShapeError("total_loss", "missing classification loss");
  check(parts.classification, "classification");
  check(parts.proto_separation, "prototype separation");
  check(parts.smoothing, "smoothing");

  std::vector<std::pair<ad::Tensor, double>> terms{{parts.classification, 1.0}};
  if (cfg.use_ssl) {
    if (parts.proto_separation.valid() && cfg.lambda1 != 0.0) {
      terms.emplace_back(parts.proto_separation, cfg.lambda1);
    }
    if (parts.smoothing.valid() && cfg.lambda2 != 0.0) {
      terms.emplace_back(parts.smoothing, cfg.lambda2);
    }
  }
  if (terms.size() == 1) return parts.classification;
  return ad::scalar_combine(terms);
}

DpgnnModel make_dpgnn_model(Index input_dim, int num_classes, const TrainConfig& cfg,
                            std::mt19937_64& rng) {
  EncoderConfig ec;
  ec.input_dim = input_dim;
  ec.hidden_dim = cfg.hidden_dim;
  ec.dropout = cfg.dropout;
  ec.first_layer_weight_decay = cfg.weight_decay;
  DpgnnModel model;
  model.encoder = make_gcn_layers(ec, rng);
  if (cfg.use_distance_metric) {
    model.metric = DistanceMetricLayer::glorot(cfg.hidden_dim, num_classes, cfg.metric_dim, rng,
                                               cfg.metric_weight_decay);
    model.metric->weight.learning_rate = cfg.metric_learning_rate;
    model.metric->bias.learning_rate = cfg.metric_learning_rate;
  }
  return model;
}

GraphInputs prepare_inputs(const Dataset& ds) {
  GraphInputs in;
  in.graph = &ds.graph;
  in.adj = normalize(ds.graph);
  in.features = CsrMatrix::from_dense(ds.features);
  return in;
}

ForwardPass dpgnn_forward(DpgnnModel& model, const GraphInputs& in, const Episode& episode,
                          const TrainConfig& cfg, ad::Tape& tape, ad::ParameterBinding& binding,
                          bool training, std::mt19937_64& rng) {
  ad::Tensor h = encode(in.adj, in.features, model.encoder, tape, binding, training, cfg.dropout, rng);
  ad::Tensor protos = compute_prototypes(h, episode.support);
  ad::Tensor h_query = ad::gather_rows(h, episode.query);

  ad::Tensor g_query, g_support, g_all;
  const bool need_all = cfg.use_ssl && cfg.lambda2 != 0.0;
  if (model.metric) {
    ad::Tensor w = binding.bind(tape, model.metric->weight);
    ad::Tensor b = binding.bind(tape, model.metric->bias);
    g_query = metric_embed(h_query, protos, w, b);
    g_support = metric_embed(protos, protos, w, b);
    if (need_all) g_all = metric_embed_factored(h, protos, w, b);
  } else {
    g_query = difference_embed(h_query, protos);
    g_support = difference_embed(protos, protos);
    if (need_all) g_all = difference_embed(h, protos);
  }

  ForwardPass out;
  ad::Tensor logits = ad::matmul_nt(g_query, g_support);
  out.query_count = logits.rows();
  out.parts.classification = classification_loss_from_logits(logits);
  if (cfg.use_ssl) {
    if (cfg.lambda1 != 0.0) out.parts.proto_separation = proto_separation_loss(protos);
    if (need_all) out.parts.smoothing = smoothing_loss(g_all, *in.graph);
  }
  out.loss = total_loss(out.parts, cfg);
  return out;
}

std::vector<int> dpgnn_predict(const DpgnnModel& model, const GraphInputs& in,
                               std::span<const int> merged_labels, int num_classes,
                               std::span<const std::size_t> nodes) {
  EncoderReadout readout(in.adj, in.features, model.encoder);
  const Matrix protos = readout.group_means(nodes_by_class(merged_labels, num_classes));
  const Matrix h = readout.rows(nodes);
  if (model.metric) return predict_nodes(h, protos, *model.metric);
  return predict_nodes(h, protos);
}

std::vector<int> dpgnn_predict(const DpgnnModel& model, const GraphInputs& in,
                               std::span<const int> merged_labels, int num_classes) {
  std::vector<std::size_t> all(in.adj.num_nodes());
  std::iota(all.begin(), all.end(), 0);
  return dpgnn_predict(model, in, merged_labels, num_classes, all);
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double scalar_or_zero(const ad::Tensor& t) { return t.valid() ? t.scalar() : 0.0; }

void check_split(const Dataset& ds, const Split& split) {
  validate_dataset(ds);
  for (const auto* part : {&split.train, &split.val, &split.test}) {
    for (std::size_t i : *part) {
      if (i >= ds.num_nodes()) {
        throw InputError("split references node " + std::to_string(i) + " outside the graph");
      }
    }
  }
  if (split.train.empty()) throw InputError("split has no training nodes");
}

// Labels every node that is labeled or pseudo-labeled, -1 elsewhere.
std::vector<int> merged_training_labels(const Dataset& ds, const Split& split,
                                        const TrainConfig& cfg, const GraphInputs& in,
                                        std::optional<PseudoLabelStats>& stats) {
  if (cfg.use_label_prop) {
    PropagationConfig pc;
    pc.k = cfg.k;
    pc.eta = cfg.eta;
    LabelSet ls = run_label_propagation(in.adj, ds.labels, split.train, ds.num_classes, pc);
    stats = pseudo_label_stats(ls.y_check, ds.labels, split.val);
    return hard_labels(ls.y_bar);
  }
  std::vector<int> merged(ds.num_nodes(), -1);
  for (std::size_t i : split.train) merged[i] = ds.labels[i];
  return merged;
}

// Keeps the parameters with the best validation F1-macro; ties keep the
// earlier epoch. Without validation nodes the latest offer wins.
template <class Model>
struct Selector {
  bool have = false;
  double best = -1.0;
  int epoch = 0;
  Model model;
  MetricsReport validation;

  void offer(int e, const Model& m, std::optional<MetricsReport> val) {
    if (have && val && !(val->f1_macro > best)) return;
    have = true;
    best = val ? val->f1_macro : 0.0;
    epoch = e;
    model = m;
    validation = val ? std::move(*val) : MetricsReport{};
  }
};

std::optional<MetricsReport> score_validation(const std::vector<int>& preds, const Dataset& ds,
                                              const Split& split) {
  if (split.val.empty()) return std::nullopt;
  std::vector<int> truth;
  truth.reserve(split.val.size());
  for (std::size_t i : split.val) truth.push_back(ds.labels[i]);
  return compute_f1(preds, truth, ds.num_classes);
}

bool evaluate_now(int epoch, const TrainConfig& cfg) {
  return epoch % cfg.eval_every == 0 || epoch == cfg.epochs;
}

[[noreturn]] void rethrow_with_epoch(const NumericError& e, int epoch) {
  throw NumericError(e.what(), epoch);
}

template <class Model>
TrainResult finish(Selector<Model>& sel, std::vector<int> predictions, const Dataset& ds,
                   const Split& split, TrainResult r) {
  r.best_epoch = sel.epoch;
  r.validation = std::move(sel.validation);
  r.predictions = std::move(predictions);
  if (!split.test.empty()) r.test = compute_f1_on(r.predictions, ds.labels, split.test, ds.num_classes);
  return r;
}

void tune_allocator() {
#ifdef __GLIBC__
  // Every epoch frees and reallocates the same large buffers. Keeping them in
  // the heap instead of returning them to the kernel avoids refaulting pages.
  static std::once_flag once;
  std::call_once(once, [] {
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
  });
#endif
}

TrainResult train_dpgnn(const Dataset& ds, const Split& split, const TrainConfig& cfg) {
  const auto start = Clock::now();
  TrainResult result;
  std::mt19937_64 rng(cfg.seed);
  GraphInputs in = prepare_inputs(ds);
  const std::vector<int> merged = merged_training_labels(ds, split, cfg, in, result.pseudo);

  DpgnnModel model = make_dpgnn_model(ds.num_features(), ds.num_classes, cfg, rng);
  AdamConfig ac;
  ac.learning_rate = effective_learning_rate(cfg);
  Adam adam(ac);
  Selector<DpgnnModel> sel;
  result.history.reserve(static_cast<std::size_t>(cfg.epochs));

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    try {
      Episode episode = sample_episode(merged, ds.num_classes, rng);
      ad::Tape tape;
      ad::ParameterBinding binding;
      ForwardPass fp = dpgnn_forward(model, in, episode, cfg, tape, binding, true, rng);
      rec.loss = fp.loss.scalar();
      rec.classification = fp.parts.classification.scalar();
      rec.proto_separation = scalar_or_zero(fp.parts.proto_separation);
      rec.smoothing = scalar_or_zero(fp.parts.smoothing);
      rec.query_count = fp.query_count;
      ad::Gradients grads = tape.backward(fp.loss);
      adam.step(binding.params(), binding.gradients(grads));
    } catch (const NumericError& e) {
      rethrow_with_epoch(e, epoch);
    }
    if (evaluate_now(epoch, cfg)) {
      auto val = score_validation(dpgnn_predict(model, in, merged, ds.num_classes, split.val),
                                  ds, split);
      if (val) rec.val_f1_macro = val->f1_macro;
      sel.offer(epoch, model, std::move(val));
    }
    result.history.push_back(rec);
  }
  std::vector<int> predictions = dpgnn_predict(sel.model, in, merged, ds.num_classes);
  result.seconds = elapsed(start);
  return finish(sel, std::move(predictions), ds, split, std::move(result));
}

}  // namespace

std::vector<double> reweight_weights(std::span<const int> labels,
                                     std::span<const std::size_t> train, int num_classes) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes), 0);
  for (std::size_t i : train) ++counts[static_cast<std::size_t>(labels[i])];
  std::vector<double> w;
  w.reserve(train.size());
  for (std::size_t i : train) {
    w.push_back(static_cast<double>(train.size()) /
                static_cast<double>(counts[static_cast<std::size_t>(labels[i])]));
  }
  return w;
}

std::vector<std::size_t> upsample_rows(std::span<const int> labels,
                                       std::span<const std::size_t> train, int num_classes,
                                       int factor) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes), 0);
  for (std::size_t i : train) ++counts[static_cast<std::size_t>(labels[i])];
  const std::size_t largest = *std::max_element(counts.begin(), counts.end());
  std::vector<std::size_t> rows;
  for (std::size_t i : train) {
    const std::size_t n_c = counts[static_cast<std::size_t>(labels[i])];
    std::size_t copies = 1;
    if (n_c < largest) {
      copies = factor > 0 ? static_cast<std::size_t>(factor)
                          : std::max<std::size_t>(
                                1, static_cast<std::size_t>(std::lround(
                                       static_cast<double>(largest) / static_cast<double>(n_c))));
    }
    rows.insert(rows.end(), copies, i);
  }
  return rows;
}

TrainResult train_baseline(const Dataset& ds, const Split& split, const TrainConfig& cfg) {
  validate(cfg);
  check_split(ds, split);
  if (cfg.model == ModelKind::dpgnn) throw InputError("train_baseline needs a GCN model kind");
  tune_allocator();
  const auto start = Clock::now();
  TrainResult result;
  std::mt19937_64 rng(cfg.seed);
  GraphInputs in = prepare_inputs(ds);

  EncoderConfig ec;
  ec.input_dim = ds.num_features();
  ec.hidden_dim = cfg.hidden_dim;
  ec.output_dim = ds.num_classes;
  ec.dropout = cfg.dropout;
  ec.first_layer_weight_decay = cfg.weight_decay;
  std::vector<GcnLayer> layers = make_gcn_layers(ec, rng);

  std::vector<std::size_t> rows(split.train.begin(), split.train.end());
  std::vector<double> weights;
  if (cfg.model == ModelKind::gcn_reweight) {
    weights = reweight_weights(ds.labels, split.train, ds.num_classes);
  } else if (cfg.model == ModelKind::gcn_upsample) {
    rows = upsample_rows(ds.labels, split.train, ds.num_classes, cfg.upsample_factor);
  }
  std::vector<int> targets;
  targets.reserve(rows.size());
  for (std::size_t i : rows) targets.push_back(ds.labels[i]);

  AdamConfig ac;
  ac.learning_rate = effective_learning_rate(cfg);
  Adam adam(ac);
  Selector<std::vector<GcnLayer>> sel;
  result.history.reserve(static_cast<std::size_t>(cfg.epochs));

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    try {
      ad::Tape tape;
      ad::ParameterBinding binding;
      ad::Tensor h = encode(in.adj, in.features, layers, tape, binding, true, cfg.dropout, rng);
      ad::Tensor loss = ad::softmax_cross_entropy(ad::gather_rows(h, rows), targets, weights);
      if (!std::isfinite(loss.scalar())) throw NumericError("classification loss is not finite");
      rec.loss = rec.classification = loss.scalar();
      rec.query_count = static_cast<Index>(rows.size());
      ad::Gradients grads = tape.backward(loss);
      adam.step(binding.params(), binding.gradients(grads));
    } catch (const NumericError& e) {
      rethrow_with_epoch(e, epoch);
    }
    if (evaluate_now(epoch, cfg)) {
      EncoderReadout readout(in.adj, in.features, layers);
      auto val = score_validation(argmax_rows(readout.rows(split.val)), ds, split);
      if (val) rec.val_f1_macro = val->f1_macro;
      sel.offer(epoch, layers, std::move(val));
    }
    result.history.push_back(rec);
  }
  std::vector<int> predictions =
      argmax_rows(EncoderReadout(in.adj, in.features, sel.model).all());
  result.seconds = elapsed(start);
  return finish(sel, std::move(predictions), ds, split, std::move(result));
}

TrainResult train(const Dataset& ds, const Split& split, const TrainConfig& cfg) {
  tune_allocator();
  if (cfg.model != ModelKind::dpgnn) return train_baseline(ds, split, cfg);
  validate(cfg);
  check_split(ds, split);
  return train_dpgnn(ds, split, cfg);
}

}  // namespace dpgnn
