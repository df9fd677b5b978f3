#pragma once

#include "dpgnn/autodiff.hpp"
#include "dpgnn/data.hpp"
#include "dpgnn/encoder.hpp"
#include "dpgnn/episodic.hpp"
#include "dpgnn/label_prop.hpp"
#include "dpgnn/metric.hpp"
#include "dpgnn/metrics.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace dpgnn {

enum class ModelKind { dpgnn, gcn, gcn_reweight, gcn_upsample };

std::string_view to_string(ModelKind kind);
// Throws InputError for an unknown name.
ModelKind parse_model_kind(std::string_view name);

struct TrainConfig {
  ModelKind model = ModelKind::dpgnn;
  int epochs = 1000;
  // Unset picks the per-model default, see effective_learning_rate.
  std::optional<double> learning_rate;
  // Rate for the distance-metric layer; unset means the model rate.
  std::optional<double> metric_learning_rate;
  double dropout = 0.5;
  double lambda1 = 10.0;
  double lambda2 = 1e-4;
  double eta = 3.0;
  int k = 2;
  std::uint64_t seed = 0;

  bool use_label_prop = true;
  bool use_ssl = true;
  bool use_distance_metric = true;

  Index hidden_dim = 256;  // d'
  Index metric_dim = 256;  // d''
  double weight_decay = 5e-4;  // first GCN layer only
  double metric_weight_decay = 0.0;
  // Validation is scored every eval_every epochs and after the last one.
  int eval_every = 1;
  // Copies per minority training node for gcn_upsample; 0 picks
  // round(largest class count / class count) per class.
  int upsample_factor = 0;
};

// Throws InputError for epochs <= 0, non-finite or negative weights, dropout
// outside [0, 1), k < 1, or non-positive widths.
void validate(const TrainConfig& cfg);

// cfg.learning_rate when set, else 1e-3 for dpgnn and 1e-2 for the GCN baselines.
double effective_learning_rate(const TrainConfig& cfg);

struct LossParts {
  ad::Tensor classification;
  ad::Tensor proto_separation;  // invalid when SSL is off
  ad::Tensor smoothing;         // invalid when SSL is off
};

// L = L_class + lambda1 * L_p + lambda2 * L_s. Parts that are switched off or
// weighted by zero are left out of the sum entirely. Throws NumericError if a
// present part is not finite.
ad::Tensor total_loss(const LossParts& parts, const TrainConfig& cfg);

struct DpgnnModel {
  std::vector<GcnLayer> encoder;
  std::optional<DistanceMetricLayer> metric;  // absent when use_distance_metric is off
};

DpgnnModel make_dpgnn_model(Index input_dim, int num_classes, const TrainConfig& cfg,
                            std::mt19937_64& rng);

// Constant inputs shared by every epoch of one run.
struct GraphInputs {
  const SparseGraph* graph = nullptr;
  NormalizedAdjacency adj;
  CsrMatrix features;
};

GraphInputs prepare_inputs(const Dataset& ds);

struct ForwardPass {
  LossParts parts;
  ad::Tensor loss;
  Index query_count = 0;  // rows averaged by the classification loss
};

// One episode's forward pass on `tape`, binding the model parameters into
// `binding` in a fixed order.
ForwardPass dpgnn_forward(DpgnnModel& model, const GraphInputs& in, const Episode& episode,
                          const TrainConfig& cfg, ad::Tape& tape, ad::ParameterBinding& binding,
                          bool training, std::mt19937_64& rng);

// Evaluation-mode predictions for `nodes` (aligned with it), with prototypes
// taken from all nodes whose merged label is >= 0.
std::vector<int> dpgnn_predict(const DpgnnModel& model, const GraphInputs& in,
                               std::span<const int> merged_labels, int num_classes,
                               std::span<const std::size_t> nodes);
// Same for every node.
std::vector<int> dpgnn_predict(const DpgnnModel& model, const GraphInputs& in,
                               std::span<const int> merged_labels, int num_classes);

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  double classification = 0.0;
  double proto_separation = 0.0;
  double smoothing = 0.0;
  Index query_count = 0;
  std::optional<double> val_f1_macro;
};

struct TrainResult {
  MetricsReport test;
  MetricsReport validation;  // at the selected epoch
  int best_epoch = 0;
  std::vector<EpochRecord> history;
  std::optional<PseudoLabelStats> pseudo;  // DPGNN with label propagation only
  std::vector<int> predictions;            // every node, at the selected epoch
  double seconds = 0.0;
};

// Dispatches on cfg.model. Throws NumericError (carrying the epoch) when the
// loss or a gradient stops being finite.
TrainResult train(const Dataset& ds, const Split& split, const TrainConfig& cfg);

// Plain, reweighted and upsampled GCN with C output channels.
TrainResult train_baseline(const Dataset& ds, const Split& split, const TrainConfig& cfg);

// Per-class loss weights |train| / n_c for the training nodes, in split order.
std::vector<double> reweight_weights(std::span<const int> labels,
                                     std::span<const std::size_t> train, int num_classes);

// Training rows after duplicating minority-class nodes.
std::vector<std::size_t> upsample_rows(std::span<const int> labels,
                                       std::span<const std::size_t> train, int num_classes,
                                       int factor);

}  // namespace dpgnn
