#include "dpgnn/error.hpp"
#include "dpgnn/experiment.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace dpgnn;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

ExperimentConfig tiny_config() {
  ExperimentConfig cfg;
  cfg.num_splits = 2;
  cfg.seed = 5;
  cfg.threads = 2;
  cfg.train.epochs = 15;
  cfg.train.hidden_dim = 8;
  cfg.train.metric_dim = 8;
  cfg.train.eta = 1.0;
  cfg.split.minority_classes = 1;
  cfg.split.minority_train = 2;
  cfg.split.majority_train = 5;
  cfg.split.val = 10;
  cfg.split.test = 20;
  return cfg;
}

Dataset three_class() {
  Dataset ds = dpgnn::testing::planted_dataset({20, 20, 20}, 0.3, 0.02, 0.5, 11);
  ds.name = "planted";
  return ds;
}

json strip_timing(json r) {
  r.erase("timing");
  return r;
}

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("config json round trip and unknown keys") {
  ExperimentConfig cfg = tiny_config();
  cfg.dataset = "some/dir";
  cfg.train.model = ModelKind::gcn_reweight;
  cfg.train.metric_learning_rate = 0.002;
  cfg.baselines = {ModelKind::gcn, ModelKind::gcn_upsample};
  cfg.eta_grid = {0.5, 2.0};
  cfg.sweep = SweepAxis::eta;
  json j = config_to_json(cfg);
  ExperimentConfig back = config_from_json(j);
  CHECK(config_to_json(back) == j);
  CHECK(back.train.metric_learning_rate == 0.002);

  CHECK_THROWS_AS(config_from_json(json{{"epochz", 3}}), InputError);
  CHECK_THROWS_AS(config_from_json(json{{"split", {{"vall", 3}}}}), InputError);
  CHECK_THROWS_AS(config_from_json(json{{"epochs", "many"}}), InputError);
  CHECK_THROWS_AS(config_from_json(json{{"model", "gat"}}), InputError);

  // values not mentioned keep the base
  ExperimentConfig partial = config_from_json(json{{"epochs", 7}}, cfg);
  CHECK(partial.train.epochs == 7);
  CHECK(partial.dataset == "some/dir");
}

TEST_CASE("experiment validation") {
  ExperimentConfig cfg = tiny_config();
  cfg.dataset = "x";
  CHECK_NOTHROW(validate(cfg));
  cfg.num_splits = 0;
  CHECK_THROWS_AS(validate(cfg), InputError);
  cfg = tiny_config();
  cfg.dataset = "x";
  cfg.eta_grid.clear();
  CHECK_THROWS_AS(validate(cfg), InputError);
}

TEST_CASE("dataset defaults") {
  CHECK(known_minority_classes("Cora") == 5);
  CHECK(known_minority_classes("CiteSeer") == 4);
  CHECK(known_minority_classes("pubmed") == 2);
  CHECK(known_minority_classes("Cora-ML") == 5);
  CHECK(known_minority_classes("twitch_pt") == 1);
  CHECK_FALSE(known_minority_classes("planted").has_value());
  CHECK(known_proportional_budget("Amazon-Computers") == 50u);
  CHECK(known_proportional_budget("photo") == 30u);
}

TEST_CASE("derived seeds are deterministic and distinct") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 100; ++i) {
    CHECK(derive_seed(9, i) == derive_seed(9, i));
    seen.insert(derive_seed(9, i));
  }
  CHECK(seen.size() == 100);
  CHECK(derive_seed(9, 0) != derive_seed(10, 0));
}

TEST_CASE("run_ordered delivers results in index order") {
  for (std::size_t workers : {1u, 4u}) {
    std::vector<std::size_t> order;
    std::atomic<int> active{0};
    run_ordered(
        37, workers, [](std::size_t i) { return json(i * i); },
        [&](std::size_t i, const json& r) {
          CHECK(active.fetch_add(1) == 0);
          CHECK(r.get<std::size_t>() == i * i);
          order.push_back(i);
          active.fetch_sub(1);
        });
    REQUIRE(order.size() == 37);
    for (std::size_t i = 0; i < 37; ++i) CHECK(order[i] == i);
  }
  CHECK(worker_count(3) == 3);
  CHECK(worker_count(0) >= 1);
}

TEST_CASE("records are reproducible apart from timing") {
  Dataset ds = three_class();
  ExperimentConfig cfg = tiny_config();
  auto a = run_records(ds, cfg);
  cfg.threads = 1;
  auto b = run_records(ds, cfg);
  REQUIRE(a.size() == 2);
  REQUIRE(b.size() == 2);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(strip_timing(a[i]) == strip_timing(b[i]));
  CHECK(a[0].at("status") == "ok");
  CHECK(a[0].at("split") == 0);
  CHECK(a[1].at("split") == 1);
  CHECK(a[0].at("train_counts") == json{2, 5, 5});
  CHECK(a[0].at("test").at("per_class_f1").size() == 3);
  CHECK(a[0].at("train_counts") == a[1].at("train_counts"));
}

TEST_CASE("summary agrees with the records") {
  Dataset ds = three_class();
  ExperimentConfig cfg = tiny_config();
  cfg.num_splits = 3;
  auto records = run_records(ds, cfg);
  auto rows = summarize(records, {"model"});
  REQUIRE(rows.size() == 1);
  double mean = 0.0;
  for (const auto& r : records) mean += r.at("test").at("f1_macro").get<double>() / 3.0;
  CHECK(rows[0].runs == 3);
  CHECK(rows[0].failed == 0);
  CHECK(std::abs(rows[0].f1_macro - mean) < 1e-12);
  double var = 0.0;
  for (const auto& r : records) {
    const double d = r.at("test").at("f1_macro").get<double>() - mean;
    var += d * d / 2.0;
  }
  CHECK(std::abs(rows[0].f1_macro_std - std::sqrt(var)) < 1e-12);
  std::ostringstream os;
  print_summary(os, rows, {"model"});
  CHECK(os.str().find("dpgnn") != std::string::npos);
}

TEST_CASE("failed runs are recorded, not thrown") {
  Dataset ds = three_class();
  ExperimentConfig cfg = tiny_config();
  cfg.train.learning_rate = 1e200;
  cfg.num_splits = 1;
  auto records = run_records(ds, cfg);
  REQUIRE(records.size() == 1);
  CHECK(records[0].at("status") == "failed");
  CHECK(records[0].contains("error"));
  auto rows = summarize(records, {"model"});
  CHECK(rows[0].failed == 1);
}

TEST_CASE("ablation variants") {
  Dataset ds = three_class();
  ExperimentConfig cfg = tiny_config();
  cfg.num_splits = 1;
  auto records = ablate_records(ds, cfg);
  std::vector<std::string> variants;
  for (const auto& r : records) variants.push_back(r.at("variant").get<std::string>());
  CHECK(variants == std::vector<std::string>{"full", "no_lp", "no_ssl", "no_lp_ssl", "gcn"});
  CHECK(records[0].at("config").at("use_label_prop") == true);
  CHECK(records[1].at("config").at("use_label_prop") == false);
  CHECK(records[2].at("config").at("use_ssl") == false);
  CHECK(records[1].at("pseudo").is_null());
  CHECK(records[4].at("model") == "gcn");
}

TEST_CASE("eta sweep: thresholds at or above C select nothing") {
  Dataset ds = three_class();
  ExperimentConfig cfg = tiny_config();
  cfg.num_splits = 1;
  cfg.eta_grid = {0.0, 3.0, 5.0};
  auto records = sweep_eta_records(ds, cfg);
  REQUIRE(records.size() == 3);
  CHECK(records[0].at("pseudo").at("count").get<std::size_t>() > 0);
  CHECK(records[1].at("pseudo").at("count") == 0);
  CHECK(records[2].at("pseudo").at("count") == 0);
  CHECK(records[2].at("pseudo").at("validation_accuracy").is_null());
  auto rows = summarize(records, {"sweep_eta"});
  CHECK(rows[0].pseudo_accuracy.has_value());
  CHECK_FALSE(rows[2].pseudo_accuracy.has_value());
  for (const auto& r : records) CHECK(r.at("config").at("use_ssl") == false);
}

TEST_CASE("ratio sweep writes one csv row per ratio and model") {
  Dataset ds = three_class();
  fs::path dir = fs::temp_directory_path() / "dpgnn_ratio_sweep";
  fs::remove_all(dir);
  fs::create_directories(dir);
  save_dataset(ds, dir / "data");

  ExperimentConfig cfg = tiny_config();
  cfg.dataset = (dir / "data").string();
  cfg.num_splits = 1;
  cfg.majority_grid = {2, 4, 6};
  cfg.out = (dir / "records.jsonl").string();
  std::ostringstream os;
  CHECK(cmd_sweep_ratio(cfg, os) == 0);

  std::ifstream csv(dir / "records.csv");
  std::string line;
  std::getline(csv, line);
  CHECK(line.rfind("imbalance_ratio,model,", 0) == 0);
  std::set<std::string> rows;
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    rows.insert(line.substr(0, line.find(',', line.find(',') + 1)));
  }
  CHECK(rows == std::set<std::string>{"1.0,dpgnn", "1.0,gcn", "2.0,dpgnn", "2.0,gcn", "3.0,dpgnn", "3.0,gcn"});

  std::ifstream jsonl(dir / "records.jsonl");
  std::size_t n = 0;
  while (std::getline(jsonl, line)) n += !line.empty() && json::parse(line).contains("imbalance_ratio");
  CHECK(n == 6);
  fs::remove_all(dir);
}

TEST_CASE("split modes") {
  Dataset ds = three_class();
  SplitSpec split_spec;
  split_spec.minority_classes = 1;
  split_spec.minority_train = 1;
  split_spec.majority_train = 3;
  split_spec.val = 6;
  split_spec.test = 12;
  Split s = make_split(ds, split_spec, 3);
  CHECK(s.train_counts == std::vector<std::size_t>{1, 3, 3});
  CHECK(make_split(ds, split_spec, 3).train == s.train);

  split_spec.mode = SplitMode::proportional;
  CHECK_THROWS_AS(make_split(ds, split_spec, 3), InputError);  // no budget known for this name
  split_spec.total_train = 9;
  CHECK(make_split(ds, split_spec, 3).train.size() == 9);
}

}  // TEST_SUITE
