#include "dpgnn/experiment.hpp"

#include "dpgnn/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace dpgnn {

using nlohmann::json;

std::string_view to_string(SplitMode mode) {
  switch (mode) {
    case SplitMode::automatic: return "auto";
    case SplitMode::imbalanced: return "imbalanced";
    case SplitMode::proportional: return "proportional";
  }
  return "unknown";
}

std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::none: return "none";
    case SweepAxis::imbalance_ratio: return "imbalance_ratio";
    case SweepAxis::eta: return "eta";
  }
  return "unknown";
}

SplitMode parse_split_mode(std::string_view name) {
  for (SplitMode m : {SplitMode::automatic, SplitMode::imbalanced, SplitMode::proportional}) {
    if (to_string(m) == name) return m;
  }
  throw InputError("unknown split mode '" + std::string(name) +
                   "' (expected auto, imbalanced or proportional)");
}

SweepAxis parse_sweep_axis(std::string_view name) {
  for (SweepAxis a : {SweepAxis::none, SweepAxis::imbalance_ratio, SweepAxis::eta}) {
    if (to_string(a) == name) return a;
  }
  throw InputError("unknown sweep axis '" + std::string(name) +
                   "' (expected none, imbalance_ratio or eta)");
}

// ---------------------------------------------------------------------------
// Configuration

namespace {

template <class T>
T get_key(const json& j, const std::string& key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InputError("config key '" + key + "': " + e.what());
  }
}

json split_to_config(const SplitSpec& s) {
  json j = {{"mode", to_string(s.mode)},
            {"minority_train", s.minority_train},
            {"majority_train", s.majority_train},
            {"val", s.val},
            {"test", s.test}};
  j["minority_classes"] = s.minority_classes ? json(*s.minority_classes) : json(nullptr);
  j["total_train"] = s.total_train ? json(*s.total_train) : json(nullptr);
  return j;
}

SplitSpec split_from_config(const json& j, SplitSpec s) {
  if (!j.is_object()) throw InputError("config key 'split' must be an object");
  for (const auto& [key, value] : j.items()) {
    const std::string k = "split." + key;
    if (key == "mode") {
      s.mode = parse_split_mode(get_key<std::string>(j, key));
    } else if (key == "minority_classes") {
      if (value.is_null()) s.minority_classes.reset();
      else s.minority_classes = get_key<int>(j, key);
    } else if (key == "minority_train") {
      s.minority_train = get_key<std::size_t>(j, key);
    } else if (key == "majority_train") {
      s.majority_train = get_key<std::size_t>(j, key);
    } else if (key == "total_train") {
      if (value.is_null()) s.total_train.reset();
      else s.total_train = get_key<std::size_t>(j, key);
    } else if (key == "val") {
      s.val = get_key<std::size_t>(j, key);
    } else if (key == "test") {
      s.test = get_key<std::size_t>(j, key);
    } else {
      throw InputError("unknown config key '" + k + "'");
    }
  }
  return s;
}

std::string normalize_name(std::string_view name) {
  std::string out;
  for (char c : name) {
    if (std::isalnum(static_cast<unsigned char>(c)))
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

}  // namespace

json train_config_to_json(const TrainConfig& c) {
  return {{"model", to_string(c.model)},
          {"epochs", c.epochs},
          {"lr", c.learning_rate ? json(*c.learning_rate) : json(nullptr)},
          {"metric_lr", c.metric_learning_rate ? json(*c.metric_learning_rate) : json(nullptr)},
          {"dropout", c.dropout},
          {"lambda1", c.lambda1},
          {"lambda2", c.lambda2},
          {"eta", c.eta},
          {"k", c.k},
          {"use_label_prop", c.use_label_prop},
          {"use_ssl", c.use_ssl},
          {"use_distance_metric", c.use_distance_metric},
          {"hidden_dim", c.hidden_dim},
          {"metric_dim", c.metric_dim},
          {"weight_decay", c.weight_decay},
          {"metric_weight_decay", c.metric_weight_decay},
          {"eval_every", c.eval_every},
          {"upsample_factor", c.upsample_factor}};
}

ExperimentConfig config_from_json(const json& j, ExperimentConfig c) {
  if (!j.is_object()) throw InputError("config must be a JSON object");
  TrainConfig& t = c.train;
  for (const auto& [key, value] : j.items()) {
    if (key == "dataset") c.dataset = get_key<std::string>(j, key);
    else if (key == "model") t.model = parse_model_kind(get_key<std::string>(j, key));
    else if (key == "baselines") {
      c.baselines.clear();
      for (const auto& name : get_key<std::vector<std::string>>(j, key))
        c.baselines.push_back(parse_model_kind(name));
    } else if (key == "splits") c.num_splits = get_key<int>(j, key);
    else if (key == "seed") c.seed = get_key<std::uint64_t>(j, key);
    else if (key == "split") c.split = split_from_config(value, c.split);
    else if (key == "sweep") c.sweep = parse_sweep_axis(get_key<std::string>(j, key));
    else if (key == "eta_grid") c.eta_grid = get_key<std::vector<double>>(j, key);
    else if (key == "majority_grid") c.majority_grid = get_key<std::vector<std::size_t>>(j, key);
    else if (key == "out") c.out = get_key<std::string>(j, key);
    else if (key == "history_stride") c.history_stride = get_key<int>(j, key);
    else if (key == "threads") c.threads = get_key<int>(j, key);
    else if (key == "epochs") t.epochs = get_key<int>(j, key);
    else if (key == "lr") {
      if (value.is_null()) t.learning_rate.reset();
      else t.learning_rate = get_key<double>(j, key);
    } else if (key == "metric_lr") {
      if (value.is_null()) t.metric_learning_rate.reset();
      else t.metric_learning_rate = get_key<double>(j, key);
    } else if (key == "dropout") t.dropout = get_key<double>(j, key);
    else if (key == "lambda1") t.lambda1 = get_key<double>(j, key);
    else if (key == "lambda2") t.lambda2 = get_key<double>(j, key);
    else if (key == "eta") t.eta = get_key<double>(j, key);
    else if (key == "k") t.k = get_key<int>(j, key);
    else if (key == "use_label_prop") t.use_label_prop = get_key<bool>(j, key);
    else if (key == "use_ssl") t.use_ssl = get_key<bool>(j, key);
    else if (key == "use_distance_metric") t.use_distance_metric = get_key<bool>(j, key);
    else if (key == "hidden_dim") t.hidden_dim = get_key<Index>(j, key);
    else if (key == "metric_dim") t.metric_dim = get_key<Index>(j, key);
    else if (key == "weight_decay") t.weight_decay = get_key<double>(j, key);
    else if (key == "metric_weight_decay") t.metric_weight_decay = get_key<double>(j, key);
    else if (key == "eval_every") t.eval_every = get_key<int>(j, key);
    else if (key == "upsample_factor") t.upsample_factor = get_key<int>(j, key);
    else throw InputError("unknown config key '" + key + "'");
  }
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json j = train_config_to_json(c.train);
  json baselines = json::array();
  for (ModelKind m : c.baselines) baselines.push_back(to_string(m));
  j["dataset"] = c.dataset;
  j["baselines"] = baselines;
  j["splits"] = c.num_splits;
  j["seed"] = c.seed;
  j["split"] = split_to_config(c.split);
  j["sweep"] = to_string(c.sweep);
  j["eta_grid"] = c.eta_grid;
  j["majority_grid"] = c.majority_grid;
  j["out"] = c.out;
  j["history_stride"] = c.history_stride;
  j["threads"] = c.threads;
  return j;
}

void validate(const ExperimentConfig& c) {
  validate(c.train);
  if (c.num_splits <= 0) throw InputError("splits must be positive");
  if (c.history_stride <= 0) throw InputError("history_stride must be positive");
  if (c.threads < 0) throw InputError("threads must be non-negative");
  if (c.split.minority_classes && *c.split.minority_classes < 0)
    throw InputError("split.minority_classes must be non-negative");
  if (c.split.total_train && *c.split.total_train == 0)
    throw InputError("split.total_train must be positive");
  if (c.eta_grid.empty()) throw InputError("eta_grid must not be empty");
  if (c.majority_grid.empty()) throw InputError("majority_grid must not be empty");
  for (double e : c.eta_grid) {
    if (!std::isfinite(e)) throw InputError("eta_grid values must be finite");
  }
  for (std::size_t m : c.majority_grid) {
    if (m == 0) throw InputError("majority_grid values must be positive");
  }
}

std::optional<int> known_minority_classes(std::string_view dataset_name) {
  static const std::map<std::string, int> table = {
      {"cora", 5}, {"citeseer", 4}, {"pubmed", 2}, {"coraml", 5}, {"dblp", 3}, {"twitchpt", 1}};
  auto it = table.find(normalize_name(dataset_name));
  if (it == table.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> known_proportional_budget(std::string_view dataset_name) {
  static const std::map<std::string, std::size_t> table = {
      {"amazoncomputers", 50}, {"computers", 50}, {"amazonphoto", 30}, {"photo", 30}};
  auto it = table.find(normalize_name(dataset_name));
  if (it == table.end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------------------
// Splits and seeds

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  // splitmix64 finalizer over a golden-ratio stride
  std::uint64_t z = master + (index + 1) * 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Split make_split(const Dataset& ds, const SplitSpec& split_spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  SplitMode mode = split_spec.mode;
  if (mode == SplitMode::automatic) {
    mode = (split_spec.total_train || (!split_spec.minority_classes && known_proportional_budget(ds.name)))
               ? SplitMode::proportional
               : SplitMode::imbalanced;
  }
  if (mode == SplitMode::proportional) {
    auto total = split_spec.total_train ? split_spec.total_train : known_proportional_budget(ds.name);
    if (!total) {
      throw InputError("dataset '" + ds.name +
                       "' has no known proportional training budget; set split.total_train");
    }
    return make_proportional_split(ds, *total, split_spec.val, split_spec.test, rng);
  }
  auto m = split_spec.minority_classes ? split_spec.minority_classes : known_minority_classes(ds.name);
  if (!m) {
    throw InputError("dataset '" + ds.name +
                     "' has no known minority-class count; set split.minority_classes");
  }
  if (*m > ds.num_classes) {
    throw InputError("split.minority_classes = " + std::to_string(*m) + " exceeds the " +
                     std::to_string(ds.num_classes) + " classes of '" + ds.name + "'");
  }
  ImbalancedSplitConfig ic;
  ic.minority_classes = *m;
  ic.minority_train = split_spec.minority_train;
  ic.majority_train = split_spec.majority_train;
  ic.val = split_spec.val;
  ic.test = split_spec.test;
  return make_imbalanced_split(ds, ic, rng);
}

// ---------------------------------------------------------------------------
// Worker pool

std::size_t worker_count(int requested) {
  std::size_t n = requested > 0 ? static_cast<std::size_t>(requested)
                                : std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("DPGNN_THREADS")) {
    char* end = nullptr;
    long cap = std::strtol(env, &end, 10);
    if (end != env && cap > 0) n = std::min(n, static_cast<std::size_t>(cap));
  }
  return std::max<std::size_t>(n, 1);
}

void run_ordered(std::size_t count, std::size_t workers,
                 const std::function<json(std::size_t)>& job,
                 const std::function<void(std::size_t, const json&)>& sink) {
  if (count == 0) return;
  workers = std::clamp<std::size_t>(workers, 1, count);
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) sink(i, job(i));
    return;
  }

  std::mutex mu;
  std::vector<std::optional<json>> done(count);
  std::size_t next_job = 0;
  std::size_t next_out = 0;
  std::exception_ptr failure;

  // Whoever completes the lowest pending index flushes the ready prefix, so
  // sink calls stay serialized and ordered.
  auto worker = [&] {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard lock(mu);
        if (failure || next_job == count) return;
        i = next_job++;
      }
      std::optional<json> result;
      try {
        result = job(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        return;
      }
      std::lock_guard lock(mu);
      done[i] = std::move(result);
      try {
        while (next_out < count && done[next_out]) {
          sink(next_out, *done[next_out]);
          done[next_out].reset();
          ++next_out;
        }
      } catch (...) {
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

// ---------------------------------------------------------------------------
// Runs and records

namespace {

json report_json(const MetricsReport& r) {
  return {{"f1_macro", r.f1_macro},
          {"f1_weighted", r.f1_weighted},
          {"f1_micro", r.f1_micro},
          {"per_class_f1", r.per_class_f1}};
}

json history_json(const std::vector<EpochRecord>& history, int stride) {
  json out = json::array();
  for (std::size_t i = 0; i < history.size(); ++i) {
    const EpochRecord& e = history[i];
    bool last = i + 1 == history.size();
    if (e.epoch % stride != 0 && e.epoch != 1 && !last) continue;
    json h = {{"epoch", e.epoch},
              {"loss", e.loss},
              {"classification", e.classification},
              {"proto_separation", e.proto_separation},
              {"smoothing", e.smoothing}};
    h["val_f1_macro"] = e.val_f1_macro ? json(*e.val_f1_macro) : json(nullptr);
    out.push_back(std::move(h));
  }
  return out;
}

}  // namespace

json execute_run(const Dataset& ds, const RunSpec& run, const ExperimentConfig& cfg) {
  const std::uint64_t split_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(run.split_index));
  TrainConfig train = run.train;
  train.seed = derive_seed(split_seed, 1);

  json rec = {{"dataset", ds.name}, {"model", to_string(train.model)}, {"split", run.split_index}};
  for (const auto& [k, v] : run.tags.items()) rec[k] = v;
  rec["seed"] = train.seed;
  rec["config"] = train_config_to_json(train);

  Split split = make_split(ds, run.split, split_seed);
  rec["train_counts"] = split.train_counts;
  try {
    TrainResult r = train.model == ModelKind::dpgnn ? dpgnn::train(ds, split, train)
                                                    : train_baseline(ds, split, train);
    rec["status"] = "ok";
    rec["test"] = report_json(r.test);
    rec["validation"] = report_json(r.validation);
    rec["best_epoch"] = r.best_epoch;
    if (r.pseudo) {
      rec["pseudo"] = {{"count", r.pseudo->count},
                       {"validation_count", r.pseudo->validation_count},
                       {"validation_correct", r.pseudo->validation_correct},
                       {"validation_accuracy", r.pseudo->validation_count > 0
                                                   ? json(r.pseudo->validation_accuracy)
                                                   : json(nullptr)}};
    } else {
      rec["pseudo"] = nullptr;
    }
    rec["history"] = history_json(r.history, cfg.history_stride);
    rec["timing"] = {{"seconds", r.seconds}};
  } catch (const NumericError& e) {
    rec["status"] = "failed";
    rec["error"] = e.what();
    rec["failed_epoch"] = e.epoch() ? json(*e.epoch()) : json(nullptr);
  }
  return rec;
}

std::vector<SummaryRow> summarize(const std::vector<json>& records,
                                  const std::vector<std::string>& keys) {
  struct Acc {
    SummaryRow row;
    std::vector<double> macro, weighted, micro, pcount, pacc;
  };
  std::vector<Acc> groups;
  for (const json& r : records) {
    json g = json::object();
    for (const auto& k : keys) g[k] = r.contains(k) ? r.at(k) : json(nullptr);
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const Acc& a) { return a.row.group == g; });
    if (it == groups.end()) {
      groups.push_back({});
      it = std::prev(groups.end());
      it->row.group = g;
    }
    ++it->row.runs;
    if (r.value("status", "") != "ok") {
      ++it->row.failed;
      continue;
    }
    it->macro.push_back(r.at("test").at("f1_macro").get<double>());
    it->weighted.push_back(r.at("test").at("f1_weighted").get<double>());
    it->micro.push_back(r.at("test").at("f1_micro").get<double>());
    if (r.contains("pseudo") && !r.at("pseudo").is_null()) {
      it->pcount.push_back(r.at("pseudo").at("count").get<double>());
      const json& acc = r.at("pseudo").at("validation_accuracy");
      if (!acc.is_null()) it->pacc.push_back(acc.get<double>());
    }
  }

  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  };
  auto stdev = [&](const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double m = mean(v), s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
  };

  std::vector<SummaryRow> rows;
  for (Acc& a : groups) {
    SummaryRow& r = a.row;
    r.f1_macro = mean(a.macro);
    r.f1_macro_std = stdev(a.macro);
    r.f1_weighted = mean(a.weighted);
    r.f1_weighted_std = stdev(a.weighted);
    r.f1_micro = mean(a.micro);
    r.f1_micro_std = stdev(a.micro);
    if (!a.pcount.empty()) {
      r.pseudo_count = mean(a.pcount);
    }
    if (!a.pacc.empty()) r.pseudo_accuracy = mean(a.pacc);
    rows.push_back(std::move(r));
  }
  return rows;
}

namespace {

std::string cell(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) return "-";
  return v.dump();
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

void print_table(std::ostream& os, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& body) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    width[c] = header[c].size();
    for (const auto& row : body) width[c] = std::max(width[c], row[c].size());
  }
  auto line = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) os << "  ";
      // first column left-aligned, the rest right-aligned
      if (c == 0) os << std::left << std::setw(static_cast<int>(width[c])) << row[c];
      else os << std::right << std::setw(static_cast<int>(width[c])) << row[c];
    }
    os << std::left << '\n';
  };
  line(header);
  std::size_t total = 0;
  for (std::size_t w : width) total += w;
  os << std::string(total + 2 * (width.size() - 1), '-') << '\n';
  for (const auto& row : body) line(row);
}

}  // namespace

void print_summary(std::ostream& os, const std::vector<SummaryRow>& rows,
                   const std::vector<std::string>& keys) {
  std::vector<std::string> header = keys;
  for (const char* h : {"runs", "failed", "f1_macro", "f1_weighted", "f1_micro", "pseudo",
                        "pseudo_acc"})
    header.emplace_back(h);
  std::vector<std::vector<std::string>> body;
  for (const SummaryRow& r : rows) {
    std::vector<std::string> row;
    for (const auto& k : keys) row.push_back(cell(r.group.at(k)));
    row.push_back(std::to_string(r.runs));
    row.push_back(r.failed ? std::to_string(r.failed) + " FAILED" : "0");
    row.push_back(fixed(r.f1_macro) + " +- " + fixed(r.f1_macro_std));
    row.push_back(fixed(r.f1_weighted) + " +- " + fixed(r.f1_weighted_std));
    row.push_back(fixed(r.f1_micro) + " +- " + fixed(r.f1_micro_std));
    row.push_back(r.pseudo_count ? fixed(*r.pseudo_count, 1) : "-");
    row.push_back(r.pseudo_accuracy ? fixed(*r.pseudo_accuracy) : "-");
    body.push_back(std::move(row));
  }
  print_table(os, header, body);
}

// ---------------------------------------------------------------------------
// Commands

namespace {

std::vector<json> execute_all(const Dataset& ds, const std::vector<RunSpec>& runs,
                              const ExperimentConfig& cfg) {
  std::vector<json> records(runs.size());
  std::ofstream file;
  if (!cfg.out.empty()) {
    std::filesystem::path p(cfg.out);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    file.open(p);
    if (!file) throw InputError(cfg.out, 0, "cannot open output file");
  }
  run_ordered(
      runs.size(), worker_count(cfg.threads),
      [&](std::size_t i) { return execute_run(ds, runs[i], cfg); },
      [&](std::size_t i, const json& rec) {
        if (file) file << rec.dump() << '\n' << std::flush;
        records[i] = rec;
      });
  return records;
}

std::filesystem::path csv_path(const std::string& out) {
  std::filesystem::path p(out);
  p.replace_extension(".csv");
  return p;
}

std::vector<RunSpec> split_runs(const ExperimentConfig& cfg, const TrainConfig& train,
                                const SplitSpec& split, const json& tags) {
  std::vector<RunSpec> runs;
  for (int s = 0; s < cfg.num_splits; ++s) runs.push_back({tags, train, split, s});
  return runs;
}

std::vector<RunSpec> ablation_runs(const ExperimentConfig& cfg) {
  struct Variant {
    const char* tag;
    bool lp, ssl;
  };
  std::vector<RunSpec> runs;
  for (Variant v : {Variant{"full", true, true}, Variant{"no_lp", false, true},
                    Variant{"no_ssl", true, false}, Variant{"no_lp_ssl", false, false}}) {
    TrainConfig t = cfg.train;
    t.model = ModelKind::dpgnn;
    t.use_label_prop = v.lp;
    t.use_ssl = v.ssl;
    auto part = split_runs(cfg, t, cfg.split, {{"variant", v.tag}});
    runs.insert(runs.end(), part.begin(), part.end());
  }
  for (ModelKind m : cfg.baselines) {
    TrainConfig t = cfg.train;
    t.model = m;
    auto part = split_runs(cfg, t, cfg.split, {{"variant", to_string(m)}});
    runs.insert(runs.end(), part.begin(), part.end());
  }
  return runs;
}

int exit_code(const std::vector<json>& records) {
  for (const json& r : records) {
    if (r.value("status", "") == "ok") return 0;
  }
  return 1;
}

}  // namespace

std::vector<json> run_records(const Dataset& ds, const ExperimentConfig& cfg) {
  validate(cfg);
  return execute_all(ds, split_runs(cfg, cfg.train, cfg.split, json::object()), cfg);
}

std::vector<json> sweep_eta_records(const Dataset& ds, const ExperimentConfig& cfg) {
  validate(cfg);
  std::vector<RunSpec> runs;
  for (double eta : cfg.eta_grid) {
    TrainConfig t = cfg.train;
    t.model = ModelKind::dpgnn;
    t.use_label_prop = true;
    t.use_ssl = false;
    t.eta = eta;
    auto part = split_runs(cfg, t, cfg.split, {{"sweep_eta", eta}});
    runs.insert(runs.end(), part.begin(), part.end());
  }
  return execute_all(ds, runs, cfg);
}

std::vector<json> sweep_ratio_records(const Dataset& ds, const ExperimentConfig& cfg) {
  validate(cfg);
  std::vector<ModelKind> models{ModelKind::dpgnn};
  for (ModelKind m : cfg.baselines) {
    if (m != ModelKind::dpgnn) models.push_back(m);
  }
  std::vector<RunSpec> runs;
  for (std::size_t majority : cfg.majority_grid) {
    SplitSpec split = cfg.split;
    split.mode = SplitMode::imbalanced;
    split.majority_train = majority;
    double ratio = static_cast<double>(majority) / static_cast<double>(split.minority_train);
    for (ModelKind m : models) {
      TrainConfig t = cfg.train;
      t.model = m;
      auto part =
          split_runs(cfg, t, split, {{"majority_train", majority}, {"imbalance_ratio", ratio}});
      runs.insert(runs.end(), part.begin(), part.end());
    }
  }
  return execute_all(ds, runs, cfg);
}

std::vector<json> ablate_records(const Dataset& ds, const ExperimentConfig& cfg) {
  validate(cfg);
  return execute_all(ds, ablation_runs(cfg), cfg);
}

int cmd_run(const ExperimentConfig& cfg, std::ostream& os) {
  if (cfg.sweep == SweepAxis::eta) return cmd_sweep_eta(cfg, os);
  if (cfg.sweep == SweepAxis::imbalance_ratio) return cmd_sweep_ratio(cfg, os);
  validate(cfg);
  Dataset ds = load_dataset(cfg.dataset);
  auto records = run_records(ds, cfg);
  print_summary(os, summarize(records, {"dataset", "model"}), {"dataset", "model"});
  return exit_code(records);
}

int cmd_sweep_eta(const ExperimentConfig& cfg, std::ostream& os) {
  validate(cfg);
  Dataset ds = load_dataset(cfg.dataset);
  auto records = sweep_eta_records(ds, cfg);
  auto rows = summarize(records, {"sweep_eta"});
  print_summary(os, rows, {"sweep_eta"});
  if (!cfg.out.empty()) {
    std::ofstream csv(csv_path(cfg.out));
    csv << "eta,runs,failed,pseudo_count,pseudo_val_accuracy,f1_macro,f1_macro_std,f1_weighted,"
           "f1_micro\n";
    for (const SummaryRow& r : rows) {
      csv << r.group.at("sweep_eta").dump() << ',' << r.runs << ',' << r.failed << ','
          << r.pseudo_count.value_or(0.0) << ','
          << (r.pseudo_accuracy ? std::to_string(*r.pseudo_accuracy) : std::string()) << ','
          << r.f1_macro << ',' << r.f1_macro_std << ',' << r.f1_weighted << ',' << r.f1_micro
          << '\n';
    }
  }
  return exit_code(records);
}

int cmd_sweep_ratio(const ExperimentConfig& cfg, std::ostream& os) {
  validate(cfg);
  Dataset ds = load_dataset(cfg.dataset);
  auto records = sweep_ratio_records(ds, cfg);
  const std::vector<std::string> keys{"imbalance_ratio", "model"};
  auto rows = summarize(records, keys);
  print_summary(os, rows, keys);
  if (!cfg.out.empty()) {
    std::ofstream csv(csv_path(cfg.out));
    csv << "imbalance_ratio,model,runs,failed,f1_macro,f1_macro_std,f1_weighted,f1_micro\n";
    for (const SummaryRow& r : rows) {
      csv << r.group.at("imbalance_ratio").dump() << ',' << cell(r.group.at("model")) << ','
          << r.runs << ',' << r.failed << ',' << r.f1_macro << ',' << r.f1_macro_std << ','
          << r.f1_weighted << ',' << r.f1_micro << '\n';
    }
  }
  return exit_code(records);
}

int cmd_ablate(const ExperimentConfig& cfg, std::ostream& os) {
  validate(cfg);
  Dataset ds = load_dataset(cfg.dataset);
  auto records = ablate_records(ds, cfg);
  auto rows = summarize(records, {"variant"});
  print_summary(os, rows, {"variant"});

  // Deltas against the first baseline.
  const SummaryRow* base = nullptr;
  if (!cfg.baselines.empty()) {
    for (const SummaryRow& r : rows) {
      if (r.group.at("variant") == to_string(cfg.baselines.front())) base = &r;
    }
  }
  if (base) {
    os << "\ndelta over " << to_string(cfg.baselines.front()) << '\n';
    std::vector<std::vector<std::string>> body;
    for (const SummaryRow& r : rows) {
      if (&r == base) continue;
      body.push_back({cell(r.group.at("variant")), fixed(r.f1_macro - base->f1_macro),
                      fixed(r.f1_micro - base->f1_micro)});
    }
    print_table(os, {"variant", "d_f1_macro", "d_f1_micro"}, body);
  }
  if (!cfg.out.empty()) {
    std::ofstream csv(csv_path(cfg.out));
    csv << "variant,runs,failed,f1_macro,f1_micro,delta_f1_macro,delta_f1_micro\n";
    for (const SummaryRow& r : rows) {
      csv << cell(r.group.at("variant")) << ',' << r.runs << ',' << r.failed << ','
          << r.f1_macro << ',' << r.f1_micro << ',';
      if (base) csv << r.f1_macro - base->f1_macro << ',' << r.f1_micro - base->f1_micro;
      else csv << ',';
      csv << '\n';
    }
  }
  return exit_code(records);
}

}  // namespace dpgnn
