#include "dpgnn/data.hpp"

#include "dpgnn/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

namespace dpgnn {

namespace fs = std::filesystem;

void validate_dataset(const Dataset& ds) {
  const std::size_t n = ds.graph.num_nodes();
  if (static_cast<std::size_t>(ds.features.rows()) != n) {
    throw InputError("dataset " + ds.name + ": " + std::to_string(ds.features.rows()) +
                     " feature rows for " + std::to_string(n) + " nodes");
  }
  if (ds.labels.size() != n) {
    throw InputError("dataset " + ds.name + ": " + std::to_string(ds.labels.size()) +
                     " labels for " + std::to_string(n) + " nodes");
  }
  if (ds.num_classes < 1) throw InputError("dataset " + ds.name + ": no classes");
  std::vector<std::size_t> counts(static_cast<std::size_t>(ds.num_classes), 0);
  for (std::size_t i = 0; i < n; ++i) {
    const int c = ds.labels[i];
    if (c < 0 || c >= ds.num_classes) {
      throw InputError("dataset " + ds.name + ": node " + std::to_string(i) + " has label " +
                       std::to_string(c));
    }
    ++counts[static_cast<std::size_t>(c)];
  }
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0) {
      throw InputError("dataset " + ds.name + ": class " + std::to_string(c) + " is empty");
    }
  }
}

namespace {

std::vector<int> read_labels(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path.string(), 0, "cannot open labels");
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    int v = 0;
    const auto last = line.find_last_not_of(" \t");
    auto [ptr, ec] = std::from_chars(line.data() + first, line.data() + last + 1, v);
    if (ec != std::errc() || ptr != line.data() + last + 1) {
      throw InputError(path.string(), line_no, "expected an integer class label");
    }
    if (v < 0) throw InputError(path.string(), line_no, "negative class label");
    labels.push_back(v);
  }
  return labels;
}

Matrix read_features(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path.string(), 0, "cannot open features");
  std::vector<double> values;
  Index cols = -1;
  Index rows = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    Index count = 0;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    while (true) {
      while (p < end && (*p == ' ' || *p == '\t')) ++p;
      double v = 0.0;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc()) {
        throw InputError(path.string(), line_no,
                         "malformed real in column " + std::to_string(count + 1));
      }
      values.push_back(v);
      ++count;
      p = next;
      while (p < end && (*p == ' ' || *p == '\t')) ++p;
      if (p == end) break;
      if (*p != ',') throw InputError(path.string(), line_no, "expected ',' separator");
      ++p;
    }
    if (cols < 0) {
      cols = count;
    } else if (count != cols) {
      throw InputError(path.string(), line_no, "row has " + std::to_string(count) +
                                                   " columns, expected " + std::to_string(cols));
    }
    ++rows;
  }
  if (rows == 0) throw InputError(path.string(), 0, "no feature rows");
  Matrix m(rows, cols);
  std::copy(values.begin(), values.end(), m.data());
  return m;
}

void write_features(const fs::path& path, const Matrix& x) {
  std::ofstream out(path);
  if (!out) throw InputError(path.string(), 0, "cannot open for writing");
  char buf[64];
  std::string line;
  for (Index i = 0; i < x.rows(); ++i) {
    line.clear();
    for (Index j = 0; j < x.cols(); ++j) {
      if (j > 0) line.push_back(',');
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x(i, j));
      (void)ec;
      line.append(buf, ptr);
    }
    line.push_back('\n');
    out << line;
  }
}

}  // namespace

Dataset load_dataset(const fs::path& dir) {
  for (const char* name : {"edges.tsv", "features.csv", "labels.txt"}) {
    if (!fs::exists(dir / name)) throw InputError((dir / name).string(), 0, "missing file");
  }
  Dataset ds;
  ds.name = dir.filename().string();
  if (ds.name.empty()) ds.name = dir.parent_path().filename().string();
  ds.labels = read_labels(dir / "labels.txt");
  ds.features = read_features(dir / "features.csv");
  const std::size_t n = ds.labels.size();
  if (static_cast<std::size_t>(ds.features.rows()) != n) {
    throw InputError((dir / "features.csv").string(), static_cast<std::size_t>(ds.features.rows()),
                     "feature row count " + std::to_string(ds.features.rows()) +
                         " differs from label count " + std::to_string(n));
  }
  EdgeListFile edges = read_edge_list((dir / "edges.tsv").string());
  if (edges.max_index_plus_one > n) {
    throw InputError((dir / "edges.tsv").string(), 0,
                     "edge references node " + std::to_string(edges.max_index_plus_one - 1) +
                         " but only " + std::to_string(n) + " nodes have labels");
  }
  ds.graph = build_graph(edges.edges, n);
  ds.num_classes = n == 0 ? 0 : *std::max_element(ds.labels.begin(), ds.labels.end()) + 1;

  const fs::path meta_path = dir / "meta.json";
  if (fs::exists(meta_path)) {
    std::ifstream in(meta_path);
    nlohmann::json meta;
    try {
      in >> meta;
    } catch (const nlohmann::json::exception& e) {
      throw InputError(meta_path.string(), 0, std::string("invalid JSON: ") + e.what());
    }
    try {
      if (meta.contains("name")) ds.name = meta.at("name").get<std::string>();
      if (meta.contains("num_classes")) {
        const int c = meta.at("num_classes").get<int>();
        for (std::size_t i = 0; i < n; ++i) {
          if (ds.labels[i] >= c) {
            throw InputError((dir / "labels.txt").string(), i + 1,
                             "label " + std::to_string(ds.labels[i]) + " outside [0, " +
                                 std::to_string(c) + ") declared in meta.json");
          }
        }
        ds.num_classes = c;
      }
      if (meta.contains("num_features") &&
          meta.at("num_features").get<Index>() != ds.features.cols()) {
        throw InputError(meta_path.string(), 0, "num_features disagrees with features.csv");
      }
      if (meta.contains("num_nodes") && meta.at("num_nodes").get<std::size_t>() != n) {
        throw InputError(meta_path.string(), 0, "num_nodes disagrees with labels.txt");
      }
    } catch (const nlohmann::json::exception& e) {
      throw InputError(meta_path.string(), 0, e.what());
    }
  }
  validate_dataset(ds);
  return ds;
}

void save_dataset(const Dataset& ds, const fs::path& dir) {
  validate_dataset(ds);
  fs::create_directories(dir);
  write_edge_list((dir / "edges.tsv").string(), ds.graph);
  write_features(dir / "features.csv", ds.features);
  {
    std::ofstream out(dir / "labels.txt");
    if (!out) throw InputError((dir / "labels.txt").string(), 0, "cannot open for writing");
    for (int l : ds.labels) out << l << '\n';
  }
  nlohmann::json meta = {{"name", ds.name},
                         {"num_classes", ds.num_classes},
                         {"num_features", ds.features.cols()},
                         {"num_nodes", ds.num_nodes()}};
  std::ofstream out(dir / "meta.json");
  out << meta.dump(2) << '\n';
}

namespace {

std::vector<std::vector<std::size_t>> class_members(const Dataset& ds) {
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(ds.num_classes));
  for (std::size_t i = 0; i < ds.labels.size(); ++i) {
    members[static_cast<std::size_t>(ds.labels[i])].push_back(i);
  }
  return members;
}

Split finish_split(const Dataset& ds, std::vector<std::size_t> quotas, std::size_t val,
                   std::size_t test, std::mt19937_64& rng) {
  auto members = class_members(ds);
  Split split;
  split.train_counts = quotas;
  std::vector<char> used(ds.num_nodes(), 0);
  for (std::size_t c = 0; c < members.size(); ++c) {
    if (members[c].size() < quotas[c]) {
      throw InputError("class " + std::to_string(c) + " has " + std::to_string(members[c].size()) +
                       " nodes, fewer than its training quota " + std::to_string(quotas[c]));
    }
    std::shuffle(members[c].begin(), members[c].end(), rng);
    for (std::size_t k = 0; k < quotas[c]; ++k) {
      split.train.push_back(members[c][k]);
      used[members[c][k]] = 1;
    }
  }
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < ds.num_nodes(); ++i) {
    if (!used[i]) rest.push_back(i);
  }
  std::shuffle(rest.begin(), rest.end(), rng);
  std::size_t n_val = val;
  std::size_t n_test = test;
  if (val + test > rest.size()) {
    // Small graphs: keep the val:test proportion instead of starving test.
    n_val = rest.size() * val / (val + test);
    n_test = rest.size() - n_val;
  }
  split.val.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(n_val));
  split.test.assign(rest.begin() + static_cast<std::ptrdiff_t>(n_val),
                    rest.begin() + static_cast<std::ptrdiff_t>(n_val + n_test));
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

}  // namespace

Split make_imbalanced_split(const Dataset& ds, const ImbalancedSplitConfig& cfg,
                            std::mt19937_64& rng) {
  if (cfg.minority_classes < 0 || cfg.minority_classes > ds.num_classes) {
    throw InputError("minority class count " + std::to_string(cfg.minority_classes) +
                     " outside [0, " + std::to_string(ds.num_classes) + "]");
  }
  std::vector<std::size_t> quotas(static_cast<std::size_t>(ds.num_classes));
  for (std::size_t c = 0; c < quotas.size(); ++c) {
    quotas[c] = static_cast<int>(c) < cfg.minority_classes ? cfg.minority_train : cfg.majority_train;
  }
  return finish_split(ds, std::move(quotas), cfg.val, cfg.test, rng);
}

Split make_proportional_split(const Dataset& ds, std::size_t total_train, std::size_t val,
                              std::size_t test, std::mt19937_64& rng) {
  const std::size_t classes = static_cast<std::size_t>(ds.num_classes);
  if (total_train < classes) {
    throw InputError("proportional split: " + std::to_string(total_train) +
                     " training nodes cannot cover " + std::to_string(classes) + " classes");
  }
  auto members = class_members(ds);
  const double n = static_cast<double>(ds.num_nodes());
  std::vector<std::size_t> quotas(classes);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    const double exact = static_cast<double>(total_train) * static_cast<double>(members[c].size()) / n;
    quotas[c] = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(exact)));
    assigned += quotas[c];
    remainders.emplace_back(exact - std::floor(exact), c);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < total_train; k = (k + 1) % classes) {
    ++quotas[remainders[k].second];
    ++assigned;
  }
  while (assigned > total_train) {
    // Flooring to at least one can overshoot; trim the largest quotas.
    auto it = std::max_element(quotas.begin(), quotas.end());
    --*it;
    --assigned;
  }
  return finish_split(ds, std::move(quotas), val, test, rng);
}

nlohmann::json split_to_json(const Split& s) {
  return {{"train", s.train}, {"val", s.val}, {"test", s.test}, {"train_counts", s.train_counts}};
}

Split split_from_json(const nlohmann::json& j) {
  Split s;
  try {
    s.train = j.at("train").get<std::vector<std::size_t>>();
    s.val = j.at("val").get<std::vector<std::size_t>>();
    s.test = j.at("test").get<std::vector<std::size_t>>();
    s.train_counts = j.at("train_counts").get<std::vector<std::size_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("split JSON: ") + e.what());
  }
  return s;
}

void save_split(const Split& s, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError(path.string(), 0, "cannot open for writing");
  out << split_to_json(s).dump() << '\n';
}

Split load_split(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path.string(), 0, "cannot open split");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path.string(), 0, std::string("invalid JSON: ") + e.what());
  }
  return split_from_json(j);
}

Dataset synthesize_planted_graph(const PlantedGraphConfig& cfg, std::mt19937_64& rng) {
  const std::size_t classes = cfg.nodes_per_class.size();
  if (classes == 0) throw InputError("planted graph: no classes");
  for (double p : {cfg.intra_edge_prob, cfg.inter_edge_prob}) {
    if (!(p >= 0.0 && p <= 1.0)) throw InputError("planted graph: edge probability outside [0, 1]");
  }
  Dataset ds;
  ds.name = cfg.name;
  ds.num_classes = static_cast<int>(classes);
  for (std::size_t c = 0; c < classes; ++c) {
    ds.labels.insert(ds.labels.end(), cfg.nodes_per_class[c], static_cast<int>(c));
  }
  const std::size_t n = ds.labels.size();

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double p = ds.labels[i] == ds.labels[j] ? cfg.intra_edge_prob : cfg.inter_edge_prob;
      if (unif(rng) < p) edges.emplace_back(i, j);
    }
  }
  ds.graph = build_graph(edges, n);

  std::normal_distribution<double> noise(0.0, 1.0);
  const Index d = static_cast<Index>(classes + cfg.noise_dims);
  ds.features = Matrix::Zero(static_cast<Index>(n), d);
  for (std::size_t i = 0; i < n; ++i) {
    const Index r = static_cast<Index>(i);
    ds.features(r, ds.labels[i]) = 1.0;
    for (Index j = 0; j < d; ++j) ds.features(r, j) += cfg.feature_noise * noise(rng);
  }
  return ds;
}

}  // namespace dpgnn
