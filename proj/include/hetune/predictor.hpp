#pragma once

// Least-squares gradient-boosted regression trees predicting execution time
// from (side, threads, affinity, fraction, input size).
//
// Training is deterministic and independent of sample order: rows are put in
// a canonical order before fitting, and split search visits features in
// ascending column order and thresholds in ascending value order, keeping the
// first strictly-best candidate.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hetune/error.hpp"
#include "hetune/metrics.hpp"
#include "hetune/rng.hpp"
#include "hetune/side.hpp"
#include "hetune/training_data.hpp"

namespace hetune {

/// Column layout: threads, fraction, input_size, then one column per side
/// label, then one column per affinity label (labels sorted).
class FeatureEncoding {
 public:
  static constexpr int kThreads = 0;
  static constexpr int kFraction = 1;
  static constexpr int kInputSize = 2;
  static constexpr int kNumeric = 3;

  FeatureEncoding() = default;
  FeatureEncoding(std::vector<std::string> sides, std::vector<std::string> affinities)
      : sides_(std::move(sides)), affinities_(std::move(affinities)) {
    std::sort(sides_.begin(), sides_.end());
    std::sort(affinities_.begin(), affinities_.end());
    if (std::adjacent_find(sides_.begin(), sides_.end()) != sides_.end() ||
        std::adjacent_find(affinities_.begin(), affinities_.end()) != affinities_.end())
      throw Error("feature encoding: duplicate labels");
  }

  static FeatureEncoding fit(const std::vector<TrainingSample>& samples) {
    std::set<std::string> sides, affinities;
    for (const auto& s : samples) {
      sides.emplace(to_string(s.side));
      affinities.insert(s.affinity);
    }
    return FeatureEncoding({sides.begin(), sides.end()},
                           {affinities.begin(), affinities.end()});
  }

  const std::vector<std::string>& sides() const { return sides_; }
  const std::vector<std::string>& affinities() const { return affinities_; }
  int width() const { return kNumeric + int(sides_.size() + affinities_.size()); }

  std::vector<double> encode(Side side, int threads, const std::string& affinity,
                             int fraction, double input_size) const {
    std::vector<double> x(static_cast<std::size_t>(width()), 0.0);
    x[kThreads] = threads;
    x[kFraction] = fraction;
    x[kInputSize] = input_size;
    x[static_cast<std::size_t>(kNumeric + column("side", sides_, std::string(to_string(side))))] = 1.0;
    x[static_cast<std::size_t>(kNumeric + int(sides_.size()) +
                               column("affinity", affinities_, affinity))] = 1.0;
    return x;
  }

  std::vector<double> encode(const TrainingSample& s) const {
    return encode(s.side, s.threads, s.affinity, s.fraction, s.input_size);
  }

  std::string column_name(int col) const {
    if (col == kThreads) return "threads";
    if (col == kFraction) return "fraction";
    if (col == kInputSize) return "input_size";
    const auto c = static_cast<std::size_t>(col - kNumeric);
    if (c < sides_.size()) return "side=" + sides_[c];
    return "affinity=" + affinities_.at(c - sides_.size());
  }

  friend bool operator==(const FeatureEncoding&, const FeatureEncoding&) = default;

 private:
  static int column(const char* kind, const std::vector<std::string>& labels,
                    const std::string& label) {
    auto it = std::lower_bound(labels.begin(), labels.end(), label);
    if (it == labels.end() || *it != label)
      throw Error(std::string("unknown ") + kind + " label '" + label +
                  "' (not seen in training)");
    return int(it - labels.begin());
  }

  std::vector<std::string> sides_;
  std::vector<std::string> affinities_;
};

/// Internal nodes route x[feature] <= threshold to `left`; leaves carry a
/// value and have feature == -1.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;

  bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(const std::vector<double>& x) const {
    int i = 0;
    while (!nodes[static_cast<std::size_t>(i)].is_leaf()) {
      const TreeNode& n = nodes[static_cast<std::size_t>(i)];
      i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(i)].value;
  }

  int depth() const { return depth_from(0); }

 private:
  int depth_from(int i) const {
    const TreeNode& n = nodes[static_cast<std::size_t>(i)];
    if (n.is_leaf()) return 0;
    return 1 + std::max(depth_from(n.left), depth_from(n.right));
  }
};

struct BoostingParams {
  int tree_count = 200;
  int max_depth = 4;
  int min_samples_leaf = 5;
  double shrinkage = 0.1;

  void validate() const {
    if (tree_count < 0) throw Error("tree count must be >= 0");
    if (max_depth < 1) throw Error("max depth must be >= 1");
    if (min_samples_leaf < 1) throw Error("min samples per leaf must be >= 1");
    if (!(shrinkage > 0.0 && shrinkage <= 1.0))
      throw Error("shrinkage must lie in (0, 1]");
  }
};

class TreeEnsemble {
 public:
  TreeEnsemble() = default;
  TreeEnsemble(double base, BoostingParams params, FeatureEncoding encoding,
               std::vector<RegressionTree> trees)
      : base_(base),
        params_(params),
        encoding_(std::move(encoding)),
        trees_(std::move(trees)) {}

  double base_prediction() const { return base_; }
  double shrinkage() const { return params_.shrinkage; }
  const BoostingParams& params() const { return params_; }
  const FeatureEncoding& encoding() const { return encoding_; }
  const std::vector<RegressionTree>& trees() const { return trees_; }

  /// Raw routed sum on an encoded feature vector.
  double predict_encoded(const std::vector<double>& x) const {
    double sum = base_;
    for (const auto& t : trees_) sum += params_.shrinkage * t.predict(x);
    return sum;
  }

 private:
  double base_ = 0.0;
  BoostingParams params_;
  FeatureEncoding encoding_;
  std::vector<RegressionTree> trees_;
};

/// Predicted execution time in seconds. Zero work takes zero time and does
/// not consult the model.
inline double predict(const TreeEnsemble& model, Side side, int threads,
                      const std::string& affinity, int fraction,
                      double input_size) {
  if (fraction < 0 || fraction > 100)
    throw Error("fraction " + std::to_string(fraction) + " outside [0, 100]");
  auto x = model.encoding().encode(side, threads, affinity, fraction, input_size);
  if (fraction == 0) return 0.0;
  return model.predict_encoded(x);
}

inline double predict(const TreeEnsemble& model, const TrainingSample& s) {
  return predict(model, s.side, s.threads, s.affinity, s.fraction, s.input_size);
}

namespace detail {

// Greedy level-wise regression tree on residuals, using per-feature presorted
// row orders shared across all trees.
class TreeBuilder {
 public:
  TreeBuilder(const std::vector<std::vector<double>>& x,
              const std::vector<std::vector<std::uint32_t>>& sorted_rows,
              const BoostingParams& params)
      : x_(x), sorted_(sorted_rows), params_(params) {}

  RegressionTree build(const std::vector<double>& residual,
                       std::vector<int>& leaf_of_row) const {
    const std::size_t n = residual.size();
    RegressionTree tree;
    tree.nodes.push_back({});
    std::vector<int> node_of(n, 0);
    std::vector<int> frontier = {0};

    for (int depth = 0; !frontier.empty(); ++depth) {
      // slot of each frontier node; -1 for finished nodes
      std::vector<int> slot(tree.nodes.size(), -1);
      for (std::size_t k = 0; k < frontier.size(); ++k)
        slot[static_cast<std::size_t>(frontier[k])] = int(k);

      const std::size_t m = frontier.size();
      std::vector<double> total_sum(m, 0.0), total_sq(m, 0.0);
      std::vector<std::size_t> total_cnt(m, 0);
      for (std::size_t r = 0; r < n; ++r) {
        const int s = slot[static_cast<std::size_t>(node_of[r])];
        if (s < 0) continue;
        total_sum[static_cast<std::size_t>(s)] += residual[r];
        total_sq[static_cast<std::size_t>(s)] += residual[r] * residual[r];
        ++total_cnt[static_cast<std::size_t>(s)];
      }

      struct Best {
        double gain = 0.0;
        int feature = -1;
        double threshold = 0.0;
      };
      std::vector<Best> best(m);
      if (depth < params_.max_depth) {
        const auto min_leaf = static_cast<std::size_t>(params_.min_samples_leaf);
        std::vector<double> left_sum(m);
        std::vector<std::size_t> left_cnt(m);
        std::vector<double> last(m);
        const int width = int(sorted_.size());
        for (int f = 0; f < width; ++f) {
          std::fill(left_sum.begin(), left_sum.end(), 0.0);
          std::fill(left_cnt.begin(), left_cnt.end(), 0);
          for (std::uint32_t r : sorted_[static_cast<std::size_t>(f)]) {
            const int s = slot[static_cast<std::size_t>(node_of[r])];
            if (s < 0) continue;
            const auto k = static_cast<std::size_t>(s);
            const double v = x_[r][static_cast<std::size_t>(f)];
            if (left_cnt[k] > 0 && v != last[k] && left_cnt[k] >= min_leaf &&
                total_cnt[k] - left_cnt[k] >= min_leaf) {
              const double nl = double(left_cnt[k]);
              const double nr = double(total_cnt[k] - left_cnt[k]);
              const double sr = total_sum[k] - left_sum[k];
              const double gain = left_sum[k] * left_sum[k] / nl + sr * sr / nr -
                                  total_sum[k] * total_sum[k] / double(total_cnt[k]);
              if (gain > best[k].gain) best[k] = {gain, f, 0.5 * (last[k] + v)};
            }
            left_sum[k] += residual[r];
            ++left_cnt[k];
            last[k] = v;
          }
        }
      }

      std::vector<int> next;
      for (std::size_t k = 0; k < m; ++k) {
        const int id = frontier[k];
        // Splits that remove only rounding-level variance are not splits.
        const double sse = total_sq[k] - total_sum[k] * total_sum[k] / double(total_cnt[k]);
        const bool split = best[k].feature >= 0 &&
                           best[k].gain > 1e-12 * std::max(total_sq[k], 1e-300) &&
                           sse > 0.0;
        if (!split) {
          tree.nodes[static_cast<std::size_t>(id)].value =
              total_sum[k] / double(total_cnt[k]);
          continue;
        }
        const int l = int(tree.nodes.size());
        tree.nodes.push_back({});
        tree.nodes.push_back({});
        TreeNode& node = tree.nodes[static_cast<std::size_t>(id)];
        node.feature = best[k].feature;
        node.threshold = best[k].threshold;
        node.left = l;
        node.right = l + 1;
        next.push_back(l);
        next.push_back(l + 1);
      }
      if (next.empty()) break;
      for (std::size_t r = 0; r < n; ++r) {
        const TreeNode& node = tree.nodes[static_cast<std::size_t>(node_of[r])];
        if (node.is_leaf()) continue;
        node_of[r] = x_[r][static_cast<std::size_t>(node.feature)] <= node.threshold
                         ? node.left
                         : node.right;
      }
      frontier = std::move(next);
    }
    leaf_of_row = std::move(node_of);
    return tree;
  }

 private:
  const std::vector<std::vector<double>>& x_;
  const std::vector<std::vector<std::uint32_t>>& sorted_;
  const BoostingParams& params_;
};

}  // namespace detail

/// Fits F0 = mean target, then `tree_count` stages, each a depth-limited
/// tree fitted to current residuals and added with shrinkage.
inline TreeEnsemble train(const std::vector<TrainingSample>& samples,
                          const BoostingParams& params = {}) {
  params.validate();
  if (params.tree_count < 1) throw Error("tree count must be >= 1");
  if (samples.empty()) throw Error("cannot train on an empty sample set");

  FeatureEncoding enc = FeatureEncoding::fit(samples);
  const std::size_t n = samples.size();
  std::vector<std::pair<std::vector<double>, double>> rows;
  rows.reserve(n);
  for (const auto& s : samples) rows.emplace_back(enc.encode(s), s.time_s);
  std::sort(rows.begin(), rows.end());  // canonical order

  std::vector<std::vector<double>> x(n);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = std::move(rows[i].first);
    y[i] = rows[i].second;
  }

  const std::size_t width = static_cast<std::size_t>(enc.width());
  std::vector<std::vector<std::uint32_t>> sorted(width);
  for (std::size_t f = 0; f < width; ++f) {
    auto& order = sorted[f];
    order.resize(n);
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return x[a][f] < x[b][f]; });
  }

  double base = 0.0;
  for (double v : y) base += v;
  base /= double(n);

  std::vector<double> fitted(n, base);
  std::vector<double> residual(n);
  std::vector<RegressionTree> trees;
  trees.reserve(static_cast<std::size_t>(params.tree_count));
  detail::TreeBuilder builder(x, sorted, params);
  std::vector<int> leaf_of_row;
  for (int t = 0; t < params.tree_count; ++t) {
    for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - fitted[i];
    RegressionTree tree = builder.build(residual, leaf_of_row);
    for (std::size_t i = 0; i < n; ++i)
      fitted[i] += params.shrinkage *
                   tree.nodes[static_cast<std::size_t>(leaf_of_row[i])].value;
    trees.push_back(std::move(tree));
  }
  return TreeEnsemble(base, params, std::move(enc), std::move(trees));
}

/// Uniformly random half/half split; with an odd count the training half
/// gets the extra sample.
inline std::pair<std::vector<TrainingSample>, std::vector<TrainingSample>>
split_train_eval(const std::vector<TrainingSample>& samples, Rng& rng) {
  if (samples.size() < 2) throw Error("train/eval split needs at least 2 samples");
  std::vector<std::size_t> perm(samples.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = perm.size() - 1; i > 0; --i)
    std::swap(perm[i], perm[uniform_index(rng, i + 1)]);
  const std::size_t n_train = (samples.size() + 1) / 2;
  std::pair<std::vector<TrainingSample>, std::vector<TrainingSample>> out;
  for (std::size_t i = 0; i < perm.size(); ++i)
    (i < n_train ? out.first : out.second).push_back(samples[perm[i]]);
  return out;
}

// ---------------------------------------------------------------------------
// Accuracy reports

enum class GroupBy { side, threads, affinity, fraction, input_size };

inline std::string_view to_string(GroupBy g) {
  switch (g) {
    case GroupBy::side: return "side";
    case GroupBy::threads: return "threads";
    case GroupBy::affinity: return "affinity";
    case GroupBy::fraction: return "fraction";
    case GroupBy::input_size: return "input_size";
  }
  return "?";
}

inline GroupBy group_by_from_string(std::string_view text) {
  for (GroupBy g : {GroupBy::side, GroupBy::threads, GroupBy::affinity,
                    GroupBy::fraction, GroupBy::input_size})
    if (text == to_string(g)) return g;
  throw Error("unknown group-by feature '" + std::string(text) + "'");
}

/// Group key: numeric features order by value, categorical by label.
struct GroupKey {
  double number = 0.0;
  std::string label;

  friend auto operator<=>(const GroupKey&, const GroupKey&) = default;
};

struct PredictionRecord {
  TrainingSample sample;
  double predicted_s = 0.0;
  double absolute_error_s = 0.0;
  double percent_error = 0.0;
};

struct ErrorSummary {
  std::string group;
  std::size_t count = 0;
  double mean_absolute_error_s = 0.0;
  double mean_percent_error = 0.0;
};

struct ErrorReport {
  GroupBy group_by = GroupBy::threads;
  std::vector<ErrorSummary> groups;  // ordered by group key
  ErrorSummary overall;
  std::vector<PredictionRecord> records;
};

inline GroupKey group_key(const TrainingSample& s, GroupBy g) {
  switch (g) {
    case GroupBy::side: return {0.0, std::string(to_string(s.side))};
    case GroupBy::threads: return {double(s.threads), std::to_string(s.threads)};
    case GroupBy::affinity: return {0.0, s.affinity};
    case GroupBy::fraction: return {double(s.fraction), std::to_string(s.fraction)};
    case GroupBy::input_size: return {s.input_size, format_double(s.input_size)};
  }
  return {};
}

/// Per-sample absolute and percent errors, averaged overall and per group.
inline ErrorReport evaluate_model(const TreeEnsemble& model,
                                  const std::vector<TrainingSample>& eval,
                                  GroupBy group_by) {
  if (eval.empty()) throw Error("cannot evaluate a model on an empty sample set");
  ErrorReport report;
  report.group_by = group_by;
  struct Acc {
    std::size_t n = 0;
    double abs = 0.0, pct = 0.0;
  };
  std::map<GroupKey, Acc> groups;
  Acc all;
  for (const auto& s : eval) {
    PredictionRecord rec{s, predict(model, s), 0.0, 0.0};
    rec.absolute_error_s = absolute_error(s.time_s, rec.predicted_s);
    rec.percent_error = percent_error(s.time_s, rec.predicted_s);
    Acc& a = groups[group_key(s, group_by)];
    for (Acc* acc : {&a, &all}) {
      ++acc->n;
      acc->abs += rec.absolute_error_s;
      acc->pct += rec.percent_error;
    }
    report.records.push_back(std::move(rec));
  }
  auto summarize = [](std::string name, const Acc& a) {
    return ErrorSummary{std::move(name), a.n, a.abs / double(a.n), a.pct / double(a.n)};
  };
  for (const auto& [key, acc] : groups) report.groups.push_back(summarize(key.label, acc));
  report.overall = summarize("all", all);
  return report;
}

// ---------------------------------------------------------------------------
// Model documents

inline constexpr int kModelFormatVersion = 1;

inline nlohmann::json model_to_json(const TreeEnsemble& model) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& tree : model.trees()) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : tree.nodes) {
      if (n.is_leaf())
        nodes.push_back({{"leaf", n.value}});
      else
        nodes.push_back({{"feature", n.feature},
                         {"threshold", n.threshold},
                         {"left", n.left},
                         {"right", n.right}});
    }
    trees.push_back(std::move(nodes));
  }
  const auto& p = model.params();
  return {{"format", "hetune-gbrt"},
          {"version", kModelFormatVersion},
          {"base_prediction", model.base_prediction()},
          {"shrinkage", p.shrinkage},
          {"hyperparameters",
           {{"tree_count", p.tree_count},
            {"max_depth", p.max_depth},
            {"min_samples_leaf", p.min_samples_leaf}}},
          {"encoding",
           {{"numeric", {"threads", "fraction", "input_size"}},
            {"sides", model.encoding().sides()},
            {"affinities", model.encoding().affinities()}}},
          {"trees", std::move(trees)}};
}

inline TreeEnsemble model_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw Error("model: document must be a JSON object");
  if (!doc.contains("version")) throw Error("model: missing 'version'");
  const auto& ver = doc.at("version");
  if (!ver.is_number_integer() || ver.get<int>() != kModelFormatVersion)
    throw Error("model: unsupported version " + ver.dump() + " (supported: " +
                std::to_string(kModelFormatVersion) + ")");
  try {
    BoostingParams p;
    const auto& hp = doc.at("hyperparameters");
    p.tree_count = hp.at("tree_count").get<int>();
    p.max_depth = hp.at("max_depth").get<int>();
    p.min_samples_leaf = hp.at("min_samples_leaf").get<int>();
    p.shrinkage = doc.at("shrinkage").get<double>();
    p.validate();
    const auto& e = doc.at("encoding");
    FeatureEncoding enc(e.at("sides").get<std::vector<std::string>>(),
                        e.at("affinities").get<std::vector<std::string>>());

    std::vector<RegressionTree> trees;
    std::size_t t_index = 0;
    for (const auto& jt : doc.at("trees")) {
      const std::string where = "model: trees[" + std::to_string(t_index++) + "]";
      RegressionTree tree;
      for (const auto& jn : jt) {
        TreeNode n;
        if (jn.contains("leaf")) {
          n.value = jn.at("leaf").get<double>();
        } else {
          n.feature = jn.at("feature").get<int>();
          n.threshold = jn.at("threshold").get<double>();
          n.left = jn.at("left").get<int>();
          n.right = jn.at("right").get<int>();
        }
        tree.nodes.push_back(n);
      }
      const int count = int(tree.nodes.size());
      if (count == 0) throw Error(where + ": no nodes");
      for (const auto& n : tree.nodes) {
        if (n.is_leaf()) continue;
        if (n.feature >= enc.width() || n.left <= 0 || n.left >= count ||
            n.right <= 0 || n.right >= count)
          throw Error(where + ": node references out of range");
      }
      trees.push_back(std::move(tree));
    }
    if (int(trees.size()) != p.tree_count)
      throw Error("model: tree_count does not match the number of trees");
    return TreeEnsemble(doc.at("base_prediction").get<double>(), p, std::move(enc),
                        std::move(trees));
  } catch (const nlohmann::json::exception& ex) {
    throw Error(std::string("model: ") + ex.what());
  }
}

inline void save_model(std::ostream& out, const TreeEnsemble& model) {
  out << model_to_json(model).dump(1) << '\n';
}

inline TreeEnsemble load_model(std::istream& in) {
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(std::string("model: ") + e.what());
  }
  return model_from_json(doc);
}

}  // namespace hetune
