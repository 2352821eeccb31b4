#include "slosim/compensator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "slosim/errors.hpp"
#include "slosim/linalg.hpp"
#include "slosim/parallel.hpp"

namespace slosim {

std::string comp_kind_name(CompKind k) {
  switch (k) {
    case CompKind::Identity: return "identity";
    case CompKind::Linear: return "linear";
    case CompKind::BoostedTrees: return "boosted_trees";
  }
  return "?";
}

CompKind comp_kind_from_name(const std::string& name) {
  if (name == "identity") return CompKind::Identity;
  if (name == "linear") return CompKind::Linear;
  if (name == "boosted_trees") return CompKind::BoostedTrees;
  throw ConfigError("unknown compensator kind: " + name);
}

double Tree::predict(std::span<const double> x) const {
  int i = 0;
  while (nodes[i].feature >= 0) {
    i = x[static_cast<std::size_t>(nodes[i].feature)] < nodes[i].threshold ? nodes[i].left
                                                                           : nodes[i].right;
  }
  return nodes[i].value;
}

double CompensatorModel::evaluate(std::span<const double> features) const {
  switch (kind) {
    case CompKind::Identity:
      return features[0];
    case CompKind::Linear: {
      double v = linear[0];
      for (std::size_t i = 0; i < features.size(); ++i) v += linear[i + 1] * features[i];
      return v;
    }
    case CompKind::BoostedTrees: {
      double v = base_score;
      for (const auto& t : trees) v += learning_rate * t.predict(features);
      return v;
    }
  }
  return features[0];
}

Dataset build_training_set(const WorkloadTrace& trace, const ForecastModel& model,
                           std::size_t begin, std::size_t end, std::size_t ring_capacity) {
  if (end > trace.size() || begin > end) {
    throw RangeError("build_training_set: range extends beyond the trace");
  }
  if (static_cast<std::int64_t>(begin) < model.window_end) {
    throw RangeError("build_training_set: range begins before the trained window end");
  }
  const std::size_t m = ring_capacity;
  if (end - begin <= m) {
    throw EmptyDatasetError("build_training_set: " + std::to_string(end - begin) +
                            " points cannot fill an error ring of " + std::to_string(m));
  }

  std::vector<Forecast> forecasts(end - begin);
  par::for_each_index(end - begin, [&](std::size_t i) {
    forecasts[i] = predict(model, static_cast<std::int64_t>(begin + i));
  });

  Dataset data;
  data.n_features = 3 + m;
  data.x.reserve((end - begin - m) * data.n_features);
  data.y.reserve(end - begin - m);
  for (std::size_t t = begin + m; t < end; ++t) {
    const Forecast& f = forecasts[t - begin];
    data.x.push_back(f.y);
    data.x.push_back(f.y_upp);
    data.x.push_back(f.y_low);
    for (std::size_t i = 1; i <= m; ++i) {
      std::size_t prev = t - i;
      data.x.push_back(static_cast<double>(trace.counts[prev]) - forecasts[prev - begin].y);
    }
    data.y.push_back(static_cast<double>(trace.counts[t]));
  }
  return data;
}

namespace {

std::vector<double> fit_linear(const Dataset& data, const std::vector<std::size_t>& rows,
                               bool* ridge_fallback) {
  const std::size_t p = data.n_features + 1;
  std::vector<double> xtx(p * p, 0.0), xty(p, 0.0), row(p);
  for (std::size_t r : rows) {
    row[0] = 1.0;
    auto feats = data.row(r);
    std::copy(feats.begin(), feats.end(), row.begin() + 1);
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = 0; j <= i; ++j) xtx[i * p + j] += row[i] * row[j];
      xty[i] += row[i] * data.y[r];
    }
  }
  try {
    return linalg::cholesky_solve(xtx, xty, p);
  } catch (const linalg::SingularMatrixError&) {
    if (ridge_fallback) *ridge_fallback = true;
    for (std::size_t i = 0; i < p; ++i) xtx[i * p + i] += 1e-6;
    return linalg::cholesky_solve(std::move(xtx), std::move(xty), p);
  }
}

struct SplitCandidate {
  bool valid = false;
  double gain = 0.0;
  double threshold = 0.0;
};

// Exact best split of one feature over the node members, scanned in presorted
// order; thresholds are midpoints between consecutive distinct values.
SplitCandidate best_split_for_feature(const Dataset& data, const std::vector<double>& residual,
                                      const std::vector<std::uint8_t>& member,
                                      const std::vector<std::uint32_t>& sorted_idx,
                                      std::size_t feature, double total_sum, double total_cnt) {
  SplitCandidate best;
  double left_sum = 0.0, left_cnt = 0.0;
  double prev_value = 0.0;
  bool have_prev = false;
  const double parent = total_sum * total_sum / total_cnt;
  for (std::uint32_t idx : sorted_idx) {
    if (!member[idx]) continue;
    double v = data.x[idx * data.n_features + feature];
    if (have_prev && v != prev_value && left_cnt > 0.0 && left_cnt < total_cnt) {
      double right_sum = total_sum - left_sum;
      double right_cnt = total_cnt - left_cnt;
      double gain = left_sum * left_sum / left_cnt + right_sum * right_sum / right_cnt - parent;
      if (!best.valid || gain > best.gain) {
        best.valid = true;
        best.gain = gain;
        best.threshold = 0.5 * (prev_value + v);
      }
    }
    left_sum += residual[idx];
    left_cnt += 1.0;
    prev_value = v;
    have_prev = true;
  }
  return best;
}

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& data, const std::vector<double>& residual,
              const std::vector<std::size_t>& rows, int max_depth)
      : data_(data), residual_(residual), max_depth_(max_depth), member_(data.rows(), 0) {
    sorted_.resize(data.n_features);
    for (std::size_t f = 0; f < data.n_features; ++f) {
      auto& order = sorted_[f];
      order.assign(rows.begin(), rows.end());
      std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        return data.x[a * data.n_features + f] < data.x[b * data.n_features + f];
      });
    }
  }

  Tree build(const std::vector<std::uint32_t>& rows) {
    Tree tree;
    grow(tree, rows, 0);
    return tree;
  }

 private:
  int grow(Tree& tree, const std::vector<std::uint32_t>& rows, int depth) {
    double sum = 0.0;
    for (std::uint32_t r : rows) sum += residual_[r];
    double cnt = static_cast<double>(rows.size());

    int self = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(TreeNode{});
    if (depth >= max_depth_ || rows.size() < 2) {
      tree.nodes[self].value = sum / cnt;
      return self;
    }

    for (std::uint32_t r : rows) member_[r] = 1;
    std::vector<SplitCandidate> cands(data_.n_features);
    par::for_each_index(data_.n_features, [&](std::size_t f) {
      cands[f] = best_split_for_feature(data_, residual_, member_, sorted_[f], f, sum, cnt);
    });
    for (std::uint32_t r : rows) member_[r] = 0;

    // Ties break to the lower feature index, then the lower threshold.
    int best_f = -1;
    SplitCandidate best;
    for (std::size_t f = 0; f < cands.size(); ++f) {
      if (!cands[f].valid) continue;
      if (best_f < 0 || cands[f].gain > best.gain ||
          (cands[f].gain == best.gain && cands[f].threshold < best.threshold)) {
        best = cands[f];
        best_f = static_cast<int>(f);
      }
    }
    if (best_f < 0 || best.gain <= 1e-12) {
      tree.nodes[self].value = sum / cnt;
      return self;
    }

    std::vector<std::uint32_t> left, right;
    left.reserve(rows.size());
    right.reserve(rows.size());
    for (std::uint32_t r : rows) {
      if (data_.x[r * data_.n_features + static_cast<std::size_t>(best_f)] < best.threshold) {
        left.push_back(r);
      } else {
        right.push_back(r);
      }
    }
    tree.nodes[self].feature = best_f;
    tree.nodes[self].threshold = best.threshold;
    tree.nodes[self].left = grow(tree, left, depth + 1);
    tree.nodes[self].right = grow(tree, right, depth + 1);
    return self;
  }

  const Dataset& data_;
  const std::vector<double>& residual_;
  int max_depth_;
  std::vector<std::uint8_t> member_;
  std::vector<std::vector<std::uint32_t>> sorted_;
};

struct GbtModel {
  double base = 0.0;
  std::vector<Tree> trees;
};

GbtModel fit_gbt(const Dataset& data, const std::vector<std::size_t>& rows,
                 const GbtParams& params) {
  GbtModel model;
  double sum = 0.0;
  for (std::size_t r : rows) sum += data.y[r];
  model.base = sum / static_cast<double>(rows.size());

  std::vector<double> residual(data.rows(), 0.0);
  for (std::size_t r : rows) residual[r] = data.y[r] - model.base;

  std::vector<std::uint32_t> row_ids(rows.begin(), rows.end());
  TreeBuilder builder(data, residual, rows, params.max_depth);
  for (int round = 0; round < params.rounds; ++round) {
    Tree tree = builder.build(row_ids);
    for (std::size_t r : rows) {
      residual[r] -= params.learning_rate * tree.predict(data.row(r));
    }
    model.trees.push_back(std::move(tree));
  }
  return model;
}

// Trains the requested kind on a row subset; returns a predictor closure.
CompensatorModel fit_kind(const Dataset& data, const std::vector<std::size_t>& rows, CompKind kind,
                          const GbtParams& params, bool* ridge_fallback) {
  CompensatorModel m;
  m.kind = kind;
  m.ring_capacity = data.n_features - 3;
  if (kind == CompKind::Linear) {
    m.linear = fit_linear(data, rows, ridge_fallback);
  } else if (kind == CompKind::BoostedTrees) {
    GbtModel g = fit_gbt(data, rows, params);
    m.base_score = g.base;
    m.learning_rate = params.learning_rate;
    m.trees = std::move(g.trees);
  }
  return m;
}

double mae_over(const CompensatorModel& m, const Dataset& data,
                const std::vector<std::size_t>& rows) {
  if (rows.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t r : rows) acc += std::fabs(m.evaluate(data.row(r)) - data.y[r]);
  return acc / static_cast<double>(rows.size());
}

}  // namespace

CompensatorModel train(const Dataset& data, CompKind kind, const GbtParams& params) {
  const std::size_t n = data.rows();
  if (kind == CompKind::BoostedTrees && n < 100) {
    throw InsufficientDataError("boosted_trees needs >= 100 rows, got " + std::to_string(n));
  }
  if (kind == CompKind::Linear && n < data.n_features + 1) {
    throw InsufficientDataError("linear compensator needs >= " +
                                std::to_string(data.n_features + 1) + " rows");
  }
  if (kind != CompKind::Identity && n == 0) {
    throw InsufficientDataError("empty training set");
  }

  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  std::size_t head = static_cast<std::size_t>(std::floor(0.8 * static_cast<double>(n)));
  std::vector<std::size_t> train_rows(all.begin(), all.begin() + head);
  std::vector<std::size_t> test_rows(all.begin() + head, all.end());

  TrainingReport report;
  if (!train_rows.empty()) {
    bool ridge = false;
    CompensatorModel head_model = fit_kind(data, train_rows, kind, params, &ridge);
    report.mae_train = mae_over(head_model, data, train_rows);
    report.mae_test = mae_over(head_model, data, test_rows);
    report.ridge_fallback = ridge;

    if (kind != CompKind::Identity && train_rows.size() >= 10) {
      double cv_abs = 0.0;
      std::size_t cv_n = 0;
      for (int fold = 0; fold < 5; ++fold) {
        std::size_t lo = train_rows.size() * fold / 5;
        std::size_t hi = train_rows.size() * (fold + 1) / 5;
        std::vector<std::size_t> fit_rows, hold_rows;
        for (std::size_t i = 0; i < train_rows.size(); ++i) {
          (i >= lo && i < hi ? hold_rows : fit_rows).push_back(train_rows[i]);
        }
        if (fit_rows.empty() || hold_rows.empty()) continue;
        CompensatorModel fold_model = fit_kind(data, fit_rows, kind, params, nullptr);
        for (std::size_t r : hold_rows) {
          cv_abs += std::fabs(fold_model.evaluate(data.row(r)) - data.y[r]);
        }
        cv_n += hold_rows.size();
      }
      report.mae_cv = cv_n > 0 ? cv_abs / static_cast<double>(cv_n) : 0.0;
    } else {
      report.mae_cv = report.mae_train;
    }
  }

  bool ridge = false;
  CompensatorModel model = fit_kind(data, all, kind, params, &ridge);
  report.ridge_fallback = report.ridge_fallback || ridge;
  model.report = report;
  return model;
}

Compensated compensate(const CompensatorModel& model, const Forecast& forecast,
                       const ErrorRing& ring) {
  if (!ring.full()) return Compensated{forecast.y, false};
  if (model.kind == CompKind::Identity) return Compensated{forecast.y, true};
  if (ring.capacity() != model.ring_capacity) {
    throw ConfigError("compensate: ring capacity does not match the trained model");
  }
  std::vector<double> features;
  features.reserve(model.feature_count());
  features.push_back(forecast.y);
  features.push_back(forecast.y_upp);
  features.push_back(forecast.y_low);
  for (std::size_t i = 0; i < ring.capacity(); ++i) features.push_back(ring.at(i));
  return Compensated{std::max(0.0, model.evaluate(features)), true};
}

namespace {
using nlohmann::json;
}

std::string to_json(const CompensatorModel& m) {
  json j;
  j["kind"] = comp_kind_name(m.kind);
  j["ring_capacity"] = m.ring_capacity;
  json names = json::array();
  names.push_back("y");
  names.push_back("y_upp");
  names.push_back("y_low");
  for (std::size_t i = 1; i <= m.ring_capacity; ++i) names.push_back("e_" + std::to_string(i));
  j["features"] = names;
  j["report"] = {{"mae_train", m.report.mae_train},
                 {"mae_cv", m.report.mae_cv},
                 {"mae_test", m.report.mae_test},
                 {"ridge_fallback", m.report.ridge_fallback}};
  if (m.kind == CompKind::Linear) j["linear"] = m.linear;
  if (m.kind == CompKind::BoostedTrees) {
    j["base_score"] = m.base_score;
    j["learning_rate"] = m.learning_rate;
    json trees = json::array();
    for (const auto& t : m.trees) {
      json nodes = json::array();
      for (const auto& nd : t.nodes) {
        nodes.push_back({{"feature", nd.feature},
                         {"threshold", nd.threshold},
                         {"left", nd.left},
                         {"right", nd.right},
                         {"value", nd.value}});
      }
      trees.push_back(std::move(nodes));
    }
    j["trees"] = std::move(trees);
  }
  return j.dump();
}

CompensatorModel compensator_from_json(const std::string& text) {
  json j = json::parse(text);
  CompensatorModel m;
  m.kind = comp_kind_from_name(j.at("kind").get<std::string>());
  m.ring_capacity = j.at("ring_capacity").get<std::size_t>();
  m.report.mae_train = j.at("report").at("mae_train").get<double>();
  m.report.mae_cv = j.at("report").at("mae_cv").get<double>();
  m.report.mae_test = j.at("report").at("mae_test").get<double>();
  m.report.ridge_fallback = j.at("report").at("ridge_fallback").get<bool>();
  if (m.kind == CompKind::Linear) m.linear = j.at("linear").get<std::vector<double>>();
  if (m.kind == CompKind::BoostedTrees) {
    m.base_score = j.at("base_score").get<double>();
    m.learning_rate = j.at("learning_rate").get<double>();
    for (const auto& t : j.at("trees")) {
      Tree tree;
      for (const auto& nd : t) {
        tree.nodes.push_back(TreeNode{nd.at("feature").get<int>(), nd.at("threshold").get<double>(),
                                      nd.at("left").get<int>(), nd.at("right").get<int>(),
                                      nd.at("value").get<double>()});
      }
      m.trees.push_back(std::move(tree));
    }
  }
  return m;
}

}  // namespace slosim
