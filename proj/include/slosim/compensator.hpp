#pragma once

#include <cstddef>
#include <deque>
#include <span>
#include <string>
#include <vector>

#include "slosim/forecaster.hpp"
#include "slosim/trace.hpp"

namespace slosim {

// Recent signed forecast errors (actual - forecast), most recent first.
class ErrorRing {
 public:
  explicit ErrorRing(std::size_t capacity = 5) : capacity_(capacity) {}

  void push(double error) {
    errors_.push_front(error);
    if (errors_.size() > capacity_) errors_.pop_back();
  }

  bool full() const { return errors_.size() == capacity_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return errors_.size(); }
  double at(std::size_t i) const { return errors_[i]; }  // 0 = most recent

 private:
  std::size_t capacity_;
  std::deque<double> errors_;
};

inline void push_error(ErrorRing& ring, double actual, double forecast_y) {
  ring.push(actual - forecast_y);
}

enum class CompKind { Identity, Linear, BoostedTrees };

std::string comp_kind_name(CompKind k);
CompKind comp_kind_from_name(const std::string& name);

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf value
};

struct Tree {
  std::vector<TreeNode> nodes;
  double predict(std::span<const double> x) const;
};

struct TrainingReport {
  double mae_train = 0.0;
  double mae_cv = 0.0;
  double mae_test = 0.0;
  bool ridge_fallback = false;
};

// Feature order is fixed: [y, y_upp, y_low, e_1 .. e_m], m = ring capacity.
struct CompensatorModel {
  CompKind kind = CompKind::Identity;
  std::size_t ring_capacity = 5;
  std::vector<double> linear;  // intercept + one coefficient per feature
  double base_score = 0.0;
  double learning_rate = 0.1;
  std::vector<Tree> trees;
  TrainingReport report;

  std::size_t feature_count() const { return 3 + ring_capacity; }
  double evaluate(std::span<const double> features) const;
};

struct Dataset {
  std::size_t n_features = 0;
  std::vector<double> x;  // row-major, rows * n_features
  std::vector<double> y;

  std::size_t rows() const { return y.size(); }
  std::span<const double> row(std::size_t r) const {
    return {x.data() + r * n_features, n_features};
  }
};

// One row per interval t in [begin + m, end): features from the forecast for
// t plus the m realized errors at t-1..t-m; target is the actual count at t.
Dataset build_training_set(const WorkloadTrace& trace, const ForecastModel& model,
                           std::size_t begin, std::size_t end, std::size_t ring_capacity = 5);

struct GbtParams {
  int rounds = 200;
  int max_depth = 3;
  double learning_rate = 0.1;
};

// Linear: OLS over the features plus intercept (ridge 1e-6 fallback when
// singular, recorded in the report). Boosted trees: squared-loss gradient
// boosting with exact threshold search, no subsampling; fully deterministic.
// The report comes from a deterministic 80/20 head/tail split (5-fold
// contiguous CV inside the head); the returned model is trained on all rows.
CompensatorModel train(const Dataset& data, CompKind kind, const GbtParams& params = {});

struct Compensated {
  double y = 0.0;
  bool compensated = false;  // false: identity fallback (ring not full)
};

Compensated compensate(const CompensatorModel& model, const Forecast& forecast,
                       const ErrorRing& ring);

std::string to_json(const CompensatorModel& model);
CompensatorModel compensator_from_json(const std::string& text);

}  // namespace slosim
