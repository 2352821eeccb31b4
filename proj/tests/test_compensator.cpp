#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "slosim/compensator.hpp"
#include "slosim/errors.hpp"
#include "slosim/rng.hpp"

using namespace slosim;

namespace {

// Synthetic dataset with independent variation in every feature. The target
// is produced by `target_fn`, so the learned relation has a known oracle.
Dataset make_dataset(std::size_t rows, std::uint64_t seed,
                     double (*target_fn)(std::span<const double>)) {
  Dataset d;
  d.n_features = 8;
  Rng rng(seed, 0);
  for (std::size_t r = 0; r < rows; ++r) {
    double y = 50.0 + 100.0 * rng.next_u01();
    double upp = y + 20.0 * rng.next_u01();
    double low = std::max(0.0, y - 20.0 * rng.next_u01());
    d.x.push_back(y);
    d.x.push_back(upp);
    d.x.push_back(low);
    for (int e = 0; e < 5; ++e) d.x.push_back(40.0 * rng.next_u01() - 20.0);
    d.y.push_back(target_fn(d.row(r)));
  }
  return d;
}

double target_identity(std::span<const double> x) { return x[0]; }
double target_half_e1(std::span<const double> x) { return x[0] + 0.5 * x[3]; }
double target_piecewise(std::span<const double> x) { return x[3] > 10.0 ? x[0] + 30.0 : x[0]; }

}  // namespace

TEST_CASE("error ring keeps the five most recent errors in recency order") {
  ErrorRing ring(5);
  CHECK(!ring.full());
  for (int i = 1; i <= 5; ++i) push_error(ring, 100.0 + i, 100.0);
  CHECK(ring.full());
  CHECK(ring.at(0) == 5.0);  // most recent first
  CHECK(ring.at(4) == 1.0);
  push_error(ring, 100.0, 100.0);  // zero error recorded, oldest evicted
  CHECK(ring.at(0) == 0.0);
  CHECK(ring.at(4) == 2.0);
  CHECK(ring.size() == 5);
}

TEST_CASE("build_training_set sizes and errors") {
  SyntheticSpec spec;
  spec.base_level = 100.0;
  spec.harmonics = {{1440.0, 20.0, 0.0}};
  spec.length = 7000;
  auto trace = generate_synthetic(spec);
  auto model = fit_range(trace, 0, 2880, {{1440.0, 1}});

  auto data = build_training_set(trace, model, 2880, 2880 + 3005, 5);
  CHECK(data.rows() == 3000);
  CHECK(data.n_features == 8);

  CHECK_THROWS_AS(build_training_set(trace, model, 2880, 2884, 5), EmptyDatasetError);
  CHECK_THROWS_AS(build_training_set(trace, model, 2880, 9000, 5), RangeError);
  CHECK_THROWS_AS(build_training_set(trace, model, 2000, 6000, 5), RangeError);
}

TEST_CASE("perfect forecaster: error features vanish and target equals y") {
  SyntheticSpec spec;
  spec.base_level = 100.0;
  spec.length = 600;
  auto trace = generate_synthetic(spec);
  auto model = fit_range(trace, 0, 400, {{100.0, 1}});
  auto data = build_training_set(trace, model, 400, 600, 5);
  for (std::size_t r = 0; r < data.rows(); ++r) {
    auto row = data.row(r);
    for (int e = 0; e < 5; ++e) CHECK(std::fabs(row[3 + e]) < 0.01);
    CHECK(data.y[r] == doctest::Approx(row[0]).epsilon(1e-4));
  }
  auto linear = train(data, CompKind::Linear);
  CHECK(linear.report.mae_test < 1e-6);
}

TEST_CASE("linear training recovers a constructed 0.5 * e_1 relation") {
  auto data = make_dataset(400, 17, target_half_e1);
  auto model = train(data, CompKind::Linear);
  CHECK(model.linear[1] == doctest::Approx(1.0).epsilon(1e-6));  // y coefficient
  CHECK(model.linear[4] == doctest::Approx(0.5).epsilon(1e-6));  // e_1 coefficient
  CHECK(model.report.mae_test < 1e-6);

  Forecast f;
  f.y = 100.0;
  f.y_upp = 110.0;
  f.y_low = 90.0;
  ErrorRing ring(5);
  for (int i = 0; i < 4; ++i) ring.push(0.0);
  auto partial = compensate(model, f, ring);
  CHECK(!partial.compensated);  // ring not full: identity fallback, flagged
  CHECK(partial.y == 100.0);
  ring.push(20.0);  // e_1 = 20, the rest 0
  // compensate expects most-recent-first; refill exactly.
  ErrorRing ring2(5);
  for (int i = 0; i < 4; ++i) ring2.push(0.0);
  ring2.push(20.0);
  auto corrected = compensate(model, f, ring2);
  CHECK(corrected.compensated);
  CHECK(corrected.y == doctest::Approx(110.0).epsilon(1e-6));
}

TEST_CASE("boosted trees beat linear on a piecewise relation") {
  auto data = make_dataset(2000, 23, target_piecewise);
  auto linear = train(data, CompKind::Linear);
  auto trees = train(data, CompKind::BoostedTrees);
  CHECK(trees.report.mae_test < linear.report.mae_test);
  CHECK(trees.report.mae_test < 2.0);
}

TEST_CASE("compensation clamps negative outputs to zero") {
  CompensatorModel m;
  m.kind = CompKind::Linear;
  m.ring_capacity = 5;
  m.linear.assign(9, 0.0);
  m.linear[0] = -3.0;  // constant negative output
  Forecast f;
  f.y = 10.0;
  ErrorRing ring(5);
  for (int i = 0; i < 5; ++i) ring.push(0.0);
  CHECK(compensate(m, f, ring).y == 0.0);
}

TEST_CASE("identity kind returns the raw forecast for any input") {
  CompensatorModel m;  // identity
  Rng rng(4, 0);
  ErrorRing ring(5);
  for (int i = 0; i < 5; ++i) ring.push(100.0 * rng.next_u01() - 50.0);
  for (int i = 0; i < 50; ++i) {
    Forecast f;
    f.y = 200.0 * rng.next_u01();
    f.y_low = f.y * 0.9;
    f.y_upp = f.y * 1.1;
    auto c = compensate(m, f, ring);
    CHECK(c.compensated);
    CHECK(c.y == f.y);
  }
}

TEST_CASE("boosted-tree training is deterministic") {
  auto data = make_dataset(500, 99, target_piecewise);
  auto a = train(data, CompKind::BoostedTrees);
  auto b = train(data, CompKind::BoostedTrees);
  CHECK(to_json(a) == to_json(b));  // bit-identical serialized models
}

TEST_CASE("compensated MAE beats uncompensated by 10x on constructed data") {
  auto data = make_dataset(1000, 31, target_half_e1);
  auto model = train(data, CompKind::Linear);
  double mae_comp = 0.0, mae_raw = 0.0;
  for (std::size_t r = 0; r < data.rows(); ++r) {
    auto row = data.row(r);
    mae_comp += std::fabs(model.evaluate(row) - data.y[r]);
    mae_raw += std::fabs(row[0] - data.y[r]);
  }
  CHECK(mae_raw > 10.0 * std::max(mae_comp, 1e-12));
}

TEST_CASE("model JSON round trip preserves every tree exactly") {
  auto data = make_dataset(300, 8, target_piecewise);
  auto model = train(data, CompKind::BoostedTrees, GbtParams{25, 3, 0.1});
  auto restored = compensator_from_json(to_json(model));
  CHECK(to_json(restored) == to_json(model));
  for (std::size_t r = 0; r < 20; ++r) {
    CHECK(restored.evaluate(data.row(r)) == model.evaluate(data.row(r)));
  }

  auto lin = train(data, CompKind::Linear);
  auto lin2 = compensator_from_json(to_json(lin));
  CHECK(lin2.linear == lin.linear);
}

TEST_CASE("training preconditions") {
  auto small = make_dataset(50, 2, target_identity);
  CHECK_THROWS_AS(train(small, CompKind::BoostedTrees), InsufficientDataError);
  auto tiny = make_dataset(5, 2, target_identity);
  CHECK_THROWS_AS(train(tiny, CompKind::Linear), InsufficientDataError);
}
