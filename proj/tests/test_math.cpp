#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "slosim/distributions.hpp"
#include "slosim/errors.hpp"
#include "slosim/mathfn.hpp"
#include "slosim/rng.hpp"

using namespace slosim;

// Reference values computed independently (SciPy 1.x special/stats).
TEST_CASE("digamma and trigamma match reference values") {
  const double xs[] = {0.5, 1.0, 3.7, 10.0, 123.456};
  const double dig[] = {-1.9635100260214235, -0.5772156649015329, 1.1671535393615113,
                        2.251752589066721, 4.811829323828985};
  const double tri[] = {4.93480220054468, 1.6449340668482266, 0.31003785767003833,
                        0.10516633568168576, 0.008132945834278194};
  for (int i = 0; i < 5; ++i) {
    CHECK(math::digamma(xs[i]) == doctest::Approx(dig[i]).epsilon(1e-12));
    CHECK(math::trigamma(xs[i]) == doctest::Approx(tri[i]).epsilon(1e-12));
  }
}

TEST_CASE("regularized incomplete gamma matches reference values") {
  struct Case {
    double a, x, p;
  };
  const Case cases[] = {{0.5, 0.3, 0.5614219739190003},
                        {2.0, 1.0, 0.2642411176571153},
                        {5.0, 10.0, 0.9707473119230389},
                        {10.0, 3.0, 0.0011024881301154815},
                        {100.0, 95.0, 0.3173568111698001}};
  for (const auto& c : cases) {
    CHECK(math::gamma_p(c.a, c.x) == doctest::Approx(c.p).epsilon(1e-12));
  }
}

TEST_CASE("normal quantile matches reference values and inverts the CDF") {
  CHECK(math::normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(math::normal_quantile(0.95) == doctest::Approx(1.6448536269514722).epsilon(1e-12));
  CHECK(math::normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK(math::normal_quantile(1e-10) == doctest::Approx(-6.361340902404056).epsilon(1e-10));
  CHECK(math::normal_quantile(0.3) == doctest::Approx(-0.5244005127080409).epsilon(1e-12));
  for (double p : {0.001, 0.1, 0.42, 0.7, 0.999}) {
    CHECK(math::normal_cdf(math::normal_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
  }
  CHECK_THROWS(math::normal_quantile(0.0));
  CHECK_THROWS(math::normal_quantile(1.0));
}

TEST_CASE("quantile helpers") {
  std::vector<double> xs = {5.0, 1.0, 3.0, 2.0, 4.0};
  CHECK(math::quantile_type7(xs, 0.0) == 1.0);
  CHECK(math::quantile_type7(xs, 1.0) == 5.0);
  CHECK(math::quantile_type7(xs, 0.5) == 3.0);
  CHECK(math::quantile_type7(xs, 0.25) == 2.0);
  CHECK(math::quantile_nearest_rank(xs, 0.95) == 5.0);
  CHECK(math::quantile_nearest_rank(xs, 0.5) == 3.0);
}

TEST_CASE("rng streams are deterministic and keyed") {
  Rng a(7, 1), b(7, 1), c(7, 2);
  for (int i = 0; i < 100; ++i) {
    double u = a.next_u01();
    CHECK(u == b.next_u01());
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
  bool differs = false;
  Rng a2(7, 1);
  for (int i = 0; i < 16; ++i) differs |= a2.next_u64() != c.next_u64();
  CHECK(differs);
}

TEST_CASE("closed-form quantiles match reference values") {
  using dist::Family;
  CHECK(dist::quantile({Family::Exponential, {2.0}}, 0.95) ==
        doctest::Approx(1.497866136776995).epsilon(1e-12));
  CHECK(dist::quantile({Family::Normal, {1.0, 0.1}}, 0.95) ==
        doctest::Approx(1.1644853626951472).epsilon(1e-12));
  CHECK(dist::quantile({Family::Gamma, {2.0, 0.1}}, 0.95) ==
        doctest::Approx(0.4743864518390577).epsilon(1e-9));
  CHECK(dist::quantile({Family::Weibull, {1.5, 2.0}}, 0.95) ==
        doctest::Approx(4.156221275069113).epsilon(1e-12));
  CHECK(dist::quantile({Family::LogNormal, {-1.0, 0.3}}, 0.95) ==
        doctest::Approx(0.6025745348858692).epsilon(1e-12));
}

TEST_CASE("quantile is strictly increasing in q and inverts the CDF") {
  std::vector<dist::Fitted> fits = {{dist::Family::Exponential, {1.7}},
                                    {dist::Family::Gamma, {2.3, 0.4}},
                                    {dist::Family::LogNormal, {-0.5, 0.6}},
                                    {dist::Family::Normal, {3.0, 0.5}},
                                    {dist::Family::Weibull, {1.8, 1.1}}};
  for (const auto& f : fits) {
    double prev = -1e300;
    for (double q = 0.05; q < 1.0; q += 0.05) {
      double x = dist::quantile(f, q);
      CHECK(x > prev);
      prev = x;
      CHECK(dist::cdf(f, x) == doctest::Approx(q).epsilon(1e-7));
    }
    CHECK_THROWS_AS(dist::quantile(f, 0.0), RangeError);
    CHECK_THROWS_AS(dist::quantile(f, 1.5), RangeError);
  }
}

TEST_CASE("exponential MLE is the closed form 1/mean") {
  std::vector<double> xs = {0.25, 0.75};
  auto f = dist::fit_mle(dist::Family::Exponential, xs);
  CHECK(f.params[0] == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("zero-variance samples raise degenerate-data errors") {
  std::vector<double> xs = {1.0, 1.0, 1.0};
  CHECK_THROWS_AS(dist::fit_mle(dist::Family::Normal, xs), DegenerateDataError);
  CHECK_THROWS_AS(dist::fit_mle(dist::Family::LogNormal, xs), DegenerateDataError);
  CHECK_THROWS_AS(dist::fit_mle(dist::Family::Gamma, xs), DegenerateDataError);
  CHECK_THROWS_AS(dist::fit_mle(dist::Family::Weibull, xs), DegenerateDataError);
}

namespace {

std::vector<double> draw(const dist::Fitted& f, std::size_t n, std::uint64_t seed) {
  Rng rng(seed, 0);
  std::vector<double> xs(n);
  for (auto& x : xs) x = dist::sample(f, rng.next_u01());
  return xs;
}

// Independent oracle: dense grid maximization of the gamma log-likelihood,
// written out directly rather than through the library's likelihood path.
std::pair<double, double> gamma_grid_mle(const std::vector<double>& xs, double shape_lo,
                                         double shape_hi, double scale_lo, double scale_hi,
                                         int steps) {
  double sum = 0.0, sum_log = 0.0;
  for (double x : xs) {
    sum += x;
    sum_log += std::log(x);
  }
  double n = static_cast<double>(xs.size());
  double best = -1e300, best_shape = 0.0, best_scale = 0.0;
  for (int i = 0; i <= steps; ++i) {
    double a = shape_lo + (shape_hi - shape_lo) * i / steps;
    for (int j = 0; j <= steps; ++j) {
      double s = scale_lo + (scale_hi - scale_lo) * j / steps;
      double ll = (a - 1.0) * sum_log - sum / s - n * (a * std::log(s) + std::lgamma(a));
      if (ll > best) {
        best = ll;
        best_shape = a;
        best_scale = s;
      }
    }
  }
  return {best_shape, best_scale};
}

}  // namespace

TEST_CASE("gamma MLE agrees with a dense grid-search likelihood oracle") {
  auto xs = draw({dist::Family::Gamma, {2.0, 0.1}}, 10000, 42);
  auto fit = dist::fit_mle(dist::Family::Gamma, xs);
  CHECK(std::fabs(fit.params[0] - 2.0) / 2.0 < 0.05);  // within 5% of truth

  auto [oracle_shape, oracle_scale] = gamma_grid_mle(xs, 1.5, 2.5, 0.07, 0.14, 400);
  // The Newton solution must sit within one grid cell of the oracle optimum.
  CHECK(std::fabs(fit.params[0] - oracle_shape) < (2.5 - 1.5) / 400 * 2);
  CHECK(std::fabs(fit.params[1] - oracle_scale) < (0.14 - 0.07) / 400 * 2);
}

TEST_CASE("weibull MLE recovers generator parameters") {
  auto xs = draw({dist::Family::Weibull, {1.5, 2.0}}, 10000, 9);
  auto fit = dist::fit_mle(dist::Family::Weibull, xs);
  CHECK(std::fabs(fit.params[0] - 1.5) / 1.5 < 0.05);
  CHECK(std::fabs(fit.params[1] - 2.0) / 2.0 < 0.05);
}

TEST_CASE("normal and log-normal MLE recover generator parameters") {
  auto xs = draw({dist::Family::Normal, {5.0, 0.7}}, 10000, 3);
  auto f = dist::fit_mle(dist::Family::Normal, xs);
  CHECK(std::fabs(f.params[0] - 5.0) < 0.05);
  CHECK(std::fabs(f.params[1] - 0.7) < 0.05);

  auto ys = draw({dist::Family::LogNormal, {-1.0, 0.3}}, 10000, 4);
  auto g = dist::fit_mle(dist::Family::LogNormal, ys);
  CHECK(std::fabs(g.params[0] + 1.0) < 0.02);
  CHECK(std::fabs(g.params[1] - 0.3) < 0.02);
}
