#include "slosim/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "slosim/errors.hpp"
#include "slosim/mathfn.hpp"
#include "slosim/parallel.hpp"

namespace slosim::dist {

std::string family_name(Family f) {
  switch (f) {
    case Family::Exponential: return "exponential";
    case Family::Gamma: return "gamma";
    case Family::LogNormal: return "log-normal";
    case Family::Normal: return "normal";
    case Family::Weibull: return "weibull";
  }
  return "?";
}

Family family_from_name(const std::string& name) {
  for (Family f : kAllFamilies) {
    if (family_name(f) == name) return f;
  }
  throw ConfigError("unknown distribution family: " + name);
}

int family_param_count(Family f) { return f == Family::Exponential ? 1 : 2; }

double cdf(const Fitted& f, double x) {
  switch (f.family) {
    case Family::Exponential:
      return x <= 0.0 ? 0.0 : -std::expm1(-f.params[0] * x);
    case Family::Gamma:
      return x <= 0.0 ? 0.0 : math::gamma_p(f.params[0], x / f.params[1]);
    case Family::LogNormal:
      return x <= 0.0 ? 0.0 : math::normal_cdf((std::log(x) - f.params[0]) / f.params[1]);
    case Family::Normal:
      return math::normal_cdf((x - f.params[0]) / f.params[1]);
    case Family::Weibull:
      return x <= 0.0 ? 0.0 : -std::expm1(-std::pow(x / f.params[1], f.params[0]));
  }
  return 0.0;
}

namespace {

double gamma_quantile(double shape, double scale, double q) {
  // Wilson-Hilferty start, then bracketed Newton on P(shape, t) in scale-free
  // units.
  double z = math::normal_quantile(q);
  double c = 1.0 - 1.0 / (9.0 * shape) + z / (3.0 * std::sqrt(shape));
  double t = shape * c * c * c;
  if (!(t > 0.0)) t = shape * std::exp((std::log(q) + std::lgamma(shape + 1.0)) / shape);
  if (!(t > 0.0) || !std::isfinite(t)) t = shape;

  double lo = 0.0;
  double hi = t;
  while (math::gamma_p(shape, hi) < q) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) break;
  }
  for (int it = 0; it < 200; ++it) {
    double p = math::gamma_p(shape, t);
    double logpdf = (shape - 1.0) * std::log(t) - t - std::lgamma(shape);
    double pdf = std::exp(logpdf);
    double step = pdf > 0.0 ? (p - q) / pdf : 0.0;
    double next = t - step;
    if (!(next > lo && next < hi) || step == 0.0) next = 0.5 * (lo + hi);
    if (p > q) {
      hi = t;
    } else {
      lo = t;
    }
    if (std::fabs(next - t) <= 1e-9 * std::max(1.0, t)) {
      t = next;
      break;
    }
    t = next;
  }
  return t * scale;
}

}  // namespace

double quantile(const Fitted& f, double q) {
  if (!(q > 0.0 && q < 1.0)) {
    throw RangeError("quantile: q must lie in (0,1), got " + std::to_string(q));
  }
  switch (f.family) {
    case Family::Exponential:
      return -std::log1p(-q) / f.params[0];
    case Family::Gamma:
      return gamma_quantile(f.params[0], f.params[1], q);
    case Family::LogNormal:
      return std::exp(f.params[0] + f.params[1] * math::normal_quantile(q));
    case Family::Normal:
      return f.params[0] + f.params[1] * math::normal_quantile(q);
    case Family::Weibull:
      return f.params[1] * std::pow(-std::log1p(-q), 1.0 / f.params[0]);
  }
  return 0.0;
}

double log_likelihood(const Fitted& f, std::span<const double> xs) {
  auto n = xs.size();
  switch (f.family) {
    case Family::Exponential: {
      double rate = f.params[0];
      double sum = par::sum_indexed(n, [&](std::size_t i) { return xs[i]; });
      return static_cast<double>(n) * std::log(rate) - rate * sum;
    }
    case Family::Gamma: {
      double a = f.params[0], s = f.params[1];
      double sl = par::sum_indexed(n, [&](std::size_t i) { return std::log(xs[i]); });
      double sx = par::sum_indexed(n, [&](std::size_t i) { return xs[i]; });
      return (a - 1.0) * sl - sx / s -
             static_cast<double>(n) * (a * std::log(s) + std::lgamma(a));
    }
    case Family::LogNormal: {
      double mu = f.params[0], sg = f.params[1];
      double acc = par::sum_indexed(n, [&](std::size_t i) {
        double l = std::log(xs[i]);
        double z = (l - mu) / sg;
        return -l - 0.5 * z * z;
      });
      return acc - static_cast<double>(n) * std::log(sg * std::sqrt(2.0 * M_PI));
    }
    case Family::Normal: {
      double mu = f.params[0], sg = f.params[1];
      double acc = par::sum_indexed(n, [&](std::size_t i) {
        double z = (xs[i] - mu) / sg;
        return -0.5 * z * z;
      });
      return acc - static_cast<double>(n) * std::log(sg * std::sqrt(2.0 * M_PI));
    }
    case Family::Weibull: {
      double k = f.params[0], lam = f.params[1];
      double acc = par::sum_indexed(n, [&](std::size_t i) {
        double r = xs[i] / lam;
        return (k - 1.0) * std::log(xs[i]) - std::pow(r, k);
      });
      return acc + static_cast<double>(n) * (std::log(k) - k * std::log(lam));
    }
  }
  return 0.0;
}

namespace {

struct Moments {
  double mean = 0.0;
  double var = 0.0;  // MLE (biased) variance
  double mean_log = 0.0;
  double var_log = 0.0;
};

Moments moments(std::span<const double> xs) {
  auto n = xs.size();
  struct Sums {
    double x = 0, xx = 0, l = 0, ll = 0;
  };
  Sums s = par::chunked_reduce<Sums>(
      n, [] { return Sums{}; },
      [&](Sums& acc, std::size_t i) {
        double v = xs[i];
        double l = std::log(v);
        acc.x += v;
        acc.xx += v * v;
        acc.l += l;
        acc.ll += l * l;
      },
      [](Sums& a, const Sums& b) {
        a.x += b.x;
        a.xx += b.xx;
        a.l += b.l;
        a.ll += b.ll;
      });
  double dn = static_cast<double>(n);
  Moments m;
  m.mean = s.x / dn;
  m.var = std::max(0.0, s.xx / dn - m.mean * m.mean);
  m.mean_log = s.l / dn;
  m.var_log = std::max(0.0, s.ll / dn - m.mean_log * m.mean_log);
  return m;
}

[[noreturn]] void throw_degenerate(Family f) {
  throw DegenerateDataError("degenerate samples (zero variance) for family " + family_name(f));
}

Fitted fit_gamma(std::span<const double> xs, const Moments& m, const FitOptions& opt) {
  // Profile likelihood in the shape: solve log(a) - digamma(a) = s with
  // s = log(mean) - mean(log x); the scale follows as mean / shape.
  double s = std::log(m.mean) - m.mean_log;
  if (!(s > 1e-12)) throw_degenerate(Family::Gamma);
  double a = (3.0 - s + std::sqrt((s - 3.0) * (s - 3.0) + 24.0 * s)) / (12.0 * s);
  a = std::clamp(a, 1e-8, 1e8);
  std::ostringstream trace;
  for (int it = 0; it < opt.max_iters; ++it) {
    double f = std::log(a) - math::digamma(a) - s;
    double fp = 1.0 / a - math::trigamma(a);
    double next = a - f / fp;
    if (!(next > 0.0)) next = a / 2.0;
    trace << " " << it << ":" << a;
    if (std::fabs(next - a) <= opt.tol * std::max(1.0, a)) {
      a = next;
      return {Family::Gamma, {a, m.mean / a}};
    }
    a = next;
  }
  throw FitError("gamma MLE did not converge; shape iterates:" + trace.str());
}

Fitted fit_weibull(std::span<const double> xs, const Moments& m, const FitOptions& opt) {
  if (!(m.var_log > 1e-16)) throw_degenerate(Family::Weibull);
  auto n = xs.size();
  double xmax = *std::max_element(xs.begin(), xs.end());
  // Sums of (x/xmax)^k terms keep x^k in range for large shapes.
  auto sums = [&](double k) {
    struct S {
      double w = 0, wl = 0, wll = 0;
    };
    return par::chunked_reduce<S>(
        n, [] { return S{}; },
        [&](S& acc, std::size_t i) {
          double l = std::log(xs[i] / xmax);
          double w = std::exp(k * l);
          acc.w += w;
          acc.wl += w * l;
          acc.wll += w * l * l;
        },
        [](S& a, const S& b) {
          a.w += b.w;
          a.wl += b.wl;
          a.wll += b.wll;
        });
  };
  double k = M_PI / (std::sqrt(6.0 * m.var_log));
  k = std::clamp(k, 1e-3, 1e6);
  std::ostringstream trace;
  for (int it = 0; it < opt.max_iters; ++it) {
    auto s = sums(k);
    double f = s.wl / s.w + std::log(xmax) - 1.0 / k - m.mean_log;
    double fp = (s.wll * s.w - s.wl * s.wl) / (s.w * s.w) + 1.0 / (k * k);
    double next = k - f / fp;
    if (!(next > 0.0)) next = k / 2.0;
    trace << " " << it << ":" << k;
    if (std::fabs(next - k) <= opt.tol * std::max(1.0, k)) {
      k = next;
      auto sf = sums(k);
      double lambda = xmax * std::pow(sf.w / static_cast<double>(n), 1.0 / k);
      return {Family::Weibull, {k, lambda}};
    }
    k = next;
  }
  throw FitError("weibull MLE did not converge; shape iterates:" + trace.str());
}

}  // namespace

Fitted fit_mle(Family family, std::span<const double> xs, const FitOptions& opt) {
  if (xs.empty()) throw InsufficientDataError("fit_mle: empty sample");
  Moments m = moments(xs);
  switch (family) {
    case Family::Exponential:
      if (!(m.mean > 0.0)) throw DegenerateDataError("exponential MLE needs positive mean");
      return {Family::Exponential, {1.0 / m.mean}};
    case Family::Normal: {
      double sg = std::sqrt(m.var);
      if (!(sg > 0.0)) throw_degenerate(Family::Normal);
      return {Family::Normal, {m.mean, sg}};
    }
    case Family::LogNormal: {
      double sg = std::sqrt(m.var_log);
      if (!(sg > 0.0)) throw_degenerate(Family::LogNormal);
      return {Family::LogNormal, {m.mean_log, sg}};
    }
    case Family::Gamma:
      return fit_gamma(xs, m, opt);
    case Family::Weibull:
      return fit_weibull(xs, m, opt);
  }
  throw FitError("unknown family");
}

double sample(const Fitted& f, double u) { return quantile(f, u); }

}  // namespace slosim::dist
