#pragma once

#include <array>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace slosim::dist {

// Candidate execution-time families. Enum order is alphabetical by canonical
// name, which doubles as the final ranking tie-break.
enum class Family { Exponential, Gamma, LogNormal, Normal, Weibull };

inline constexpr std::array<Family, 5> kAllFamilies = {
    Family::Exponential, Family::Gamma, Family::LogNormal, Family::Normal, Family::Weibull};

std::string family_name(Family f);
Family family_from_name(const std::string& name);
int family_param_count(Family f);

// Parameter layout by family:
//   exponential: {rate}
//   gamma:       {shape, scale}
//   log-normal:  {mu, sigma}   (of log(x))
//   normal:      {mu, sigma}
//   weibull:     {shape, scale}
struct Fitted {
  Family family = Family::Normal;
  std::vector<double> params;
  double ks = std::numeric_limits<double>::quiet_NaN();
};

struct FitOptions {
  double tol = 1e-9;
  int max_iters = 200;
};

double cdf(const Fitted& f, double x);

// Inverse CDF at q in (0,1); closed form where available, otherwise a
// bracketed Newton iteration to tol 1e-9. Throws RangeError outside (0,1).
double quantile(const Fitted& f, double q);

double log_likelihood(const Fitted& f, std::span<const double> xs);

// Maximum-likelihood fit. Closed form for normal, log-normal and exponential;
// Newton on the profile likelihood for gamma and weibull. Throws
// DegenerateDataError on zero-variance input for families that need spread,
// FitError (with the iteration trace) on non-convergence.
Fitted fit_mle(Family family, std::span<const double> xs, const FitOptions& opt = {});

// Inverse-CDF draw; u in (0,1).
double sample(const Fitted& f, double u);

}  // namespace slosim::dist
