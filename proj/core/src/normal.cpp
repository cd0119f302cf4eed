#include <array>
#include <cmath>
#include <numbers>

#include "nbreg/penalty.hpp"

namespace nbreg {

namespace {

// Rational approximation of the lower-tail quantile (Acklam), relative error
// about 1.15e-9 before refinement.
constexpr std::array<double, 6> kA = {-3.969683028665376e+01, 2.209460984245205e+02,
                                      -2.759285104469687e+02, 1.383577518672690e+02,
                                      -3.066479806614716e+01, 2.506628277459239e+00};
constexpr std::array<double, 5> kB = {-5.447609879822406e+01, 1.615858368580409e+02,
                                      -1.556989798598866e+02, 6.680131188771972e+01,
                                      -1.328068155288572e+01};
constexpr std::array<double, 6> kC = {-7.784894002430293e-03, -3.223964580411365e-01,
                                      -2.400758277161838e+00, -2.549732539343734e+00,
                                      4.374664141464968e+00,  2.938163982698783e+00};
constexpr std::array<double, 4> kD = {7.784695709041462e-03, 3.224671290700398e-01,
                                      2.445134137142996e+00, 3.754408661907416e+00};

constexpr double kLowBreak = 0.02425;

double rational_quantile(double q) {
  if (q < kLowBreak) {
    const double t = std::sqrt(-2.0 * std::log(q));
    return (((((kC[0] * t + kC[1]) * t + kC[2]) * t + kC[3]) * t + kC[4]) * t + kC[5]) /
           ((((kD[0] * t + kD[1]) * t + kD[2]) * t + kD[3]) * t + 1.0);
  }
  const double u = q - 0.5;
  const double t = u * u;
  return (((((kA[0] * t + kA[1]) * t + kA[2]) * t + kA[3]) * t + kA[4]) * t + kA[5]) * u /
         (((((kB[0] * t + kB[1]) * t + kB[2]) * t + kB[3]) * t + kB[4]) * t + 1.0);
}

// Quantile for q <= 0.5 with one Newton step on Phi(x) - q.
double lower_half_quantile(double q) {
  double x = rational_quantile(q);
  const double density = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  const double cdf = 0.5 * std::erfc(-x / std::numbers::sqrt2);
  x -= (cdf - q) / density;
  return x;
}

}  // namespace

double normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double inverse_normal_cdf(double q) {
  if (!(q > 0.0 && q < 1.0)) throw DomainError("inverse_normal_cdf requires q in (0, 1)");
  if (q == 0.5) return 0.0;
  // 1 - q is exact for q in [0.5, 1), so the upper half reuses the lower tail.
  if (q > 0.5) return -lower_half_quantile(1.0 - q);
  return lower_half_quantile(q);
}

}  // namespace nbreg
