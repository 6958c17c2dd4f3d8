#include "convhawkes/gamma_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

namespace convhawkes {

bool gamma_fit_possible(std::span<const double> samples) {
  if (samples.size() < 2) return false;
  if (std::any_of(samples.begin(), samples.end(), [](double x) { return !(x > 0.0) || !std::isfinite(x); }))
    return false;
  const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
  return *lo != *hi;
}

GammaParams fit_gamma(std::span<const double> samples) {
  if (samples.size() < 2) throw DataError("gamma fit needs at least two samples");
  double sum = 0.0, sum_log = 0.0;
  for (double x : samples) {
    if (!(x > 0.0) || !std::isfinite(x)) throw DataError("gamma fit needs strictly positive samples");
    sum += x;
    sum_log += std::log(x);
  }
  const double n = static_cast<double>(samples.size());
  const double mean = sum / n;
  const double s = std::log(mean) - sum_log / n;
  if (!(s > 0.0)) throw DataError("gamma fit needs samples that are not all equal");

  // Minka's closed-form start, then Newton in the shape.
  double a = (3.0 - s + std::sqrt((s - 3.0) * (s - 3.0) + 24.0 * s)) / (12.0 * s);
  for (int iter = 0; iter < 100; ++iter) {
    const double grad = std::log(a) - boost::math::digamma(a) - s;
    const double hess = 1.0 / a - boost::math::trigamma(a);
    double next = a - grad / hess;
    if (!(next > 0.0)) next = a / 2.0;
    const bool done = std::abs(next - a) <= 1e-14 * a;
    a = next;
    if (done) break;
  }
  if (!std::isfinite(a) || !(a > 0.0)) throw NumericError("gamma shape iteration diverged");
  return GammaParams{a, a / mean};
}

double gamma_survival(const GammaParams& g, double x) {
  if (x <= 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return boost::math::gamma_q(g.shape, g.rate * x);
}

double gamma_residual_survival(const GammaParams& g, double elapsed, double delta) {
  if (std::isinf(delta)) return 0.0;
  if (delta <= 0.0) return 1.0;
  const double num = gamma_survival(g, elapsed + delta);
  const double den = gamma_survival(g, elapsed);
  if (den > 1e-280) return std::clamp(num / den, 0.0, 1.0);
  // Deep tail: Q(a, x) ~ x^{a-1} e^{-x} / Gamma(a).
  const double x0 = g.rate * elapsed;
  const double x1 = g.rate * (elapsed + delta);
  return std::clamp(std::exp((g.shape - 1.0) * std::log(x1 / x0) - (x1 - x0)), 0.0, 1.0);
}

}  // namespace convhawkes
