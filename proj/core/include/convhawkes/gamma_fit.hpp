#pragma once

#include <span>

#include "convhawkes/domain.hpp"

namespace convhawkes {

// Maximum-likelihood gamma fit (shape, rate) by Newton iteration on
//   log(a) - digamma(a) = log(mean) - mean(log x).
// The rate follows from the first-order condition a / rate = mean.
// Throws DataError for fewer than two samples, nonpositive samples or a
// sample with no spread.
[[nodiscard]] GammaParams fit_gamma(std::span<const double> samples);

// Whether fit_gamma would accept the sample.
[[nodiscard]] bool gamma_fit_possible(std::span<const double> samples);

// P(X > x) for X ~ Gamma(shape, rate).
[[nodiscard]] double gamma_survival(const GammaParams& g, double x);

// P(X > elapsed + delta | X > elapsed). delta may be infinite.
[[nodiscard]] double gamma_residual_survival(const GammaParams& g, double elapsed, double delta);

}  // namespace convhawkes
