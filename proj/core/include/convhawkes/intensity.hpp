#pragma once

#include <limits>

#include "convhawkes/domain.hpp"

namespace convhawkes {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Lower clamp applied to the sentiment mark so it stays a positive multiplier.
inline constexpr double kMarkFloor = 1e-6;

// Exponents beyond this evaluate to exactly zero.
inline constexpr double kMaxExponent = 745.0;

// Whether an event at exactly t is part of the history at t.
enum class Side { left, inclusive };

[[nodiscard]] double mark_g(const MarkModel& m, double sentiment, int words);
[[nodiscard]] double mark_f(const MarkModel& m, int concurrency);

[[nodiscard]] inline double mark_g(const MarkModel& m, const Message& msg) {
  return mark_g(m, msg.sentiment, msg.words);
}

// e^{-rate * elapsed} with the underflow cut-off; elapsed <= 0 gives 1.
[[nodiscard]] double decay(double rate, double elapsed);

[[nodiscard]] double uhp_rate(const KernelParams& p, const Conversation& c, double t,
                              Side side = Side::inclusive);

struct ChannelRates {
  double customer = 0.0;
  double agent = 0.0;

  [[nodiscard]] double total() const { return customer + agent; }
};

[[nodiscard]] ChannelRates bivariate_rates(const BivariateModel& m, const Conversation& c, double t,
                                           Side side = Side::inclusive);

// Univariate models report the pooled rate in the customer slot.
[[nodiscard]] ChannelRates rates(const HawkesModel& m, const Conversation& c, double t,
                                 Side side = Side::inclusive);

struct Compensator {
  double customer = 0.0;
  double agent = 0.0;

  [[nodiscard]] double total() const { return customer + agent; }
};

// Exact integral of the rates over [from, to]; `to` may be kInfinity. Every
// message of `c` is treated as history, so callers truncate when needed.
// Univariate models report the pooled integral in the customer slot.
[[nodiscard]] Compensator compensator(const HawkesModel& m, const Conversation& c, double from,
                                      double to);

// Per-parent integral factor sum_k (e^{-beta f_k (a_k - A)^+} - e^{-beta f_k (b_k - A)^+})
// over the concurrency segments [a_k, b_k) clipped to [from, to]. With f == 1
// and [0, inf) it is exactly 1.
[[nodiscard]] double agent_kernel_mass(const MarkModel& marks, const ConcurrencyTimeline& timeline,
                                       double beta, double parent_time, double from, double to);

}  // namespace convhawkes
