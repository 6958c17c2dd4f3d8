#include "convhawkes/intensity.hpp"

#include <algorithm>
#include <cmath>

namespace convhawkes {

double mark_g(const MarkModel& m, double sentiment, int words) {
  return std::visit(
      [&](const auto& mk) -> double {
        using T = std::decay_t<decltype(mk)>;
        if constexpr (std::is_same_v<T, WordMark>) {
          return static_cast<double>(words) / mk.mean_words;
        } else if constexpr (std::is_same_v<T, SentimentMark>) {
          const double g = (sentiment - mk.min_sentiment) / (mk.mean_sentiment - mk.min_sentiment);
          return std::max(g, kMarkFloor);
        } else {
          return 1.0;
        }
      },
      m);
}

double mark_f(const MarkModel& m, int concurrency) {
  if (std::holds_alternative<ConcurrencyMark>(m)) return 1.0 / static_cast<double>(concurrency);
  return 1.0;
}

double decay(double rate, double elapsed) {
  if (elapsed <= 0.0) return 1.0;
  const double x = rate * elapsed;
  if (x > kMaxExponent) return 0.0;
  return std::exp(-x);
}

namespace {

bool in_history(double event_time, double t, Side side) {
  return side == Side::inclusive ? event_time <= t : event_time < t;
}

}  // namespace

double uhp_rate(const KernelParams& p, const Conversation& c, double t, Side side) {
  double rate = 0.0;
  for (const Message& m : c.messages) {
    if (!in_history(m.time, t, side)) break;
    rate += p.alpha * decay(p.beta, t - m.time);
  }
  return rate;
}

ChannelRates bivariate_rates(const BivariateModel& m, const Conversation& c, double t, Side side) {
  const double f = mark_f(m.marks, c.concurrency.at(t));
  ChannelRates r;
  for (const Message& msg : c.messages) {
    if (!in_history(msg.time, t, side)) break;
    const double g = mark_g(m.marks, msg);
    const double dt = t - msg.time;
    const KernelParams& to_c = m.params[channel_of(Sender::customer, msg.sender)];
    const KernelParams& to_a = m.params[channel_of(Sender::agent, msg.sender)];
    r.customer += to_c.alpha * g * decay(to_c.beta, dt);
    r.agent += to_a.alpha * f * g * decay(to_a.beta * f, dt);
  }
  return r;
}

ChannelRates rates(const HawkesModel& m, const Conversation& c, double t, Side side) {
  if (const auto* u = std::get_if<UnivariateModel>(&m)) return {uhp_rate(u->kernel, c, t, side), 0.0};
  return bivariate_rates(std::get<BivariateModel>(m), c, t, side);
}

double agent_kernel_mass(const MarkModel& marks, const ConcurrencyTimeline& timeline, double beta,
                         double parent_time, double from, double to) {
  const auto& bps = timeline.breakpoints();
  const auto& vals = timeline.values();
  double mass = 0.0;
  for (std::size_t k = 0; k < vals.size(); ++k) {
    const double seg_end = k + 1 < bps.size() ? bps[k + 1] : kInfinity;
    const double a = std::max(bps[k], from);
    const double b = std::min(seg_end, to);
    if (!(b > a)) continue;
    if (b <= parent_time) continue;
    const double rate = beta * mark_f(marks, vals[k]);
    const double upper = std::isinf(b) ? 0.0 : decay(rate, b - parent_time);
    mass += decay(rate, a - parent_time) - upper;
  }
  return mass;
}

Compensator compensator(const HawkesModel& model, const Conversation& c, double from, double to) {
  Compensator out;
  if (!(to > from)) return out;
  auto window = [&](double beta, double parent_time) {
    if (to <= parent_time) return 0.0;
    const double upper = std::isinf(to) ? 0.0 : decay(beta, to - parent_time);
    return decay(beta, from - parent_time) - upper;
  };

  if (const auto* u = std::get_if<UnivariateModel>(&model)) {
    for (const Message& m : c.messages) {
      out.customer += u->kernel.ratio() * window(u->kernel.beta, m.time);
    }
    return out;
  }

  const auto& bm = std::get<BivariateModel>(model);
  const bool agent_varies = std::holds_alternative<ConcurrencyMark>(bm.marks);
  for (const Message& m : c.messages) {
    const double g = mark_g(bm.marks, m);
    const KernelParams& to_c = bm.params[channel_of(Sender::customer, m.sender)];
    const KernelParams& to_a = bm.params[channel_of(Sender::agent, m.sender)];
    out.customer += to_c.ratio() * g * window(to_c.beta, m.time);
    const double agent_mass = agent_varies
                                  ? agent_kernel_mass(bm.marks, c.concurrency, to_a.beta, m.time, from, to)
                                  : window(to_a.beta, m.time);
    out.agent += to_a.ratio() * g * agent_mass;
  }
  return out;
}

}  // namespace convhawkes
