#include "convhawkes/prediction.hpp"

#include <cmath>

#include "convhawkes/parallel.hpp"

namespace convhawkes {

namespace {

// (alpha/beta) * (e^{-rate*age} - e^{-rate*(age+delta)}) for one kernel term.
double window_mass(double ratio, double rate, double age, double delta) {
  const double head = decay(rate, age);
  if (head == 0.0) return 0.0;
  if (std::isinf(delta)) return ratio * head;
  return ratio * head * -std::expm1(-rate * delta);
}

}  // namespace

double quiet_exponent(const HawkesModel& m, const Conversation& c, double t, double delta,
                      std::optional<int> frozen_concurrency) {
  if (t < 0.0) throw UsageError("query time must be >= 0");
  if (!(delta > 0.0)) return 0.0;
  double exponent = 0.0;
  if (const auto* u = std::get_if<UnivariateModel>(&m)) {
    for (const Message& msg : c.messages) {
      if (msg.time > t) break;
      exponent += window_mass(u->kernel.ratio(), u->kernel.beta, t - msg.time, delta);
    }
    return exponent;
  }
  const auto& bm = std::get<BivariateModel>(m);
  const int k = frozen_concurrency.value_or(c.concurrency.at(t));
  const double f = mark_f(bm.marks, k);
  for (const Message& msg : c.messages) {
    if (msg.time > t) break;
    const double g = mark_g(bm.marks, msg);
    const double age = t - msg.time;
    const KernelParams& to_c = bm.params[channel_of(Sender::customer, msg.sender)];
    const KernelParams& to_a = bm.params[channel_of(Sender::agent, msg.sender)];
    exponent += g * window_mass(to_c.ratio(), to_c.beta, age, delta);
    exponent += g * window_mass(to_a.ratio(), to_a.beta * f, age, delta);
  }
  return exponent;
}

double p_quiet_interval(const HawkesModel& m, const Conversation& c, double t, double delta,
                        std::optional<int> frozen_concurrency) {
  return std::exp(-quiet_exponent(m, c, t, delta, frozen_concurrency));
}

double p_conversation_over(const HawkesModel& m, const Conversation& c, double t) {
  return p_quiet_interval(m, c, t, kInfinity);
}

std::vector<double> p_quiet_batch(const HawkesModel& m, const Dataset& d, std::span<const ActivityQuery> queries,
                                  unsigned threads) {
  std::vector<double> out(queries.size());
  parallel_chunks(queries.size(), threads, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const auto& q = queries[i];
      out[i] = p_quiet_interval(m, d.conversations.at(q.conversation), q.t, q.delta);
    }
  });
  return out;
}

bool open_at(const Conversation& c, double t_abs) {
  return c.start_epoch <= t_abs && c.close_epoch() > t_abs;
}

AgentQuiet p_agent_quiet_interval(const HawkesModel& m, std::span<const Conversation> group, double t_abs,
                                  double delta) {
  AgentQuiet out;
  std::vector<const Conversation*> open;
  for (const auto& c : group) {
    if (open_at(c, t_abs)) {
      open.push_back(&c);
    } else {
      out.excluded.push_back(c.id);
    }
  }
  out.open_conversations = open.size();
  if (open.empty()) {
    out.warnings.push_back("agent has no open conversations at the query time");
    return out;
  }
  const int k = static_cast<int>(open.size());
  double exponent = 0.0;
  for (const Conversation* c : open) exponent += quiet_exponent(m, *c, t_abs - c->start_epoch, delta, k);
  out.log_probability = -exponent;
  out.probability = std::exp(-exponent);
  return out;
}

AgentQuiet p_agent_all_over(const HawkesModel& m, std::span<const Conversation> group, double t_abs) {
  return p_agent_quiet_interval(m, group, t_abs, kInfinity);
}

Conversation history_at(const Conversation& c, double t, int frozen_concurrency) {
  Conversation h = c;
  std::erase_if(h.messages, [&](const Message& msg) { return msg.time > t; });
  h.concurrency = ConcurrencyTimeline(frozen_concurrency);
  h.close_time = std::max(t, h.last_message_time());
  return h;
}

}  // namespace convhawkes
