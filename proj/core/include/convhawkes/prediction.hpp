#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "convhawkes/domain.hpp"
#include "convhawkes/intensity.hpp"

namespace convhawkes {

// Probability of no message in [t, t + delta) given the history up to and
// including t. Concurrency is frozen at K_t from t onwards unless
// `frozen_concurrency` overrides it. delta may be kInfinity.
[[nodiscard]] double p_quiet_interval(const HawkesModel& m, const Conversation& c, double t, double delta,
                                      std::optional<int> frozen_concurrency = std::nullopt);

// -log of p_quiet_interval, kept separate for products over many conversations.
[[nodiscard]] double quiet_exponent(const HawkesModel& m, const Conversation& c, double t, double delta,
                                    std::optional<int> frozen_concurrency = std::nullopt);

// Probability that no message ever follows t.
[[nodiscard]] double p_conversation_over(const HawkesModel& m, const Conversation& c, double t);

struct ActivityQuery {
  std::size_t conversation = 0;  // index into the dataset
  double t = 0.0;
  double delta = kInfinity;
};

[[nodiscard]] std::vector<double> p_quiet_batch(const HawkesModel& m, const Dataset& d,
                                                std::span<const ActivityQuery> queries, unsigned threads = 1);

struct AgentQuiet {
  double probability = 1.0;
  double log_probability = 0.0;
  std::size_t open_conversations = 0;  // K used for concurrency marks
  std::vector<std::string> excluded;   // not open at t_abs
  std::vector<std::string> warnings;
};

// Product of per-conversation quiet probabilities over the agent's open
// conversations, each on its own clock (t_abs - start_epoch), with K = number
// of open conversations.
[[nodiscard]] AgentQuiet p_agent_quiet_interval(const HawkesModel& m, std::span<const Conversation> group,
                                                double t_abs, double delta);

[[nodiscard]] AgentQuiet p_agent_all_over(const HawkesModel& m, std::span<const Conversation> group,
                                          double t_abs);

// True when the conversation has started and is not yet closed at t_abs.
[[nodiscard]] bool open_at(const Conversation& c, double t_abs);

// Copy holding only messages with time <= t and concurrency frozen at K.
[[nodiscard]] Conversation history_at(const Conversation& c, double t, int frozen_concurrency);

}  // namespace convhawkes
