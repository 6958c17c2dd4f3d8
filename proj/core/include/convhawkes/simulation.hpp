#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "convhawkes/domain.hpp"
#include "convhawkes/parallel.hpp"

namespace convhawkes {

// Draws everything a simulated conversation needs besides its event times.
// Every member is replaceable.
struct MarkSamplers {
  // Number of messages after the initial query (baselines only).
  std::function<std::size_t(Rng&)> gap_count;
  // Sender of the message at 1-based position (baselines and the UHP).
  std::function<Sender(std::size_t, Rng&)> sender_at;
  std::function<int(Sender, Rng&)> words;
  std::function<double(Sender, Rng&)> sentiment;
  // Agent concurrency, drawn once per conversation and held constant.
  std::function<int(Rng&)> concurrency;
  // Minutes from the last message until the conversation is closed.
  std::function<double(Rng&)> close_lag;
  std::string description;
};

// Parametric samplers matched to contact-center summary statistics:
// 14.84 messages per conversation on average, 27.9% written by the customer,
// 13.14 / 23.0 mean words (customer / agent), sentiment mean 0.15 (sd 0.80)
// on [-14, 24], concurrency mean 4.79 (sd 2.49), and a 64.76 minute mean gap
// between the last message and closure.
[[nodiscard]] MarkSamplers default_samplers();

// Empirical resampling of the dataset's message counts, per-position senders,
// per-sender words and sentiments, initial concurrency values and close lags.
[[nodiscard]] MarkSamplers build_samplers(const Dataset& d);

struct SimulationLimits {
  std::size_t max_events = 1'000'000;
};

// Exact cluster (branching) simulation started from the initial customer
// query. Throws NumericError for parameters with spectral radius >= 1 or when
// a conversation exceeds the event cap.
[[nodiscard]] Conversation simulate_conversation(const HawkesModel& m, const MarkSamplers& ms,
                                                 std::uint64_t seed, const SimulationLimits& limits = {});

[[nodiscard]] Conversation simulate_baseline(const BaselineParams& b, const MarkSamplers& ms,
                                             std::uint64_t seed);

// Conversation i is simulated from substream i of `seed`, so the output is
// independent of `threads`. Conversation i gets id "sim-<i>", its own agent
// and start_epoch = 1440 * i.
[[nodiscard]] Dataset simulate_dataset(const ModelSource& source, const MarkSamplers& ms, std::size_t n,
                                       std::uint64_t seed, unsigned threads = 1,
                                       const SimulationLimits& limits = {});

// Mean branching ratio check used before simulating: alpha/beta for the UHP,
// spectral radius of the ratio matrix otherwise.
[[nodiscard]] double branching_ratio(const HawkesModel& m);

}  // namespace convhawkes
