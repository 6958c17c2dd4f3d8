#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "convhawkes/domain.hpp"

namespace convhawkes {

// ---------------------------------------------------------------------------
// Log-likelihood and response probabilities

// Sum of log left-limit rates at every non-initial message minus the [0, inf)
// compensators. Returns -inf when some message has no admissible parent.
[[nodiscard]] double log_likelihood(const HawkesModel& m, const Conversation& c);
[[nodiscard]] double log_likelihood(const HawkesModel& m, const Dataset& d, unsigned threads = 1);

struct ResponseEntry {
  std::size_t parent = 0;  // index into Conversation::messages
  double probability = 0.0;
};

// Probability that `target` was a response to each strictly earlier message.
struct ResponseRow {
  std::size_t target = 0;
  std::vector<ResponseEntry> parents;
  bool degenerate = false;  // no admissible parent or every contribution vanished
};

struct ResponseMatrix {
  std::vector<ResponseRow> rows;
  std::size_t degenerate_rows = 0;
};

[[nodiscard]] ResponseMatrix e_step(const HawkesModel& m, const Conversation& c);

// Accumulated sufficient statistics of one E-step, per channel. Univariate
// models use slot 0 only.
struct ChannelStats {
  double mass = 0.0;          // sum of response probabilities
  double weighted_age = 0.0;  // sum of p * f(K at target) * (target - parent)
  double parent_mass = 0.0;   // sum over parents of g * kernel mass on [0, inf)
  double correction = 0.0;    // d/d(beta) correction for time-varying concurrency

  void add(const ChannelStats& o);
};

struct EStepStats {
  std::array<ChannelStats, kChannelCount> channels{};
  double log_terms = 0.0;  // sum of log left-limit rates
  std::size_t targets = 0;
  std::size_t degenerate_rows = 0;

  void add(const EStepStats& o);
  // Log-likelihood of the parameters the statistics were computed under.
  [[nodiscard]] double log_likelihood(const HawkesModel& at) const;
};

enum class EStepRoute {
  automatic,  // O(N) recursion when concurrency is constant, else pairwise
  pairwise,
  recursive,  // requires constant concurrency within the conversation
};

[[nodiscard]] EStepStats estep_stats(const HawkesModel& m, const Conversation& c,
                                     EStepRoute route = EStepRoute::automatic);

// Statistics from an explicit ResponseMatrix computed under `m`.
[[nodiscard]] EStepStats stats_from_responses(const HawkesModel& m, const Conversation& c,
                                              const ResponseMatrix& r);

struct MStepDiagnostics {
  std::vector<std::string> held;  // channels whose parameters were kept from prev
};

// Closed-form update from accumulated statistics computed under `prev`.
[[nodiscard]] HawkesModel apply_m_step(const EStepStats& stats, const HawkesModel& prev,
                                       MStepDiagnostics* diag = nullptr);

[[nodiscard]] HawkesModel m_step(const Dataset& d, std::span<const ResponseMatrix> responses,
                                 const HawkesModel& prev, MStepDiagnostics* diag = nullptr);

// ---------------------------------------------------------------------------
// EM driver

struct FitConfig {
  ModelKind kind = ModelKind::bhp;
  std::optional<HawkesModel> init;  // random start from `seed` when empty
  std::uint64_t seed = 1;
  double tolerance = 1e-6;  // L1 movement of all alphas and betas
  int max_iterations = 500;
  unsigned threads = 1;
};

struct EmIteration {
  double log_likelihood = 0.0;  // under the parameters entering this iteration
  HawkesModel params;           // parameters after the M-step
  double change = 0.0;
};

struct EmTrace {
  std::vector<EmIteration> iterations;
  bool converged = false;
  std::size_t degenerate_rows = 0;
  std::vector<std::string> notes;
};

struct EmFit {
  HawkesModel model;
  EmTrace trace;
  double log_likelihood = 0.0;  // under the returned model
};

// Throws NumericError naming the conversation if the likelihood is not finite.
[[nodiscard]] EmFit fit_em(const Dataset& d, const FitConfig& config);

// Mark statistics (mean words, mean/min sentiment) pooled over both senders.
[[nodiscard]] MarkModel mark_model_for(ModelKind kind, const Dataset& d);

// Log-uniform alpha/beta in [0.05, 0.95] and beta in [0.1, 100] per channel.
[[nodiscard]] HawkesModel random_init(ModelKind kind, const MarkModel& marks, std::uint64_t seed);

// L1 distance over all jump sizes and decay rates.
[[nodiscard]] double parameter_distance(const HawkesModel& a, const HawkesModel& b);

// ---------------------------------------------------------------------------
// Path-independent baselines

// Gap index j (1-based) of every non-initial message, with the gap length.
struct IndexedGap {
  std::size_t index = 0;
  double length = 0.0;
};
[[nodiscard]] std::vector<IndexedGap> indexed_gaps(const Dataset& d);

inline constexpr std::size_t kSgdPoolFrom = 14;

[[nodiscard]] BaselineParams fit_se(const Dataset& d);
[[nodiscard]] BaselineParams fit_sgs(const Dataset& d);
// Per-index gamma fits for gaps 1..pool_from-1, one pooled fit for the rest.
[[nodiscard]] BaselineParams fit_sgd(const Dataset& d, std::size_t pool_from = kSgdPoolFrom);

}  // namespace convhawkes
