#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "convhawkes/domain.hpp"

namespace convhawkes {

// ---------------------------------------------------------------------------
// Goodness of fit

// Net length of stay: last message time per conversation.
[[nodiscard]] std::vector<double> extract_durations(const Dataset& d);

enum class GapFilter { all, customer, agent };

// Successive differences; the sender filter applies to the message that ends
// the gap.
[[nodiscard]] std::vector<double> extract_gaps(const Dataset& d, GapFilter by = GapFilter::all);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;  // asymptotic Kolmogorov distribution
};

[[nodiscard]] KsResult ks_two_sample(std::span<const double> x, std::span<const double> y);

// P(K > lambda) for the Kolmogorov distribution.
[[nodiscard]] double kolmogorov_survival(double lambda);

// Linear-interpolation empirical quantile of an ascending sample.
[[nodiscard]] double empirical_quantile(std::span<const double> sorted, double q);

struct QqPoint {
  double q = 0.0;
  double x = 0.0;
  double y = 0.0;
};

// 0.01, 0.02, ..., 0.99
[[nodiscard]] std::vector<double> default_quantile_grid();

[[nodiscard]] std::vector<QqPoint> qq_points(std::span<const double> x, std::span<const double> y,
                                             std::span<const double> grid);
[[nodiscard]] std::vector<QqPoint> qq_points(std::span<const double> x, std::span<const double> y);

struct CdfPoint {
  double value = 0.0;
  double cdf_x = 0.0;
  double cdf_y = 0.0;
};

// Both empirical CDFs evaluated on `points` quantiles of the pooled sample.
[[nodiscard]] std::vector<CdfPoint> cdf_points(std::span<const double> x, std::span<const double> y,
                                               std::size_t points = 500);

// ---------------------------------------------------------------------------
// Prediction accuracy

struct SamplingStrategy {
  enum class Kind { deterministic, activity, random };
  Kind kind = Kind::deterministic;
  double step = 10.0;      // minutes, deterministic only
  std::uint64_t seed = 0;  // random only
};

struct SampleTime {
  std::size_t conversation = 0;
  double t = 0.0;
};

[[nodiscard]] std::vector<SampleTime> sample_times(const Dataset& d, const SamplingStrategy& s);

// Activity in (t, t + delta]; delta = infinity means any message after t.
[[nodiscard]] bool label_activity(const Conversation& c, double t, double delta);

struct PredictionRecord {
  std::string id;  // conversation id, or agent id for idleness records
  double t = 0.0;
  double delta = 0.0;
  double score = 0.0;  // predicted activity probability
  bool label = false;
};

struct RocPoint {
  double threshold = 0.0;
  double true_positive_rate = 0.0;
  double false_positive_rate = 0.0;
};

// Mann-Whitney AUC with half credit for tied scores. Throws DataError when
// only one class is present.
[[nodiscard]] double auc(std::span<const PredictionRecord> records);
[[nodiscard]] std::vector<RocPoint> roc_curve(std::span<const PredictionRecord> records);

// Model quiet probability over (t, t + delta] from the history up to t.
// Baselines: SE gives e^{-mu delta}; SGS/SGD give the residual survival of the
// next gap given the time elapsed since the last message.
[[nodiscard]] double quiet_probability(const ModelSource& model, const Conversation& c, double t, double delta);

struct AucRow {
  double delta = 0.0;
  double auc = 0.0;  // NaN when a class is missing
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

struct PredictionEvaluation {
  std::vector<AucRow> table;
  std::vector<PredictionRecord> records;  // grouped by delta in table order

  [[nodiscard]] std::vector<PredictionRecord> records_for(double delta) const;
};

[[nodiscard]] PredictionEvaluation evaluate_prediction(const ModelSource& model, const Dataset& d,
                                                       const SamplingStrategy& s, std::span<const double> deltas,
                                                       unsigned threads = 1);

// Agent-level activity: for each agent, every `step` minutes from its first
// conversation start, score = 1 - P(all open conversations quiet for delta).
// Horizons are given in seconds.
[[nodiscard]] PredictionEvaluation evaluate_agent_idleness(const ModelSource& model, const Dataset& d,
                                                           double step, std::span<const double> deltas_seconds,
                                                           unsigned threads = 1);

}  // namespace convhawkes
