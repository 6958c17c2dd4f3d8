#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace convhawkes {

// Error categories. The CLI maps them to exit codes 1 (usage), 2 (data) and
// 3 (numeric).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

enum class Sender : std::uint8_t { customer, agent };

[[nodiscard]] constexpr std::string_view to_string(Sender s) {
  return s == Sender::customer ? "c" : "a";
}

// All times are minutes, all rates are per minute.
struct Message {
  double time = 0.0;
  Sender sender = Sender::customer;
  int words = 1;
  double sentiment = 0.0;

  friend bool operator==(const Message&, const Message&) = default;
};

// Piecewise-constant agent concurrency. values[k] holds on
// [breakpoints[k], breakpoints[k+1]); the last segment is unbounded.
class ConcurrencyTimeline {
 public:
  ConcurrencyTimeline() = default;
  explicit ConcurrencyTimeline(int constant);
  // Throws DataError when the invariants do not hold.
  ConcurrencyTimeline(std::vector<double> breakpoints, std::vector<int> values);

  [[nodiscard]] int at(double t) const;
  [[nodiscard]] std::size_t segments() const { return values_.size(); }
  [[nodiscard]] bool is_constant() const;
  [[nodiscard]] const std::vector<double>& breakpoints() const { return breakpoints_; }
  [[nodiscard]] const std::vector<int>& values() const { return values_; }

  friend bool operator==(const ConcurrencyTimeline&, const ConcurrencyTimeline&) = default;

 private:
  std::vector<double> breakpoints_{0.0};
  std::vector<int> values_{1};
};

struct Conversation {
  std::string id;
  std::string agent_id;
  double start_epoch = 0.0;  // absolute minutes since the dataset origin
  std::vector<Message> messages;
  double close_time = 0.0;  // minutes since conversation start
  ConcurrencyTimeline concurrency;

  [[nodiscard]] double close_epoch() const { return start_epoch + close_time; }
  [[nodiscard]] double last_message_time() const {
    return messages.empty() ? 0.0 : messages.back().time;
  }

  friend bool operator==(const Conversation&, const Conversation&) = default;
};

struct DatasetMetadata {
  std::string source;
  std::string epoch_origin;  // ISO-8601 text, informational only
  std::string time_unit = "minutes";

  friend bool operator==(const DatasetMetadata&, const DatasetMetadata&) = default;
};

struct Dataset {
  std::vector<Conversation> conversations;
  DatasetMetadata metadata;

  [[nodiscard]] std::size_t size() const { return conversations.size(); }
  [[nodiscard]] bool empty() const { return conversations.empty(); }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct Violation {
  std::string field;
  std::string rule;
};

// Empty iff every Conversation invariant holds.
[[nodiscard]] std::vector<Violation> validate_conversation(const Conversation& c);

// Returns violations keyed by conversation id, including duplicate ids.
[[nodiscard]] std::vector<std::pair<std::string, Violation>> validate_dataset(const Dataset& d);

struct PrefixCounts {
  std::size_t customer = 0;
  std::size_t agent = 0;

  friend bool operator==(const PrefixCounts&, const PrefixCounts&) = default;
};

// Messages with 0 < time <= t by sender; the initial query is never counted.
[[nodiscard]] PrefixCounts prefix_counts(const Conversation& c, double t);

// ---------------------------------------------------------------------------
// Model parameters

struct KernelParams {
  double alpha = 1.0;  // jump size, events per minute
  double beta = 1.0;   // decay rate, per minute

  [[nodiscard]] double ratio() const { return alpha / beta; }
  [[nodiscard]] bool valid() const { return alpha > 0.0 && beta > 0.0; }

  friend bool operator==(const KernelParams&, const KernelParams&) = default;
};

// Channel naming is (receiving rate, stimulating sender).
enum class Channel : std::uint8_t { cc = 0, ca = 1, ac = 2, aa = 3 };

inline constexpr std::size_t kChannelCount = 4;

[[nodiscard]] constexpr Channel channel_of(Sender receiver, Sender stimulus) {
  return static_cast<Channel>((receiver == Sender::agent ? 2 : 0) +
                              (stimulus == Sender::agent ? 1 : 0));
}
[[nodiscard]] constexpr Sender receiver_of(Channel ch) {
  return static_cast<int>(ch) >= 2 ? Sender::agent : Sender::customer;
}
[[nodiscard]] constexpr Sender stimulus_of(Channel ch) {
  return (static_cast<int>(ch) & 1) ? Sender::agent : Sender::customer;
}
[[nodiscard]] std::string_view to_string(Channel ch);

struct BivariateParams {
  KernelParams cc;
  KernelParams ca;
  KernelParams ac;
  KernelParams aa;

  [[nodiscard]] const KernelParams& operator[](Channel ch) const;
  [[nodiscard]] KernelParams& operator[](Channel ch);
  [[nodiscard]] bool valid() const;
  // Spectral radius of the 2x2 matrix of alpha/beta ratios.
  [[nodiscard]] double spectral_radius() const;
  [[nodiscard]] bool stable() const { return spectral_radius() < 1.0; }

  friend bool operator==(const BivariateParams&, const BivariateParams&) = default;
};

struct UnitMark {
  friend bool operator==(const UnitMark&, const UnitMark&) = default;
};
struct WordMark {
  double mean_words = 1.0;
  friend bool operator==(const WordMark&, const WordMark&) = default;
};
struct SentimentMark {
  double mean_sentiment = 0.0;
  double min_sentiment = -1.0;
  friend bool operator==(const SentimentMark&, const SentimentMark&) = default;
};
struct ConcurrencyMark {
  friend bool operator==(const ConcurrencyMark&, const ConcurrencyMark&) = default;
};

using MarkModel = std::variant<UnitMark, WordMark, SentimentMark, ConcurrencyMark>;

// Throws DataError if the mark statistics are inconsistent.
void check_mark_model(const MarkModel& m);

struct UnivariateModel {
  KernelParams kernel;
  friend bool operator==(const UnivariateModel&, const UnivariateModel&) = default;
};

struct BivariateModel {
  BivariateParams params;
  MarkModel marks = UnitMark{};
  friend bool operator==(const BivariateModel&, const BivariateModel&) = default;
};

using HawkesModel = std::variant<UnivariateModel, BivariateModel>;

// Baselines: gaps between successive messages are independent.
struct GammaParams {
  double shape = 1.0;
  double rate = 1.0;

  [[nodiscard]] double mean() const { return shape / rate; }
  friend bool operator==(const GammaParams&, const GammaParams&) = default;
};

struct SumOfExponentials {
  double rate = 1.0;
  friend bool operator==(const SumOfExponentials&, const SumOfExponentials&) = default;
};

struct SumOfGammaStatic {
  GammaParams gap;
  friend bool operator==(const SumOfGammaStatic&, const SumOfGammaStatic&) = default;
};

// per_index[j-1] governs gap j for j <= per_index.size(); later gaps use tail.
struct SumOfGammaDynamic {
  std::vector<GammaParams> per_index;
  GammaParams tail;

  [[nodiscard]] const GammaParams& for_gap(std::size_t gap_index) const;
  friend bool operator==(const SumOfGammaDynamic&, const SumOfGammaDynamic&) = default;
};

using BaselineParams = std::variant<SumOfExponentials, SumOfGammaStatic, SumOfGammaDynamic>;

void check_baseline(const BaselineParams& b);

using ModelSource = std::variant<HawkesModel, BaselineParams>;

enum class ModelKind : std::uint8_t { se, sgs, sgd, uhp, bhp, wbhp, sbhp, cbhp };

inline constexpr ModelKind kAllModelKinds[] = {ModelKind::se,  ModelKind::sgs,  ModelKind::sgd,
                                               ModelKind::uhp, ModelKind::bhp,  ModelKind::wbhp,
                                               ModelKind::sbhp, ModelKind::cbhp};

[[nodiscard]] std::string_view to_string(ModelKind k);
[[nodiscard]] std::optional<ModelKind> parse_model_kind(std::string_view name);
[[nodiscard]] bool is_hawkes(ModelKind k);
[[nodiscard]] ModelKind kind_of(const HawkesModel& m);
[[nodiscard]] ModelKind kind_of(const BaselineParams& b);
[[nodiscard]] ModelKind kind_of(const ModelSource& s);

}  // namespace convhawkes
