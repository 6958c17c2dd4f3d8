#include "convhawkes/domain.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace convhawkes {

ConcurrencyTimeline::ConcurrencyTimeline(int constant) : values_{constant} {
  if (constant < 1) throw DataError("concurrency must be >= 1");
}

ConcurrencyTimeline::ConcurrencyTimeline(std::vector<double> breakpoints, std::vector<int> values)
    : breakpoints_(std::move(breakpoints)), values_(std::move(values)) {
  if (breakpoints_.empty() || breakpoints_.size() != values_.size())
    throw DataError("concurrency timeline needs one value per breakpoint");
  if (breakpoints_.front() != 0.0) throw DataError("concurrency timeline must start at 0");
  for (std::size_t k = 1; k < breakpoints_.size(); ++k) {
    if (!(breakpoints_[k] > breakpoints_[k - 1]))
      throw DataError("concurrency breakpoints must be strictly increasing");
  }
  for (int v : values_) {
    if (v < 1) throw DataError("concurrency must be >= 1");
  }
}

int ConcurrencyTimeline::at(double t) const {
  auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
  if (it == breakpoints_.begin()) return values_.front();
  return values_[static_cast<std::size_t>(it - breakpoints_.begin()) - 1];
}

bool ConcurrencyTimeline::is_constant() const {
  return std::all_of(values_.begin(), values_.end(), [&](int v) { return v == values_.front(); });
}

std::vector<Violation> validate_conversation(const Conversation& c) {
  std::vector<Violation> out;
  if (c.messages.empty()) {
    out.push_back({"messages", "conversation must contain at least the initial query"});
    return out;
  }
  const Message& first = c.messages.front();
  if (first.time != 0.0) out.push_back({"messages[0].time", "initial query must be at time 0"});
  if (first.sender != Sender::customer)
    out.push_back({"messages[0].sender", "initial query must be customer"});
  for (std::size_t i = 0; i < c.messages.size(); ++i) {
    const Message& m = c.messages[i];
    const std::string where = "messages[" + std::to_string(i) + "]";
    if (!std::isfinite(m.time) || m.time < 0.0) out.push_back({where + ".time", "time must be >= 0"});
    if (m.words < 1) out.push_back({where + ".words", "words must be >= 1"});
    if (!std::isfinite(m.sentiment)) out.push_back({where + ".sentiment", "sentiment must be finite"});
    if (i > 0 && m.time < c.messages[i - 1].time)
      out.push_back({where + ".time", "message times must be nondecreasing"});
  }
  if (!(c.close_time >= c.messages.back().time))
    out.push_back({"close_time", "close_time before last message"});
  return out;
}

std::vector<std::pair<std::string, Violation>> validate_dataset(const Dataset& d) {
  std::vector<std::pair<std::string, Violation>> out;
  std::unordered_set<std::string> seen;
  for (const auto& c : d.conversations) {
    if (!seen.insert(c.id).second) out.emplace_back(c.id, Violation{"id", "duplicate conversation id"});
    for (auto& v : validate_conversation(c)) out.emplace_back(c.id, std::move(v));
  }
  return out;
}

PrefixCounts prefix_counts(const Conversation& c, double t) {
  PrefixCounts n;
  for (std::size_t i = 1; i < c.messages.size(); ++i) {
    const Message& m = c.messages[i];
    if (m.time > t) break;
    if (m.time <= 0.0) continue;
    (m.sender == Sender::customer ? n.customer : n.agent) += 1;
  }
  return n;
}

std::string_view to_string(Channel ch) {
  switch (ch) {
    case Channel::cc: return "cc";
    case Channel::ca: return "ca";
    case Channel::ac: return "ac";
    case Channel::aa: return "aa";
  }
  return "?";
}

const KernelParams& BivariateParams::operator[](Channel ch) const {
  switch (ch) {
    case Channel::cc: return cc;
    case Channel::ca: return ca;
    case Channel::ac: return ac;
    case Channel::aa: return aa;
  }
  return cc;
}

KernelParams& BivariateParams::operator[](Channel ch) {
  return const_cast<KernelParams&>(std::as_const(*this)[ch]);
}

bool BivariateParams::valid() const { return cc.valid() && ca.valid() && ac.valid() && aa.valid(); }

double BivariateParams::spectral_radius() const {
  // Rows are receivers, columns are stimulating senders.
  const double a = cc.ratio(), b = ca.ratio(), c = ac.ratio(), d = aa.ratio();
  const double tr = a + d;
  const double det = a * d - b * c;
  const double disc = tr * tr / 4.0 - det;
  if (disc >= 0.0) {
    const double s = std::sqrt(disc);
    return std::max(std::abs(tr / 2.0 + s), std::abs(tr / 2.0 - s));
  }
  // complex pair: |lambda|^2 = det
  return std::sqrt(det);
}

void check_mark_model(const MarkModel& m) {
  if (const auto* w = std::get_if<WordMark>(&m)) {
    if (!(w->mean_words > 0.0)) throw DataError("word mark requires mean_words > 0");
  } else if (const auto* s = std::get_if<SentimentMark>(&m)) {
    if (!(s->min_sentiment < s->mean_sentiment))
      throw DataError("sentiment mark requires min_sentiment < mean_sentiment");
  }
}

const GammaParams& SumOfGammaDynamic::for_gap(std::size_t gap_index) const {
  if (gap_index >= 1 && gap_index <= per_index.size()) return per_index[gap_index - 1];
  return tail;
}

void check_baseline(const BaselineParams& b) {
  auto check_gamma = [](const GammaParams& g) {
    if (!(g.shape > 0.0 && g.rate > 0.0)) throw DataError("gamma parameters must be positive");
  };
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, SumOfExponentials>) {
          if (!(p.rate > 0.0)) throw DataError("SE rate must be positive");
        } else if constexpr (std::is_same_v<T, SumOfGammaStatic>) {
          check_gamma(p.gap);
        } else {
          if (p.per_index.empty()) throw DataError("SGD table must be nonempty");
          for (const auto& g : p.per_index) check_gamma(g);
          check_gamma(p.tail);
        }
      },
      b);
}

std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::se: return "se";
    case ModelKind::sgs: return "sgs";
    case ModelKind::sgd: return "sgd";
    case ModelKind::uhp: return "uhp";
    case ModelKind::bhp: return "bhp";
    case ModelKind::wbhp: return "wbhp";
    case ModelKind::sbhp: return "sbhp";
    case ModelKind::cbhp: return "cbhp";
  }
  return "?";
}

std::optional<ModelKind> parse_model_kind(std::string_view name) {
  for (ModelKind k : kAllModelKinds) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

bool is_hawkes(ModelKind k) {
  return k != ModelKind::se && k != ModelKind::sgs && k != ModelKind::sgd;
}

ModelKind kind_of(const HawkesModel& m) {
  if (std::holds_alternative<UnivariateModel>(m)) return ModelKind::uhp;
  const auto& marks = std::get<BivariateModel>(m).marks;
  switch (marks.index()) {
    case 1: return ModelKind::wbhp;
    case 2: return ModelKind::sbhp;
    case 3: return ModelKind::cbhp;
    default: return ModelKind::bhp;
  }
}

ModelKind kind_of(const BaselineParams& b) {
  switch (b.index()) {
    case 0: return ModelKind::se;
    case 1: return ModelKind::sgs;
    default: return ModelKind::sgd;
  }
}

ModelKind kind_of(const ModelSource& s) {
  return std::visit([](const auto& v) { return kind_of(v); }, s);
}

}  // namespace convhawkes
