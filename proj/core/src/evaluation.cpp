#include "convhawkes/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include "convhawkes/gamma_fit.hpp"
#include "convhawkes/intensity.hpp"
#include "convhawkes/parallel.hpp"
#include "convhawkes/prediction.hpp"

namespace convhawkes {

std::vector<double> extract_durations(const Dataset& d) {
  std::vector<double> out;
  out.reserve(d.size());
  for (const auto& c : d.conversations) out.push_back(c.last_message_time());
  return out;
}

std::vector<double> extract_gaps(const Dataset& d, GapFilter by) {
  std::vector<double> out;
  for (const auto& c : d.conversations) {
    for (std::size_t i = 1; i < c.messages.size(); ++i) {
      const Sender s = c.messages[i].sender;
      if (by == GapFilter::customer && s != Sender::customer) continue;
      if (by == GapFilter::agent && s != Sender::agent) continue;
      out.push_back(c.messages[i].time - c.messages[i - 1].time);
    }
  }
  return out;
}

double kolmogorov_survival(double lambda) {
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-16) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_two_sample(std::span<const double> x, std::span<const double> y) {
  if (x.empty() || y.empty()) throw DataError("KS test needs two nonempty samples");
  std::vector<double> a(x.begin(), x.end()), b(y.begin(), y.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() || j < b.size()) {
    const double v = j >= b.size() || (i < a.size() && a[i] <= b[j]) ? a[i] : b[j];
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = na * nb / (na + nb);
  const double root = std::sqrt(ne);
  return {d, kolmogorov_survival((root + 0.12 + 0.11 / root) * d)};
}

double empirical_quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw DataError("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(q, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

std::vector<double> default_quantile_grid() {
  std::vector<double> g;
  for (int k = 1; k <= 99; ++k) g.push_back(k / 100.0);
  return g;
}

std::vector<QqPoint> qq_points(std::span<const double> x, std::span<const double> y,
                               std::span<const double> grid) {
  std::vector<double> a(x.begin(), x.end()), b(y.begin(), y.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<QqPoint> out;
  out.reserve(grid.size());
  for (double q : grid) {
    if (!(q > 0.0 && q < 1.0)) throw UsageError("quantile grid must lie in (0, 1)");
    out.push_back({q, empirical_quantile(a, q), empirical_quantile(b, q)});
  }
  return out;
}

std::vector<QqPoint> qq_points(std::span<const double> x, std::span<const double> y) {
  const auto grid = default_quantile_grid();
  return qq_points(x, y, grid);
}

std::vector<CdfPoint> cdf_points(std::span<const double> x, std::span<const double> y, std::size_t points) {
  std::vector<double> a(x.begin(), x.end()), b(y.begin(), y.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<double> pooled;
  pooled.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(pooled));
  std::vector<CdfPoint> out;
  if (pooled.empty() || points == 0) return out;
  auto ecdf = [](const std::vector<double>& s, double v) {
    if (s.empty()) return 0.0;
    return static_cast<double>(std::upper_bound(s.begin(), s.end(), v) - s.begin()) /
           static_cast<double>(s.size());
  };
  double last = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t k = 0; k < points; ++k) {
    const double q = points == 1 ? 1.0 : static_cast<double>(k) / static_cast<double>(points - 1);
    const double v = empirical_quantile(pooled, q);
    if (v == last) continue;
    last = v;
    out.push_back({v, ecdf(a, v), ecdf(b, v)});
  }
  return out;
}

std::vector<SampleTime> sample_times(const Dataset& d, const SamplingStrategy& s) {
  std::vector<SampleTime> out;
  for (std::size_t i = 0; i < d.conversations.size(); ++i) {
    const Conversation& c = d.conversations[i];
    switch (s.kind) {
      case SamplingStrategy::Kind::deterministic: {
        if (!(s.step > 0.0)) throw UsageError("deterministic sampling needs step > 0");
        for (std::size_t k = 1;; ++k) {
          const double t = s.step * static_cast<double>(k);
          if (!(t < c.close_time)) break;
          out.push_back({i, t});
        }
        break;
      }
      case SamplingStrategy::Kind::activity:
        for (const Message& m : c.messages) out.push_back({i, m.time});
        break;
      case SamplingStrategy::Kind::random: {
        if (!(c.close_time > 0.0)) break;
        Rng rng = make_rng(s.seed, i);
        std::uniform_real_distribution<double> u(0.0, c.close_time);
        out.push_back({i, u(rng)});
        break;
      }
    }
  }
  return out;
}

bool label_activity(const Conversation& c, double t, double delta) {
  for (const Message& m : c.messages) {
    if (m.time > t && (std::isinf(delta) || m.time <= t + delta)) return true;
  }
  return false;
}

namespace {

struct ClassCounts {
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

ClassCounts count_classes(std::span<const PredictionRecord> r) {
  ClassCounts c;
  for (const auto& x : r) (x.label ? c.positives : c.negatives) += 1;
  return c;
}

}  // namespace

double auc(std::span<const PredictionRecord> records) {
  const ClassCounts cc = count_classes(records);
  if (cc.positives == 0 || cc.negatives == 0) {
    throw DataError("AUC needs both classes (positives " + std::to_string(cc.positives) + ", negatives " +
                    std::to_string(cc.negatives) + ")");
  }
  std::vector<std::size_t> idx(records.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return records[a].score < records[b].score; });
  // Average ranks over tied scores.
  double positive_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j < idx.size() && records[idx[j]].score == records[idx[i]].score) ++j;
    const double rank = (static_cast<double>(i) + 1.0 + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (records[idx[k]].label) positive_rank_sum += rank;
    }
    i = j;
  }
  const double np = static_cast<double>(cc.positives), nn = static_cast<double>(cc.negatives);
  return (positive_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

std::vector<RocPoint> roc_curve(std::span<const PredictionRecord> records) {
  const ClassCounts cc = count_classes(records);
  if (cc.positives == 0 || cc.negatives == 0) {
    throw DataError("ROC needs both classes (positives " + std::to_string(cc.positives) + ", negatives " +
                    std::to_string(cc.negatives) + ")");
  }
  std::vector<std::size_t> idx(records.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return records[a].score > records[b].score; });
  std::vector<RocPoint> out;
  out.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::size_t tp = 0, fp = 0, i = 0;
  while (i < idx.size()) {
    const double threshold = records[idx[i]].score;
    while (i < idx.size() && records[idx[i]].score == threshold) {
      (records[idx[i]].label ? tp : fp) += 1;
      ++i;
    }
    out.push_back({threshold, static_cast<double>(tp) / static_cast<double>(cc.positives),
                   static_cast<double>(fp) / static_cast<double>(cc.negatives)});
  }
  return out;
}

double quiet_probability(const ModelSource& model, const Conversation& c, double t, double delta) {
  if (const auto* h = std::get_if<HawkesModel>(&model)) return p_quiet_interval(*h, c, t, delta);
  const auto& b = std::get<BaselineParams>(model);
  if (!(delta > 0.0)) return 1.0;
  if (std::isinf(delta)) return 0.0;
  std::size_t seen = 0;
  double last = 0.0;
  for (const Message& m : c.messages) {
    if (m.time > t) break;
    ++seen;
    last = m.time;
  }
  const double elapsed = t - last;
  const std::size_t next_gap = seen;  // messages after the initial query, plus one
  return std::visit(
      [&](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, SumOfExponentials>) {
          return std::exp(-p.rate * delta);
        } else if constexpr (std::is_same_v<T, SumOfGammaStatic>) {
          return gamma_residual_survival(p.gap, elapsed, delta);
        } else {
          return gamma_residual_survival(p.for_gap(next_gap), elapsed, delta);
        }
      },
      b);
}

std::vector<PredictionRecord> PredictionEvaluation::records_for(double delta) const {
  std::vector<PredictionRecord> out;
  for (const auto& r : records) {
    if (r.delta == delta) out.push_back(r);
  }
  return out;
}

namespace {

void fill_table(PredictionEvaluation& ev, std::span<const double> deltas) {
  for (double delta : deltas) {
    const auto recs = ev.records_for(delta);
    AucRow row;
    row.delta = delta;
    const ClassCounts cc = count_classes(recs);
    row.positives = cc.positives;
    row.negatives = cc.negatives;
    row.auc = (cc.positives > 0 && cc.negatives > 0) ? auc(recs) : std::numeric_limits<double>::quiet_NaN();
    ev.table.push_back(row);
  }
}

}  // namespace

PredictionEvaluation evaluate_prediction(const ModelSource& model, const Dataset& d, const SamplingStrategy& s,
                                         std::span<const double> deltas, unsigned threads) {
  const auto times = sample_times(d, s);
  PredictionEvaluation ev;
  ev.records.resize(times.size() * deltas.size());
  parallel_chunks(times.size(), threads, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const Conversation& c = d.conversations[times[i].conversation];
      const double t = times[i].t;
      for (std::size_t k = 0; k < deltas.size(); ++k) {
        PredictionRecord& r = ev.records[k * times.size() + i];
        r.id = c.id;
        r.t = t;
        r.delta = deltas[k];
        r.score = 1.0 - quiet_probability(model, c, t, deltas[k]);
        r.label = label_activity(c, t, deltas[k]);
      }
    }
  });
  fill_table(ev, deltas);
  return ev;
}

PredictionEvaluation evaluate_agent_idleness(const ModelSource& model, const Dataset& d, double step,
                                             std::span<const double> deltas_seconds, unsigned threads) {
  if (!(step > 0.0)) throw UsageError("idleness sampling needs step > 0");
  std::map<std::string, std::vector<const Conversation*>> by_agent;
  for (const auto& c : d.conversations) by_agent[c.agent_id].push_back(&c);
  std::vector<std::pair<std::string, std::vector<const Conversation*>>> agents(by_agent.begin(), by_agent.end());

  std::vector<double> deltas;
  for (double s : deltas_seconds) deltas.push_back(s / 60.0);

  std::vector<std::vector<PredictionRecord>> per_agent(agents.size());
  parallel_chunks(agents.size(), threads, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t a = b; a < e; ++a) {
      const auto& convs = agents[a].second;
      double origin = std::numeric_limits<double>::infinity(), end = -origin;
      for (const Conversation* c : convs) {
        origin = std::min(origin, c->start_epoch);
        end = std::max(end, c->close_epoch());
      }
      for (std::size_t k = 1;; ++k) {
        const double t_abs = origin + step * static_cast<double>(k);
        if (!(t_abs < end)) break;
        std::vector<Conversation> open;
        for (const Conversation* c : convs) {
          if (open_at(*c, t_abs)) open.push_back(*c);
        }
        if (open.empty()) continue;
        for (std::size_t j = 0; j < deltas.size(); ++j) {
          double quiet = 1.0;
          if (const auto* h = std::get_if<HawkesModel>(&model)) {
            quiet = p_agent_quiet_interval(*h, open, t_abs, deltas[j]).probability;
          } else {
            for (const auto& c : open) quiet *= quiet_probability(model, c, t_abs - c.start_epoch, deltas[j]);
          }
          bool label = false;
          for (const auto& c : open) label = label || label_activity(c, t_abs - c.start_epoch, deltas[j]);
          per_agent[a].push_back({agents[a].first, t_abs, deltas_seconds[j], 1.0 - quiet, label});
        }
      }
    }
  });

  PredictionEvaluation ev;
  for (std::size_t j = 0; j < deltas.size(); ++j) {
    for (const auto& recs : per_agent) {
      for (const auto& r : recs) {
        if (r.delta == deltas_seconds[j]) ev.records.push_back(r);
      }
    }
  }
  fill_table(ev, deltas_seconds);
  return ev;
}

}  // namespace convhawkes
