#include "convhawkes/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "convhawkes/intensity.hpp"
#include "convhawkes/parallel.hpp"

namespace convhawkes {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

// Uniform view over univariate and bivariate models.
struct ModelView {
  bool univariate = false;
  std::array<KernelParams, kChannelCount> kernels{};
  MarkModel marks = UnitMark{};
  bool concurrency_marks = false;

  explicit ModelView(const HawkesModel& m) {
    if (const auto* u = std::get_if<UnivariateModel>(&m)) {
      univariate = true;
      kernels[0] = u->kernel;
    } else {
      const auto& b = std::get<BivariateModel>(m);
      for (std::size_t k = 0; k < kChannelCount; ++k) kernels[k] = b.params[static_cast<Channel>(k)];
      marks = b.marks;
      concurrency_marks = std::holds_alternative<ConcurrencyMark>(marks);
    }
  }

  [[nodiscard]] std::size_t channels() const { return univariate ? 1 : kChannelCount; }

  [[nodiscard]] std::size_t slot(Sender receiver, Sender stimulus) const {
    return univariate ? 0 : static_cast<std::size_t>(channel_of(receiver, stimulus));
  }

  [[nodiscard]] bool receives(std::size_t slot_index, Sender receiver) const {
    return univariate || receiver_of(static_cast<Channel>(slot_index)) == receiver;
  }

  [[nodiscard]] bool stimulated_by(std::size_t slot_index, Sender s) const {
    return univariate || stimulus_of(static_cast<Channel>(slot_index)) == s;
  }

  [[nodiscard]] bool agent_slot(std::size_t slot_index) const {
    return !univariate && receiver_of(static_cast<Channel>(slot_index)) == Sender::agent;
  }

  // f(K) multiplying both jump and decay for the receiving side at time t.
  [[nodiscard]] double f_at(Sender receiver, const Conversation& c, double t) const {
    if (univariate || receiver == Sender::customer || !concurrency_marks) return 1.0;
    return mark_f(marks, c.concurrency.at(t));
  }

  [[nodiscard]] double g_of(const Message& m) const { return univariate ? 1.0 : mark_g(marks, m); }
};

// Parent-side terms: g * kernel mass and its beta-derivative correction.
void add_parent_terms(const ModelView& v, const Conversation& c, EStepStats& out) {
  const auto& bps = c.concurrency.breakpoints();
  const auto& vals = c.concurrency.values();
  const bool varying = v.concurrency_marks && !c.concurrency.is_constant();
  for (const Message& m : c.messages) {
    const double g = v.g_of(m);
    for (std::size_t s = 0; s < v.channels(); ++s) {
      if (!v.stimulated_by(s, m.sender)) continue;
      ChannelStats& ch = out.channels[s];
      if (!varying || !v.agent_slot(s)) {
        ch.parent_mass += g;
        continue;
      }
      const double beta = v.kernels[s].beta;
      ch.parent_mass += g * agent_kernel_mass(v.marks, c.concurrency, beta, m.time, 0.0, kInfinity);
      double corr = 0.0;
      for (std::size_t k = 0; k < vals.size(); ++k) {
        const double f = mark_f(v.marks, vals[k]);
        const double xs = std::max(0.0, bps[k] - m.time);
        corr += f * xs * decay(beta * f, xs);
        if (k + 1 < bps.size()) {
          const double xe = std::max(0.0, bps[k + 1] - m.time);
          corr -= f * xe * decay(beta * f, xe);
        }
      }
      ch.correction += g * corr;
    }
  }
}

bool recursion_applies(const ModelView& v, const Conversation& c) {
  return !v.concurrency_marks || c.concurrency.is_constant();
}

void pairwise_stats(const ModelView& v, const Conversation& c, EStepStats& out) {
  const auto& msgs = c.messages;
  std::vector<double> logc;
  for (std::size_t i = 1; i < msgs.size(); ++i) {
    const Message& target = msgs[i];
    const double f = v.f_at(target.sender, c, target.time);
    logc.assign(i, kNegInf);
    double log_rate = kNegInf;
    for (std::size_t j = 0; j < i; ++j) {
      if (!(msgs[j].time < target.time)) break;
      const KernelParams& k = v.kernels[v.slot(target.sender, msgs[j].sender)];
      logc[j] = std::log(k.alpha * f * v.g_of(msgs[j])) - k.beta * f * (target.time - msgs[j].time);
      log_rate = log_add(log_rate, logc[j]);
    }
    ++out.targets;
    if (log_rate == kNegInf) {
      ++out.degenerate_rows;
      out.log_terms = kNegInf;
      continue;
    }
    out.log_terms += log_rate;
    for (std::size_t j = 0; j < i && msgs[j].time < target.time; ++j) {
      const double p = std::exp(logc[j] - log_rate);
      ChannelStats& ch = out.channels[v.slot(target.sender, msgs[j].sender)];
      ch.mass += p;
      ch.weighted_age += p * f * (target.time - msgs[j].time);
    }
  }
}

// O(N) route: for constant f the per-channel excitation and its mean parent
// age obey a two-term recursion between consecutive event times.
void recursive_stats(const ModelView& v, const Conversation& c, EStepStats& out) {
  struct State {
    double log_mass = kNegInf;  // log of sum g e^{-beta f (t_last - A)}
    double mean_age = 0.0;      // mass-weighted mean of (t_last - A)
    double t_last = 0.0;
  };
  std::array<State, kChannelCount> state{};
  std::array<double, kChannelCount> f{};
  for (std::size_t s = 0; s < v.channels(); ++s) {
    f[s] = v.agent_slot(s) ? v.f_at(Sender::agent, c, 0.0) : 1.0;
  }

  const auto& msgs = c.messages;
  std::size_t group_begin = 0;
  while (group_begin < msgs.size()) {
    std::size_t group_end = group_begin + 1;
    while (group_end < msgs.size() && msgs[group_end].time == msgs[group_begin].time) ++group_end;
    const double t = msgs[group_begin].time;

    for (std::size_t i = std::max<std::size_t>(group_begin, 1); i < group_end; ++i) {
      const Sender x = msgs[i].sender;
      double log_rate = kNegInf;
      std::array<double, kChannelCount> logc;
      logc.fill(kNegInf);
      for (std::size_t s = 0; s < v.channels(); ++s) {
        if (!v.receives(s, x) || state[s].log_mass == kNegInf) continue;
        const KernelParams& k = v.kernels[s];
        logc[s] = std::log(k.alpha * f[s]) + state[s].log_mass - k.beta * f[s] * (t - state[s].t_last);
        log_rate = log_add(log_rate, logc[s]);
      }
      ++out.targets;
      if (log_rate == kNegInf) {
        ++out.degenerate_rows;
        out.log_terms = kNegInf;
        continue;
      }
      out.log_terms += log_rate;
      for (std::size_t s = 0; s < v.channels(); ++s) {
        if (logc[s] == kNegInf) continue;
        const double p = std::exp(logc[s] - log_rate);
        out.channels[s].mass += p;
        out.channels[s].weighted_age += p * f[s] * (state[s].mean_age + (t - state[s].t_last));
      }
    }

    for (std::size_t i = group_begin; i < group_end; ++i) {
      const double log_g = std::log(v.g_of(msgs[i]));
      for (std::size_t s = 0; s < v.channels(); ++s) {
        if (!v.stimulated_by(s, msgs[i].sender)) continue;
        State& st = state[s];
        const double elapsed = t - st.t_last;
        const double decayed =
            st.log_mass == kNegInf ? kNegInf : st.log_mass - v.kernels[s].beta * f[s] * elapsed;
        const double merged = log_add(decayed, log_g);
        const double w = decayed == kNegInf ? 0.0 : std::exp(decayed - merged);
        st.mean_age = w * (st.mean_age + elapsed);
        st.log_mass = merged;
        st.t_last = t;
      }
    }
    group_begin = group_end;
  }
}

}  // namespace

void ChannelStats::add(const ChannelStats& o) {
  mass += o.mass;
  weighted_age += o.weighted_age;
  parent_mass += o.parent_mass;
  correction += o.correction;
}

void EStepStats::add(const EStepStats& o) {
  for (std::size_t k = 0; k < kChannelCount; ++k) channels[k].add(o.channels[k]);
  log_terms += o.log_terms;
  targets += o.targets;
  degenerate_rows += o.degenerate_rows;
}

double EStepStats::log_likelihood(const HawkesModel& at) const {
  const ModelView v(at);
  double ll = log_terms;
  for (std::size_t s = 0; s < v.channels(); ++s) ll -= v.kernels[s].ratio() * channels[s].parent_mass;
  return ll;
}

EStepStats estep_stats(const HawkesModel& m, const Conversation& c, EStepRoute route) {
  const ModelView v(m);
  EStepStats out;
  add_parent_terms(v, c, out);
  const bool can_recurse = recursion_applies(v, c);
  if (route == EStepRoute::recursive && !can_recurse)
    throw UsageError("recursive E-step requires constant concurrency within the conversation");
  if (route == EStepRoute::pairwise || (route == EStepRoute::automatic && !can_recurse)) {
    pairwise_stats(v, c, out);
  } else {
    recursive_stats(v, c, out);
  }
  return out;
}

ResponseMatrix e_step(const HawkesModel& m, const Conversation& c) {
  const ModelView v(m);
  const auto& msgs = c.messages;
  ResponseMatrix out;
  out.rows.reserve(msgs.size() > 0 ? msgs.size() - 1 : 0);
  for (std::size_t i = 1; i < msgs.size(); ++i) {
    const Message& target = msgs[i];
    const double f = v.f_at(target.sender, c, target.time);
    ResponseRow row;
    row.target = i;
    double log_rate = kNegInf;
    std::vector<double> logc;
    for (std::size_t j = 0; j < i && msgs[j].time < target.time; ++j) {
      const KernelParams& k = v.kernels[v.slot(target.sender, msgs[j].sender)];
      logc.push_back(std::log(k.alpha * f * v.g_of(msgs[j])) - k.beta * f * (target.time - msgs[j].time));
      log_rate = log_add(log_rate, logc.back());
    }
    if (logc.empty() || log_rate == kNegInf || !std::isfinite(log_rate)) {
      row.degenerate = true;
      ++out.degenerate_rows;
      for (std::size_t j = 0; j < logc.size(); ++j) {
        row.parents.push_back({j, 1.0 / static_cast<double>(logc.size())});
      }
    } else {
      for (std::size_t j = 0; j < logc.size(); ++j) row.parents.push_back({j, std::exp(logc[j] - log_rate)});
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

EStepStats stats_from_responses(const HawkesModel& m, const Conversation& c, const ResponseMatrix& r) {
  const ModelView v(m);
  EStepStats out;
  add_parent_terms(v, c, out);
  for (const ResponseRow& row : r.rows) {
    const Message& target = c.messages.at(row.target);
    const double f = v.f_at(target.sender, c, target.time);
    ++out.targets;
    if (row.degenerate) ++out.degenerate_rows;
    for (const ResponseEntry& e : row.parents) {
      const Message& parent = c.messages.at(e.parent);
      ChannelStats& ch = out.channels[v.slot(target.sender, parent.sender)];
      ch.mass += e.probability;
      ch.weighted_age += e.probability * f * (target.time - parent.time);
    }
  }
  return out;
}

HawkesModel apply_m_step(const EStepStats& stats, const HawkesModel& prev, MStepDiagnostics* diag) {
  const ModelView v(prev);
  std::array<KernelParams, kChannelCount> next = v.kernels;
  for (std::size_t s = 0; s < v.channels(); ++s) {
    const ChannelStats& ch = stats.channels[s];
    auto hold = [&](const char* why) {
      if (diag) {
        diag->held.push_back(std::string(v.univariate ? "uhp" : to_string(static_cast<Channel>(s))) + ": " + why);
      }
    };
    if (!(ch.mass > 0.0) || !(ch.parent_mass > 0.0)) {
      hold("no response mass");
      continue;
    }
    const double ratio = ch.mass / ch.parent_mass;
    const double denom = ch.weighted_age - ratio * ch.correction;
    double beta = v.kernels[s].beta;
    if (denom > 0.0 && std::isfinite(denom)) {
      beta = ch.mass / denom;
    } else {
      hold("nonpositive decay denominator");
    }
    next[s] = KernelParams{ratio * beta, beta};
  }
  if (v.univariate) return UnivariateModel{next[0]};
  BivariateModel out = std::get<BivariateModel>(prev);
  for (std::size_t s = 0; s < kChannelCount; ++s) out.params[static_cast<Channel>(s)] = next[s];
  return out;
}

HawkesModel m_step(const Dataset& d, std::span<const ResponseMatrix> responses, const HawkesModel& prev,
                   MStepDiagnostics* diag) {
  if (responses.size() != d.conversations.size())
    throw UsageError("m_step needs one ResponseMatrix per conversation");
  EStepStats total;
  for (std::size_t i = 0; i < responses.size(); ++i) {
    total.add(stats_from_responses(prev, d.conversations[i], responses[i]));
  }
  return apply_m_step(total, prev, diag);
}

double log_likelihood(const HawkesModel& m, const Conversation& c) {
  const ModelView v(m);
  const auto& msgs = c.messages;
  double ll = 0.0;
  for (std::size_t i = 1; i < msgs.size(); ++i) {
    const Message& target = msgs[i];
    const double f = v.f_at(target.sender, c, target.time);
    double log_rate = kNegInf;
    for (std::size_t j = 0; j < i && msgs[j].time < target.time; ++j) {
      const KernelParams& k = v.kernels[v.slot(target.sender, msgs[j].sender)];
      log_rate = log_add(log_rate,
                         std::log(k.alpha * f * v.g_of(msgs[j])) - k.beta * f * (target.time - msgs[j].time));
    }
    if (log_rate == kNegInf) return kNegInf;
    ll += log_rate;
  }
  return ll - compensator(m, c, 0.0, kInfinity).total();
}

double log_likelihood(const HawkesModel& m, const Dataset& d, unsigned threads) {
  const std::size_t n = d.conversations.size();
  std::vector<double> partial(chunk_count(n), 0.0);
  parallel_chunks(n, threads, [&](std::size_t k, std::size_t b, std::size_t e) {
    double s = 0.0;
    for (std::size_t i = b; i < e; ++i) s += log_likelihood(m, d.conversations[i]);
    partial[k] = s;
  });
  return std::accumulate(partial.begin(), partial.end(), 0.0);
}

MarkModel mark_model_for(ModelKind kind, const Dataset& d) {
  switch (kind) {
    case ModelKind::wbhp: {
      double words = 0.0;
      std::size_t n = 0;
      for (const auto& c : d.conversations) {
        for (const auto& m : c.messages) {
          words += m.words;
          ++n;
        }
      }
      if (n == 0) throw DataError("word mark needs at least one message");
      return WordMark{words / static_cast<double>(n)};
    }
    case ModelKind::sbhp: {
      double sum = 0.0;
      double lo = kInfinity;
      std::size_t n = 0;
      for (const auto& c : d.conversations) {
        for (const auto& m : c.messages) {
          sum += m.sentiment;
          lo = std::min(lo, m.sentiment);
          ++n;
        }
      }
      if (n == 0) throw DataError("sentiment mark needs at least one message");
      SentimentMark mark{sum / static_cast<double>(n), lo};
      check_mark_model(mark);
      return mark;
    }
    case ModelKind::cbhp: return ConcurrencyMark{};
    default: return UnitMark{};
  }
}

HawkesModel random_init(ModelKind kind, const MarkModel& marks, std::uint64_t seed) {
  if (!is_hawkes(kind)) throw UsageError("random_init needs a Hawkes model kind");
  Rng rng = make_rng(seed, 0x1417);
  std::uniform_real_distribution<double> ratio_dist(std::log(0.05), std::log(0.95));
  std::uniform_real_distribution<double> beta_dist(std::log(0.1), std::log(100.0));
  auto draw = [&] {
    const double ratio = std::exp(ratio_dist(rng));
    const double beta = std::exp(beta_dist(rng));
    return KernelParams{ratio * beta, beta};
  };
  if (kind == ModelKind::uhp) return UnivariateModel{draw()};
  BivariateModel m;
  m.params.cc = draw();
  m.params.ca = draw();
  m.params.ac = draw();
  m.params.aa = draw();
  m.marks = marks;
  return m;
}

double parameter_distance(const HawkesModel& a, const HawkesModel& b) {
  const ModelView va(a), vb(b);
  if (va.univariate != vb.univariate) throw UsageError("parameter_distance: model families differ");
  double d = 0.0;
  for (std::size_t s = 0; s < va.channels(); ++s) {
    d += std::abs(va.kernels[s].alpha - vb.kernels[s].alpha) + std::abs(va.kernels[s].beta - vb.kernels[s].beta);
  }
  return d;
}

EmFit fit_em(const Dataset& d, const FitConfig& config) {
  if (d.empty()) throw DataError("cannot fit an empty dataset");
  if (!is_hawkes(config.kind)) throw UsageError("fit_em fits Hawkes models only");

  HawkesModel current = config.init ? *config.init
                                    : random_init(config.kind, mark_model_for(config.kind, d), config.seed);
  if (kind_of(current) != config.kind) throw UsageError("initial model does not match the requested kind");

  // Reductions run in id order so the fixed point does not depend on the
  // order of conversations in the dataset.
  std::vector<std::size_t> order(d.conversations.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return d.conversations[x].id < d.conversations[y].id;
  });

  auto pass = [&](const HawkesModel& at) {
    std::vector<EStepStats> partial(chunk_count(order.size()));
    parallel_chunks(order.size(), config.threads, [&](std::size_t k, std::size_t b, std::size_t e) {
      EStepStats s;
      for (std::size_t i = b; i < e; ++i) s.add(estep_stats(at, d.conversations[order[i]]));
      partial[k] = s;
    });
    EStepStats total;
    for (const auto& p : partial) total.add(p);
    if (!std::isfinite(total.log_terms)) {
      for (std::size_t i : order) {
        if (!std::isfinite(estep_stats(at, d.conversations[i]).log_terms)) {
          throw NumericError("non-finite log-likelihood in conversation '" + d.conversations[i].id +
                             "' (a message has no strictly earlier parent)");
        }
      }
      throw NumericError("non-finite log-likelihood");
    }
    return total;
  };

  EmFit fit;
  for (int iter = 0; iter < config.max_iterations; ++iter) {
    const EStepStats stats = pass(current);
    MStepDiagnostics diag;
    HawkesModel next = apply_m_step(stats, current, &diag);
    EmIteration rec;
    rec.log_likelihood = stats.log_likelihood(current);
    rec.change = parameter_distance(next, current);
    rec.params = next;
    fit.trace.degenerate_rows = stats.degenerate_rows;
    for (auto& h : diag.held) {
      if (std::find(fit.trace.notes.begin(), fit.trace.notes.end(), h) == fit.trace.notes.end())
        fit.trace.notes.push_back(std::move(h));
    }
    fit.trace.iterations.push_back(std::move(rec));
    current = std::move(next);
    if (!std::isfinite(fit.trace.iterations.back().change))
      throw NumericError("EM parameters became non-finite");
    if (fit.trace.iterations.back().change <= config.tolerance) {
      fit.trace.converged = true;
      break;
    }
  }
  fit.log_likelihood = pass(current).log_likelihood(current);
  fit.model = std::move(current);
  return fit;
}

}  // namespace convhawkes
