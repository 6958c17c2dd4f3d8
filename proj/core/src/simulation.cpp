#include "convhawkes/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <random>

#include "convhawkes/intensity.hpp"

namespace convhawkes {

namespace {

// Gamma-Poisson count with the given mean and variance (variance > mean).
std::size_t overdispersed_count(double mean, double variance, Rng& rng) {
  const double p = mean / variance;
  const double shape = mean * p / (1.0 - p);
  std::gamma_distribution<double> lambda(shape, (1.0 - p) / p);
  std::poisson_distribution<std::size_t> count(lambda(rng));
  return count(rng);
}

template <class T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  std::uniform_int_distribution<std::size_t> idx(0, v.size() - 1);
  return v[idx(rng)];
}

std::string padded_id(const char* prefix, std::size_t i) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s%07zu", prefix, i);
  return buf;
}

}  // namespace

MarkSamplers default_samplers() {
  MarkSamplers ms;
  ms.gap_count = [](Rng& rng) {
    // Geometric on {0, 1, ...} with mean 13.84 non-initial messages.
    std::geometric_distribution<std::size_t> g(1.0 / 14.84);
    return g(rng);
  };
  // 27.9% customer overall with the initial query always a customer message.
  ms.sender_at = [](std::size_t, Rng& rng) {
    std::bernoulli_distribution customer((0.279 * 14.84 - 1.0) / 13.84);
    return customer(rng) ? Sender::customer : Sender::agent;
  };
  ms.words = [](Sender s, Rng& rng) {
    const double mean = s == Sender::customer ? 13.14 : 23.0;
    const double sd = s == Sender::customer ? 16.02 : 22.74;
    return 1 + static_cast<int>(overdispersed_count(mean - 1.0, sd * sd, rng));
  };
  ms.sentiment = [](Sender, Rng& rng) {
    std::normal_distribution<double> n(0.15, 0.80);
    return std::clamp(n(rng), -14.0, 24.0);
  };
  ms.concurrency = [](Rng& rng) { return 1 + static_cast<int>(overdispersed_count(3.79, 2.49 * 2.49, rng)); };
  ms.close_lag = [](Rng& rng) {
    std::exponential_distribution<double> e(1.0 / (118.24 - 53.48));
    return e(rng);
  };
  ms.description = "default synthetic samplers";
  return ms;
}

MarkSamplers build_samplers(const Dataset& d) {
  if (d.empty()) throw DataError("cannot build samplers from an empty dataset");
  struct Pools {
    std::vector<std::size_t> gap_counts;
    std::vector<double> customer_share;  // by position 1..P
    double pooled_share = 0.0;
    std::vector<int> words[2];
    std::vector<double> sentiment[2];
    std::vector<int> concurrency;
    std::vector<double> close_lags;
  };
  auto pools = std::make_shared<Pools>();
  std::vector<std::size_t> customers_at, totals_at;
  std::size_t customers = 0, total = 0;
  for (const auto& c : d.conversations) {
    pools->gap_counts.push_back(c.messages.empty() ? 0 : c.messages.size() - 1);
    pools->concurrency.push_back(c.concurrency.at(0.0));
    pools->close_lags.push_back(std::max(0.0, c.close_time - c.last_message_time()));
    for (std::size_t i = 0; i < c.messages.size(); ++i) {
      const Message& m = c.messages[i];
      const int s = m.sender == Sender::customer ? 0 : 1;
      pools->words[s].push_back(m.words);
      pools->sentiment[s].push_back(m.sentiment);
      if (i == 0) continue;
      if (customers_at.size() < i) {
        customers_at.resize(i, 0);
        totals_at.resize(i, 0);
      }
      totals_at[i - 1] += 1;
      ++total;
      if (m.sender == Sender::customer) {
        customers_at[i - 1] += 1;
        ++customers;
      }
    }
  }
  pools->pooled_share = total > 0 ? static_cast<double>(customers) / static_cast<double>(total) : 0.0;
  for (std::size_t i = 0; i < totals_at.size(); ++i) {
    pools->customer_share.push_back(static_cast<double>(customers_at[i]) / static_cast<double>(totals_at[i]));
  }
  for (int s = 0; s < 2; ++s) {
    if (pools->words[s].empty()) {
      pools->words[s] = pools->words[1 - s];
      pools->sentiment[s] = pools->sentiment[1 - s];
    }
  }

  MarkSamplers ms;
  ms.gap_count = [pools](Rng& rng) { return pick(pools->gap_counts, rng); };
  ms.sender_at = [pools](std::size_t position, Rng& rng) {
    const double share = position >= 1 && position <= pools->customer_share.size()
                             ? pools->customer_share[position - 1]
                             : pools->pooled_share;
    std::bernoulli_distribution customer(share);
    return customer(rng) ? Sender::customer : Sender::agent;
  };
  ms.words = [pools](Sender s, Rng& rng) { return pick(pools->words[s == Sender::customer ? 0 : 1], rng); };
  ms.sentiment = [pools](Sender s, Rng& rng) {
    return pick(pools->sentiment[s == Sender::customer ? 0 : 1], rng);
  };
  ms.concurrency = [pools](Rng& rng) { return pick(pools->concurrency, rng); };
  ms.close_lag = [pools](Rng& rng) { return pick(pools->close_lags, rng); };
  ms.description = "empirical resampling of " + std::to_string(d.size()) + " conversations";
  return ms;
}

double branching_ratio(const HawkesModel& m) {
  if (const auto* u = std::get_if<UnivariateModel>(&m)) return u->kernel.ratio();
  return std::get<BivariateModel>(m).params.spectral_radius();
}

namespace {

Message draw_message(const MarkSamplers& ms, double time, Sender s, Rng& rng) {
  Message m;
  m.time = time;
  m.sender = s;
  m.words = ms.words(s, rng);
  m.sentiment = ms.sentiment(s, rng);
  return m;
}

Conversation finish(std::vector<Message> msgs, int concurrency, const MarkSamplers& ms, Rng& rng) {
  Conversation c;
  c.messages = std::move(msgs);
  c.concurrency = ConcurrencyTimeline(concurrency);
  c.close_time = c.last_message_time() + ms.close_lag(rng);
  return c;
}

}  // namespace

Conversation simulate_conversation(const HawkesModel& m, const MarkSamplers& ms, std::uint64_t seed,
                                   const SimulationLimits& limits) {
  const double rho = branching_ratio(m);
  if (!(rho < 1.0)) {
    throw NumericError("refusing to simulate unstable parameters (branching ratio " + std::to_string(rho) + ")");
  }
  Rng rng(derive_seed(seed, 0));
  const int k = ms.concurrency(rng);

  std::vector<Message> events;
  events.push_back(draw_message(ms, 0.0, Sender::customer, rng));

  if (const auto* u = std::get_if<UnivariateModel>(&m)) {
    std::poisson_distribution<std::size_t> offspring(u->kernel.ratio());
    std::exponential_distribution<double> delay(u->kernel.beta);
    std::vector<double> times{0.0};
    for (std::size_t i = 0; i < times.size(); ++i) {
      const std::size_t n = offspring(rng);
      for (std::size_t j = 0; j < n; ++j) times.push_back(times[i] + delay(rng));
      if (times.size() > limits.max_events) throw NumericError("simulated conversation exceeded the event cap");
    }
    std::sort(times.begin() + 1, times.end());
    for (std::size_t i = 1; i < times.size(); ++i) {
      events.push_back(draw_message(ms, times[i], ms.sender_at(i, rng), rng));
    }
    return finish(std::move(events), k, ms, rng);
  }

  const auto& bm = std::get<BivariateModel>(m);
  const double f_agent = mark_f(bm.marks, k);
  for (std::size_t i = 0; i < events.size(); ++i) {
    const Message parent = events[i];
    const double g = mark_g(bm.marks, parent);
    for (Sender x : {Sender::customer, Sender::agent}) {
      const KernelParams& kp = bm.params[channel_of(x, parent.sender)];
      const double f = x == Sender::agent ? f_agent : 1.0;
      std::poisson_distribution<std::size_t> offspring(kp.ratio() * g);
      std::exponential_distribution<double> delay(kp.beta * f);
      const std::size_t n = offspring(rng);
      for (std::size_t j = 0; j < n; ++j) events.push_back(draw_message(ms, parent.time + delay(rng), x, rng));
    }
    if (events.size() > limits.max_events) throw NumericError("simulated conversation exceeded the event cap");
  }
  std::stable_sort(events.begin() + 1, events.end(),
                   [](const Message& a, const Message& b) { return a.time < b.time; });
  return finish(std::move(events), k, ms, rng);
}

Conversation simulate_baseline(const BaselineParams& b, const MarkSamplers& ms, std::uint64_t seed) {
  check_baseline(b);
  Rng rng(derive_seed(seed, 0));
  const int k = ms.concurrency(rng);
  const std::size_t gaps = ms.gap_count(rng);
  std::vector<Message> events;
  events.push_back(draw_message(ms, 0.0, Sender::customer, rng));
  double t = 0.0;
  for (std::size_t j = 1; j <= gaps; ++j) {
    double gap = 0.0;
    if (const auto* se = std::get_if<SumOfExponentials>(&b)) {
      std::exponential_distribution<double> e(se->rate);
      gap = e(rng);
    } else {
      const GammaParams& gp = std::holds_alternative<SumOfGammaStatic>(b)
                                  ? std::get<SumOfGammaStatic>(b).gap
                                  : std::get<SumOfGammaDynamic>(b).for_gap(j);
      std::gamma_distribution<double> gd(gp.shape, 1.0 / gp.rate);
      gap = gd(rng);
    }
    t += gap;
    events.push_back(draw_message(ms, t, ms.sender_at(j, rng), rng));
  }
  return finish(std::move(events), k, ms, rng);
}

Dataset simulate_dataset(const ModelSource& source, const MarkSamplers& ms, std::size_t n, std::uint64_t seed,
                         unsigned threads, const SimulationLimits& limits) {
  if (n == 0) throw UsageError("simulate_dataset needs n >= 1");
  Dataset d;
  d.conversations.resize(n);
  d.metadata.source = std::string("simulated ") + std::string(to_string(kind_of(source))) + ", seed " +
                      std::to_string(seed);
  parallel_chunks(n, threads, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const std::uint64_t s = derive_seed(seed, i);
      Conversation c = std::holds_alternative<HawkesModel>(source)
                           ? simulate_conversation(std::get<HawkesModel>(source), ms, s, limits)
                           : simulate_baseline(std::get<BaselineParams>(source), ms, s);
      c.id = padded_id("sim-", i);
      c.agent_id = padded_id("sim-agent-", i);
      c.start_epoch = 1440.0 * static_cast<double>(i);
      d.conversations[i] = std::move(c);
    }
  });
  return d;
}

}  // namespace convhawkes
