#include <doctest.h>

#include <cmath>
#include <random>

#include <boost/math/special_functions/digamma.hpp>

#include "convhawkes/estimation.hpp"
#include "convhawkes/gamma_fit.hpp"
#include "convhawkes/intensity.hpp"
#include "convhawkes/simulation.hpp"

using namespace convhawkes;

namespace {

Dataset from_gaps(const std::vector<std::vector<double>>& per_conversation) {
  Dataset d;
  int i = 0;
  for (const auto& gaps : per_conversation) {
    Conversation c;
    c.id = "g" + std::to_string(i++);
    c.messages.push_back({0.0, Sender::customer, 1, 0.0});
    double t = 0.0;
    for (double g : gaps) {
      t += g;
      c.messages.push_back({t, Sender::agent, 1, 0.0});
    }
    c.close_time = t;
    d.conversations.push_back(c);
  }
  return d;
}

std::vector<double> gamma_sample(double shape, double rate, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::gamma_distribution<double> g(shape, 1.0 / rate);
  std::vector<double> out(n);
  for (auto& x : out) x = g(rng);
  return out;
}

}  // namespace

TEST_CASE("gap indexing") {
  const Dataset d = from_gaps({{1.0, 2.0}, {}, {0.5}});
  const auto gaps = indexed_gaps(d);
  REQUIRE(gaps.size() == 3);
  CHECK(gaps[0].index == 1);
  CHECK(gaps[1].index == 2);
  CHECK(gaps[1].length == 2.0);
  CHECK(gaps[2].index == 1);
}

TEST_CASE("SE rate is the reciprocal mean gap") {
  CHECK(std::get<SumOfExponentials>(fit_se(from_gaps({{1, 1, 1}}))).rate == 1.0);
  CHECK(std::get<SumOfExponentials>(fit_se(from_gaps({{2}}))).rate == 0.5);
  CHECK(std::get<SumOfExponentials>(fit_se(from_gaps({{1}, {3}}))).rate == 0.5);
  CHECK_THROWS_AS((void)fit_se(from_gaps({{}, {}})), DataError);
}

TEST_CASE("gamma fit satisfies the mean condition") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto x = gamma_sample(0.7 + static_cast<double>(seed), 2.0, 500, seed);
    const GammaParams g = fit_gamma(x);
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    CHECK(g.shape / g.rate == doctest::Approx(mean).epsilon(1e-8));
    // the shape solves log a - digamma a = log mean - mean log
    double mlog = 0.0;
    for (double v : x) mlog += std::log(v);
    mlog /= static_cast<double>(x.size());
    const double lhs = std::log(g.shape) - boost::math::digamma(g.shape);
    CHECK(lhs == doctest::Approx(std::log(mean) - mlog).epsilon(1e-8));
  }
}

TEST_CASE("gamma fit of exponential data has shape near one") {
  const auto x = gamma_sample(1.0, 3.0, 20000, 11);
  const GammaParams g = fit_gamma(x);
  CHECK(std::abs(g.shape - 1.0) < 0.05);
}

TEST_CASE("gamma fit recovers a heavy-tailed gap distribution") {
  const auto x = gamma_sample(0.42, 0.16, 100000, 12);
  const GammaParams g = fit_gamma(x);
  CHECK(std::abs(g.shape / 0.42 - 1.0) < 0.05);
  CHECK(std::abs(g.rate / 0.16 - 1.0) < 0.05);
  // One gap per conversation keeps tiny gaps exact; a long cumulative clock would round them to zero.
  std::vector<std::vector<double>> single;
  for (double v : x) single.push_back({v});
  const GammaParams via_dataset = std::get<SumOfGammaStatic>(fit_sgs(from_gaps(single))).gap;
  CHECK(via_dataset.shape == doctest::Approx(g.shape).epsilon(1e-12));
}

TEST_CASE("gamma fit rejects degenerate samples") {
  CHECK_THROWS_AS((void)fit_gamma(std::vector<double>{}), DataError);
  CHECK_THROWS_AS((void)fit_gamma(std::vector<double>{1.0}), DataError);
  CHECK_THROWS_AS((void)fit_gamma(std::vector<double>{2.0, 2.0, 2.0}), DataError);
  CHECK_THROWS_AS((void)fit_gamma(std::vector<double>{1.0, 0.0, 2.0}), DataError);
  CHECK_FALSE(gamma_fit_possible(std::vector<double>{1.0, -1.0}));
  CHECK(gamma_fit_possible(std::vector<double>{1.0, 2.0}));
  CHECK_THROWS_AS((void)fit_sgs(from_gaps({{1.0}, {1.0}})), DataError);
}

TEST_CASE("SGD with one gap per conversation equals SGS") {
  std::vector<std::vector<double>> convs;
  for (double x : gamma_sample(0.8, 1.5, 400, 13)) convs.push_back({x});
  const Dataset d = from_gaps(convs);
  const GammaParams sgs = std::get<SumOfGammaStatic>(fit_sgs(d)).gap;
  const auto sgd = std::get<SumOfGammaDynamic>(fit_sgd(d));
  REQUIRE(sgd.per_index.size() == 1);
  CHECK(sgd.per_index[0] == sgs);
  CHECK(sgd.tail == sgs);
  CHECK(sgd.for_gap(5) == sgs);
}

TEST_CASE("SGD merges unfittable buckets into the pooled fit") {
  // index 2 has a single sample and joins the pooled gaps from index 3 on
  const Dataset d = from_gaps({{1.0, 2.0, 3.0}, {1.5}, {0.5}});
  const auto sgd = std::get<SumOfGammaDynamic>(fit_sgd(d, 3));
  REQUIRE(sgd.per_index.size() == 1);
  const GammaParams tail = fit_gamma(std::vector<double>{3.0, 2.0});
  CHECK(sgd.tail == tail);
  CHECK(sgd.per_index[0] == fit_gamma(std::vector<double>{1.0, 1.5, 0.5}));
  CHECK_THROWS_AS((void)fit_sgd(d, 1), UsageError);
}

TEST_CASE("SGD recovers per-index gamma parameters") {
  const SumOfGammaDynamic truth{{{0.30, 0.62}, {0.5, 0.3}, {0.9, 0.2}}, {0.45, 0.15}};
  MarkSamplers ms = default_samplers();
  ms.gap_count = [](Rng&) { return std::size_t{5}; };
  const Dataset d = simulate_dataset(BaselineParams{truth}, ms, 30000, 14);
  const auto fit = std::get<SumOfGammaDynamic>(fit_sgd(d, 4));
  REQUIRE(fit.per_index.size() == 3);
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(std::abs(fit.per_index[j].shape / truth.per_index[j].shape - 1.0) < 0.05);
    CHECK(std::abs(fit.per_index[j].rate / truth.per_index[j].rate - 1.0) < 0.05);
  }
  CHECK(std::abs(fit.tail.shape / 0.45 - 1.0) < 0.05);
  CHECK(std::abs(fit.tail.rate / 0.15 - 1.0) < 0.05);
}

TEST_CASE("residual survival") {
  const GammaParams expo{1.0, 0.7};
  for (double e : {0.0, 0.5, 10.0, 400.0}) {
    for (double dl : {0.1, 2.0, 30.0}) {
      CHECK(gamma_residual_survival(expo, e, dl) == doctest::Approx(std::exp(-0.7 * dl)).epsilon(1e-9));
    }
  }
  const GammaParams g{0.42, 0.16};
  CHECK(gamma_residual_survival(g, 3.0, 0.0) == 1.0);
  CHECK(gamma_residual_survival(g, 3.0, kInfinity) == 0.0);
  CHECK(gamma_residual_survival(g, 0.0, 5.0) == doctest::Approx(gamma_survival(g, 5.0)).epsilon(1e-12));
  CHECK(gamma_residual_survival(g, 2.0, 5.0) ==
        doctest::Approx(gamma_survival(g, 7.0) / gamma_survival(g, 2.0)).epsilon(1e-12));
  // far in the tail the residual tends to e^{-rate delta}
  const double far = gamma_residual_survival(g, 1e5, 1.0);
  CHECK(far == doctest::Approx(std::exp(-0.16)).epsilon(1e-4));
  CHECK(far >= 0.0);
  CHECK(far <= 1.0);
}
