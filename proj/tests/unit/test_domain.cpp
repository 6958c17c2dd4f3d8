#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>

#include "convhawkes/domain.hpp"
#include "oracles.hpp"

using namespace convhawkes;

namespace {

Conversation three_messages() {
  Conversation c;
  c.id = "x";
  c.messages = {{0.0, Sender::customer, 3, 0.1}, {1.0, Sender::agent, 5, 0.2}, {2.0, Sender::customer, 4, 0.0}};
  c.close_time = 2.0;
  return c;
}

bool has_rule(const std::vector<Violation>& vs, const std::string& rule) {
  return std::any_of(vs.begin(), vs.end(), [&](const Violation& v) { return v.rule == rule; });
}

}  // namespace

TEST_CASE("valid conversation has no violations") {
  CHECK(validate_conversation(three_messages()).empty());
}

TEST_CASE("agent-first conversation is rejected") {
  Conversation c = three_messages();
  c.messages[0].sender = Sender::agent;
  const auto vs = validate_conversation(c);
  REQUIRE(vs.size() == 1);
  CHECK(vs[0].rule == "initial query must be customer");
  CHECK(vs[0].field == "messages[0].sender");
}

TEST_CASE("close before last message is rejected") {
  Conversation c = three_messages();
  c.messages[2].time = 12.0;
  c.close_time = 10.0;
  CHECK(has_rule(validate_conversation(c), "close_time before last message"));
}

TEST_CASE("other conversation invariants") {
  Conversation empty;
  CHECK(validate_conversation(empty).size() == 1);

  Conversation c = three_messages();
  c.messages[0].time = 0.5;
  c.messages[1].time = 0.25;
  c.messages[2].words = 0;
  const auto vs = validate_conversation(c);
  CHECK(has_rule(vs, "initial query must be at time 0"));
  CHECK(has_rule(vs, "message times must be nondecreasing"));
  CHECK(has_rule(vs, "words must be >= 1"));

  Conversation ties = three_messages();
  ties.messages[1].time = 0.0;
  CHECK(validate_conversation(ties).empty());
}

TEST_CASE("duplicate ids are reported") {
  Dataset d;
  d.conversations = {three_messages(), three_messages()};
  const auto vs = validate_dataset(d);
  REQUIRE(vs.size() == 1);
  CHECK(vs[0].second.rule == "duplicate conversation id");
}

TEST_CASE("prefix counts") {
  const Conversation c = three_messages();
  CHECK(prefix_counts(c, 0.0) == PrefixCounts{0, 0});
  CHECK(prefix_counts(c, 1.5) == PrefixCounts{0, 1});
  CHECK(prefix_counts(c, 2.0) == PrefixCounts{1, 1});
  CHECK(prefix_counts(c, 100.0) == PrefixCounts{1, 1});
}

TEST_CASE("prefix counts are monotone in t") {
  Rng rng(11);
  for (int rep = 0; rep < 50; ++rep) {
    const Conversation c = oracle::random_conversation(rng);
    PrefixCounts prev;
    for (double t = 0.0; t <= c.close_time + 1.0; t += 0.1) {
      const PrefixCounts n = prefix_counts(c, t);
      CHECK(n.customer >= prev.customer);
      CHECK(n.agent >= prev.agent);
      prev = n;
    }
    CHECK(prev.customer + prev.agent == c.messages.size() - 1 -
                                            static_cast<std::size_t>(std::count_if(
                                                c.messages.begin() + 1, c.messages.end(),
                                                [](const Message& m) { return m.time == 0.0; })));
  }
}

TEST_CASE("concurrency timeline lookup and invariants") {
  const ConcurrencyTimeline k({0.0, 5.0, 10.0}, {1, 2, 1});
  CHECK(k.at(0.0) == 1);
  CHECK(k.at(4.999) == 1);
  CHECK(k.at(5.0) == 2);
  CHECK(k.at(9.0) == 2);
  CHECK(k.at(10.0) == 1);
  CHECK(k.at(1e9) == 1);
  CHECK_FALSE(k.is_constant());
  CHECK(ConcurrencyTimeline(3).is_constant());
  CHECK(ConcurrencyTimeline(3).at(42.0) == 3);

  CHECK_THROWS_AS(ConcurrencyTimeline(0), DataError);
  CHECK_THROWS_AS(ConcurrencyTimeline({1.0}, {1}), DataError);
  CHECK_THROWS_AS(ConcurrencyTimeline({0.0, 2.0, 2.0}, {1, 2, 3}), DataError);
  CHECK_THROWS_AS(ConcurrencyTimeline({0.0, 2.0}, {1}), DataError);
  CHECK_THROWS_AS(ConcurrencyTimeline({0.0, 2.0}, {1, 0}), DataError);
}

TEST_CASE("channel naming") {
  CHECK(channel_of(Sender::customer, Sender::customer) == Channel::cc);
  CHECK(channel_of(Sender::customer, Sender::agent) == Channel::ca);
  CHECK(channel_of(Sender::agent, Sender::customer) == Channel::ac);
  CHECK(channel_of(Sender::agent, Sender::agent) == Channel::aa);
  for (Channel ch : {Channel::cc, Channel::ca, Channel::ac, Channel::aa}) {
    CHECK(channel_of(receiver_of(ch), stimulus_of(ch)) == ch);
  }
}

TEST_CASE("spectral radius agrees with a brute-force eigenvalue computation") {
  auto brute = [](const BivariateParams& p) {
    const double a = p.cc.ratio(), b = p.ca.ratio(), c = p.ac.ratio(), d = p.aa.ratio();
    const std::complex<double> disc = std::sqrt(std::complex<double>((a - d) * (a - d) + 4.0 * b * c));
    const std::complex<double> l1 = 0.5 * (a + d + disc), l2 = 0.5 * (a + d - disc);
    return std::max(std::abs(l1), std::abs(l2));
  };
  const auto reference = oracle::reference_bhp().params;
  CHECK(reference.spectral_radius() == doctest::Approx(brute(reference)).epsilon(1e-12));
  CHECK(reference.spectral_radius() == doctest::Approx(0.920).epsilon(0.002));
  CHECK(reference.stable());

  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    BivariateParams p;
    p.cc = oracle::random_kernel(rng, 2.0);
    p.ca = oracle::random_kernel(rng, 2.0);
    p.ac = oracle::random_kernel(rng, 2.0);
    p.aa = oracle::random_kernel(rng, 2.0);
    CHECK(p.spectral_radius() == doctest::Approx(brute(p)).epsilon(1e-10));
  }
}

TEST_CASE("mark and baseline validation") {
  CHECK_THROWS_AS(check_mark_model(WordMark{0.0}), DataError);
  CHECK_THROWS_AS(check_mark_model(SentimentMark{-2.0, -1.0}), DataError);
  CHECK_NOTHROW(check_mark_model(SentimentMark{0.15, -14.0}));

  CHECK_THROWS_AS(check_baseline(SumOfExponentials{0.0}), DataError);
  CHECK_THROWS_AS(check_baseline(SumOfGammaStatic{{-1.0, 1.0}}), DataError);
  CHECK_THROWS_AS(check_baseline(SumOfGammaDynamic{}), DataError);

  const SumOfGammaDynamic sgd{{{0.3, 0.62}, {0.5, 1.0}}, {0.4, 0.2}};
  CHECK(sgd.for_gap(1) == GammaParams{0.3, 0.62});
  CHECK(sgd.for_gap(2) == GammaParams{0.5, 1.0});
  CHECK(sgd.for_gap(3) == GammaParams{0.4, 0.2});
}

TEST_CASE("model kinds round-trip through their names") {
  for (ModelKind k : kAllModelKinds) CHECK(parse_model_kind(to_string(k)) == k);
  CHECK_FALSE(parse_model_kind("hawkes").has_value());
  CHECK(kind_of(HawkesModel{UnivariateModel{}}) == ModelKind::uhp);
  CHECK(kind_of(HawkesModel{BivariateModel{{}, WordMark{3.0}}}) == ModelKind::wbhp);
  CHECK(kind_of(ModelSource{BaselineParams{SumOfGammaStatic{}}}) == ModelKind::sgs);
  CHECK(is_hawkes(ModelKind::cbhp));
  CHECK_FALSE(is_hawkes(ModelKind::sgd));
}
