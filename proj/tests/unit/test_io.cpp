#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "convhawkes/io.hpp"
#include "convhawkes/simulation.hpp"
#include "oracles.hpp"

using namespace convhawkes;

namespace {

std::string with_header(const std::string& rows) { return std::string(kMessagesHeader) + "\n" + rows; }

// Message files carry no concurrency; simulated data does.
std::vector<Conversation> as_written(const Dataset& d) {
  std::vector<Conversation> out = d.conversations;
  for (Conversation& c : out) c.concurrency = ConcurrencyTimeline();
  return out;
}

Dataset parse(const std::string& text, const LoadOptions& opts = {}, LoadReport* report = nullptr) {
  std::istringstream in(text);
  return read_messages(in, opts, report);
}

std::filesystem::path tmp_dir() {
  const std::filesystem::path p = std::filesystem::path(CONVHAWKES_TEST_TMP) / "io";
  std::filesystem::create_directories(p);
  return p;
}

ParamsDocument reload(const ParamsDocument& doc) { return params_from_string(params_to_string(doc)); }

}  // namespace

TEST_CASE("two-row file gives one conversation") {
  const Dataset d = parse(with_header("c1,ag,100,5,2,c,4,0.5\nc1,ag,100,5,3,a,6,-0.5\n"));
  REQUIRE(d.size() == 1);
  const Conversation& c = d.conversations[0];
  CHECK(c.messages.size() == 2);
  // first message moved to 0, start epoch absorbs the shift
  CHECK(c.messages[0].time == 0.0);
  CHECK(c.messages[1].time == 1.0);
  CHECK(c.start_epoch == 102.0);
  CHECK(c.close_time == 3.0);
  CHECK(c.concurrency == ConcurrencyTimeline(1));
}

TEST_CASE("initial query alone") {
  const Dataset d = parse(with_header("# a comment\nq,ag,0,1,0,c,3,0\n"));
  REQUIRE(d.size() == 1);
  CHECK(d.conversations[0].messages.size() == 1);
}

TEST_CASE("malformed rows name the line") {
  auto message_of = [](const std::string& text) {
    try {
      (void)parse(text);
    } catch (const DataError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  const std::string bad_sender = message_of(with_header("c1,ag,0,5,0,c,4,0\nc1,ag,0,5,1,x,4,0\n"));
  CHECK(bad_sender.find("line 3") != std::string::npos);
  CHECK(bad_sender.find("'x'") != std::string::npos);
  CHECK(message_of(with_header("c1,ag,0,5,zero,c,4,0\n")).find("line 2: invalid t_min 'zero'") != std::string::npos);
  CHECK(message_of(with_header("c1,ag,0,5,0,c,4\n")).find("line 2: expected 8 fields") != std::string::npos);
  CHECK(message_of(with_header("c1,ag,0,5,0,c,0,0\n")).find("line 2") != std::string::npos);
  CHECK(message_of("id,agent\n").find("header") != std::string::npos);
  CHECK(message_of(with_header("c1,ag,0,5,0,c,4,0\nc1,other,0,5,1,a,4,0\n")).find("inconsistent") !=
        std::string::npos);
}

TEST_CASE("strict and lenient loading") {
  const std::string text = with_header(
      "good,ag,0,5,0,c,4,0\n"
      "bad,ag,0,5,0,a,4,0\n"
      "late,ag,0,1,0,c,4,0\n"
      "late,ag,0,1,3,a,4,0\n");
  try {
    (void)parse(text);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("initial query must be customer") != std::string::npos);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  LoadReport report;
  const Dataset d = parse(text, {false}, &report);
  REQUIRE(d.size() == 1);
  CHECK(d.conversations[0].id == "good");
  REQUIRE(report.rejected.size() == 2);
  CHECK(report.rejected[0].rfind("bad: ", 0) == 0);
  CHECK(report.rejected[1].find("close_time before last message") != std::string::npos);
}

TEST_CASE("row order within a conversation does not matter") {
  Rng rng(81);
  Dataset d = simulate_dataset(oracle::reference_bhp(), default_samplers(), 30, 82);
  std::ostringstream out;
  write_messages(d, out);
  std::istringstream in(out.str());
  std::string header, row;
  std::getline(in, header);
  std::vector<std::string> rows;
  while (std::getline(in, row)) rows.push_back(row);
  // keep a tie at 0 in file order by never moving a conversation's first row
  std::vector<std::string> firsts, rest;
  std::vector<std::string> seen;
  for (const auto& r : rows) {
    const std::string id = r.substr(0, r.find(','));
    if (std::find(seen.begin(), seen.end(), id) == seen.end()) {
      seen.push_back(id);
      firsts.push_back(r);
    } else {
      rest.push_back(r);
    }
  }
  std::shuffle(rest.begin(), rest.end(), rng);
  std::string shuffled = header + "\n";
  for (const auto& r : firsts) shuffled += r + "\n";
  for (const auto& r : rest) shuffled += r + "\n";
  const Dataset back = parse(shuffled);
  CHECK(back.conversations == as_written(d));
}

TEST_CASE("ties keep file order") {
  const Dataset d = parse(with_header("c1,ag,0,5,1,a,4,0\nc1,ag,0,5,0,c,4,0\nc1,ag,0,5,1,c,9,0\n"));
  const auto& m = d.conversations[0].messages;
  REQUIRE(m.size() == 3);
  CHECK(m[1].sender == Sender::agent);
  CHECK(m[2].sender == Sender::customer);
}

TEST_CASE("messages round trip through text and files") {
  Dataset d = simulate_dataset(oracle::reference_bhp(), default_samplers(), 50, 83);
  d.metadata.epoch_origin = "2017-01-01T00:00:00Z";
  std::ostringstream out;
  write_messages(d, out, "unit test");
  CHECK(out.str().rfind("# ", 0) == 0);
  const Dataset back = parse(out.str());
  CHECK(back.conversations == as_written(d));
  CHECK(back.metadata.epoch_origin == d.metadata.epoch_origin);

  const auto path = tmp_dir() / "messages.csv";
  save_messages(d, path);
  const Dataset loaded = load_messages(path);
  CHECK(loaded.conversations == as_written(d));
  CHECK(loaded.metadata.source == path.string());
  CHECK_THROWS_AS((void)load_messages(tmp_dir() / "missing.csv"), DataError);
}

TEST_CASE("format_double is shortest round-trip") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456789.125, -0.0, 2.5e17}) {
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(3.0) == "3");
}

TEST_CASE("assignments and concurrency") {
  const std::string text = std::string(kAssignmentsHeader) +
                           "\n"
                           "ag,first,0,10\n"
                           "ag,second,5,15\n"
                           "solo,alone,3,9\n"
                           "pair,p1,0,20\n"
                           "pair,p2,0,20\n";
  std::istringstream in(text);
  const auto rows = read_assignments(in);
  REQUIRE(rows.size() == 5);
  const auto k = derive_concurrency(rows);
  CHECK(k.at("first") == ConcurrencyTimeline({0.0, 5.0}, {1, 2}));
  CHECK(k.at("second") == ConcurrencyTimeline({0.0, 5.0}, {2, 1}));
  CHECK(k.at("alone") == ConcurrencyTimeline(1));
  CHECK(k.at("p1") == ConcurrencyTimeline(2));
  CHECK(k.at("p2") == ConcurrencyTimeline(2));

  std::ostringstream out;
  write_assignments(rows, out);
  std::istringstream again(out.str());
  const auto back = read_assignments(again);
  REQUIRE(back.size() == rows.size());
  CHECK(back[1].assign_epoch == 5.0);

  std::istringstream bad(std::string(kAssignmentsHeader) + "\nag,x,5,5\n");
  CHECK_THROWS_AS((void)read_assignments(bad), DataError);
}

TEST_CASE("derived timelines satisfy the invariants on random schedules") {
  Rng rng(84);
  std::uniform_real_distribution<double> start(0.0, 200.0), len(1.0, 60.0);
  std::vector<Assignment> rows;
  for (int i = 0; i < 60; ++i) {
    const double a = start(rng);
    rows.push_back({"ag" + std::to_string(i % 4), "c" + std::to_string(i), a, a + len(rng)});
  }
  const auto k = derive_concurrency(rows);
  for (const auto& r : rows) {
    const ConcurrencyTimeline& tl = k.at(r.conversation_id);
    for (double u = 0.0; u < r.close_epoch - r.assign_epoch; u += 0.37) {
      const double t_abs = r.assign_epoch + u;
      int covering = 0;
      for (const auto& o : rows) {
        if (o.agent_id == r.agent_id && o.assign_epoch <= t_abs && t_abs < o.close_epoch) ++covering;
      }
      CHECK(tl.at(u) == std::max(covering, 1));
    }
  }
}

TEST_CASE("attaching concurrency to a dataset") {
  Dataset d = parse(with_header(
      "first,ag,0,10,0,c,1,0\n"
      "second,ag,5,10,0,c,1,0\n"
      "orphan,ag,0,3,0,c,1,0\n"));
  const std::vector<Assignment> rows{{"ag", "first", 0, 10}, {"ag", "second", 5, 15}};
  const auto warnings = attach_concurrency(d, rows);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("orphan") != std::string::npos);
  CHECK(d.conversations[0].concurrency == ConcurrencyTimeline({0.0, 5.0}, {1, 2}));
  CHECK(d.conversations[1].concurrency == ConcurrencyTimeline({0.0, 5.0}, {2, 1}));
  CHECK(d.conversations[2].concurrency == ConcurrencyTimeline(1));
}

TEST_CASE("synthetic companions reproduce constant concurrency") {
  Dataset d = simulate_dataset(oracle::reference_bhp(), default_samplers(), 40, 85);
  const auto rows = assignments_for_constant_concurrency(d);
  const auto k = derive_concurrency(rows);
  for (const auto& c : d.conversations) CHECK(k.at(c.id) == c.concurrency);
  Dataset copy = d;
  for (auto& c : copy.conversations) c.concurrency = ConcurrencyTimeline(1);
  CHECK(attach_concurrency(copy, rows).empty());
  CHECK(copy.conversations == d.conversations);
}

TEST_CASE("parameter documents round trip for every variant") {
  Rng rng(86);
  std::vector<ModelSource> models;
  for (ModelKind kind : oracle::kHawkesKinds) models.emplace_back(oracle::random_model(kind, rng));
  models.emplace_back(BaselineParams{SumOfExponentials{0.123456789}});
  models.emplace_back(BaselineParams{SumOfGammaStatic{{0.42, 0.16}}});
  models.emplace_back(BaselineParams{SumOfGammaDynamic{{{0.30, 0.62}, {1.0 / 3.0, 0.7}}, {0.4, 0.1}}});
  for (const auto& m : models) {
    ParamsDocument doc{m, {}};
    doc.fit.seed = 18446744073709551615ULL;
    doc.fit.iterations = 17;
    doc.fit.log_likelihood = -12345.678901234567;
    doc.fit.converged = true;
    doc.fit.conversations = 50000;
    CHECK(reload(doc) == doc);
    CHECK(reload(ParamsDocument{m, {}}) == ParamsDocument{m, {}});
  }
  const auto path = tmp_dir() / "params.json";
  const ParamsDocument doc{HawkesModel{oracle::reference_bhp()}, {}};
  save_params(doc, path);
  const ParamsDocument back = load_params(path);
  CHECK(back == doc);
  const auto& b = std::get<BivariateModel>(std::get<HawkesModel>(back.model));
  CHECK(b.params.cc == KernelParams{0.89, 3.73});
  CHECK(b.params.ca == KernelParams{14.67, 38.35});
  CHECK(b.params.ac == KernelParams{3.76, 4.21});
  CHECK(b.params.aa == KernelParams{20.22, 48.28});
}

TEST_CASE("parameter document errors") {
  auto error_of = [](const std::string& text) {
    try {
      (void)params_from_string(text);
    } catch (const DataError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  const std::string k = R"({"alpha":1,"beta":2})";
  const std::string four = R"({"cc":)" + k + R"(,"ca":)" + k + R"(,"ac":)" + k + R"(,"aa":)" + k + "}";
  CHECK(error_of(R"({"format_version":1,"model":"wbhp","parameters":)" + four + R"(,"marks":{}})")
            .find("mark statistic missing") != std::string::npos);
  CHECK(error_of(R"({"format_version":1,"model":"sbhp","parameters":)" + four + R"(,"marks":{"mean_sentiment":1}})")
            .find("mark statistic missing: min_sentiment") != std::string::npos);
  CHECK(error_of(R"({"format_version":1,"model":"hawkes","parameters":{}})").find("unknown model variant") !=
        std::string::npos);
  CHECK(error_of(R"({"format_version":2,"model":"uhp","parameters":)" + k + "}").find("format_version") !=
        std::string::npos);
  CHECK(error_of(R"({"format_version":1,"model":"uhp","parameters":{"alpha":1}})").find("parameters.beta") !=
        std::string::npos);
  CHECK(error_of(R"({"format_version":1,"model":"bhp","parameters":{"cc":{"alpha":1,"beta":1}}})")
            .find("parameters.ca") != std::string::npos);
  CHECK(error_of("not json").find("JSON") != std::string::npos);
  CHECK(error_of(R"({"format_version":1,"model":"uhp","parameters":)" + k + "}").empty());
}
