#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "convhawkes/io.hpp"
#include "convhawkes/prediction.hpp"
#include "oracles.hpp"

using namespace convhawkes;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path work_dir() {
  const fs::path p = fs::path(CONVHAWKES_TEST_TMP) / "cli";
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// Drops the provenance comment, which echoes the command line.
std::string body(const fs::path& p) {
  const std::string text = slurp(p);
  return text.substr(text.find('\n') + 1);
}

std::string s(const fs::path& p) { return p.string(); }

fs::path reference_params() {
  const fs::path p = work_dir() / "reference.json";
  save_params(ParamsDocument{HawkesModel{oracle::reference_bhp()}, {}}, p);
  return p;
}

}  // namespace

TEST_CASE("help and usage errors") {
  CHECK(run_cli({"--help"}).code == cli::kExitOk);
  CHECK(run_cli({"--help"}).out.find("simulate") != std::string::npos);
  CHECK(run_cli({"--version"}).code == cli::kExitOk);
  CHECK(run_cli({}).code == cli::kExitUsage);
  CHECK(run_cli({"bogus"}).code == cli::kExitUsage);
  CHECK(run_cli({"simulate", "--params", s(reference_params()), "--n", "3"}).code == cli::kExitUsage);
}

TEST_CASE("simulate, fit and predict end to end") {
  const fs::path dir = work_dir();
  const fs::path params = reference_params();
  const fs::path data = dir / "sim.csv", data2 = dir / "sim2.csv";
  REQUIRE(run_cli({"simulate", "--params", s(params), "--n", "200", "--seed", "7", "--out", s(data)}).code ==
          cli::kExitOk);
  REQUIRE(run_cli({"simulate", "--params", s(params), "--n", "200", "--seed", "7", "--out", s(data2), "--threads",
                   "3"})
              .code == cli::kExitOk);
  CHECK(body(data) == body(data2));
  CHECK(slurp(data).rfind("# convhawkes", 0) == 0);
  CHECK(load_messages(data).size() == 200);

  const fs::path fitted = dir / "fit.json", fitted2 = dir / "fit2.json";
  const Result fit = run_cli({"fit", "--model", "bhp", "--messages", s(data), "--seed", "3", "--out", s(fitted)});
  REQUIRE(fit.code == cli::kExitOk);
  CHECK(fit.out.find("model=bhp conversations=200") != std::string::npos);
  REQUIRE(run_cli({"fit", "--model", "bhp", "--messages", s(data), "--seed", "3", "--out", s(fitted2), "--threads",
                   "2"})
              .code == cli::kExitOk);
  CHECK(slurp(fitted) == slurp(fitted2));
  const ParamsDocument doc = load_params(fitted);
  CHECK(doc.fit.seed == 3u);
  CHECK(doc.fit.conversations == 200u);

  const Dataset d = load_messages(data);
  const Conversation& c = d.conversations[0];
  const Result pred = run_cli({"predict", "--params", s(params), "--messages", s(data), "--conversation", c.id,
                               "--t", "0", "--delta", "inf"});
  REQUIRE(pred.code == cli::kExitOk);
  std::ostringstream want;
  want << "quiet_probability=" << format_double(p_conversation_over(oracle::reference_bhp(), c, 0.0));
  CHECK(pred.out.find(want.str()) != std::string::npos);

  CHECK(run_cli({"predict", "--params", s(params), "--messages", s(data), "--conversation", "nope", "--t", "0",
                 "--delta", "5"})
            .code == cli::kExitData);
  CHECK(run_cli({"fit", "--model", "cbhp", "--messages", s(data), "--seed", "1", "--out", s(dir / "x.json")}).code ==
        cli::kExitUsage);
}

TEST_CASE("data errors map to exit code 2") {
  const fs::path bad = work_dir() / "bad.csv";
  {
    std::ofstream f(bad);
    f << kMessagesHeader << "\nc1,ag,0,5,0,x,3,0\n";
  }
  const Result r = run_cli({"fit", "--model", "uhp", "--messages", s(bad), "--seed", "1", "--out",
                            s(work_dir() / "never.json")});
  CHECK(r.code == cli::kExitData);
  CHECK(r.err.find("line 2") != std::string::npos);
}

TEST_CASE("evaluate writes one ROC table per horizon") {
  const fs::path dir = work_dir();
  const fs::path params = reference_params();
  const fs::path data = dir / "eval.csv";
  REQUIRE(run_cli({"simulate", "--params", s(params), "--n", "300", "--seed", "11", "--out", s(data)}).code ==
          cli::kExitOk);
  const fs::path out_dir = dir / "eval_predict";
  fs::remove_all(out_dir);
  const Result r = run_cli({"evaluate", "predict", "--params", s(params), "--messages", s(data), "--strategy",
                            "activity", "--deltas", "5,inf", "--out-dir", s(out_dir)});
  REQUIRE(r.code == cli::kExitOk);
  CHECK(fs::exists(out_dir / "auc.csv"));
  CHECK(fs::exists(out_dir / "records_bhp.csv"));
  CHECK(fs::exists(out_dir / "roc_bhp_delta_5.csv"));
  CHECK(fs::exists(out_dir / "roc_bhp_delta_inf.csv"));
  std::size_t rocs = 0;
  for (const auto& e : fs::directory_iterator(out_dir)) {
    if (e.path().filename().string().rfind("roc_", 0) == 0) ++rocs;
  }
  CHECK(rocs == 2);
  CHECK(body(out_dir / "auc.csv").rfind("model,delta,auc,positives,negatives\n", 0) == 0);

  const fs::path fit_dir = dir / "eval_fit";
  REQUIRE(run_cli({"evaluate", "fit", "--params", s(params), "--messages", s(data), "--seed", "5", "--out-dir",
                   s(fit_dir)})
              .code == cli::kExitOk);
  CHECK(body(fit_dir / "ks.csv").rfind("model,metric,D,p,n_data,n_simulated\n", 0) == 0);
  CHECK(fs::exists(fit_dir / "qq_bhp_duration.csv"));

  const fs::path idle_dir = dir / "eval_idle";
  REQUIRE(run_cli({"evaluate", "idleness", "--params", s(params), "--messages", s(data), "--out-dir",
                   s(idle_dir)})
              .code == cli::kExitOk);
  CHECK(fs::exists(idle_dir / "idleness_auc.csv"));

  CHECK(run_cli({"evaluate", "predict", "--params", s(params), "--messages", s(data), "--strategy", "random",
                 "--out-dir", s(out_dir)})
            .code == cli::kExitUsage);
}
