#include "cli.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "convhawkes/estimation.hpp"
#include "convhawkes/evaluation.hpp"
#include "convhawkes/intensity.hpp"
#include "convhawkes/io.hpp"
#include "convhawkes/prediction.hpp"
#include "convhawkes/simulation.hpp"

namespace convhawkes::cli {

namespace fs = std::filesystem;

namespace {

std::string provenance_of(std::span<const std::string> args) {
  std::string p = "convhawkes " CONVHAWKES_VERSION ":";
  for (const auto& a : args) p += " " + a;
  return p;
}

double parse_delta(const std::string& text) {
  if (text == "inf" || text == "Inf" || text == "infinity") return kInfinity;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || !(v > 0.0) || !std::isfinite(v)) {
    throw UsageError("horizon must be a positive number or 'inf', got '" + text + "'");
  }
  return v;
}

std::vector<double> parse_deltas(const std::vector<std::string>& texts) {
  std::vector<double> out;
  for (const auto& t : texts) out.push_back(parse_delta(t));
  if (out.empty()) throw UsageError("at least one horizon is required");
  return out;
}

void report_warnings(std::ostream& err, const std::vector<std::string>& warnings, std::string_view what) {
  constexpr std::size_t shown = 5;
  for (std::size_t i = 0; i < warnings.size() && i < shown; ++i) err << "warning: " << warnings[i] << '\n';
  if (warnings.size() > shown) err << "warning: " << warnings.size() - shown << " more " << what << '\n';
}

struct DataOptions {
  std::string messages;
  std::string assignments;
  bool lenient = false;
};

void add_data_options(CLI::App* cmd, DataOptions& o) {
  cmd->add_option("--messages", o.messages, "Messages CSV (times in minutes)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--assignments", o.assignments, "Agent assignment CSV (epochs in minutes), sets concurrency")
      ->check(CLI::ExistingFile);
  cmd->add_flag("--lenient", o.lenient, "Drop invalid conversations instead of failing");
}

Dataset load_data(const DataOptions& o, std::ostream& err) {
  LoadReport report;
  Dataset d = load_messages(o.messages, LoadOptions{!o.lenient}, &report);
  report_warnings(err, report.rejected, "rejected conversations");
  if (!o.assignments.empty()) {
    const auto rows = load_assignments(o.assignments);
    report_warnings(err, attach_concurrency(d, rows), "conversations without assignments");
  }
  return d;
}

void require_concurrency(ModelKind kind, const DataOptions& o) {
  if (kind == ModelKind::cbhp && o.assignments.empty()) throw UsageError("concurrency source required");
}

Dataset filter_by_start(const Dataset& d, std::optional<double> before, std::optional<double> after) {
  Dataset out;
  out.metadata = d.metadata;
  for (const auto& c : d.conversations) {
    if (before && !(c.start_epoch < *before)) continue;
    if (after && !(c.start_epoch >= *after)) continue;
    out.conversations.push_back(c);
  }
  if (out.empty()) throw DataError("no conversations left after the epoch filter");
  return out;
}

std::ofstream open_csv(const fs::path& path, const std::string& provenance, std::string_view header) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << "# " << provenance << '\n' << header << '\n';
  return out;
}

std::string fmt(double v) { return format_double(v); }

struct LabeledModel {
  std::string label;
  ModelSource model;
};

std::vector<LabeledModel> load_models(const std::vector<std::string>& paths) {
  std::vector<LabeledModel> out;
  std::set<std::string> used;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    ParamsDocument doc = load_params(paths[i]);
    std::string label(to_string(kind_of(doc.model)));
    if (!used.insert(label).second) {
      label += "_" + std::to_string(i + 1);
      used.insert(label);
    }
    out.push_back({label, std::move(doc.model)});
  }
  return out;
}

MarkSamplers samplers_from(const std::string& path, const std::string& assignments, const Dataset* fallback,
                           std::ostream& err) {
  if (path.empty()) return fallback ? build_samplers(*fallback) : default_samplers();
  DataOptions o{path, assignments, true};
  return build_samplers(load_data(o, err));
}

// ---------------------------------------------------------------------------

struct FitArgs {
  std::string model;
  DataOptions data;
  std::optional<double> train_before;
  std::uint64_t seed = 0;
  double tolerance = 1e-6;
  int max_iterations = 500;
  std::string out;
  unsigned threads = 0;
};

int cmd_fit(const FitArgs& a, std::ostream& out, std::ostream& err) {
  const auto kind = parse_model_kind(a.model);
  if (!kind) throw UsageError("unknown model '" + a.model + "'");
  require_concurrency(*kind, a.data);
  const Dataset all = load_data(a.data, err);
  const Dataset d = a.train_before ? filter_by_start(all, a.train_before, std::nullopt) : all;

  ParamsDocument doc{HawkesModel{}, {}};
  doc.fit.seed = a.seed;
  doc.fit.conversations = d.size();
  if (is_hawkes(*kind)) {
    FitConfig cfg;
    cfg.kind = *kind;
    cfg.seed = a.seed;
    cfg.tolerance = a.tolerance;
    cfg.max_iterations = a.max_iterations;
    cfg.threads = a.threads;
    const EmFit fit = fit_em(d, cfg);
    report_warnings(err, fit.trace.notes, "notes");
    doc.model = fit.model;
    doc.fit.iterations = static_cast<int>(fit.trace.iterations.size());
    doc.fit.log_likelihood = fit.log_likelihood;
    doc.fit.converged = fit.trace.converged;
    out << "model=" << a.model << " conversations=" << d.size() << " iterations=" << fit.trace.iterations.size()
        << " converged=" << (fit.trace.converged ? "true" : "false") << " log_likelihood=" << fmt(fit.log_likelihood)
        << '\n';
  } else {
    switch (*kind) {
      case ModelKind::se: doc.model = fit_se(d); break;
      case ModelKind::sgs: doc.model = fit_sgs(d); break;
      default: doc.model = fit_sgd(d); break;
    }
    out << "model=" << a.model << " conversations=" << d.size() << '\n';
  }
  save_params(doc, a.out);
  return kExitOk;
}

struct SimulateArgs {
  std::string params;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::string samplers_from;
  std::string samplers_assignments;
  std::string out;
  std::string assignments_out;
  std::size_t max_events = SimulationLimits{}.max_events;
  unsigned threads = 0;
};

int cmd_simulate(const SimulateArgs& a, const std::string& provenance, std::ostream& out, std::ostream& err) {
  const ParamsDocument doc = load_params(a.params);
  const MarkSamplers ms = samplers_from(a.samplers_from, a.samplers_assignments, nullptr, err);
  const Dataset d = simulate_dataset(doc.model, ms, a.n, a.seed, a.threads, SimulationLimits{a.max_events});
  save_messages(d, a.out, provenance);
  if (!a.assignments_out.empty()) {
    std::ofstream f(a.assignments_out, std::ios::binary);
    if (!f) throw DataError("cannot write '" + a.assignments_out + "'");
    write_assignments(assignments_for_constant_concurrency(d), f, provenance);
  }
  std::size_t messages = 0;
  for (const auto& c : d.conversations) messages += c.messages.size();
  out << "conversations=" << d.size() << " messages=" << messages << '\n';
  return kExitOk;
}

struct PredictArgs {
  std::string params;
  DataOptions data;
  std::string conversation;
  double t = 0.0;
  std::string delta;
  std::string agent;
  std::optional<double> epoch;
};

int cmd_predict(const PredictArgs& a, std::ostream& out, std::ostream& err) {
  const ParamsDocument doc = load_params(a.params);
  require_concurrency(kind_of(doc.model), a.data);
  const double delta = parse_delta(a.delta);
  const Dataset d = load_data(a.data, err);

  if (!a.agent.empty()) {
    if (!a.epoch) throw UsageError("--agent needs --epoch");
    std::vector<Conversation> group;
    for (const auto& c : d.conversations) {
      if (c.agent_id == a.agent) group.push_back(c);
    }
    if (group.empty()) throw DataError("no conversations for agent '" + a.agent + "'");
    double quiet = 1.0;
    std::size_t open = 0;
    if (const auto* h = std::get_if<HawkesModel>(&doc.model)) {
      const AgentQuiet q = p_agent_quiet_interval(*h, group, *a.epoch, delta);
      report_warnings(err, q.warnings, "warnings");
      quiet = q.probability;
      open = q.open_conversations;
    } else {
      for (const auto& c : group) {
        if (!open_at(c, *a.epoch)) continue;
        ++open;
        quiet *= quiet_probability(doc.model, c, *a.epoch - c.start_epoch, delta);
      }
    }
    out << "agent=" << a.agent << " epoch=" << fmt(*a.epoch) << " delta=" << fmt(delta) << " open=" << open << '\n'
        << "quiet_probability=" << fmt(quiet) << '\n'
        << "activity_probability=" << fmt(1.0 - quiet) << '\n';
    return kExitOk;
  }

  if (a.conversation.empty()) throw UsageError("--conversation or --agent is required");
  if (!(a.t >= 0.0)) throw UsageError("--t must be >= 0");
  const Conversation* c = nullptr;
  for (const auto& x : d.conversations) {
    if (x.id == a.conversation) c = &x;
  }
  if (!c) throw DataError("conversation '" + a.conversation + "' not found");
  const double quiet = quiet_probability(doc.model, *c, a.t, delta);
  out << "conversation=" << c->id << " t=" << fmt(a.t) << " delta=" << fmt(delta) << '\n'
      << "quiet_probability=" << fmt(quiet) << '\n'
      << "activity_probability=" << fmt(1.0 - quiet) << '\n';
  return kExitOk;
}

struct EvaluateArgs {
  std::vector<std::string> params;
  DataOptions data;
  std::optional<double> test_after;
  std::string out_dir;
  unsigned threads = 0;
  std::optional<std::uint64_t> seed;
  // fit
  std::optional<std::size_t> n_sim;
  std::string samplers_from;
  // predict / idleness
  std::string strategy = "deterministic";
  double step = 10.0;
  std::vector<std::string> deltas;         // minutes
  std::vector<std::string> deltas_seconds;  // idleness horizons
};

Dataset evaluation_data(const EvaluateArgs& a, const std::vector<LabeledModel>& models, std::ostream& err) {
  for (const auto& m : models) require_concurrency(kind_of(m.model), a.data);
  const Dataset all = load_data(a.data, err);
  return a.test_after ? filter_by_start(all, std::nullopt, a.test_after) : all;
}

int cmd_evaluate_fit(const EvaluateArgs& a, const std::string& provenance, std::ostream& out, std::ostream& err) {
  if (!a.seed) throw UsageError("evaluate fit simulates data and needs --seed");
  const auto models = load_models(a.params);
  const Dataset test = evaluation_data(a, models, err);
  fs::create_directories(a.out_dir);
  const MarkSamplers ms = samplers_from(a.samplers_from, a.data.assignments, &test, err);
  const std::size_t n_sim = a.n_sim.value_or(test.size());

  struct Metric {
    const char* name;
    std::vector<double> (*extract)(const Dataset&);
  };
  const Metric metrics[] = {
      {"duration", [](const Dataset& d) { return extract_durations(d); }},
      {"gap", [](const Dataset& d) { return extract_gaps(d, GapFilter::all); }},
      {"customer_gap", [](const Dataset& d) { return extract_gaps(d, GapFilter::customer); }},
      {"agent_gap", [](const Dataset& d) { return extract_gaps(d, GapFilter::agent); }},
  };

  auto ks = open_csv(fs::path(a.out_dir) / "ks.csv", provenance, "model,metric,D,p,n_data,n_simulated");
  for (const auto& m : models) {
    const Dataset sim = simulate_dataset(m.model, ms, n_sim, *a.seed, a.threads);
    for (const auto& metric : metrics) {
      const auto x = metric.extract(test);
      const auto y = metric.extract(sim);
      if (x.empty() || y.empty()) {
        err << "warning: " << m.label << " " << metric.name << ": empty sample, skipped\n";
        continue;
      }
      const KsResult r = ks_two_sample(x, y);
      ks << m.label << ',' << metric.name << ',' << fmt(r.statistic) << ',' << fmt(r.p_value) << ',' << x.size()
         << ',' << y.size() << '\n';
      out << m.label << ' ' << metric.name << " D=" << fmt(r.statistic) << " p=" << fmt(r.p_value) << '\n';

      const std::string stem = m.label + "_" + metric.name + ".csv";
      auto qq = open_csv(fs::path(a.out_dir) / ("qq_" + stem), provenance, "quantile,data,simulated");
      for (const auto& p : qq_points(x, y)) qq << fmt(p.q) << ',' << fmt(p.x) << ',' << fmt(p.y) << '\n';
      auto cdf = open_csv(fs::path(a.out_dir) / ("cdf_" + stem), provenance, "value,cdf_data,cdf_simulated");
      for (const auto& p : cdf_points(x, y)) cdf << fmt(p.value) << ',' << fmt(p.cdf_x) << ',' << fmt(p.cdf_y) << '\n';
    }
  }
  return kExitOk;
}

SamplingStrategy parse_strategy(const EvaluateArgs& a) {
  SamplingStrategy s;
  s.step = a.step;
  if (a.strategy == "deterministic") {
    s.kind = SamplingStrategy::Kind::deterministic;
  } else if (a.strategy == "activity") {
    s.kind = SamplingStrategy::Kind::activity;
  } else if (a.strategy == "random") {
    if (!a.seed) throw UsageError("random sampling needs --seed");
    s.kind = SamplingStrategy::Kind::random;
    s.seed = *a.seed;
  } else {
    throw UsageError("unknown strategy '" + a.strategy + "'");
  }
  return s;
}

void write_records(const fs::path& path, const std::string& provenance, std::span<const PredictionRecord> recs) {
  auto f = open_csv(path, provenance, "id,t,delta,score,label");
  for (const auto& r : recs) {
    f << r.id << ',' << fmt(r.t) << ',' << fmt(r.delta) << ',' << fmt(r.score) << ',' << (r.label ? 1 : 0) << '\n';
  }
}

void write_auc_rows(std::ostream& f, std::ostream& out, const std::string& label, const PredictionEvaluation& ev) {
  for (const auto& row : ev.table) {
    f << label << ',' << fmt(row.delta) << ',' << fmt(row.auc) << ',' << row.positives << ',' << row.negatives
      << '\n';
    out << label << " delta=" << fmt(row.delta) << " auc=" << fmt(row.auc) << '\n';
  }
}

int cmd_evaluate_predict(const EvaluateArgs& a, const std::string& provenance, std::ostream& out,
                         std::ostream& err) {
  const auto models = load_models(a.params);
  const SamplingStrategy strategy = parse_strategy(a);
  const auto deltas = parse_deltas(a.deltas);
  const Dataset test = evaluation_data(a, models, err);
  fs::create_directories(a.out_dir);

  auto table = open_csv(fs::path(a.out_dir) / "auc.csv", provenance, "model,delta,auc,positives,negatives");
  for (const auto& m : models) {
    const PredictionEvaluation ev = evaluate_prediction(m.model, test, strategy, deltas, a.threads);
    write_auc_rows(table, out, m.label, ev);
    write_records(fs::path(a.out_dir) / ("records_" + m.label + ".csv"), provenance, ev.records);
    for (const auto& row : ev.table) {
      auto roc = open_csv(fs::path(a.out_dir) / ("roc_" + m.label + "_delta_" + fmt(row.delta) + ".csv"),
                          provenance, "threshold,true_positive_rate,false_positive_rate");
      if (std::isnan(row.auc)) continue;
      const auto recs = ev.records_for(row.delta);
      for (const auto& p : roc_curve(recs)) {
        roc << fmt(p.threshold) << ',' << fmt(p.true_positive_rate) << ',' << fmt(p.false_positive_rate) << '\n';
      }
    }
  }
  return kExitOk;
}

int cmd_evaluate_idleness(const EvaluateArgs& a, const std::string& provenance, std::ostream& out,
                          std::ostream& err) {
  const auto models = load_models(a.params);
  const auto deltas = parse_deltas(a.deltas_seconds);
  const Dataset test = evaluation_data(a, models, err);
  fs::create_directories(a.out_dir);

  auto table = open_csv(fs::path(a.out_dir) / "idleness_auc.csv", provenance,
                        "model,delta_seconds,auc,positives,negatives");
  for (const auto& m : models) {
    const PredictionEvaluation ev = evaluate_agent_idleness(m.model, test, a.step, deltas, a.threads);
    write_auc_rows(table, out, m.label, ev);
    write_records(fs::path(a.out_dir) / ("idleness_records_" + m.label + ".csv"), provenance, ev.records);
  }
  return kExitOk;
}

void add_evaluate_common(CLI::App* cmd, EvaluateArgs& a) {
  cmd->add_option("--params", a.params, "Parameter document(s); repeat to compare models")
      ->required()
      ->check(CLI::ExistingFile);
  add_data_options(cmd, a.data);
  cmd->add_option("--test-after", a.test_after,
                  "Evaluate conversations with start epoch >= this value (minutes since origin)");
  cmd->add_option("--out-dir", a.out_dir, "Directory for the CSV outputs")->required();
  cmd->add_option("--threads", a.threads, "Worker thread cap (0 = all cores)");
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hawkes process models of two-party conversations", "convhawkes"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "convhawkes " CONVHAWKES_VERSION);

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a model and write a parameter document");
  fit_cmd->add_option("--model", fit.model, "Model variant")
      ->required()
      ->check(CLI::IsMember({"se", "sgs", "sgd", "uhp", "bhp", "wbhp", "sbhp", "cbhp"}));
  add_data_options(fit_cmd, fit.data);
  fit_cmd->add_option("--train-before", fit.train_before,
                      "Fit conversations with start epoch < this value (minutes since origin)");
  fit_cmd->add_option("--seed", fit.seed, "Seed for the random EM start")->required();
  fit_cmd->add_option("--tol", fit.tolerance, "EM stop when L1 parameter change < tol (per minute units)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  fit_cmd->add_option("--max-iter", fit.max_iterations, "EM iteration cap")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  fit_cmd->add_option("--out", fit.out, "Output parameter document (JSON)")->required();
  fit_cmd->add_option("--threads", fit.threads, "Worker thread cap (0 = all cores)");

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Simulate conversations from a parameter document");
  sim_cmd->add_option("--params", sim.params, "Parameter document")->required()->check(CLI::ExistingFile);
  sim_cmd->add_option("--n", sim.n, "Number of conversations")->required()->check(CLI::PositiveNumber);
  sim_cmd->add_option("--seed", sim.seed, "Random seed")->required();
  sim_cmd->add_option("--samplers-from", sim.samplers_from,
                      "Messages CSV whose marks, message counts and close lags are resampled")
      ->check(CLI::ExistingFile);
  sim_cmd->add_option("--samplers-assignments", sim.samplers_assignments,
                      "Assignment CSV giving concurrency for --samplers-from")
      ->check(CLI::ExistingFile);
  sim_cmd->add_option("--out", sim.out, "Output messages CSV (times in minutes)")->required();
  sim_cmd->add_option("--assignments-out", sim.assignments_out,
                      "Also write an assignment CSV reproducing the simulated concurrency");
  sim_cmd->add_option("--max-events", sim.max_events, "Per-conversation event cap")->capture_default_str();
  sim_cmd->add_option("--threads", sim.threads, "Worker thread cap (0 = all cores)");

  PredictArgs pred;
  auto* pred_cmd = app.add_subcommand("predict", "Probability of activity in (t, t + delta]");
  pred_cmd->add_option("--params", pred.params, "Parameter document")->required()->check(CLI::ExistingFile);
  add_data_options(pred_cmd, pred.data);
  pred_cmd->add_option("--conversation", pred.conversation, "Conversation id");
  pred_cmd->add_option("--t", pred.t, "Query time (minutes since conversation start)");
  pred_cmd->add_option("--delta", pred.delta, "Horizon (minutes, or 'inf')")->required();
  pred_cmd->add_option("--agent", pred.agent, "Agent id: predict over all its open conversations");
  pred_cmd->add_option("--epoch", pred.epoch, "Absolute query time for --agent (minutes since origin)");

  EvaluateArgs ev;
  auto* eval_cmd = app.add_subcommand("evaluate", "Goodness of fit and prediction accuracy");
  eval_cmd->require_subcommand(1);
  auto* ev_fit = eval_cmd->add_subcommand("fit", "KS, QQ and CDF tables against simulated data");
  add_evaluate_common(ev_fit, ev);
  ev_fit->add_option("--seed", ev.seed, "Random seed for the simulated comparison data")->required();
  ev_fit->add_option("--n-sim", ev.n_sim, "Simulated conversations per model (default: test size)");
  ev_fit->add_option("--samplers-from", ev.samplers_from,
                     "Messages CSV for simulation marks (default: the evaluated data)")
      ->check(CLI::ExistingFile);

  auto* ev_pred = eval_cmd->add_subcommand("predict", "Conversation-level AUC and ROC tables");
  add_evaluate_common(ev_pred, ev);
  ev_pred->add_option("--strategy", ev.strategy, "Sampling: deterministic, activity or random")
      ->capture_default_str()
      ->check(CLI::IsMember({"deterministic", "activity", "random"}));
  ev_pred->add_option("--step", ev.step, "Deterministic sampling interval (minutes)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  ev_pred->add_option("--deltas", ev.deltas, "Horizons (minutes, 'inf' allowed)")
      ->delimiter(',')
      ->default_val(std::vector<std::string>{"5", "10", "15", "30", "60", "inf"});
  ev_pred->add_option("--seed", ev.seed, "Random seed (random strategy only)");

  auto* ev_idle = eval_cmd->add_subcommand("idleness", "Agent-level activity AUC table");
  add_evaluate_common(ev_idle, ev);
  ev_idle->add_option("--step", ev.step, "Sampling interval (minutes)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  ev_idle->add_option("--deltas", ev.deltas_seconds, "Horizons (seconds)")
      ->delimiter(',')
      ->default_val(std::vector<std::string>{"10", "30", "60"});

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const std::string provenance = provenance_of(args);
  try {
    if (fit_cmd->parsed()) return cmd_fit(fit, out, err);
    if (sim_cmd->parsed()) return cmd_simulate(sim, provenance, out, err);
    if (pred_cmd->parsed()) return cmd_predict(pred, out, err);
    if (ev_fit->parsed()) return cmd_evaluate_fit(ev, provenance, out, err);
    if (ev_pred->parsed()) return cmd_evaluate_predict(ev, provenance, out, err);
    if (ev_idle->parsed()) return cmd_evaluate_idleness(ev, provenance, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
  return kExitUsage;
}

}  // namespace convhawkes::cli
