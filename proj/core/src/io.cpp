#include "convhawkes/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace convhawkes {

namespace {

using nlohmann::json;

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::string at_line(std::size_t line) { return "line " + std::to_string(line) + ": "; }

double parse_double(std::string_view field, std::size_t line, const char* name) {
  field = trim(field);
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (!field.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
    throw DataError(at_line(line) + "invalid " + name + " '" + std::string(field) + "'");
  }
  return v;
}

long long parse_integer(std::string_view field, std::size_t line, const char* name) {
  field = trim(field);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw DataError(at_line(line) + "invalid " + name + " '" + std::string(field) + "'");
  }
  return v;
}

// Reads non-comment lines; returns false at end of input.
bool next_record(std::istream& in, std::string& line, std::size_t& line_no, DatasetMetadata* meta) {
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      constexpr std::string_view key = "epoch_origin=";
      const std::string_view body = trim(t.substr(1));
      if (meta && body.substr(0, key.size()) == key) meta->epoch_origin = std::string(trim(body.substr(key.size())));
      continue;
    }
    return true;
  }
  return false;
}

void expect_header(std::istream& in, std::string& line, std::size_t& line_no, std::string_view header,
                   DatasetMetadata* meta) {
  if (!next_record(in, line, line_no, meta)) throw DataError("missing header row '" + std::string(header) + "'");
  if (trim(line) != header) {
    throw DataError(at_line(line_no) + "expected header '" + std::string(header) + "'");
  }
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  return out;
}

void write_provenance(std::ostream& out, std::string_view provenance) {
  if (!provenance.empty()) out << "# " << provenance << '\n';
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw NumericError("cannot format number");
  return std::string(buf, ptr);
}

Dataset read_messages(std::istream& in, const LoadOptions& opts, LoadReport* report) {
  Dataset d;
  std::string line;
  std::size_t line_no = 0;
  expect_header(in, line, line_no, kMessagesHeader, &d.metadata);

  struct Pending {
    Conversation conv;
    std::vector<std::size_t> lines;
  };
  std::vector<Pending> pending;
  std::unordered_map<std::string, std::size_t> index;

  while (next_record(in, line, line_no, &d.metadata)) {
    const auto f = split_fields(line);
    if (f.size() != 8) {
      throw DataError(at_line(line_no) + "expected 8 fields, found " + std::to_string(f.size()));
    }
    const std::string id(trim(f[0]));
    if (id.empty()) throw DataError(at_line(line_no) + "empty conversation_id");
    const std::string agent(trim(f[1]));
    const double start = parse_double(f[2], line_no, "start_epoch_min");
    const double close = parse_double(f[3], line_no, "close_min");
    Message m;
    m.time = parse_double(f[4], line_no, "t_min");
    const std::string_view sender = trim(f[5]);
    if (sender == "c") {
      m.sender = Sender::customer;
    } else if (sender == "a") {
      m.sender = Sender::agent;
    } else {
      throw DataError(at_line(line_no) + "sender must be 'c' or 'a', found '" + std::string(sender) + "'");
    }
    const long long words = parse_integer(f[6], line_no, "words");
    if (words < 1 || words > std::numeric_limits<int>::max()) {
      throw DataError(at_line(line_no) + "words must be a positive integer");
    }
    m.words = static_cast<int>(words);
    m.sentiment = parse_double(f[7], line_no, "sentiment");

    auto [it, inserted] = index.try_emplace(id, pending.size());
    if (inserted) {
      Pending p;
      p.conv.id = id;
      p.conv.agent_id = agent;
      p.conv.start_epoch = start;
      p.conv.close_time = close;
      pending.push_back(std::move(p));
    }
    Pending& p = pending[it->second];
    if (p.conv.agent_id != agent || p.conv.start_epoch != start || p.conv.close_time != close) {
      throw DataError(at_line(line_no) + "conversation '" + id +
                      "' has inconsistent agent_id, start_epoch_min or close_min");
    }
    p.conv.messages.push_back(m);
    p.lines.push_back(line_no);
  }

  for (auto& p : pending) {
    Conversation& c = p.conv;
    std::stable_sort(c.messages.begin(), c.messages.end(),
                     [](const Message& a, const Message& b) { return a.time < b.time; });
    const double shift = c.messages.front().time;
    if (shift != 0.0) {
      for (auto& m : c.messages) m.time -= shift;
      c.close_time -= shift;
      c.start_epoch += shift;
    }
    const auto violations = validate_conversation(c);
    if (violations.empty()) {
      d.conversations.push_back(std::move(c));
      continue;
    }
    std::string what = c.id + ": ";
    for (std::size_t k = 0; k < violations.size(); ++k) {
      if (k) what += "; ";
      what += violations[k].field + ": " + violations[k].rule;
    }
    if (opts.strict) throw DataError("invalid conversation (first row at line " + std::to_string(p.lines.front()) + ") " + what);
    if (report) report->rejected.push_back(what);
  }
  return d;
}

Dataset load_messages(const std::filesystem::path& path, const LoadOptions& opts, LoadReport* report) {
  auto in = open_input(path);
  try {
    Dataset d = read_messages(in, opts, report);
    d.metadata.source = path.string();
    return d;
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_messages(const Dataset& d, std::ostream& out, std::string_view provenance) {
  write_provenance(out, provenance);
  if (!d.metadata.epoch_origin.empty()) out << "# epoch_origin=" << d.metadata.epoch_origin << '\n';
  out << kMessagesHeader << '\n';
  for (const auto& c : d.conversations) {
    const std::string prefix =
        c.id + ',' + c.agent_id + ',' + format_double(c.start_epoch) + ',' + format_double(c.close_time) + ',';
    for (const auto& m : c.messages) {
      out << prefix << format_double(m.time) << ',' << to_string(m.sender) << ',' << m.words << ','
          << format_double(m.sentiment) << '\n';
    }
  }
}

void save_messages(const Dataset& d, const std::filesystem::path& path, std::string_view provenance) {
  auto out = open_output(path);
  write_messages(d, out, provenance);
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

std::vector<Assignment> read_assignments(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  expect_header(in, line, line_no, kAssignmentsHeader, nullptr);
  std::vector<Assignment> rows;
  while (next_record(in, line, line_no, nullptr)) {
    const auto f = split_fields(line);
    if (f.size() != 4) throw DataError(at_line(line_no) + "expected 4 fields, found " + std::to_string(f.size()));
    Assignment a;
    a.agent_id = std::string(trim(f[0]));
    a.conversation_id = std::string(trim(f[1]));
    a.assign_epoch = parse_double(f[2], line_no, "assign_epoch_min");
    a.close_epoch = parse_double(f[3], line_no, "close_epoch_min");
    if (a.agent_id.empty() || a.conversation_id.empty()) throw DataError(at_line(line_no) + "empty identifier");
    if (!(a.close_epoch > a.assign_epoch)) throw DataError(at_line(line_no) + "close_epoch_min must exceed assign_epoch_min");
    rows.push_back(std::move(a));
  }
  return rows;
}

std::vector<Assignment> load_assignments(const std::filesystem::path& path) {
  auto in = open_input(path);
  try {
    return read_assignments(in);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_assignments(std::span<const Assignment> rows, std::ostream& out, std::string_view provenance) {
  write_provenance(out, provenance);
  out << kAssignmentsHeader << '\n';
  for (const auto& a : rows) {
    out << a.agent_id << ',' << a.conversation_id << ',' << format_double(a.assign_epoch) << ','
        << format_double(a.close_epoch) << '\n';
  }
}

namespace {

using AgentIntervals = std::unordered_map<std::string, std::vector<std::pair<double, double>>>;

AgentIntervals group_by_agent(std::span<const Assignment> rows) {
  AgentIntervals out;
  for (const auto& a : rows) out[a.agent_id].emplace_back(a.assign_epoch, a.close_epoch);
  return out;
}

// Sweep over the agent's interval endpoints inside (begin, end).
ConcurrencyTimeline sweep(const std::vector<std::pair<double, double>>& intervals, double origin, double begin,
                          double end) {
  std::vector<double> cuts{begin};
  for (const auto& [s, e] : intervals) {
    if (s > begin && s < end) cuts.push_back(s);
    if (e > begin && e < end) cuts.push_back(e);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::vector<double> bps;
  std::vector<int> vals;
  for (double cut : cuts) {
    int k = 0;
    for (const auto& [s, e] : intervals) {
      if (s <= cut && cut < e) ++k;
    }
    k = std::max(k, 1);
    if (!vals.empty() && vals.back() == k) continue;
    bps.push_back(vals.empty() ? 0.0 : cut - origin);
    vals.push_back(k);
  }
  return ConcurrencyTimeline(std::move(bps), std::move(vals));
}

}  // namespace

std::map<std::string, ConcurrencyTimeline> derive_concurrency(std::span<const Assignment> rows) {
  const auto by_agent = group_by_agent(rows);
  std::map<std::string, ConcurrencyTimeline> out;
  for (const auto& a : rows) {
    out.insert_or_assign(a.conversation_id,
                         sweep(by_agent.at(a.agent_id), a.assign_epoch, a.assign_epoch, a.close_epoch));
  }
  return out;
}

std::map<std::string, ConcurrencyTimeline> derive_concurrency(const std::filesystem::path& path) {
  const auto rows = load_assignments(path);
  return derive_concurrency(rows);
}

std::vector<std::string> attach_concurrency(Dataset& d, std::span<const Assignment> rows) {
  const auto by_agent = group_by_agent(rows);
  std::unordered_map<std::string, const Assignment*> by_conversation;
  for (const auto& a : rows) by_conversation[a.conversation_id] = &a;
  std::vector<std::string> warnings;
  for (auto& c : d.conversations) {
    const auto it = by_conversation.find(c.id);
    if (it == by_conversation.end()) {
      c.concurrency = ConcurrencyTimeline(1);
      warnings.push_back(c.id + ": no assignment row, using K = 1");
      continue;
    }
    const double end = std::max(c.close_epoch(), it->second->close_epoch);
    c.concurrency = sweep(by_agent.at(it->second->agent_id), c.start_epoch, c.start_epoch, end);
  }
  return warnings;
}

std::vector<Assignment> assignments_for_constant_concurrency(const Dataset& d) {
  std::vector<Assignment> out;
  for (const auto& c : d.conversations) {
    const double close = c.close_epoch() > c.start_epoch ? c.close_epoch() : c.start_epoch + 1.0;
    out.push_back({c.agent_id, c.id, c.start_epoch, close});
    const int k = c.concurrency.at(0.0);
    for (int j = 1; j < k; ++j) {
      out.push_back({c.agent_id, c.id + "#companion" + std::to_string(j), c.start_epoch, close});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

json kernel_json(const KernelParams& k) { return json{{"alpha", k.alpha}, {"beta", k.beta}}; }
json gamma_json(const GammaParams& g) { return json{{"shape", g.shape}, {"rate", g.rate}}; }

const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw DataError("parameter document: missing field '" + where + key + "'");
  return j.at(key);
}

double require_number(const json& j, const char* key, const std::string& where) {
  const json& v = require(j, key, where);
  if (!v.is_number()) throw DataError("parameter document: field '" + where + key + "' must be a number");
  return v.get<double>();
}

KernelParams kernel_from(const json& j, const std::string& where) {
  KernelParams k{require_number(j, "alpha", where), require_number(j, "beta", where)};
  if (!k.valid()) throw DataError("parameter document: '" + where + "' needs alpha > 0 and beta > 0");
  return k;
}

GammaParams gamma_from(const json& j, const std::string& where) {
  return GammaParams{require_number(j, "shape", where), require_number(j, "rate", where)};
}

double mark_stat(const json& marks, const char* key) {
  if (!marks.is_object() || !marks.contains(key) || !marks.at(key).is_number()) {
    throw DataError(std::string("mark statistic missing: ") + key);
  }
  return marks.at(key).get<double>();
}

}  // namespace

std::string params_to_string(const ParamsDocument& doc) {
  json j;
  j["format_version"] = kParamsFormatVersion;
  j["model"] = std::string(to_string(kind_of(doc.model)));
  json params;
  json marks = json::object();
  if (const auto* h = std::get_if<HawkesModel>(&doc.model)) {
    if (const auto* u = std::get_if<UnivariateModel>(h)) {
      params = kernel_json(u->kernel);
    } else {
      const auto& b = std::get<BivariateModel>(*h);
      for (std::size_t k = 0; k < kChannelCount; ++k) {
        const auto ch = static_cast<Channel>(k);
        params[std::string(to_string(ch))] = kernel_json(b.params[ch]);
      }
      if (const auto* w = std::get_if<WordMark>(&b.marks)) marks["mean_words"] = w->mean_words;
      if (const auto* s = std::get_if<SentimentMark>(&b.marks)) {
        marks["mean_sentiment"] = s->mean_sentiment;
        marks["min_sentiment"] = s->min_sentiment;
      }
    }
  } else {
    const auto& b = std::get<BaselineParams>(doc.model);
    if (const auto* se = std::get_if<SumOfExponentials>(&b)) {
      params["rate"] = se->rate;
    } else if (const auto* sgs = std::get_if<SumOfGammaStatic>(&b)) {
      params = gamma_json(sgs->gap);
    } else {
      const auto& sgd = std::get<SumOfGammaDynamic>(b);
      params["per_index"] = json::array();
      for (const auto& g : sgd.per_index) params["per_index"].push_back(gamma_json(g));
      params["tail"] = gamma_json(sgd.tail);
    }
  }
  j["parameters"] = params;
  j["marks"] = marks;
  json fit = json::object();
  if (doc.fit.seed) fit["seed"] = *doc.fit.seed;
  if (doc.fit.iterations) fit["iterations"] = *doc.fit.iterations;
  if (doc.fit.log_likelihood) fit["log_likelihood"] = *doc.fit.log_likelihood;
  if (doc.fit.converged) fit["converged"] = *doc.fit.converged;
  if (doc.fit.conversations) fit["conversations"] = *doc.fit.conversations;
  j["fit"] = fit;
  return j.dump(2) + "\n";
}

ParamsDocument params_from_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("parameter document is not valid JSON: ") + e.what());
  }
  const json& version = require(j, "format_version", "");
  if (!version.is_number_integer() || version.get<int>() != kParamsFormatVersion) {
    throw DataError("parameter document: unsupported format_version");
  }
  const json& model = require(j, "model", "");
  if (!model.is_string()) throw DataError("parameter document: 'model' must be a string");
  const auto kind = parse_model_kind(model.get<std::string>());
  if (!kind) throw DataError("parameter document: unknown model variant '" + model.get<std::string>() + "'");
  const json& p = require(j, "parameters", "");
  const json marks = j.contains("marks") ? j.at("marks") : json::object();

  ParamsDocument doc{HawkesModel{}, {}};
  switch (*kind) {
    case ModelKind::se: doc.model = BaselineParams{SumOfExponentials{require_number(p, "rate", "parameters.")}}; break;
    case ModelKind::sgs: doc.model = BaselineParams{SumOfGammaStatic{gamma_from(p, "parameters.")}}; break;
    case ModelKind::sgd: {
      SumOfGammaDynamic sgd;
      const json& rows = require(p, "per_index", "parameters.");
      if (!rows.is_array()) throw DataError("parameter document: 'parameters.per_index' must be an array");
      for (const auto& r : rows) sgd.per_index.push_back(gamma_from(r, "parameters.per_index[]."));
      sgd.tail = gamma_from(require(p, "tail", "parameters."), "parameters.tail.");
      doc.model = BaselineParams{sgd};
      break;
    }
    case ModelKind::uhp: doc.model = HawkesModel{UnivariateModel{kernel_from(p, "parameters.")}}; break;
    default: {
      BivariateModel b;
      for (std::size_t k = 0; k < kChannelCount; ++k) {
        const auto ch = static_cast<Channel>(k);
        const std::string name(to_string(ch));
        b.params[ch] = kernel_from(require(p, name.c_str(), "parameters."), "parameters." + name + ".");
      }
      if (*kind == ModelKind::wbhp) b.marks = WordMark{mark_stat(marks, "mean_words")};
      if (*kind == ModelKind::sbhp)
        b.marks = SentimentMark{mark_stat(marks, "mean_sentiment"), mark_stat(marks, "min_sentiment")};
      if (*kind == ModelKind::cbhp) b.marks = ConcurrencyMark{};
      check_mark_model(b.marks);
      doc.model = HawkesModel{b};
      break;
    }
  }
  if (const auto* b = std::get_if<BaselineParams>(&doc.model)) check_baseline(*b);

  if (j.contains("fit") && j.at("fit").is_object()) {
    const json& fit = j.at("fit");
    if (fit.contains("seed")) doc.fit.seed = fit.at("seed").get<std::uint64_t>();
    if (fit.contains("iterations")) doc.fit.iterations = fit.at("iterations").get<int>();
    if (fit.contains("log_likelihood") && fit.at("log_likelihood").is_number())
      doc.fit.log_likelihood = fit.at("log_likelihood").get<double>();
    if (fit.contains("converged")) doc.fit.converged = fit.at("converged").get<bool>();
    if (fit.contains("conversations")) doc.fit.conversations = fit.at("conversations").get<std::size_t>();
  }
  return doc;
}

void save_params(const ParamsDocument& doc, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << params_to_string(doc);
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

ParamsDocument load_params(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return params_from_string(ss.str());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace convhawkes
