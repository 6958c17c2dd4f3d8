#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "convhawkes/domain.hpp"

namespace convhawkes {

// Messages CSV:
//   conversation_id,agent_id,start_epoch_min,close_min,t_min,sender,words,sentiment
// sender is "c" or "a". Lines starting with '#' are comments; a line
// "# epoch_origin=<ISO8601>" declares the origin of the absolute epochs.
inline constexpr std::string_view kMessagesHeader =
    "conversation_id,agent_id,start_epoch_min,close_min,t_min,sender,words,sentiment";

// Assignments CSV: agent_id,conversation_id,assign_epoch_min,close_epoch_min
inline constexpr std::string_view kAssignmentsHeader = "agent_id,conversation_id,assign_epoch_min,close_epoch_min";

struct LoadOptions {
  bool strict = true;  // reject the file on any invalid conversation
};

struct LoadReport {
  std::vector<std::string> rejected;  // "<id>: <field>: <rule>"
  std::vector<std::string> warnings;
};

// Rows are grouped by conversation (first-appearance order), sorted by time
// with ties kept in file order, and shifted so the first message is at 0
// (start_epoch absorbs the shift). Concurrency defaults to K = 1.
[[nodiscard]] Dataset read_messages(std::istream& in, const LoadOptions& opts = {}, LoadReport* report = nullptr);
[[nodiscard]] Dataset load_messages(const std::filesystem::path& path, const LoadOptions& opts = {},
                                    LoadReport* report = nullptr);

void write_messages(const Dataset& d, std::ostream& out, std::string_view provenance = {});
void save_messages(const Dataset& d, const std::filesystem::path& path, std::string_view provenance = {});

struct Assignment {
  std::string agent_id;
  std::string conversation_id;
  double assign_epoch = 0.0;
  double close_epoch = 0.0;
};

[[nodiscard]] std::vector<Assignment> read_assignments(std::istream& in);
[[nodiscard]] std::vector<Assignment> load_assignments(const std::filesystem::path& path);
void write_assignments(std::span<const Assignment> rows, std::ostream& out, std::string_view provenance = {});

// K at an absolute time is the number of the agent's assignments whose
// [assign, close) interval covers it (at least 1). Timelines are in minutes
// relative to each conversation's own assign epoch and only break inside its
// [assign, close) lifetime.
[[nodiscard]] std::map<std::string, ConcurrencyTimeline> derive_concurrency(std::span<const Assignment> rows);
[[nodiscard]] std::map<std::string, ConcurrencyTimeline> derive_concurrency(const std::filesystem::path& path);

// Same count, but relative to each conversation's start_epoch and lifetime in
// the dataset. Conversations without an assignment row keep K = 1; their ids
// are returned as warnings.
std::vector<std::string> attach_concurrency(Dataset& d, std::span<const Assignment> rows);

// One assignment row per conversation plus K - 1 synthetic companions on the
// same agent, so that derive_concurrency reproduces a constant K.
[[nodiscard]] std::vector<Assignment> assignments_for_constant_concurrency(const Dataset& d);

// ---------------------------------------------------------------------------
// Parameter documents (JSON, format_version 1)

inline constexpr int kParamsFormatVersion = 1;

struct FitMetadata {
  std::optional<std::uint64_t> seed;
  std::optional<int> iterations;
  std::optional<double> log_likelihood;
  std::optional<bool> converged;
  std::optional<std::size_t> conversations;
};

struct ParamsDocument {
  ModelSource model;
  FitMetadata fit;

  friend bool operator==(const ParamsDocument& a, const ParamsDocument& b) {
    return a.model == b.model && a.fit.seed == b.fit.seed && a.fit.iterations == b.fit.iterations &&
           a.fit.log_likelihood == b.fit.log_likelihood && a.fit.converged == b.fit.converged &&
           a.fit.conversations == b.fit.conversations;
  }
};

[[nodiscard]] std::string params_to_string(const ParamsDocument& doc);
[[nodiscard]] ParamsDocument params_from_string(const std::string& text);
void save_params(const ParamsDocument& doc, const std::filesystem::path& path);
[[nodiscard]] ParamsDocument load_params(const std::filesystem::path& path);

// Shortest round-trip decimal text for a double.
[[nodiscard]] std::string format_double(double v);

}  // namespace convhawkes
