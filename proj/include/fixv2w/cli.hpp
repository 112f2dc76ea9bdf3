// SPDX-License-Identifier: Apache-2.0
//
// Run configuration and the subcommands of the fixv2w tool.
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fixv2w/date.hpp"
#include "fixv2w/embed.hpp"
#include "fixv2w/error.hpp"
#include "fixv2w/eval.hpp"
#include "fixv2w/ingest.hpp"
#include "fixv2w/remap_case.hpp"

namespace fixv2w::cli {

// Input files; empty means unset. Relative paths resolve against the
// directory of the config file.
struct DataPaths {
  std::string feed;
  std::string history;
  std::string catalog;
  std::string kev;
  std::string exploitdb;
  std::string top25;
  std::string view1003;
  std::string status_overrides;
};

struct RunConfig {
  std::filesystem::path base_dir = ".";
  DataPaths data;
  ingest::FeedState feed_state = ingest::FeedState::Base;
  Date train_date{std::chrono::year{2021}, std::chrono::August, std::chrono::day{4}};
  Date validate_date{std::chrono::year{2024}, std::chrono::December, std::chrono::day{17}};
  // Snapshot date for `snapshot`, `train` and `fix`; defaults to train_date.
  std::optional<Date> as_of;
  // Start of the change window that votes for per-CWE tailored strategies.
  std::optional<Date> tailored_from;
  embed::TrainingConfig training;
  // Unset: every strategy that applies to the status.
  std::optional<CandidateStrategy> strategy;
  // Unset: both Discouraged and Prohibited.
  std::optional<kg::MappingStatus> status;
  std::size_t top_n = 2;
  std::size_t threshold = 10;
  std::size_t cutoff = 10;
  eval::UnfoundPolicy unfound = eval::UnfoundPolicy::Penalty;
  double closed_fraction = 0.1;
  std::optional<Date> from;
  std::optional<Date> to;
  std::string cache_dir;
  std::filesystem::path out = "out";
  std::uint64_t seed = 0;
  std::size_t threads = 1;

  // Flat dotted keys, e.g. {"train.dim": 100, "data.feed": "nvd.json"}.
  // Unknown keys and ill-typed values throw ConfigError.
  void apply(const nlohmann::json& flat);
  void set(std::string_view key, std::string_view value);

  // Effective configuration as flat dotted keys, sorted; excludes `out`.
  nlohmann::json to_json() const;
  // sha256 of the canonical to_json() text.
  std::string hash() const;

  // Dates ordered, enums in range, set files present. ConfigError.
  void validate() const;

  std::filesystem::path resolve(const std::string& path) const;
  Date snapshot_date() const { return as_of.value_or(train_date); }
};

RunConfig load_config(const std::filesystem::path& path);

// Exit status for an error class: 2 config, 3 data, 4 numeric, 1 internal.
int exit_code(ErrorClass c);

// {"error": kind, "class": ..., "message": ..., "command": ...}
std::string error_json(const Error& e, std::string_view command);

inline constexpr std::string_view kCommands[] = {"ingest", "train",    "snapshot",     "longitudinal",
                                                 "fix",    "evaluate", "retrain-eval", "exploits"};

struct CommandOptions {
  // ingest only: fetch from the NVD API into the cache instead of reading
  // data.feed/data.history.
  bool fetch = false;
};

// Runs one subcommand, writing artifacts and manifest.<command>.json under
// cfg.out. Throws fixv2w::Error.
void run(std::string_view command, const RunConfig& cfg, const CommandOptions& options = {});

// Argument parsing, config loading, locking and error reporting around
// run(). Returns the process exit status.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fixv2w::cli
