// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "fixv2w/cli.hpp"
#include "fixv2w/digest.hpp"

namespace fixv2w::cli {
namespace {

using nlohmann::json;

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

[[noreturn]] void bad(std::string_view key, const std::string& why) {
  throw ConfigError("config key '" + std::string(key) + "': " + why);
}

std::string as_string(std::string_view key, const json& v) {
  if (!v.is_string()) bad(key, "expected a string, got " + v.dump());
  return v.get<std::string>();
}

double as_number(std::string_view key, const json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    double x = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec == std::errc{} && p == s.data() + s.size()) return x;
  }
  bad(key, "expected a number, got " + v.dump());
}

std::size_t as_count(std::string_view key, const json& v) {
  const double x = as_number(key, v);
  if (!(x >= 0) || x != std::floor(x) || x > 9.0e15) bad(key, "expected a non-negative integer, got " + v.dump());
  return static_cast<std::size_t>(x);
}

bool as_bool(std::string_view key, const json& v) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_string()) {
    const auto s = lower(v.get<std::string>());
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
  }
  bad(key, "expected a boolean, got " + v.dump());
}

Date as_date(std::string_view key, const json& v) {
  const auto s = as_string(key, v);
  try {
    return parse_date(s);
  } catch (const Error& e) {
    bad(key, e.what());
  }
}

std::optional<Date> as_opt_date(std::string_view key, const json& v) {
  if (v.is_null() || (v.is_string() && v.get<std::string>().empty())) return std::nullopt;
  return as_date(key, v);
}

json opt_date(const std::optional<Date>& d) { return d ? json(format_date(*d)) : json(""); }

std::optional<kg::MappingStatus> as_status(std::string_view key, const json& v) {
  const auto s = lower(as_string(key, v));
  if (s.empty() || s == "all") return std::nullopt;
  if (s == "discouraged") return kg::MappingStatus::Discouraged;
  if (s == "prohibited") return kg::MappingStatus::Prohibited;
  bad(key, "expected 'discouraged' or 'prohibited', got '" + s + "'");
}

std::optional<CandidateStrategy> as_strategy(std::string_view key, const json& v) {
  const auto s = as_string(key, v);
  if (s.empty() || lower(s) == "all") return std::nullopt;
  try {
    return parse_strategy(s);
  } catch (const Error& e) {
    bad(key, e.what());
  }
}

struct Field {
  std::string_view key;
  std::function<void(RunConfig&, const json&)> set;
  std::function<json(const RunConfig&)> get;
};

#define PATH_FIELD(name)                                                                       \
  Field{"data." #name, [](RunConfig& c, const json& v) { c.data.name = as_string("data." #name, v); }, \
        [](const RunConfig& c) { return json(c.data.name); }}

#define TRAIN_COUNT(name)                                                                              \
  Field{"train." #name, [](RunConfig& c, const json& v) { c.training.name = as_count("train." #name, v); }, \
        [](const RunConfig& c) { return json(c.training.name); }}

#define TRAIN_BOOL(name)                                                                              \
  Field{"train." #name, [](RunConfig& c, const json& v) { c.training.name = as_bool("train." #name, v); }, \
        [](const RunConfig& c) { return json(c.training.name); }}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      PATH_FIELD(feed),
      PATH_FIELD(history),
      PATH_FIELD(catalog),
      PATH_FIELD(kev),
      PATH_FIELD(exploitdb),
      PATH_FIELD(top25),
      PATH_FIELD(view1003),
      PATH_FIELD(status_overrides),
      {"data.feed_state",
       [](RunConfig& c, const json& v) {
         const auto s = lower(as_string("data.feed_state", v));
         if (s == "base") {
           c.feed_state = ingest::FeedState::Base;
         } else if (s == "current") {
           c.feed_state = ingest::FeedState::Current;
         } else {
           bad("data.feed_state", "expected 'base' or 'current', got '" + s + "'");
         }
       },
       [](const RunConfig& c) { return json(c.feed_state == ingest::FeedState::Base ? "base" : "current"); }},
      {"snapshot.train", [](RunConfig& c, const json& v) { c.train_date = as_date("snapshot.train", v); },
       [](const RunConfig& c) { return json(format_date(c.train_date)); }},
      {"snapshot.validate", [](RunConfig& c, const json& v) { c.validate_date = as_date("snapshot.validate", v); },
       [](const RunConfig& c) { return json(format_date(c.validate_date)); }},
      {"snapshot.as_of", [](RunConfig& c, const json& v) { c.as_of = as_opt_date("snapshot.as_of", v); },
       [](const RunConfig& c) { return opt_date(c.as_of); }},
      {"tailored.from", [](RunConfig& c, const json& v) { c.tailored_from = as_opt_date("tailored.from", v); },
       [](const RunConfig& c) { return opt_date(c.tailored_from); }},
      TRAIN_COUNT(dim),
      TRAIN_COUNT(epochs),
      TRAIN_COUNT(batch_size),
      TRAIN_COUNT(negatives),
      {"train.learning_rate",
       [](RunConfig& c, const json& v) { c.training.learning_rate = as_number("train.learning_rate", v); },
       [](const RunConfig& c) { return json(c.training.learning_rate); }},
      {"train.reg_weight", [](RunConfig& c, const json& v) { c.training.reg_weight = as_number("train.reg_weight", v); },
       [](const RunConfig& c) { return json(c.training.reg_weight); }},
      {"train.reg_order",
       [](RunConfig& c, const json& v) { c.training.reg_order = static_cast<int>(as_count("train.reg_order", v)); },
       [](const RunConfig& c) { return json(c.training.reg_order); }},
      {"train.norm_p",
       [](RunConfig& c, const json& v) { c.training.norm_p = static_cast<int>(as_count("train.norm_p", v)); },
       [](const RunConfig& c) { return json(c.training.norm_p); }},
      TRAIN_BOOL(normalize_entities),
      TRAIN_BOOL(negatives_same_namespace),
      TRAIN_BOOL(filter_known),
      {"fix.strategy", [](RunConfig& c, const json& v) { c.strategy = as_strategy("fix.strategy", v); },
       [](const RunConfig& c) { return json(c.strategy ? std::string(to_string(*c.strategy)) : ""); }},
      {"fix.status", [](RunConfig& c, const json& v) { c.status = as_status("fix.status", v); },
       [](const RunConfig& c) { return json(c.status ? lower(kg::to_string(*c.status)) : ""); }},
      {"fix.top_n", [](RunConfig& c, const json& v) { c.top_n = as_count("fix.top_n", v); },
       [](const RunConfig& c) { return json(c.top_n); }},
      {"fix.threshold", [](RunConfig& c, const json& v) { c.threshold = as_count("fix.threshold", v); },
       [](const RunConfig& c) { return json(c.threshold); }},
      {"eval.cutoff", [](RunConfig& c, const json& v) { c.cutoff = as_count("eval.cutoff", v); },
       [](const RunConfig& c) { return json(c.cutoff); }},
      {"eval.unfound",
       [](RunConfig& c, const json& v) {
         const auto s = lower(as_string("eval.unfound", v));
         if (s == "penalty") {
           c.unfound = eval::UnfoundPolicy::Penalty;
         } else if (s == "exclude") {
           c.unfound = eval::UnfoundPolicy::Exclude;
         } else {
           bad("eval.unfound", "expected 'penalty' or 'exclude', got '" + s + "'");
         }
       },
       [](const RunConfig& c) { return json(c.unfound == eval::UnfoundPolicy::Penalty ? "penalty" : "exclude"); }},
      {"eval.closed_fraction",
       [](RunConfig& c, const json& v) { c.closed_fraction = as_number("eval.closed_fraction", v); },
       [](const RunConfig& c) { return json(c.closed_fraction); }},
      {"window.from", [](RunConfig& c, const json& v) { c.from = as_opt_date("window.from", v); },
       [](const RunConfig& c) { return opt_date(c.from); }},
      {"window.to", [](RunConfig& c, const json& v) { c.to = as_opt_date("window.to", v); },
       [](const RunConfig& c) { return opt_date(c.to); }},
      {"ingest.cache_dir", [](RunConfig& c, const json& v) { c.cache_dir = as_string("ingest.cache_dir", v); },
       [](const RunConfig& c) { return json(c.cache_dir); }},
      {"seed",
       [](RunConfig& c, const json& v) {
         const double x = as_number("seed", v);
         if (!(x >= 0) || x != std::floor(x) || x > 9.0e15) bad("seed", "expected a non-negative integer");
         c.seed = static_cast<std::uint64_t>(x);
       },
       [](const RunConfig& c) { return json(c.seed); }},
      {"threads", [](RunConfig& c, const json& v) { c.threads = as_count("threads", v); },
       [](const RunConfig& c) { return json(c.threads); }},
  };
  return table;
}

#undef PATH_FIELD
#undef TRAIN_COUNT
#undef TRAIN_BOOL

const Field& field(std::string_view key) {
  for (const auto& f : fields()) {
    if (f.key == key) return f;
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

}  // namespace

void RunConfig::apply(const nlohmann::json& flat) {
  if (!flat.is_object()) throw ConfigError("config must be a JSON object of dotted keys");
  for (const auto& [key, value] : flat.items()) {
    if (key == "out") {
      out = resolve(as_string(key, value));
      continue;
    }
    field(key).set(*this, value);
  }
}

void RunConfig::set(std::string_view key, std::string_view value) {
  if (key == "out") {
    out = std::filesystem::path(std::string(value));
    return;
  }
  json v = json::parse(value, nullptr, false);
  if (v.is_discarded()) v = std::string(value);
  field(key).set(*this, v);
}

nlohmann::json RunConfig::to_json() const {
  json j = json::object();
  for (const auto& f : fields()) j[std::string(f.key)] = f.get(*this);
  return j;
}

std::string RunConfig::hash() const { return sha256_hex(to_json().dump()); }

std::filesystem::path RunConfig::resolve(const std::string& path) const {
  const std::filesystem::path p(path);
  return p.is_absolute() ? p : base_dir / p;
}

void RunConfig::validate() const {
  if (!(train_date < validate_date)) {
    throw ConfigError("snapshot.train (" + format_date(train_date) + ") must precede snapshot.validate (" +
                      format_date(validate_date) + ")");
  }
  if (from && to && *to < *from) throw ConfigError("window.from must not be after window.to");
  if (tailored_from && !(*tailored_from < train_date)) throw ConfigError("tailored.from must precede snapshot.train");
  if (top_n < 1 || top_n > 3) throw ConfigError("fix.top_n must be 1, 2 or 3");
  if (threshold < 1) throw ConfigError("fix.threshold must be positive");
  if (cutoff < 1) throw ConfigError("eval.cutoff must be positive");
  if (!(closed_fraction > 0 && closed_fraction < 1)) throw ConfigError("eval.closed_fraction must lie in (0, 1)");
  if (threads < 1) throw ConfigError("threads must be positive");
  auto t = training;
  t.seed = seed;
  t.threads = threads;
  t.validate();
  const std::pair<const char*, const std::string*> files[] = {
      {"data.feed", &data.feed},         {"data.history", &data.history},
      {"data.catalog", &data.catalog},   {"data.kev", &data.kev},
      {"data.exploitdb", &data.exploitdb}, {"data.top25", &data.top25},
      {"data.view1003", &data.view1003}, {"data.status_overrides", &data.status_overrides},
  };
  for (const auto& [key, path] : files) {
    if (!path->empty() && !std::filesystem::is_regular_file(resolve(*path))) {
      throw ConfigError(std::string(key) + ": no such file " + resolve(*path).string());
    }
  }
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path.string() + " is not JSON: " + e.what());
  }
  RunConfig cfg;
  cfg.base_dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  cfg.apply(j);
  return cfg;
}

int exit_code(ErrorClass c) {
  switch (c) {
    case ErrorClass::Config: return 2;
    case ErrorClass::Data: return 3;
    case ErrorClass::Numeric: return 4;
    case ErrorClass::Internal: return 1;
  }
  return 1;
}

std::string error_json(const Error& e, std::string_view command) {
  static constexpr const char* kClass[] = {"config", "data", "numeric", "internal"};
  nlohmann::ordered_json j;
  j["error"] = e.kind();
  j["class"] = kClass[static_cast<int>(e.error_class())];
  j["message"] = e.what();
  j["command"] = command;
  j["exit_code"] = exit_code(e.error_class());
  return j.dump();
}

}  // namespace fixv2w::cli
