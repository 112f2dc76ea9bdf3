// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <regex>

#include <json.hpp>

#include "fixv2w/error.hpp"
#include "fixv2w/ingest.hpp"

namespace fixv2w::ingest {
namespace {

using nlohmann::json;
using kg::EntityId;

// Change values look like "NIST: CWE-119" or list several ids, one per line.
std::vector<EntityId> cwe_tokens(const json& detail, const char* field) {
  std::vector<EntityId> out;
  if (!detail.contains(field) || !detail[field].is_string()) return out;
  static const std::regex token(R"(NVD-CWE-Other|NVD-CWE-noinfo|CWE-[1-9][0-9]*)");
  const auto text = detail[field].get<std::string>();
  for (auto it = std::sregex_iterator(text.begin(), text.end(), token); it != std::sregex_iterator();
       ++it) {
    auto id = EntityId::cwe(it->str());
    if (std::find(out.begin(), out.end(), id) == out.end()) out.push_back(std::move(id));
  }
  return out;
}

void append_unique(std::vector<EntityId>& xs, const std::vector<EntityId>& more) {
  for (const auto& x : more)
    if (std::find(xs.begin(), xs.end(), x) == xs.end()) xs.push_back(x);
}

std::optional<ChangeEvent> read_change(const json& change) {
  ChangeEvent ev{EntityId::cve(change.at("cveId").get<std::string>()),
                 parse_timestamp(change.at("created").get<std::string>())};
  ev.event_name = change.value("eventName", std::string{});
  if (!change.contains("details")) return std::nullopt;
  for (const auto& d : change["details"]) {
    if (d.value("type", std::string{}) != "CWE") continue;
    const auto action = d.value("action", std::string{});
    if (action == "Added") {
      append_unique(ev.added_cwes, cwe_tokens(d, "newValue"));
    } else if (action == "Removed") {
      append_unique(ev.removed_cwes, cwe_tokens(d, "oldValue"));
    } else if (action == "Changed") {
      append_unique(ev.removed_cwes, cwe_tokens(d, "oldValue"));
      append_unique(ev.added_cwes, cwe_tokens(d, "newValue"));
    }
  }
  // A CWE on both sides of one change is a source relabel, not a remap.
  std::vector<EntityId> removed, added;
  for (const auto& r : ev.removed_cwes)
    if (std::find(ev.added_cwes.begin(), ev.added_cwes.end(), r) == ev.added_cwes.end())
      removed.push_back(r);
  for (const auto& a : ev.added_cwes)
    if (std::find(ev.removed_cwes.begin(), ev.removed_cwes.end(), a) == ev.removed_cwes.end())
      added.push_back(a);
  ev.removed_cwes = std::move(removed);
  ev.added_cwes = std::move(added);
  if (ev.removed_cwes.empty() && ev.added_cwes.empty()) return std::nullopt;
  return ev;
}

void sort_events(std::vector<ChangeEvent>& events) {
  std::stable_sort(events.begin(), events.end(), [](const ChangeEvent& a, const ChangeEvent& b) {
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    return a.cve < b.cve;
  });
}

}  // namespace

ChangeHistory parse_change_history(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed change history: ") + e.what(), e.byte);
  }
  if (!doc.is_object() || !doc.contains("cveChanges") || !doc["cveChanges"].is_array()) {
    throw ParseError("change history has no 'cveChanges' array", 0);
  }
  ChangeHistory history;
  std::size_t pos = 0;
  for (const auto& item : doc["cveChanges"]) {
    try {
      if (auto ev = read_change(item.at("change"))) history.events.push_back(std::move(*ev));
    } catch (const std::exception& e) {
      history.diagnostics.warn("skipping change #" + std::to_string(pos) + ": " + e.what());
    }
    ++pos;
  }
  sort_events(history.events);
  if (doc.contains("timestamp") && doc["timestamp"].is_string()) {
    history.covered_until = parse_timestamp(doc["timestamp"].get<std::string>());
  } else if (!history.events.empty()) {
    history.covered_until = history.events.back().timestamp;
  }
  return history;
}

ChangeHistory merge_histories(std::vector<ChangeHistory> parts) {
  ChangeHistory merged;
  for (auto& p : parts) {
    merged.events.insert(merged.events.end(), std::make_move_iterator(p.events.begin()),
                         std::make_move_iterator(p.events.end()));
    for (auto& w : p.diagnostics.warnings) merged.diagnostics.warn(std::move(w));
    if (p.covered_until && (!merged.covered_until || *p.covered_until > *merged.covered_until)) {
      merged.covered_until = p.covered_until;
    }
  }
  sort_events(merged.events);
  // Overlapping pages repeat events.
  merged.events.erase(std::unique(merged.events.begin(), merged.events.end()), merged.events.end());
  return merged;
}

std::vector<ChangeEvent> events_between(const ChangeHistory& h, Date from, Date to) {
  const Timestamp lo{std::chrono::sys_days{from}};
  const Timestamp hi = end_of_day(to);
  std::vector<ChangeEvent> out;
  for (const auto& e : h.events) {
    if (e.timestamp >= lo && e.timestamp < hi) out.push_back(e);
  }
  return out;
}

}  // namespace fixv2w::ingest
