// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <map>

#include <json.hpp>

#include "fixv2w/eval.hpp"

namespace fixv2w::eval {

ExploitReport exploit_analysis(std::span<const RemapCase> cases, std::span<const ingest::ExploitEvent> exploits,
                               const ingest::ChangeHistory& history, const kg::KnowledgeGraph& kg, Date from,
                               Date to, std::size_t cutoff) {
  std::map<kg::EntityId, Date> first;
  for (const auto& e : exploits) {
    auto [it, fresh] = first.emplace(e.cve, e.exploit_date);
    if (!fresh && e.exploit_date < it->second) it->second = e.exploit_date;
  }
  const auto window_start = Timestamp{std::chrono::sys_days{from}};
  ExploitReport out;
  for (const auto& c : cases) {
    if (!c.truth || c.truth->empty() || !c.predictions) continue;
    const auto it = first.find(c.cve);
    if (it == first.end() || it->second < from || it->second > to) continue;
    ExploitRow row{c.cve, c.old_cwe, c.old_status, it->second};
    for (const auto& e : history.events) {
      if (e.cve != c.cve || e.timestamp < window_start) continue;
      if (std::find(e.removed_cwes.begin(), e.removed_cwes.end(), c.old_cwe) == e.removed_cwes.end()) continue;
      row.remap_date = date_of(e.timestamp);
      break;
    }
    row.remapped_after_exploit = row.remap_date && *row.remap_date > row.exploit_date;
    row.match = classify_match(c, kg, cutoff);
    row.correctly_predicted = row.remapped_after_exploit && row.match.kind != MatchKind::None;

    auto& tally = c.old_status == kg::MappingStatus::Prohibited ? out.prohibited : out.discouraged;
    ++tally.exploited;
    tally.remapped += row.remap_date ? 1 : 0;
    tally.remapped_after_exploit += row.remapped_after_exploit ? 1 : 0;
    if (row.correctly_predicted) {
      ++tally.correctly_predicted;
      ++tally.by_kind[static_cast<std::size_t>(row.match.kind)];
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

std::string exploit_report_json(const ExploitReport& r) {
  auto tally = [](const ExploitTally& t) {
    nlohmann::ordered_json j;
    j["exploited"] = t.exploited;
    j["remapped"] = t.remapped;
    j["remapped_after_exploit"] = t.remapped_after_exploit;
    j["correctly_predicted"] = t.correctly_predicted;
    j["correct_by_kind"] = {{"exact", t.by_kind[0]}, {"fine", t.by_kind[1]}, {"coarse", t.by_kind[2]}};
    return j;
  };
  nlohmann::ordered_json j;
  j["discouraged"] = tally(r.discouraged);
  j["prohibited"] = tally(r.prohibited);
  auto& rows = j["cases"] = nlohmann::ordered_json::array();
  for (const auto& row : r.rows) {
    nlohmann::ordered_json x;
    x["cve"] = row.cve.key();
    x["old_cwe"] = row.old_cwe.key();
    x["old_status"] = kg::to_string(row.old_status);
    x["exploit_date"] = format_date(row.exploit_date);
    x["remap_date"] = row.remap_date ? nlohmann::ordered_json(format_date(*row.remap_date)) : nlohmann::ordered_json();
    x["remapped_after_exploit"] = row.remapped_after_exploit;
    x["match"] = to_string(row.match.kind);
    x["rank"] = row.match.rank ? nlohmann::ordered_json(*row.match.rank) : nlohmann::ordered_json();
    x["correctly_predicted"] = row.correctly_predicted;
    rows.push_back(std::move(x));
  }
  return j.dump(2) + "\n";
}

}  // namespace fixv2w::eval
