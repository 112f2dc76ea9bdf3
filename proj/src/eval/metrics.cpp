// SPDX-License-Identifier: Apache-2.0
#include <json.hpp>

#include "fixv2w/error.hpp"
#include "fixv2w/eval.hpp"

namespace fixv2w::eval {

RankReport rank_metrics(std::span<const std::size_t> ranks) {
  std::vector<RankEntry> entries;
  entries.reserve(ranks.size());
  for (auto r : ranks) entries.push_back({r, 0});
  return rank_metrics(entries, UnfoundPolicy::Penalty);
}

RankReport rank_metrics(std::span<const RankEntry> entries, UnfoundPolicy policy) {
  if (entries.empty()) throw EmptyInputError("rank metrics need at least one rank");
  RankReport r;
  double rank_sum = 0, reciprocal_sum = 0;
  std::map<std::size_t, std::size_t> hit_counts;
  for (const auto& e : entries) {
    if (e.rank && *e.rank == 0) throw ValidationError("ranks are 1-based");
    if (!e.rank) {
      ++r.unfound;
      if (policy == UnfoundPolicy::Exclude) continue;
      ++r.count;
      rank_sum += static_cast<double>(e.candidates + 1);
      continue;
    }
    ++r.count;
    rank_sum += static_cast<double>(*e.rank);
    reciprocal_sum += 1.0 / static_cast<double>(*e.rank);
    for (auto n : kHitsAt) {
      if (*e.rank <= n) ++hit_counts[n];
    }
  }
  if (r.count == 0) throw EmptyInputError("every rank was excluded as unfound");
  const auto n = static_cast<double>(r.count);
  r.mr = rank_sum / n;
  r.mrr = reciprocal_sum / n;
  for (auto k : kHitsAt) r.hits[k] = static_cast<double>(hit_counts[k]) / n;
  return r;
}

std::string rank_report_json(const RankReport& r, std::string_view header) {
  nlohmann::ordered_json j;
  if (!header.empty()) j["ranking"] = header;
  j["count"] = r.count;
  j["unfound"] = r.unfound;
  j["mr"] = r.mr;
  j["mrr"] = r.mrr;
  auto& hits = j["hits"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.hits) hits[std::to_string(k)] = v;
  return j.dump(2) + "\n";
}

}  // namespace fixv2w::eval
