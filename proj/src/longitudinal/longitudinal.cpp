// SPDX-License-Identifier: Apache-2.0
#include "fixv2w/longitudinal.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include <json.hpp>

#include "fixv2w/csv.hpp"
#include "fixv2w/error.hpp"

namespace fixv2w::longitudinal {
namespace {

using kg::CweKind;
using kg::EntityId;

bool is_weakness(const kg::CweNode* n) { return n && n->kind == CweKind::Weakness; }
bool is_grouping(const kg::CweNode* n) {
  return n && (n->kind == CweKind::Category || n->kind == CweKind::View);
}

std::string fmt(double x) {
  std::ostringstream s;
  s.precision(6);
  s << x;
  return s.str();
}

std::string tri(const std::optional<bool>& b) { return b ? (*b ? "yes" : "no") : "-"; }

std::vector<CweCount> rank_counts(const std::map<EntityId, std::size_t>& counts, std::size_t n) {
  std::vector<CweCount> out;
  for (const auto& [id, c] : counts) out.push_back({id, c});
  std::stable_sort(out.begin(), out.end(), [](const CweCount& a, const CweCount& b) { return a.count > b.count; });
  if (out.size() > n) out.erase(out.begin() + static_cast<std::ptrdiff_t>(n), out.end());
  return out;
}

nlohmann::json distance_json(const DistanceDistribution& d) {
  nlohmann::json buckets = nlohmann::json::object();
  for (std::size_t b = 0; b < kBucketCount; ++b) {
    const auto bucket = static_cast<HopBucket>(b);
    buckets[std::string(to_string(bucket))] = {{"count", d.counts[b]}, {"fraction", d.fraction(bucket)}};
  }
  return {{"buckets", buckets},
          {"counted", d.counted},
          {"beyond_four", d.beyond_four},
          {"self_remaps", d.self_remaps},
          {"placeholder_pairs", d.placeholder_pairs},
          {"invalid_pairs", d.invalid_pairs},
          {"unknown_pairs", d.unknown_pairs},
          {"diagnostics", d.diagnostics()}};
}

nlohmann::json optional_json(const std::optional<bool>& b) {
  return b ? nlohmann::json(*b) : nlohmann::json(nullptr);
}

}  // namespace

std::vector<Remap> remaps(std::span<const ingest::ChangeEvent> events) {
  std::vector<Remap> out;
  for (const auto& e : events)
    for (const auto& r : e.removed_cwes)
      for (const auto& a : e.added_cwes) out.push_back({e.cve, r, a});
  return out;
}

std::string_view to_string(HopBucket b) {
  switch (b) {
    case HopBucket::One: return "1";
    case HopBucket::Two: return "2";
    case HopBucket::Three: return "3";
    case HopBucket::FourPlus: return "4+";
    case HopBucket::NoPath: return "no-path";
  }
  return "?";
}

double DistanceDistribution::fraction(HopBucket b) const {
  return counted == 0 ? 0.0 : static_cast<double>(counts[static_cast<std::size_t>(b)]) / static_cast<double>(counted);
}

std::vector<std::string> DistanceDistribution::diagnostics() const {
  std::vector<std::string> out;
  if (beyond_four) out.push_back(std::to_string(beyond_four) + " remaps span 5 or more hops (counted as 4+)");
  if (self_remaps) out.push_back(std::to_string(self_remaps) + " self-remaps excluded");
  if (placeholder_pairs) out.push_back(std::to_string(placeholder_pairs) + " placeholder remaps excluded");
  if (invalid_pairs) out.push_back(std::to_string(invalid_pairs) + " remaps involving non-valid CWEs excluded");
  if (unknown_pairs) out.push_back(std::to_string(unknown_pairs) + " remaps name CWEs absent from the catalog");
  return out;
}

DistanceDistribution remap_distance_distribution(std::span<const ingest::ChangeEvent> events,
                                                 const kg::KnowledgeGraph& graph, DistanceOptions options) {
  DistanceDistribution d;
  for (const auto& r : remaps(events)) {
    if (r.old_cwe == r.new_cwe) {
      ++d.self_remaps;
      continue;
    }
    const bool placeholder = r.old_cwe.is_placeholder() || r.new_cwe.is_placeholder();
    if (placeholder && options.exclude_placeholders) {
      ++d.placeholder_pairs;
      continue;
    }
    const auto* a = graph.cwe_node(r.old_cwe);
    const auto* b = graph.cwe_node(r.new_cwe);
    if (!placeholder && (!a || !b)) {
      ++d.unknown_pairs;
      continue;
    }
    if (options.valid_only && (!is_weakness(a) || !is_weakness(b) || a->status == kg::MappingStatus::Prohibited ||
                               b->status == kg::MappingStatus::Prohibited)) {
      ++d.invalid_pairs;
      continue;
    }
    std::optional<std::size_t> hops;
    if (a && b) hops = kg::hop_distance(graph, r.old_cwe, r.new_cwe);
    HopBucket bucket = HopBucket::NoPath;
    if (hops) {
      if (*hops >= 5) ++d.beyond_four;
      bucket = static_cast<HopBucket>(std::min<std::size_t>(*hops, 4) - 1);
    }
    ++d.counts[static_cast<std::size_t>(bucket)];
    ++d.counted;
  }
  return d;
}

std::vector<RemapPair> remap_pair_frequencies(std::span<const ingest::ChangeEvent> events,
                                              const kg::KnowledgeGraph* graph) {
  std::map<std::pair<EntityId, EntityId>, std::size_t> counts;
  std::size_t total = 0;
  for (const auto& r : remaps(events)) {
    if (r.old_cwe == r.new_cwe) continue;
    const auto old = r.new_cwe == EntityId::cwe_noinfo() ? EntityId::any_cwe() : r.old_cwe;
    ++counts[{old, r.new_cwe}];
    ++total;
  }
  std::vector<RemapPair> out;
  out.reserve(counts.size());
  for (const auto& [key, c] : counts) {
    RemapPair p{key.first, key.second, c, static_cast<double>(c) / static_cast<double>(total)};
    if (graph) {
      const auto* a = graph->cwe_node(p.old_cwe);
      const auto* b = graph->cwe_node(p.new_cwe);
      if (is_weakness(a) && is_weakness(b)) p.same_branch = kg::same_branch(*graph, p.old_cwe, p.new_cwe);
      if (is_grouping(a)) {
        const auto members = kg::members_of(*graph, p.old_cwe);
        p.is_member = std::find(members.begin(), members.end(), p.new_cwe) != members.end();
      }
    }
    out.push_back(std::move(p));
  }
  std::stable_sort(out.begin(), out.end(), [](const RemapPair& a, const RemapPair& b) { return a.count > b.count; });
  return out;
}

std::vector<YearCounts> cumulative_invalid_counts(std::span<const ingest::Snapshot> snapshots) {
  std::vector<YearCounts> out;
  for (const auto& s : snapshots) {
    const auto& g = s.graph;
    YearCounts y{static_cast<int>(s.as_of.year())};
    for (kg::EntityIndex i = 0; i < g.entity_count(); ++i) {
      if (g.entity(i).ns() != kg::Namespace::Cve) continue;
      ++y.cves;
      const auto tails = g.tails(i, kg::RelationKind::MatchingCWE);
      if (tails.empty()) ++y.unmapped_cves;
      for (auto t : tails) {
        const auto& id = g.entity(t);
        if (id == EntityId::cwe_other()) {
          ++y.other;
        } else if (id == EntityId::cwe_noinfo()) {
          ++y.noinfo;
        } else if (const auto* n = g.cwe_node(t)) {
          if (n->status == kg::MappingStatus::Discouraged) ++y.discouraged;
          if (n->status == kg::MappingStatus::Prohibited) ++y.prohibited;
        }
      }
    }
    out.push_back(y);
  }
  return out;
}

std::vector<ingest::Snapshot> yearly_snapshots(std::span<const ingest::CveRecord> feed,
                                               const ingest::ChangeHistory& history,
                                               const ingest::CweCatalog& catalog, int first_year, int last_year,
                                               ingest::FeedState state) {
  if (last_year < first_year) throw DateRangeError("year range is empty");
  std::vector<ingest::Snapshot> out;
  for (int y = first_year; y <= last_year; ++y) {
    Date d{std::chrono::year{y}, std::chrono::December, std::chrono::day{31}};
    if (history.covered_until) {
      const auto limit = date_of(*history.covered_until);
      if (limit.year() == d.year() && limit < d) d = limit;
    }
    out.push_back(ingest::build_snapshot(feed, history, catalog, d, state));
  }
  return out;
}

TopCwes top_added_removed(std::span<const ingest::ChangeEvent> events, std::size_t n) {
  std::map<EntityId, std::size_t> added, removed;
  for (const auto& e : events) {
    for (const auto& a : e.added_cwes) ++added[a];
    for (const auto& r : e.removed_cwes) ++removed[r];
  }
  return {rank_counts(added, n), rank_counts(removed, n)};
}

std::string distance_csv(const DistanceDistribution& d) {
  std::string out = "bucket,count,fraction\n";
  for (std::size_t b = 0; b < kBucketCount; ++b) {
    const auto bucket = static_cast<HopBucket>(b);
    out += std::string(to_string(bucket)) + "," + std::to_string(d.counts[b]) + "," + fmt(d.fraction(bucket)) + "\n";
  }
  return out;
}

std::string pairs_csv(std::span<const RemapPair> pairs) {
  std::string out = "old_cwe,new_cwe,count,fraction,same_branch,is_member\n";
  for (const auto& p : pairs) {
    out += csv::escape(p.old_cwe.key()) + "," + csv::escape(p.new_cwe.key()) + "," + std::to_string(p.count) + "," +
           fmt(p.fraction) + "," + tri(p.same_branch) + "," + tri(p.is_member) + "\n";
  }
  return out;
}

std::string counts_csv(std::span<const YearCounts> counts) {
  std::string out = "year,discouraged,prohibited,other,noinfo,cves,unmapped_cves\n";
  for (const auto& y : counts) {
    out += std::to_string(y.year) + "," + std::to_string(y.discouraged) + "," + std::to_string(y.prohibited) + "," +
           std::to_string(y.other) + "," + std::to_string(y.noinfo) + "," + std::to_string(y.cves) + "," +
           std::to_string(y.unmapped_cves) + "\n";
  }
  return out;
}

std::string top_csv(const TopCwes& top) {
  std::string out = "list,rank,cwe,count\n";
  auto emit = [&](const char* list, const std::vector<CweCount>& xs) {
    for (std::size_t i = 0; i < xs.size(); ++i) {
      out += std::string(list) + "," + std::to_string(i + 1) + "," + xs[i].cwe.key() + "," +
             std::to_string(xs[i].count) + "\n";
    }
  };
  emit("added", top.added);
  emit("removed", top.removed);
  return out;
}

std::string report_json(const Report& r) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : r.pairs) {
    pairs.push_back({{"old_cwe", p.old_cwe.key()},
                     {"new_cwe", p.new_cwe.key()},
                     {"count", p.count},
                     {"fraction", p.fraction},
                     {"same_branch", optional_json(p.same_branch)},
                     {"is_member", optional_json(p.is_member)}});
  }
  nlohmann::json counts = nlohmann::json::array();
  for (const auto& y : r.counts) {
    counts.push_back({{"year", y.year},
                      {"discouraged", y.discouraged},
                      {"prohibited", y.prohibited},
                      {"other", y.other},
                      {"noinfo", y.noinfo},
                      {"cves", y.cves},
                      {"unmapped_cves", y.unmapped_cves}});
  }
  auto top = [](const std::vector<CweCount>& xs) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& c : xs) a.push_back({{"cwe", c.cwe.key()}, {"count", c.count}});
    return a;
  };
  nlohmann::json doc = {{"events", r.events},
                        {"distance", distance_json(r.distance)},
                        {"distance_with_placeholders", distance_json(r.distance_with_placeholders)},
                        {"pairs", pairs},
                        {"cumulative_counts", counts},
                        {"top_added", top(r.top.added)},
                        {"top_removed", top(r.top.removed)}};
  return doc.dump(2);
}

}  // namespace fixv2w::longitudinal
