// SPDX-License-Identifier: Apache-2.0
//
// Historical statistics over NVD change events: remap distances, remap pair
// frequencies, yearly invalid-mapping counts and most added/removed CWEs.
#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fixv2w/ingest.hpp"
#include "fixv2w/kg.hpp"

namespace fixv2w::longitudinal {

// (removed, added) pairs of one event: the cross product.
struct Remap {
  kg::EntityId cve;
  kg::EntityId old_cwe;
  kg::EntityId new_cwe;
};

std::vector<Remap> remaps(std::span<const ingest::ChangeEvent> events);

enum class HopBucket : std::size_t { One, Two, Three, FourPlus, NoPath };
inline constexpr std::size_t kBucketCount = 5;
std::string_view to_string(HopBucket b);

struct DistanceOptions {
  // Drop pairs where either side is NVD-CWE-Other/noinfo.
  bool exclude_placeholders = true;
  // Keep only pairs between weaknesses that are not Prohibited.
  bool valid_only = false;
};

struct DistanceDistribution {
  std::array<std::size_t, kBucketCount> counts{};
  std::size_t counted = 0;
  // Paths of 5+ hops (included in FourPlus).
  std::size_t beyond_four = 0;
  std::size_t self_remaps = 0;
  std::size_t placeholder_pairs = 0;
  std::size_t invalid_pairs = 0;
  // Pairs naming a CWE absent from the catalog.
  std::size_t unknown_pairs = 0;

  double fraction(HopBucket b) const;
  std::vector<std::string> diagnostics() const;
};

DistanceDistribution remap_distance_distribution(std::span<const ingest::ChangeEvent> events,
                                                 const kg::KnowledgeGraph& graph,
                                                 DistanceOptions options = {});

struct RemapPair {
  kg::EntityId old_cwe;
  kg::EntityId new_cwe;
  std::size_t count = 0;
  double fraction = 0.0;
  // Set when both sides are weaknesses in the graph.
  std::optional<bool> same_branch;
  // Set only when the old CWE is a category or view.
  std::optional<bool> is_member;
};

// Ranked by count descending, ties by (old, new) ascending. Remaps into
// NVD-CWE-noinfo collapse into one "CWE-Any" row. `graph` may be null, in
// which case same_branch/is_member stay empty.
std::vector<RemapPair> remap_pair_frequencies(std::span<const ingest::ChangeEvent> events,
                                              const kg::KnowledgeGraph* graph = nullptr);

struct YearCounts {
  int year = 0;
  std::size_t discouraged = 0;
  std::size_t prohibited = 0;
  std::size_t other = 0;
  std::size_t noinfo = 0;
  std::size_t cves = 0;
  std::size_t unmapped_cves = 0;
};

// Counts CVE-CWE mappings by the CWE's status in each snapshot.
std::vector<YearCounts> cumulative_invalid_counts(std::span<const ingest::Snapshot> snapshots);

// End-of-year snapshots for [first_year, last_year]; the last one is clamped
// to the history coverage.
std::vector<ingest::Snapshot> yearly_snapshots(std::span<const ingest::CveRecord> feed,
                                               const ingest::ChangeHistory& history,
                                               const ingest::CweCatalog& catalog, int first_year,
                                               int last_year,
                                               ingest::FeedState state = ingest::FeedState::Base);

struct CweCount {
  kg::EntityId cwe;
  std::size_t count = 0;
};

struct TopCwes {
  std::vector<CweCount> added;
  std::vector<CweCount> removed;
};

// Placeholders are included; ties by ascending id.
TopCwes top_added_removed(std::span<const ingest::ChangeEvent> events, std::size_t n);

// Reports. CSV columns:
//   distance: bucket,count,fraction
//   pairs:    old_cwe,new_cwe,count,fraction,same_branch,is_member
//   counts:   year,discouraged,prohibited,other,noinfo,cves,unmapped_cves
//   top:      list,rank,cwe,count
std::string distance_csv(const DistanceDistribution& d);
std::string pairs_csv(std::span<const RemapPair> pairs);
std::string counts_csv(std::span<const YearCounts> counts);
std::string top_csv(const TopCwes& top);

struct Report {
  DistanceDistribution distance;
  DistanceDistribution distance_with_placeholders;
  std::vector<RemapPair> pairs;
  std::vector<YearCounts> counts;
  TopCwes top;
  std::size_t events = 0;
};

std::string report_json(const Report& r);

}  // namespace fixv2w::longitudinal
