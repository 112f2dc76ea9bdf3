// SPDX-License-Identifier: Apache-2.0
//
// Match classification, rank metrics, coverage tables, graph-completion
// evaluation and the exploited-CVE study.
#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fixv2w/date.hpp"
#include "fixv2w/embed.hpp"
#include "fixv2w/ingest.hpp"
#include "fixv2w/kg.hpp"
#include "fixv2w/remap_case.hpp"

namespace fixv2w::eval {

// ---------------------------------------------------------------------------
// Matches

enum class MatchKind { Exact, Fine, Coarse, None };
std::string_view to_string(MatchKind k);

struct MatchOutcome {
  MatchKind kind = MatchKind::None;
  std::optional<std::size_t> rank;  // of `kind`, 1-based
  // First rank within the cutoff at which each kind of match occurs.
  std::optional<std::size_t> exact_rank;
  std::optional<std::size_t> fine_rank;
  std::optional<std::size_t> coarse_rank;
};

// Exact: a truth label. Fine: a direct ChildOf/ParentOf neighbour of a
// truth. Coarse: shares a branch root with a truth. The kind reported is the
// best one found within `cutoff`, whatever the rank of weaker kinds.
MatchOutcome classify_ranking(const kg::KnowledgeGraph& kg, std::span<const kg::EntityId> ranking,
                              std::span<const kg::EntityId> truth, std::size_t cutoff = 10);

// Throws UnlabeledCaseError without truth or predictions.
MatchOutcome classify_match(const RemapCase& c, const kg::KnowledgeGraph& kg, std::size_t cutoff = 10);

// 1-based rank of the best-placed truth label over the whole ranking.
std::optional<std::size_t> truth_rank(const RemapCase& c);

// ---------------------------------------------------------------------------
// Rank metrics

inline constexpr std::array<std::size_t, 5> kHitsAt{1, 3, 5, 10, 20};

enum class UnfoundPolicy {
  Penalty,  // rank = candidates + 1, reciprocal 0
  Exclude,
};

struct RankEntry {
  std::optional<std::size_t> rank;
  std::size_t candidates = 0;
};

struct RankReport {
  std::size_t count = 0;
  std::size_t unfound = 0;
  double mr = 0;
  double mrr = 0;
  std::map<std::size_t, double> hits;
};

// Throws EmptyInputError on an empty list.
RankReport rank_metrics(std::span<const std::size_t> ranks);
RankReport rank_metrics(std::span<const RankEntry> entries, UnfoundPolicy policy = UnfoundPolicy::Penalty);

std::string rank_report_json(const RankReport& r, std::string_view header = {});

// ---------------------------------------------------------------------------
// Coverage

inline constexpr std::size_t kBucketCount = 4;  // 1, 2-5, 6-10, 10+
std::string_view bucket_name(std::size_t b);

struct CoverageReport {
  std::string strategy;
  std::size_t cases = 0;
  // [Exact, Fine, Coarse][bucket]; the 10+ bucket holds matches past the
  // cutoff and stays empty for the default cutoff.
  std::array<std::array<std::size_t, kBucketCount>, 3> counts{};
  std::array<std::array<std::size_t, 10>, 3> per_rank{};
  std::size_t unmatched = 0;
  std::size_t unranked = 0;

  double fraction(MatchKind k, std::size_t bucket) const;
};

CoverageReport coverage_report(std::span<const RemapCase> cases, const kg::KnowledgeGraph& kg,
                               std::string strategy, std::size_t cutoff = 10);
// Header plus one row per report and kind.
std::string coverage_csv(std::span<const CoverageReport> reports);
// strategy,kind,rank,count for ranks 1..10.
std::string rank_histogram_csv(std::span<const CoverageReport> reports);

// ---------------------------------------------------------------------------
// Graph completion

enum class WorldMode { Open, Closed };

struct CompletionResult {
  RankReport report;
  std::vector<RankEntry> ranks;  // per eval triple, in input order
  std::vector<std::string> diagnostics;
};

// Filtered tail ranking of each (h, MatchingCWE, t) over `pool`: competing
// tails known true in `train` or among `eval` are skipped, score ties rank
// by id. Open mode throws LeakageError when an eval triple is in `train`.
CompletionResult graph_completion_eval(const kg::KnowledgeGraph& train, std::span<const kg::Triple> eval,
                                       WorldMode mode, const embed::EmbeddingModel& model,
                                       std::span<const kg::EntityId> pool);

struct ClosedSplit {
  kg::KnowledgeGraph train;  // frozen
  std::vector<kg::Triple> held_out;
};

// Holds out about `fraction` of the MatchingCWE edges, keeping every head
// with at least one other edge in training.
ClosedSplit closed_world_split(const kg::KnowledgeGraph& kg, double fraction, std::uint64_t seed);

// MatchingCWE edges of `after` into Allowed weaknesses that `before` lacks,
// for CVEs `before` already knows.
std::vector<kg::Triple> open_world_triples(const kg::KnowledgeGraph& before, const kg::KnowledgeGraph& after);

// ---------------------------------------------------------------------------
// Exploits

struct ExploitRow {
  kg::EntityId cve;
  kg::EntityId old_cwe;
  kg::MappingStatus old_status;
  Date exploit_date;
  std::optional<Date> remap_date;
  bool remapped_after_exploit = false;
  MatchOutcome match;
  bool correctly_predicted = false;
};

struct ExploitTally {
  std::size_t exploited = 0;
  std::size_t remapped = 0;
  std::size_t remapped_after_exploit = 0;
  std::size_t correctly_predicted = 0;
  std::array<std::size_t, 3> by_kind{};  // correct predictions per match kind
};

struct ExploitReport {
  std::vector<ExploitRow> rows;
  ExploitTally discouraged;
  ExploitTally prohibited;
};

// Ranked, labelled cases whose CVE was first exploited in [from, to]. The
// remap date is the first history event on or after `from` that removes
// the old CWE. A correct prediction is any match within `cutoff` for a CVE
// remapped after its exploit.
ExploitReport exploit_analysis(std::span<const RemapCase> cases, std::span<const ingest::ExploitEvent> exploits,
                               const ingest::ChangeHistory& history, const kg::KnowledgeGraph& kg, Date from,
                               Date to, std::size_t cutoff = 10);

std::string exploit_report_json(const ExploitReport& r);

}  // namespace fixv2w::eval
