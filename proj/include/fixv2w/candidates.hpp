// SPDX-License-Identifier: Apache-2.0
//
// Allowed-CWE candidate sets for invalid CVE to CWE mappings.
#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fixv2w/embed.hpp"
#include "fixv2w/kg.hpp"
#include "fixv2w/remap_case.hpp"

namespace fixv2w::candidates {

using TailoredTable = std::map<kg::EntityId, CandidateStrategy>;

// The 2021 CWE Top 25, in rank order.
std::vector<kg::EntityId> default_top25();
// CSV with a "cwe" column (optionally "rank"); rows kept in rank order.
std::vector<kg::EntityId> parse_top25(std::string_view csv);

struct CandidateOptions {
  // Family and MembersFnn expand while fewer than this many candidates.
  std::size_t threshold = 10;
  std::vector<kg::EntityId> top25 = default_top25();
  // Per-old-CWE choices for PerCweTailored; missing entries use the default.
  const TailoredTable* tailored = nullptr;
};

// Every in-view Allowed weakness, sorted by id.
std::vector<kg::EntityId> cwe1003_pool(const kg::KnowledgeGraph& kg);

// True iff `c` may stand in a candidate set.
bool admissible(const kg::KnowledgeGraph& kg, const kg::EntityId& c);

// Throws StrategyMismatchError when `s` does not apply to `old_cwe`.
void check_strategy(const kg::KnowledgeGraph& kg, const kg::EntityId& old_cwe, CandidateStrategy s);

// Strategy PerCweTailored falls back to when the table has no entry.
CandidateStrategy default_tailored_strategy(const kg::KnowledgeGraph& kg, const kg::EntityId& old_cwe);

// Base candidates sorted by id, followed by any fill in fill order. `model`
// is required for MembersFnn only.
CandidateSet build_candidates(const kg::KnowledgeGraph& kg, const embed::EmbeddingModel* model,
                              const RemapCase& c, CandidateStrategy strategy,
                              const CandidateOptions& options = {});

// Per old CWE, the strategy whose set first contains a historical truth
// label most often, trying Descendants, Members, Top25, Cwe1003 in that
// order. Cases without truth or whose truth is in no set are ignored.
TailoredTable tailored_strategy_table(const kg::KnowledgeGraph& kg, std::span<const RemapCase> history,
                                      const CandidateOptions& options = {});

// {cve, old_cwe, strategy, candidates[], fill_source} per line.
std::string candidates_jsonl(std::span<const CandidateSet> sets);

}  // namespace fixv2w::candidates
