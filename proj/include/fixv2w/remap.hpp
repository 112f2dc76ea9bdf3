// SPDX-License-Identifier: Apache-2.0
//
// Ranking candidate CWEs for invalid mappings and writing the fixes back.
#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fixv2w/candidates.hpp"
#include "fixv2w/embed.hpp"
#include "fixv2w/kg.hpp"
#include "fixv2w/remap_case.hpp"

namespace fixv2w::remap {

// One case per MatchingCWE edge into a Discouraged or Prohibited CWE
// (restricted to `status` when given), sorted by (CVE, old CWE).
std::vector<RemapCase> determine_invalid(const kg::KnowledgeGraph& kg,
                                         std::optional<kg::MappingStatus> status = std::nullopt);

// Candidates scored as (cve, MatchingCWE, w), descending, ties by id.
std::vector<Prediction> rank_candidates(const embed::EmbeddingModel& model, const kg::EntityId& cve,
                                        std::span<const kg::EntityId> cwes);

struct FixOptions {
  candidates::CandidateOptions candidates;
  std::size_t threads = 1;
};

// Attaches candidates and a full ranking to each case. Cases the model
// cannot score keep their candidates, get no predictions and a diagnostic;
// candidates missing from the model are dropped with a diagnostic.
std::vector<RemapCase> fix_v2w(const kg::KnowledgeGraph& kg, const embed::EmbeddingModel& model,
                               std::vector<RemapCase> cases, CandidateStrategy strategy,
                               const FixOptions& options = {});

struct FixResult {
  kg::KnowledgeGraph graph;  // frozen
  std::vector<kg::EntityId> fixed_cves;
  std::size_t removed = 0;
  std::size_t added = 0;
  std::vector<std::string> diagnostics;
};

// Replaces each ranked case's invalid MatchingCWE edge with edges to its
// top_n predictions; everything else is copied. Unranked cases are skipped.
FixResult apply_fixes(const kg::KnowledgeGraph& kg, std::span<const RemapCase> cases, std::size_t top_n);

// {cve, old_cwe, strategy, ranked:[{cwe, score, rank}], truth?} per line.
std::string predictions_jsonl(std::span<const RemapCase> cases);
// cve,old_cwe,old_status,strategy,candidates,top1,top1_score,truth
std::string predictions_csv(std::span<const RemapCase> cases);

}  // namespace fixv2w::remap
