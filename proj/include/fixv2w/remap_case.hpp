// SPDX-License-Identifier: Apache-2.0
//
// Plain data shared by test-set construction, candidate selection, ranking
// and evaluation.
#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fixv2w/kg.hpp"

namespace fixv2w {

enum class CandidateStrategy {
  Cwe1003,
  Top25,
  Descendants,
  Family,
  Members,
  MembersFnn,
  PerCweTailored,
};

std::string_view to_string(CandidateStrategy s);
// Accepts the display names ("Cwe1003", "MembersFnn", ...) and the CLI
// spellings ("cwe1003", "top25", "members-fnn", "tailored", ...).
CandidateStrategy parse_strategy(std::string_view s);

enum class FillSource { ParentExpansion, FnnFill };
std::string_view to_string(FillSource f);

struct CandidateSet {
  kg::EntityId cve;
  kg::EntityId old_cwe;
  CandidateStrategy strategy = CandidateStrategy::Cwe1003;
  // Strategy actually applied; differs from `strategy` only for
  // PerCweTailored.
  CandidateStrategy resolved = CandidateStrategy::Cwe1003;
  std::vector<kg::EntityId> cwes;
  std::optional<FillSource> fill_source;
  // Set when the strategy produced no candidates.
  bool empty_result = false;
  std::vector<std::string> diagnostics;
};

struct Prediction {
  kg::EntityId cwe;
  double score = 0.0;
};

struct RemapCase {
  kg::EntityId cve;
  kg::EntityId old_cwe;
  kg::MappingStatus old_status = kg::MappingStatus::Prohibited;
  // Ground-truth replacement CWEs, when known.
  std::optional<std::vector<kg::EntityId>> truth;
  std::optional<CandidateSet> candidates;
  // Descending by score, ties by ascending CWE id.
  std::optional<std::vector<Prediction>> predictions;
  std::vector<std::string> diagnostics;
};

}  // namespace fixv2w
