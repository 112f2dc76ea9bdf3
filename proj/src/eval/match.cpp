// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cstdio>

#include <json.hpp>

#include "fixv2w/error.hpp"
#include "fixv2w/eval.hpp"

namespace fixv2w::eval {
namespace {

using kg::EntityId;

bool has_node(const kg::KnowledgeGraph& kg, const EntityId& id) { return kg.cwe_node(id) != nullptr; }

bool fine(const kg::KnowledgeGraph& kg, const EntityId& w, std::span<const EntityId> truth) {
  if (!has_node(kg, w)) return false;
  return std::any_of(truth.begin(), truth.end(),
                     [&](const EntityId& t) { return has_node(kg, t) && kg::direct_neighbors(kg, w, t); });
}

bool coarse(const kg::KnowledgeGraph& kg, const EntityId& w, std::span<const EntityId> truth) {
  if (!has_node(kg, w)) return false;
  return std::any_of(truth.begin(), truth.end(),
                     [&](const EntityId& t) { return has_node(kg, t) && kg::same_branch(kg, w, t); });
}

std::size_t bucket_of(std::size_t rank) {
  if (rank == 1) return 0;
  if (rank <= 5) return 1;
  if (rank <= 10) return 2;
  return 3;
}

}  // namespace

std::string_view to_string(MatchKind k) {
  switch (k) {
    case MatchKind::Exact: return "exact";
    case MatchKind::Fine: return "fine";
    case MatchKind::Coarse: return "coarse";
    case MatchKind::None: return "none";
  }
  return "?";
}

MatchOutcome classify_ranking(const kg::KnowledgeGraph& kg, std::span<const EntityId> ranking,
                              std::span<const EntityId> truth, std::size_t cutoff) {
  MatchOutcome out;
  const auto n = std::min(cutoff, ranking.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& w = ranking[i];
    if (!out.exact_rank && std::find(truth.begin(), truth.end(), w) != truth.end()) out.exact_rank = i + 1;
    if (!out.fine_rank && fine(kg, w, truth)) out.fine_rank = i + 1;
    if (!out.coarse_rank && coarse(kg, w, truth)) out.coarse_rank = i + 1;
  }
  if (out.exact_rank) {
    out.kind = MatchKind::Exact;
    out.rank = out.exact_rank;
  } else if (out.fine_rank) {
    out.kind = MatchKind::Fine;
    out.rank = out.fine_rank;
  } else if (out.coarse_rank) {
    out.kind = MatchKind::Coarse;
    out.rank = out.coarse_rank;
  }
  return out;
}

MatchOutcome classify_match(const RemapCase& c, const kg::KnowledgeGraph& kg, std::size_t cutoff) {
  if (!c.truth || c.truth->empty()) throw UnlabeledCaseError(c.cve.key() + " / " + c.old_cwe.key() + " has no truth label");
  if (!c.predictions) throw UnlabeledCaseError(c.cve.key() + " / " + c.old_cwe.key() + " is not ranked");
  std::vector<EntityId> ranking;
  ranking.reserve(c.predictions->size());
  for (const auto& p : *c.predictions) ranking.push_back(p.cwe);
  return classify_ranking(kg, ranking, *c.truth, cutoff);
}

std::optional<std::size_t> truth_rank(const RemapCase& c) {
  if (!c.truth || !c.predictions) return std::nullopt;
  for (std::size_t i = 0; i < c.predictions->size(); ++i) {
    const auto& w = (*c.predictions)[i].cwe;
    if (std::find(c.truth->begin(), c.truth->end(), w) != c.truth->end()) return i + 1;
  }
  return std::nullopt;
}

std::string_view bucket_name(std::size_t b) {
  static constexpr std::array<std::string_view, kBucketCount> names{"1", "2-5", "6-10", "10+"};
  return names.at(b);
}

double CoverageReport::fraction(MatchKind k, std::size_t bucket) const {
  if (cases == 0 || k == MatchKind::None) return 0.0;
  return static_cast<double>(counts.at(static_cast<std::size_t>(k)).at(bucket)) / static_cast<double>(cases);
}

CoverageReport coverage_report(std::span<const RemapCase> cases, const kg::KnowledgeGraph& kg, std::string strategy,
                               std::size_t cutoff) {
  CoverageReport r;
  r.strategy = std::move(strategy);
  for (const auto& c : cases) {
    if (!c.truth || c.truth->empty()) continue;
    ++r.cases;
    if (!c.predictions) {
      ++r.unranked;
      ++r.unmatched;
      continue;
    }
    const auto m = classify_match(c, kg, cutoff);
    if (m.kind == MatchKind::None) {
      ++r.unmatched;
      continue;
    }
    const auto k = static_cast<std::size_t>(m.kind);
    ++r.counts[k][bucket_of(*m.rank)];
    if (*m.rank <= 10) ++r.per_rank[k][*m.rank - 1];
  }
  return r;
}

std::string coverage_csv(std::span<const CoverageReport> reports) {
  std::string out = "strategy,cases,kind";
  for (std::size_t b = 0; b < kBucketCount; ++b) out += ",rank_" + std::string(bucket_name(b));
  out += ",unmatched,unranked\n";
  char buf[32];
  for (const auto& r : reports) {
    for (auto k : {MatchKind::Exact, MatchKind::Fine, MatchKind::Coarse}) {
      out += r.strategy + ',' + std::to_string(r.cases) + ',' + std::string(to_string(k));
      for (std::size_t b = 0; b < kBucketCount; ++b) {
        std::snprintf(buf, sizeof buf, ",%.6f", r.fraction(k, b));
        out += buf;
      }
      out += ',' + std::to_string(r.unmatched) + ',' + std::to_string(r.unranked) + '\n';
    }
  }
  return out;
}

std::string rank_histogram_csv(std::span<const CoverageReport> reports) {
  std::string out = "strategy,kind,rank,count\n";
  for (const auto& r : reports) {
    for (auto k : {MatchKind::Exact, MatchKind::Fine, MatchKind::Coarse}) {
      for (std::size_t i = 0; i < 10; ++i) {
        out += r.strategy + ',' + std::string(to_string(k)) + ',' + std::to_string(i + 1) + ',' +
               std::to_string(r.per_rank[static_cast<std::size_t>(k)][i]) + '\n';
      }
    }
  }
  return out;
}

}  // namespace fixv2w::eval
