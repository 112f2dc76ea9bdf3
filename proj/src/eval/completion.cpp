// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <random>
#include <set>
#include <unordered_map>

#include "fixv2w/error.hpp"
#include "fixv2w/eval.hpp"

namespace fixv2w::eval {

using kg::EntityId;
using kg::RelationKind;

CompletionResult graph_completion_eval(const kg::KnowledgeGraph& train, std::span<const kg::Triple> eval,
                                       WorldMode mode, const embed::EmbeddingModel& model,
                                       std::span<const EntityId> pool) {
  if (eval.empty()) throw EmptyInputError("graph completion needs at least one evaluation triple");
  if (mode == WorldMode::Open) {
    for (const auto& t : eval) {
      if (train.contains(t)) {
        throw LeakageError("evaluation triple (" + t.head.key() + ", " + std::string(kg::to_string(t.relation)) +
                           ", " + t.tail.key() + ") is in the training graph");
      }
    }
  }
  const std::set<kg::Triple> eval_set(eval.begin(), eval.end());
  CompletionResult out;
  out.ranks.reserve(eval.size());
  for (const auto& t : eval) {
    RankEntry entry{std::nullopt, pool.size()};
    const auto h = model.row(t.head), tail = model.row(t.tail);
    if (!h || !tail) {
      out.diagnostics.push_back("(" + t.head.key() + ", " + t.tail.key() + ") is not embedded; unfound");
      out.ranks.push_back(entry);
      continue;
    }
    const float target = model.score(*h, t.relation, *tail);
    std::size_t ahead = 0;
    for (const auto& w : pool) {
      if (w == t.tail) continue;
      const kg::Triple competitor{t.head, t.relation, w};
      if (train.contains(competitor) || eval_set.contains(competitor)) continue;
      const auto row = model.row(w);
      if (!row) continue;
      const float s = model.score(*h, t.relation, *row);
      if (s > target || (s == target && w < t.tail)) ++ahead;
    }
    entry.rank = ahead + 1;
    out.ranks.push_back(entry);
  }
  out.report = rank_metrics(out.ranks);
  return out;
}

ClosedSplit closed_world_split(const kg::KnowledgeGraph& kg, double fraction, std::uint64_t seed) {
  if (!(fraction > 0 && fraction < 1)) throw ConfigError("held-out fraction must lie in (0, 1)");
  std::vector<kg::Triple> edges;
  std::unordered_map<EntityId, std::size_t, kg::EntityIdHash> degree;
  for (const auto& ref : kg.triple_refs()) {
    const auto t = kg.resolve(ref);
    ++degree[t.head];
    if (t.relation == RelationKind::MatchingCWE) edges.push_back(t);
  }
  std::sort(edges.begin(), edges.end());
  std::mt19937_64 rng(seed);
  std::shuffle(edges.begin(), edges.end(), rng);
  const auto want = static_cast<std::size_t>(fraction * static_cast<double>(edges.size()));
  ClosedSplit out{kg.thawed()};
  for (const auto& t : edges) {
    if (out.held_out.size() == want) break;
    auto& d = degree[t.head];
    if (d < 2) continue;
    --d;
    out.held_out.push_back(t);
  }
  out.train.remove_triples(out.held_out);
  out.train.freeze();
  std::sort(out.held_out.begin(), out.held_out.end());
  return out;
}

std::vector<kg::Triple> open_world_triples(const kg::KnowledgeGraph& before, const kg::KnowledgeGraph& after) {
  std::vector<kg::Triple> out;
  for (const auto& ref : after.triple_refs()) {
    if (ref.relation != RelationKind::MatchingCWE) continue;
    const auto t = after.resolve(ref);
    const auto* node = after.cwe_node(t.tail);
    if (!node || node->kind != kg::CweKind::Weakness || node->status != kg::MappingStatus::Allowed) continue;
    if (before.find(t.head) && !before.contains(t)) out.push_back(t);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace fixv2w::eval
