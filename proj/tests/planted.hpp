// SPDX-License-Identifier: Apache-2.0
//
// Ranking check for the planted-cluster graph.
#pragma once

#include <random>
#include <vector>

#include "fixtures.hpp"
#include "fixv2w/embed.hpp"

namespace fixv2w::testing {

// Fraction of positives that outrank every one of `corruptions` random tail
// corruptions drawn from the tail's namespace (known triples excluded).
inline double planted_outrank_fraction(const embed::EmbeddingModel& model, const PlantedGraph& p,
                                       std::size_t corruptions, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::size_t wins = 0;
  for (const auto& t : p.positives) {
    std::vector<EntityId> pool;
    for (const auto& id : model.entity_ids()) {
      if (id.ns() == t.tail.ns() && !p.graph.contains({t.head, t.relation, id})) pool.push_back(id);
    }
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    const float pos = model.score(t);
    bool all = true;
    for (std::size_t i = 0; i < corruptions; ++i) {
      all = all && pos > model.score({t.head, t.relation, pool[pick(rng)]});
    }
    wins += all ? 1 : 0;
  }
  return static_cast<double>(wins) / static_cast<double>(p.positives.size());
}

}  // namespace fixv2w::testing
