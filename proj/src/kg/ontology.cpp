// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <deque>
#include <unordered_set>

#include "fixv2w/error.hpp"
#include "fixv2w/kg.hpp"

namespace fixv2w::kg {
namespace {

EntityIndex require_node(const KnowledgeGraph& kg, const EntityId& id) {
  kg.require_cwe(id);
  return kg.require(id);
}

std::vector<EntityId> sorted_ids(const KnowledgeGraph& kg, const std::vector<EntityIndex>& xs) {
  std::vector<EntityId> out;
  out.reserve(xs.size());
  for (auto i : xs) out.push_back(kg.entity(i));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

std::vector<EntityIndex> parents_of(const KnowledgeGraph& kg, EntityIndex w) {
  return kg.tails(w, RelationKind::ChildOf);
}

std::vector<EntityIndex> children_of(const KnowledgeGraph& kg, EntityIndex w) {
  return kg.tails(w, RelationKind::ParentOf);
}

std::optional<std::size_t> hop_distance(const KnowledgeGraph& kg, const EntityId& a,
                                        const EntityId& b) {
  const EntityIndex src = require_node(kg, a);
  const EntityIndex dst = require_node(kg, b);
  if (src == dst) return 0;

  std::unordered_map<EntityIndex, std::size_t> dist{{src, 0}};
  std::deque<EntityIndex> queue{src};
  while (!queue.empty()) {
    const EntityIndex cur = queue.front();
    queue.pop_front();
    const std::size_t d = dist[cur];
    for (RelationKind r : {RelationKind::ChildOf, RelationKind::ParentOf}) {
      for (EntityIndex next : kg.tails(cur, r)) {
        if (dist.contains(next)) continue;
        if (next == dst) return d + 1;
        dist.emplace(next, d + 1);
        queue.push_back(next);
      }
    }
  }
  return std::nullopt;
}

std::vector<EntityIndex> branch_roots(const KnowledgeGraph& kg, EntityIndex w) {
  std::vector<EntityIndex> pillars;
  std::vector<EntityIndex> tops;
  std::unordered_set<EntityIndex> seen{w};
  std::vector<EntityIndex> stack{w};
  while (!stack.empty()) {
    const EntityIndex cur = stack.back();
    stack.pop_back();
    const CweNode* node = kg.cwe_node(cur);
    if (node && node->abstraction == Abstraction::Pillar) pillars.push_back(cur);
    const auto parents = parents_of(kg, cur);
    if (parents.empty()) tops.push_back(cur);
    for (EntityIndex p : parents) {
      if (seen.insert(p).second) stack.push_back(p);
    }
  }
  auto& roots = pillars.empty() ? tops : pillars;
  std::sort(roots.begin(), roots.end());
  return roots;
}

bool same_branch(const KnowledgeGraph& kg, const EntityId& a, const EntityId& b) {
  const EntityIndex ia = require_node(kg, a);
  const EntityIndex ib = require_node(kg, b);
  if (kg.cwe_node(ia)->kind != CweKind::Weakness || kg.cwe_node(ib)->kind != CweKind::Weakness) {
    return false;
  }
  if (ia == ib) return true;
  const auto ra = branch_roots(kg, ia);
  const auto rb = branch_roots(kg, ib);
  std::vector<EntityIndex> common;
  std::set_intersection(ra.begin(), ra.end(), rb.begin(), rb.end(), std::back_inserter(common));
  return !common.empty();
}

bool direct_neighbors(const KnowledgeGraph& kg, const EntityId& a, const EntityId& b) {
  const EntityIndex ia = require_node(kg, a);
  const EntityIndex ib = require_node(kg, b);
  for (RelationKind r : {RelationKind::ChildOf, RelationKind::ParentOf}) {
    const auto next = kg.tails(ia, r);
    if (std::find(next.begin(), next.end(), ib) != next.end()) return true;
  }
  return false;
}

std::vector<EntityId> descendants_in_view(const KnowledgeGraph& kg, const EntityId& w) {
  const EntityIndex root = require_node(kg, w);
  std::vector<EntityIndex> found;
  std::unordered_set<EntityIndex> seen{root};
  std::vector<EntityIndex> stack{root};
  while (!stack.empty()) {
    const EntityIndex cur = stack.back();
    stack.pop_back();
    for (EntityIndex child : children_of(kg, cur)) {
      if (!seen.insert(child).second) continue;
      stack.push_back(child);
      const CweNode* node = kg.cwe_node(child);
      if (node && node->in_view_1003) found.push_back(child);
    }
  }
  return sorted_ids(kg, found);
}

std::vector<EntityId> members_of(const KnowledgeGraph& kg, const EntityId& w) {
  const EntityIndex idx = require_node(kg, w);
  const CweNode* node = kg.cwe_node(idx);
  if (node->kind != CweKind::Category && node->kind != CweKind::View) {
    throw KindError(w.key() + " is a " + std::string(to_string(node->kind)) +
                    ", not a category or view");
  }
  return sorted_ids(kg, kg.heads(RelationKind::MemberOf, idx));
}

}  // namespace fixv2w::kg
