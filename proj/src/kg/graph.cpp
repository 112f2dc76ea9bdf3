// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>

#include "fixv2w/error.hpp"
#include "fixv2w/kg.hpp"

namespace fixv2w::kg {

void KnowledgeGraph::check_mutable() const {
  if (frozen_) {
    throw FrozenGraphError("knowledge graph is frozen");
  }
}

EntityIndex KnowledgeGraph::intern(const EntityId& id) {
  if (auto it = entity_index_.find(id); it != entity_index_.end()) {
    return it->second;
  }
  check_mutable();
  const auto idx = static_cast<EntityIndex>(entities_.size());
  entities_.push_back(id);
  entity_index_.emplace(id, idx);
  return idx;
}

std::optional<EntityIndex> KnowledgeGraph::find(const EntityId& id) const {
  if (auto it = entity_index_.find(id); it != entity_index_.end()) {
    return it->second;
  }
  return std::nullopt;
}

EntityIndex KnowledgeGraph::require(const EntityId& id) const {
  if (auto i = find(id)) return *i;
  throw UnknownEntityError("unknown entity '" + id.key() + "'");
}

void KnowledgeGraph::index(std::uint32_t pos) {
  const TripleRef& t = triples_[pos];
  by_head_[t.head].push_back(pos);
  by_tail_[t.tail].push_back(pos);
  head_rel_[pair_key(t.head, t.relation)].push_back(t.tail);
  rel_tail_[pair_key(t.tail, t.relation)].push_back(t.head);
}

bool KnowledgeGraph::insert_ref(const TripleRef& t) {
  if (!triple_set_.insert(t).second) return false;
  triples_.push_back(t);
  index(static_cast<std::uint32_t>(triples_.size() - 1));
  return true;
}

bool KnowledgeGraph::add_triple(const Triple& t) {
  validate(t);
  if (contains(t)) return false;
  check_mutable();
  const EntityIndex h = intern(t.head);
  const EntityIndex tl = intern(t.tail);
  const bool added = insert_ref({h, t.relation, tl});
  if (auto inv = inverse(t.relation)) {
    insert_ref({tl, *inv, h});
  }
  return added;
}

bool KnowledgeGraph::contains(const Triple& t) const {
  const auto h = find(t.head);
  const auto tl = find(t.tail);
  return h && tl && triple_set_.contains({*h, t.relation, *tl});
}

std::size_t KnowledgeGraph::remove_triples(std::span<const Triple> doomed) {
  check_mutable();
  std::unordered_set<TripleRef, TripleRefHash> drop;
  for (const auto& t : doomed) {
    const auto h = find(t.head);
    const auto tl = find(t.tail);
    if (!h || !tl) continue;
    TripleRef ref{*h, t.relation, *tl};
    if (!triple_set_.contains(ref)) continue;
    drop.insert(ref);
    if (auto inv = inverse(t.relation)) {
      drop.insert({*tl, *inv, *h});
    }
  }
  if (drop.empty()) return 0;
  const std::size_t before = triples_.size();
  std::erase_if(triples_, [&](const TripleRef& t) { return drop.contains(t); });
  for (const auto& t : drop) triple_set_.erase(t);
  rebuild_indexes();
  return before - triples_.size();
}

void KnowledgeGraph::rebuild_indexes() {
  by_head_.clear();
  by_tail_.clear();
  head_rel_.clear();
  rel_tail_.clear();
  for (std::uint32_t i = 0; i < triples_.size(); ++i) index(i);
}

Triple KnowledgeGraph::resolve(const TripleRef& t) const {
  return Triple{entity(t.head), t.relation, entity(t.tail)};
}

std::vector<TripleRef> KnowledgeGraph::by_head(EntityIndex head) const {
  std::vector<TripleRef> out;
  if (auto it = by_head_.find(head); it != by_head_.end()) {
    out.reserve(it->second.size());
    for (auto pos : it->second) out.push_back(triples_[pos]);
  }
  return out;
}

std::vector<TripleRef> KnowledgeGraph::by_tail(EntityIndex tail) const {
  std::vector<TripleRef> out;
  if (auto it = by_tail_.find(tail); it != by_tail_.end()) {
    out.reserve(it->second.size());
    for (auto pos : it->second) out.push_back(triples_[pos]);
  }
  return out;
}

std::vector<EntityIndex> KnowledgeGraph::tails(EntityIndex head, RelationKind r) const {
  if (auto it = head_rel_.find(pair_key(head, r)); it != head_rel_.end()) return it->second;
  return {};
}

std::vector<EntityIndex> KnowledgeGraph::heads(RelationKind r, EntityIndex tail) const {
  if (auto it = rel_tail_.find(pair_key(tail, r)); it != rel_tail_.end()) return it->second;
  return {};
}

void KnowledgeGraph::add_cwe_node(CweNode node) {
  check_mutable();
  node = normalized(std::move(node));
  const EntityIndex i = intern(node.id);
  cwe_nodes_.insert_or_assign(i, std::move(node));
}

const CweNode* KnowledgeGraph::cwe_node(const EntityId& id) const {
  const auto i = find(id);
  return i ? cwe_node(*i) : nullptr;
}

const CweNode* KnowledgeGraph::cwe_node(EntityIndex i) const {
  auto it = cwe_nodes_.find(i);
  return it == cwe_nodes_.end() ? nullptr : &it->second;
}

const CweNode& KnowledgeGraph::require_cwe(const EntityId& id) const {
  if (const auto* n = cwe_node(id)) return *n;
  throw UnknownEntityError("unknown CWE '" + id.key() + "'");
}

std::vector<const CweNode*> KnowledgeGraph::cwe_nodes() const {
  std::vector<const CweNode*> out;
  out.reserve(cwe_nodes_.size());
  for (const auto& [_, n] : cwe_nodes_) out.push_back(&n);
  std::sort(out.begin(), out.end(), [](const CweNode* a, const CweNode* b) { return a->id < b->id; });
  return out;
}

// ---------------------------------------------------------------------------

std::string dump_triples(const KnowledgeGraph& kg) {
  std::ostringstream out;
  dump_triples(kg, out);
  return out.str();
}

void dump_triples(const KnowledgeGraph& kg, std::ostream& out) {
  std::vector<std::string> lines;
  lines.reserve(kg.triple_count());
  for (const auto& t : kg.triple_refs()) {
    std::string line = kg.entity(t.head).key();
    line += '\t';
    line += to_string(t.relation);
    line += '\t';
    line += kg.entity(t.tail).key();
    lines.push_back(std::move(line));
  }
  std::sort(lines.begin(), lines.end());
  for (const auto& l : lines) out << l << '\n';
}

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    parts.push_back(line.substr(start, tab == std::string_view::npos ? tab : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return parts;
}

template <class Fn>
void for_each_line(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t offset = 0;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) {
      try {
        fn(std::string_view(line));
      } catch (const ValidationError& e) {
        throw ParseError("line " + std::to_string(lineno) + ": " + e.what(), offset);
      }
    }
    offset += line.size() + 1;
  }
}

}  // namespace

void load_triples(std::istream& in, KnowledgeGraph& kg) {
  for_each_line(in, [&](std::string_view line) {
    const auto parts = split_tabs(line);
    if (parts.size() != 3) throw ValidationError("expected 3 tab-separated fields");
    kg.add_triple({EntityId::parse(parts[0]), parse_relation(parts[1]), EntityId::parse(parts[2])});
  });
}

void dump_entities(const KnowledgeGraph& kg, std::ostream& out) {
  for (std::size_t i = 0; i < kg.entity_count(); ++i) {
    out << i << '\t' << kg.entity(static_cast<EntityIndex>(i)).key() << '\n';
  }
}

void load_entities(std::istream& in, KnowledgeGraph& kg) {
  for_each_line(in, [&](std::string_view line) {
    const auto parts = split_tabs(line);
    if (parts.size() != 2) throw ValidationError("expected index and id");
    const auto idx = kg.intern(EntityId::parse(parts[1]));
    if (std::to_string(idx) != parts[0]) {
      throw ValidationError("entity table is not in index order at '" + std::string(parts[1]) +
                            "'");
    }
  });
}

void dump_cwe_nodes(const KnowledgeGraph& kg, std::ostream& out) {
  for (const CweNode* n : kg.cwe_nodes()) {
    out << n->id.key() << '\t' << to_string(n->kind) << '\t'
        << (n->abstraction ? to_string(*n->abstraction) : std::string_view("-")) << '\t'
        << to_string(n->status) << '\t' << (n->in_view_1003 ? 1 : 0) << '\t' << n->name << '\n';
  }
}

void load_cwe_nodes(std::istream& in, KnowledgeGraph& kg) {
  for_each_line(in, [&](std::string_view line) {
    const auto parts = split_tabs(line);
    if (parts.size() != 6) throw ValidationError("expected 6 CWE node fields");
    CweNode n{EntityId::cwe(parts[0])};
    n.kind = parse_cwe_kind(parts[1]);
    n.abstraction = parse_abstraction(parts[2]);
    auto status = parse_status(parts[3]);
    if (!status) throw ValidationError("unknown status '" + std::string(parts[3]) + "'");
    n.status = *status;
    n.in_view_1003 = parts[4] == "1";
    n.name = std::string(parts[5]);
    kg.add_cwe_node(std::move(n));
  });
}

KnowledgeGraph KnowledgeGraph::thawed() const {
  KnowledgeGraph out = *this;
  out.frozen_ = false;
  return out;
}

}  // namespace fixv2w::kg
