// SPDX-License-Identifier: Apache-2.0
//
// Knowledge-graph data model: interned CVE/CWE/CPE entities, typed triples
// with head/tail/(head,relation)/(relation,tail) indexes, and the CWE
// ontology overlay (kind, abstraction, mapping status, view membership).
#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace fixv2w::kg {

enum class Namespace : std::uint8_t { Cve, Cwe, Cpe };

std::string_view to_string(Namespace ns);

// Canonical identifier of one entity.
//
// CWE keys are "CWE-<n>"; the NVD placeholder tokens "NVD-CWE-Other" and
// "NVD-CWE-noinfo" are admitted as sentinel CWE ids, and "CWE-Any" is the
// wildcard used in aggregated remap reports. Ordering is namespace first,
// then numeric for numbered CWEs (sentinels after them), else by key.
class EntityId {
 public:
  static EntityId cve(std::string_view key);
  static EntityId cwe(std::string_view key);
  static EntityId cwe(unsigned number);
  static EntityId cpe(std::string_view uri);
  // Infers the namespace from the key's syntax.
  static EntityId parse(std::string_view key);

  static EntityId cwe_other() { return cwe("NVD-CWE-Other"); }
  static EntityId cwe_noinfo() { return cwe("NVD-CWE-noinfo"); }
  static EntityId any_cwe() { return cwe("CWE-Any"); }

  Namespace ns() const { return ns_; }
  const std::string& key() const { return key_; }
  bool is_placeholder() const;
  std::optional<unsigned> cwe_number() const;

  friend bool operator==(const EntityId&, const EntityId&) = default;
  friend std::strong_ordering operator<=>(const EntityId& a, const EntityId& b);

 private:
  EntityId(Namespace ns, std::string key) : ns_(ns), key_(std::move(key)) {}
  Namespace ns_;
  std::string key_;
};

struct EntityIdHash {
  std::size_t operator()(const EntityId& id) const noexcept {
    return std::hash<std::string>{}(id.key()) ^ static_cast<std::size_t>(id.ns());
  }
};

// Tolerant CWE tag reader for feed data: "CWE-79", "79", "NVD-CWE-Other".
std::optional<EntityId> parse_cwe_tag(std::string_view text);

enum class RelationKind : std::uint8_t {
  MatchingCWE,
  MatchingCPE,
  ChildOf,
  ParentOf,
  MemberOf,
  HasMember,
  RelatedTo,
};
inline constexpr std::size_t kRelationCount = 7;
inline constexpr RelationKind kAllRelations[kRelationCount] = {
    RelationKind::MatchingCWE, RelationKind::MatchingCPE, RelationKind::ChildOf,
    RelationKind::ParentOf,    RelationKind::MemberOf,    RelationKind::HasMember,
    RelationKind::RelatedTo};

std::string_view to_string(RelationKind r);
RelationKind parse_relation(std::string_view name);
// ChildOf<->ParentOf, MemberOf<->HasMember; nullopt for the rest.
std::optional<RelationKind> inverse(RelationKind r);

struct Triple {
  EntityId head;
  RelationKind relation;
  EntityId tail;

  friend bool operator==(const Triple&, const Triple&) = default;
  friend auto operator<=>(const Triple&, const Triple&) = default;
};

// Throws ValidationError when head/tail namespaces do not fit the relation.
void validate(const Triple& t);

enum class CweKind : std::uint8_t { Weakness, Category, View, Deprecated, Placeholder };
enum class Abstraction : std::uint8_t { Pillar, Class, Base, Variant, Compound };
enum class MappingStatus : std::uint8_t { Allowed, Discouraged, Prohibited, Placeholder };

std::string_view to_string(CweKind k);
std::string_view to_string(Abstraction a);
std::string_view to_string(MappingStatus s);
CweKind parse_cwe_kind(std::string_view s);
std::optional<Abstraction> parse_abstraction(std::string_view s);
std::optional<MappingStatus> parse_status(std::string_view s);

struct CweNode {
  EntityId id;
  CweKind kind = CweKind::Weakness;
  std::optional<Abstraction> abstraction;
  MappingStatus status = MappingStatus::Allowed;
  bool in_view_1003 = false;
  std::string name;

  bool invalid() const {
    return status == MappingStatus::Discouraged || status == MappingStatus::Prohibited;
  }
};

// Coerces a node into its invariants: non-weakness kinds are Prohibited
// (placeholders get the Placeholder status), abstraction exists only on
// weaknesses (defaulting to Base), and a Prohibited node is never in view.
CweNode normalized(CweNode node);

using EntityIndex = std::uint32_t;

struct TripleRef {
  EntityIndex head;
  RelationKind relation;
  EntityIndex tail;

  friend bool operator==(const TripleRef&, const TripleRef&) = default;
};

struct TripleRefHash {
  std::size_t operator()(const TripleRef& t) const noexcept {
    std::uint64_t x = (std::uint64_t{t.head} << 32) ^ t.tail;
    x ^= std::uint64_t{static_cast<std::uint8_t>(t.relation)} << 61;
    x *= 0x9E3779B97F4A7C15ull;
    return static_cast<std::size_t>(x ^ (x >> 29));
  }
};

// Indexed triple store.
//
// Entities get dense indices in first-seen order. Hierarchy and membership
// edges are stored together with their inverse. After freeze() every
// mutating call throws FrozenGraphError; const access is then safe from any
// number of threads.
class KnowledgeGraph {
 public:
  EntityIndex intern(const EntityId& id);
  std::optional<EntityIndex> find(const EntityId& id) const;
  EntityIndex require(const EntityId& id) const;  // UnknownEntityError
  const EntityId& entity(EntityIndex i) const { return entities_.at(i); }
  std::size_t entity_count() const { return entities_.size(); }
  std::span<const EntityId> entities() const { return entities_; }

  // Returns true when the triple was new. Throws ValidationError for
  // namespace-mismatched triples.
  bool add_triple(const Triple& t);
  bool contains(const Triple& t) const;
  bool contains(const TripleRef& t) const { return triple_set_.contains(t); }

  // Drops the given triples (and their inverse edges). Entity indices are
  // unchanged.
  std::size_t remove_triples(std::span<const Triple> doomed);

  std::size_t triple_count() const { return triples_.size(); }
  std::span<const TripleRef> triple_refs() const { return triples_; }
  Triple resolve(const TripleRef& t) const;

  std::vector<TripleRef> by_head(EntityIndex head) const;
  std::vector<TripleRef> by_tail(EntityIndex tail) const;
  std::vector<EntityIndex> tails(EntityIndex head, RelationKind r) const;
  std::vector<EntityIndex> heads(RelationKind r, EntityIndex tail) const;

  // Adds or replaces a node after normalising it.
  void add_cwe_node(CweNode node);
  const CweNode* cwe_node(const EntityId& id) const;
  const CweNode* cwe_node(EntityIndex i) const;
  const CweNode& require_cwe(const EntityId& id) const;  // UnknownEntityError
  // Every node, sorted by id.
  std::vector<const CweNode*> cwe_nodes() const;
  std::size_t cwe_node_count() const { return cwe_nodes_.size(); }

  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }
  // Same content, entity order and CWE nodes, not frozen.
  KnowledgeGraph thawed() const;

 private:
  void check_mutable() const;
  void index(std::uint32_t pos);
  bool insert_ref(const TripleRef& t);
  void rebuild_indexes();

  static std::uint64_t pair_key(EntityIndex e, RelationKind r) {
    return (std::uint64_t{e} << 3) | static_cast<std::uint8_t>(r);
  }

  std::vector<EntityId> entities_;
  std::unordered_map<EntityId, EntityIndex, EntityIdHash> entity_index_;
  std::vector<TripleRef> triples_;
  std::unordered_set<TripleRef, TripleRefHash> triple_set_;
  std::unordered_map<EntityIndex, std::vector<std::uint32_t>> by_head_;
  std::unordered_map<EntityIndex, std::vector<std::uint32_t>> by_tail_;
  std::unordered_map<std::uint64_t, std::vector<EntityIndex>> head_rel_;
  std::unordered_map<std::uint64_t, std::vector<EntityIndex>> rel_tail_;
  std::unordered_map<EntityIndex, CweNode> cwe_nodes_;
  bool frozen_ = false;
};

// Byte-stable dump: "head\trelation\ttail\n" lines, sorted, LF endings.
std::string dump_triples(const KnowledgeGraph& kg);
void dump_triples(const KnowledgeGraph& kg, std::ostream& out);
// Adds every line of a dump to `kg`; throws ParseError on malformed lines.
void load_triples(std::istream& in, KnowledgeGraph& kg);

// Entity table ("index\tid") and CWE node table, used to persist snapshots
// with a stable index assignment.
void dump_entities(const KnowledgeGraph& kg, std::ostream& out);
void dump_cwe_nodes(const KnowledgeGraph& kg, std::ostream& out);
void load_entities(std::istream& in, KnowledgeGraph& kg);
void load_cwe_nodes(std::istream& in, KnowledgeGraph& kg);

// ---------------------------------------------------------------------------
// Ontology queries. All of them require the named CWEs to have CweNode
// entries and throw UnknownEntityError otherwise.

std::vector<EntityIndex> parents_of(const KnowledgeGraph& kg, EntityIndex w);
std::vector<EntityIndex> children_of(const KnowledgeGraph& kg, EntityIndex w);

// Shortest path length over ChildOf/ParentOf taken as undirected edges;
// nullopt when no path exists.
std::optional<std::size_t> hop_distance(const KnowledgeGraph& kg, const EntityId& a,
                                        const EntityId& b);

// Pillar-level ancestors of `w` (including `w` itself when it is a Pillar).
// A node without any Pillar above it is rooted at its topmost ancestors.
std::vector<EntityIndex> branch_roots(const KnowledgeGraph& kg, EntityIndex w);

// True iff both weaknesses share a branch root. Non-weakness inputs give
// false; unknown ids throw.
bool same_branch(const KnowledgeGraph& kg, const EntityId& a, const EntityId& b);

// True iff `a` and `b` are joined by a direct ChildOf/ParentOf edge.
bool direct_neighbors(const KnowledgeGraph& kg, const EntityId& a, const EntityId& b);

// Transitive descendants of `w` flagged in view 1003, excluding `w`.
std::vector<EntityId> descendants_in_view(const KnowledgeGraph& kg, const EntityId& w);

// Every CWE holding a MemberOf edge to category/view `w` (KindError for
// plain weaknesses).
std::vector<EntityId> members_of(const KnowledgeGraph& kg, const EntityId& w);

}  // namespace fixv2w::kg
