// SPDX-License-Identifier: Apache-2.0
//
// Hand-built ontology fixtures shared by the unit and acceptance suites.
#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <random>
#include <sstream>
#include <string>

#include "fixv2w/kg.hpp"

namespace fixv2w::testing {

using kg::Abstraction;
using kg::CweKind;
using kg::CweNode;
using kg::EntityId;
using kg::KnowledgeGraph;
using kg::MappingStatus;
using kg::RelationKind;

inline std::filesystem::path fixture_path(const std::string& name) {
  return std::filesystem::path(FIXV2W_FIXTURE_DIR) / name;
}

inline std::string read_fixture(const std::string& name) {
  std::ifstream in(fixture_path(name), std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline EntityId cwe(unsigned n) { return EntityId::cwe(n); }
inline EntityId cve(const std::string& key) { return EntityId::cve(key); }

inline void weakness(KnowledgeGraph& g, unsigned id, Abstraction abs,
                     MappingStatus status = MappingStatus::Allowed, bool in_view = false,
                     std::string name = {}) {
  CweNode n{cwe(id)};
  n.kind = CweKind::Weakness;
  n.abstraction = abs;
  n.status = status;
  n.in_view_1003 = in_view;
  n.name = name.empty() ? "CWE " + std::to_string(id) : std::move(name);
  g.add_cwe_node(std::move(n));
}

inline void category(KnowledgeGraph& g, unsigned id, std::initializer_list<unsigned> members,
                     std::string name = {}) {
  CweNode n{cwe(id)};
  n.kind = CweKind::Category;
  n.name = name.empty() ? "Category " + std::to_string(id) : std::move(name);
  g.add_cwe_node(std::move(n));
  for (unsigned m : members) g.add_triple({cwe(id), RelationKind::HasMember, cwe(m)});
}

inline void child_of(KnowledgeGraph& g, unsigned child, unsigned parent) {
  g.add_triple({cwe(child), RelationKind::ChildOf, cwe(parent)});
}

// The hierarchy slice used in the worked coverage example:
//
//   CWE-707 (Pillar, Discouraged)
//   ├── CWE-138 (Class, Discouraged)
//   │   └── CWE-140 (Base, in view)
//   └── CWE-228 (Class)
inline void add_neutralization_slice(KnowledgeGraph& g) {
  weakness(g, 707, Abstraction::Pillar, MappingStatus::Discouraged, false, "Improper Neutralization");
  weakness(g, 138, Abstraction::Class, MappingStatus::Discouraged, false,
           "Improper Neutralization of Special Elements");
  weakness(g, 140, Abstraction::Base, MappingStatus::Allowed, true,
           "Improper Neutralization of Delimiters");
  weakness(g, 228, Abstraction::Class, MappingStatus::Allowed, false,
           "Improper Handling of Syntactically Invalid Structure");
  child_of(g, 138, 707);
  child_of(g, 140, 138);
  child_of(g, 228, 707);
}

inline KnowledgeGraph neutralization_graph() {
  KnowledgeGraph g;
  add_neutralization_slice(g);
  return g;
}

// CWE-189 "Numeric Errors" with its ten members; CWE-190/191/193/369/681
// are the in-view ones. In-view descendants below the members: CWE-680
// under CWE-190, and CWE-195 under the out-of-view CWE-194 under CWE-681.
// A second pillar (CWE-664) carries enough in-view weaknesses for the
// baseline and nearest-neighbour fills, and CWE-264 is an empty category.
inline void add_cwe189_slice(KnowledgeGraph& g) {
  weakness(g, 682, Abstraction::Pillar, MappingStatus::Discouraged, false, "Incorrect Calculation");
  weakness(g, 704, Abstraction::Class, MappingStatus::Allowed, true,
           "Incorrect Type Conversion or Cast");
  weakness(g, 128, Abstraction::Base, MappingStatus::Allowed, false, "Wrap-around Error");
  weakness(g, 190, Abstraction::Base, MappingStatus::Allowed, true, "Integer Overflow or Wraparound");
  weakness(g, 191, Abstraction::Base, MappingStatus::Allowed, true,
           "Integer Underflow (Wrap or Wraparound)");
  weakness(g, 193, Abstraction::Base, MappingStatus::Allowed, true, "Off-by-one Error");
  weakness(g, 369, Abstraction::Base, MappingStatus::Allowed, true, "Divide By Zero");
  weakness(g, 681, Abstraction::Base, MappingStatus::Allowed, true,
           "Incorrect Conversion between Numeric Types");
  weakness(g, 839, Abstraction::Base, MappingStatus::Allowed, false,
           "Numeric Range Comparison Without Minimum Check");
  weakness(g, 1135, Abstraction::Base, MappingStatus::Allowed, false,
           "Incorrect Bit-wise Shift of Integer");
  weakness(g, 1139, Abstraction::Base, MappingStatus::Allowed, false,
           "Insufficient Precision or Accuracy of a Real Number");
  weakness(g, 1389, Abstraction::Base, MappingStatus::Allowed, false,
           "Incorrect Parsing of Numbers with Different Radices");
  weakness(g, 680, Abstraction::Compound, MappingStatus::Allowed, true,
           "Integer Overflow to Buffer Overflow");
  weakness(g, 194, Abstraction::Variant, MappingStatus::Allowed, false, "Unexpected Sign Extension");
  weakness(g, 195, Abstraction::Variant, MappingStatus::Allowed, true,
           "Signed to Unsigned Conversion Error");
  for (unsigned c : {128u, 190u, 191u, 193u, 369u, 839u, 1135u, 1139u}) child_of(g, c, 682);
  child_of(g, 681, 704);
  child_of(g, 1389, 704);
  child_of(g, 680, 190);
  child_of(g, 194, 681);
  child_of(g, 195, 194);
  category(g, 189, {128, 190, 191, 193, 369, 681, 839, 1135, 1139, 1389}, "Numeric Errors");
  category(g, 264, {}, "Permissions, Privileges, and Access Controls");

  weakness(g, 664, Abstraction::Pillar, MappingStatus::Discouraged, false,
           "Improper Control of a Resource Through its Lifetime");
  weakness(g, 119, Abstraction::Class, MappingStatus::Discouraged, true,
           "Improper Restriction of Operations within the Bounds of a Memory Buffer");
  child_of(g, 119, 664);
  for (unsigned c : {787u, 125u, 120u, 416u, 400u, 770u, 772u, 22u, 732u, 269u}) {
    weakness(g, c, Abstraction::Base, MappingStatus::Allowed, true);
  }
  for (unsigned c : {787u, 125u, 120u}) child_of(g, c, 119);
  for (unsigned c : {416u, 400u, 770u, 772u, 22u, 732u, 269u}) child_of(g, c, 664);
}

inline KnowledgeGraph cwe189_graph() {
  KnowledgeGraph g;
  add_cwe189_slice(g);
  return g;
}

// Synthetic graph with planted clusters: cluster c owns CWE-(1000+10c..+3)
// alongside pillar CWE-(1000+10c+9) and CPEs vendor<c>:prod<0..2>. Each CVE
// maps to one CWE and one CPE of its cluster, so `cves` CVEs give 2*cves
// MatchingCWE/MatchingCPE triples.
struct PlantedGraph {
  KnowledgeGraph graph;
  std::vector<kg::Triple> positives;
  std::vector<EntityId> cwes;
  std::vector<EntityId> cpes;
};

inline PlantedGraph planted_graph(unsigned cves, unsigned clusters, std::uint64_t seed) {
  PlantedGraph p;
  std::mt19937_64 rng(seed);
  for (unsigned c = 0; c < clusters; ++c) {
    weakness(p.graph, 1000 + 10 * c + 9, Abstraction::Pillar, MappingStatus::Discouraged);
    for (unsigned j = 0; j < 4; ++j) {
      weakness(p.graph, 1000 + 10 * c + j, Abstraction::Base, MappingStatus::Allowed, true);
      p.cwes.push_back(cwe(1000 + 10 * c + j));
    }
    for (unsigned j = 0; j < 3; ++j) {
      p.cpes.push_back(EntityId::cpe("cpe:2.3:a:vendor" + std::to_string(c) + ":prod" + std::to_string(j) +
                                     ":1.0:*:*:*:*:*:*:*"));
    }
  }
  for (unsigned i = 0; i < cves; ++i) {
    const unsigned c = i % clusters;
    const auto v = cve("CVE-2020-" + std::to_string(10000 + i));
    const kg::Triple w{v, RelationKind::MatchingCWE, cwe(1000 + 10 * c + static_cast<unsigned>(rng() % 4))};
    const kg::Triple q{v, RelationKind::MatchingCPE, p.cpes[3 * c + rng() % 3]};
    p.graph.add_triple(w);
    p.graph.add_triple(q);
    p.positives.push_back(w);
    p.positives.push_back(q);
  }
  return p;
}

// CWE-189 and neutralization slices with five CVEs: 0001 -> CWE-189 (Prohibited),
// 0002 -> CWE-119 and 0005 -> CWE-138 (Discouraged), 0003 -> CWE-787,
// 0004 -> NVD-CWE-noinfo; all on one CPE.
inline KnowledgeGraph remap_graph() {
  auto g = cwe189_graph();
  add_neutralization_slice(g);
  CweNode noinfo{EntityId::cwe_noinfo()};
  noinfo.kind = CweKind::Placeholder;
  g.add_cwe_node(noinfo);
  const auto cpe = EntityId::cpe("cpe:2.3:a:acme:widget:1.0:*:*:*:*:*:*:*");
  for (const auto& [id, w] : std::vector<std::pair<std::string, EntityId>>{
           {"CVE-2020-0001", cwe(189)}, {"CVE-2020-0002", cwe(119)}, {"CVE-2020-0003", cwe(787)},
           {"CVE-2020-0004", EntityId::cwe_noinfo()}, {"CVE-2020-0005", cwe(138)}}) {
    g.add_triple({cve(id), RelationKind::MatchingCWE, w});
    g.add_triple({cve(id), RelationKind::MatchingCPE, cpe});
  }
  g.freeze();
  return g;
}

}  // namespace fixv2w::testing
