// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <set>
#include <sstream>
#include <unordered_map>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "fixv2w/csv.hpp"
#include "fixv2w/error.hpp"
#include "fixv2w/ingest.hpp"

namespace fixv2w::ingest {
namespace {

namespace pt = boost::property_tree;
using kg::CweKind;
using kg::CweNode;
using kg::EntityId;
using kg::MappingStatus;
using kg::RelationKind;

constexpr unsigned kMappingView = 1003;

std::string attr(const pt::ptree& node, const char* name) {
  return node.get<std::string>(std::string("<xmlattr>.") + name, "");
}

class CatalogBuilder {
 public:
  explicit CatalogBuilder(CweCatalog& out) : out_(out) {}

  void weakness(const pt::ptree& w) {
    CweNode n = base_node(w);
    const bool deprecated = attr(w, "Status") == "Deprecated";
    n.kind = deprecated ? CweKind::Deprecated : CweKind::Weakness;
    if (!deprecated) {
      n.abstraction = kg::parse_abstraction(attr(w, "Abstraction"));
      if (!n.abstraction) ++missing_abstraction_;
      n.status = usage(w, n.id);
    }
    if (auto rel = w.get_child_optional("Related_Weaknesses")) {
      for (const auto& [tag, r] : *rel) {
        if (tag != "Related_Weakness") continue;
        const auto target = target_id(r);
        if (!target) continue;
        const auto nature = attr(r, "Nature");
        edge(n.id, nature == "ChildOf" ? RelationKind::ChildOf : RelationKind::RelatedTo, *target);
      }
    }
    add(std::move(n));
  }

  void category(const pt::ptree& c) {
    CweNode n = base_node(c);
    n.kind = CweKind::Category;
    if (auto rel = c.get_child_optional("Relationships")) membership(n.id, *rel);
    add(std::move(n));
  }

  void view(const pt::ptree& v) {
    CweNode n = base_node(v);
    n.kind = CweKind::View;
    if (auto members = v.get_child_optional("Members")) {
      membership(n.id, *members);
      if (n.id.cwe_number() == kMappingView) {
        for (const auto& [tag, m] : *members) {
          if (tag != "Has_Member") continue;
          if (auto t = target_id(m)) in_view_.push_back(*t);
        }
      }
    }
    add(std::move(n));
  }

  void finish() {
    std::set<EntityId> known;
    for (const auto& n : out_.nodes) known.insert(n.id);
    std::size_t dangling = 0;
    std::erase_if(out_.edges, [&](const kg::Triple& t) {
      const bool drop = !known.contains(t.head) || !known.contains(t.tail);
      dangling += drop;
      return drop;
    });
    if (dangling) {
      out_.diagnostics.warn(std::to_string(dangling) + " relationships reference CWEs absent from the catalog");
    }
    if (!in_view_.empty()) set_view_1003(out_, in_view_);
    if (missing_usage_) {
      out_.diagnostics.warn(std::to_string(missing_usage_) +
                            " weaknesses have no mapping usage; defaulted to Allowed");
    }
    if (missing_abstraction_) {
      out_.diagnostics.warn(std::to_string(missing_abstraction_) +
                            " weaknesses have no abstraction; defaulted to Base");
    }
  }

 private:
  CweNode base_node(const pt::ptree& node) {
    const auto id = attr(node, "ID");
    auto parsed = kg::parse_cwe_tag(id);
    if (!parsed || parsed->is_placeholder()) throw ParseError("catalog entry with bad ID '" + id + "'");
    CweNode n{*parsed};
    n.name = attr(node, "Name");
    return n;
  }

  MappingStatus usage(const pt::ptree& node, const EntityId& id) {
    const auto text = node.get<std::string>("Mapping_Notes.Usage", "");
    if (text.empty()) {
      ++missing_usage_;
      return MappingStatus::Allowed;
    }
    if (auto s = kg::parse_status(text); s && *s != MappingStatus::Placeholder) return *s;
    out_.diagnostics.warn(id.key() + ": unknown mapping usage '" + text + "', using Allowed");
    return MappingStatus::Allowed;
  }

  std::optional<EntityId> target_id(const pt::ptree& r) {
    auto t = kg::parse_cwe_tag(attr(r, "CWE_ID"));
    if (!t || t->is_placeholder()) return std::nullopt;
    return t;
  }

  void membership(const EntityId& owner, const pt::ptree& rel) {
    for (const auto& [tag, r] : rel) {
      const auto target = target_id(r);
      if (!target) continue;
      if (tag == "Has_Member") edge(owner, RelationKind::HasMember, *target);
      if (tag == "Member_Of") edge(owner, RelationKind::MemberOf, *target);
    }
  }

  void edge(const EntityId& h, RelationKind r, const EntityId& t) {
    if (h == t) return;
    kg::Triple tr{h, r, t};
    // Store membership in HasMember direction only; the graph adds inverses.
    if (r == RelationKind::MemberOf) tr = kg::Triple{t, RelationKind::HasMember, h};
    if (seen_.insert(tr).second) out_.edges.push_back(std::move(tr));
  }

  void add(CweNode n) {
    if (!ids_.insert(n.id).second) {
      out_.diagnostics.warn("duplicate catalog entry " + n.id.key() + " ignored");
      return;
    }
    out_.nodes.push_back(std::move(n));
  }

  CweCatalog& out_;
  std::set<kg::Triple> seen_;
  std::set<EntityId> ids_;
  std::vector<EntityId> in_view_;
  std::size_t missing_usage_ = 0;
  std::size_t missing_abstraction_ = 0;
};

}  // namespace

CweCatalog parse_cwe_catalog(std::string_view xml) {
  CweCatalog catalog;
  // An empty document is an empty catalog.
  if (xml.find_first_not_of(" \t\r\n") == std::string_view::npos) return catalog;

  pt::ptree tree;
  std::istringstream in{std::string(xml)};
  try {
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    throw ParseError("malformed CWE catalog: " + e.message() + " (line " +
                     std::to_string(e.line()) + ")");
  }
  const auto root = tree.get_child_optional("Weakness_Catalog");
  if (!root) throw ParseError("CWE catalog has no Weakness_Catalog root element");
  catalog.version = attr(*root, "Version");

  CatalogBuilder build(catalog);
  try {
    if (auto ws = root->get_child_optional("Weaknesses")) {
      for (const auto& [tag, w] : *ws)
        if (tag == "Weakness") build.weakness(w);
    }
    if (auto cs = root->get_child_optional("Categories")) {
      for (const auto& [tag, c] : *cs)
        if (tag == "Category") build.category(c);
    }
    if (auto vs = root->get_child_optional("Views")) {
      for (const auto& [tag, v] : *vs)
        if (tag == "View") build.view(v);
    }
  } catch (const ValidationError& e) {
    throw ParseError(std::string("CWE catalog: ") + e.what());
  }
  build.finish();
  return catalog;
}

std::vector<EntityId> parse_cwe_id_list(std::string_view text) {
  csv::Table table(csv::parse(text));
  std::size_t col = 0;
  for (const char* name : {"CWE-ID", "CWE ID", "ID"}) {
    if (auto c = table.column(name)) {
      col = *c;
      break;
    }
  }
  std::vector<EntityId> out;
  for (const auto& row : table.rows()) {
    const auto field = csv::Table::field(row, col);
    auto id = kg::parse_cwe_tag(field);
    if (!id || id->is_placeholder()) {
      throw ParseError("CWE list: bad id '" + std::string(field) + "'");
    }
    if (std::find(out.begin(), out.end(), *id) == out.end()) out.push_back(*id);
  }
  return out;
}

void set_view_1003(CweCatalog& catalog, std::span<const EntityId> members) {
  std::set<EntityId> in(members.begin(), members.end());
  for (auto& n : catalog.nodes) {
    n.in_view_1003 = in.contains(n.id);
    if (n.in_view_1003 && n.kind != CweKind::Weakness) {
      catalog.diagnostics.warn(n.id.key() + " is listed in view 1003 but is a " +
                               std::string(kg::to_string(n.kind)) + "; not usable for mapping");
      n.in_view_1003 = false;
    }
  }
}

void apply_status_overrides(CweCatalog& catalog, std::string_view text) {
  csv::Table table(csv::parse(text));
  const auto id_col = table.column("CWE-ID").value_or(0);
  const auto status_col = table.column("Status").value_or(1);
  std::unordered_map<std::string, MappingStatus> overrides;
  for (const auto& row : table.rows()) {
    auto id = kg::parse_cwe_tag(csv::Table::field(row, id_col));
    auto status = kg::parse_status(csv::Table::field(row, status_col));
    if (!id || !status) {
      throw ParseError("status override row '" + std::string(csv::Table::field(row, id_col)) + "," +
                       std::string(csv::Table::field(row, status_col)) + "' is malformed");
    }
    overrides[id->key()] = *status;
  }
  for (auto& n : catalog.nodes) {
    if (auto it = overrides.find(n.id.key()); it != overrides.end() && n.kind == CweKind::Weakness) {
      n.status = it->second;
    }
  }
}

void add_catalog(kg::KnowledgeGraph& graph, const CweCatalog& catalog) {
  for (const auto& n : catalog.nodes) graph.add_cwe_node(n);
  for (const auto& e : catalog.edges) graph.add_triple(e);
}

}  // namespace fixv2w::ingest
