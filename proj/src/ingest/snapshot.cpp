// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include "fixv2w/error.hpp"
#include "fixv2w/ingest.hpp"

namespace fixv2w::ingest {
namespace {

using kg::EntityId;
using kg::RelationKind;

using MappingTable = std::map<EntityId, CveRecord>;

MappingTable index_feed(std::span<const CveRecord> feed) {
  MappingTable table;
  for (const auto& r : feed) {
    auto [it, fresh] = table.try_emplace(r.id, r);
    if (!fresh) {
      // Later duplicates extend the earlier record.
      for (const auto& w : r.cwe_ids)
        if (std::find(it->second.cwe_ids.begin(), it->second.cwe_ids.end(), w) == it->second.cwe_ids.end())
          it->second.cwe_ids.push_back(w);
      for (const auto& c : r.cpe_uris)
        if (std::find(it->second.cpe_uris.begin(), it->second.cpe_uris.end(), c) == it->second.cpe_uris.end())
          it->second.cpe_uris.push_back(c);
    }
  }
  return table;
}

void erase_all(std::vector<EntityId>& xs, const std::vector<EntityId>& doomed) {
  std::erase_if(xs, [&](const EntityId& x) {
    return std::find(doomed.begin(), doomed.end(), x) != doomed.end();
  });
}

void add_all(std::vector<EntityId>& xs, const std::vector<EntityId>& more) {
  for (const auto& x : more)
    if (std::find(xs.begin(), xs.end(), x) == xs.end()) xs.push_back(x);
}

void apply_forward(MappingTable& table, const ChangeEvent& e) {
  auto it = table.find(e.cve);
  if (it == table.end()) return;
  erase_all(it->second.cwe_ids, e.removed_cwes);
  add_all(it->second.cwe_ids, e.added_cwes);
}

void apply_backward(MappingTable& table, const ChangeEvent& e) {
  auto it = table.find(e.cve);
  if (it == table.end()) return;
  erase_all(it->second.cwe_ids, e.added_cwes);
  add_all(it->second.cwe_ids, e.removed_cwes);
}

std::vector<EntityId> cwes_of(const kg::KnowledgeGraph& g, kg::EntityIndex cve) {
  std::vector<EntityId> out;
  for (auto t : g.tails(cve, RelationKind::MatchingCWE)) out.push_back(g.entity(t));
  std::sort(out.begin(), out.end());
  return out;
}

std::ifstream open_in(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw EmptyInputError("cannot open " + p.string());
  return in;
}

}  // namespace

std::vector<CveRecord> rewind_feed(std::span<const CveRecord> feed, const ChangeHistory& history) {
  auto table = index_feed(feed);
  for (auto it = history.events.rbegin(); it != history.events.rend(); ++it) apply_backward(table, *it);
  std::vector<CveRecord> out;
  out.reserve(table.size());
  for (auto& [id, r] : table) out.push_back(std::move(r));
  return out;
}

Snapshot build_snapshot(std::span<const CveRecord> feed, const ChangeHistory& history,
                        const CweCatalog& catalog, Date as_of, FeedState state) {
  if (history.covered_until && as_of > date_of(*history.covered_until)) {
    throw DateRangeError("snapshot date " + format_date(as_of) + " is past history coverage (" +
                         format_date(date_of(*history.covered_until)) + ")");
  }
  MappingTable table;
  if (state == FeedState::Current) {
    auto base = rewind_feed(feed, history);
    table = index_feed(base);
  } else {
    table = index_feed(feed);
  }
  const Timestamp cutoff = end_of_day(as_of);
  for (const auto& e : history.events) {
    if (e.timestamp >= cutoff) break;
    apply_forward(table, e);
  }

  Snapshot snap{as_of, {}};
  auto& g = snap.graph;
  add_catalog(g, catalog);
  for (const auto& [id, r] : table) {
    if (r.published > as_of) continue;
    g.intern(id);
    for (const auto& w : r.cwe_ids) {
      if (w.is_placeholder() && !g.cwe_node(w)) g.add_cwe_node(kg::CweNode{w, kg::CweKind::Placeholder});
      g.add_triple({id, RelationKind::MatchingCWE, w});
    }
    for (const auto& c : r.cpe_uris) g.add_triple({id, RelationKind::MatchingCPE, EntityId::cpe(c)});
  }
  return snap;
}

std::vector<RemapCase> build_test_set(const Snapshot& train, const Snapshot& valid,
                                      kg::MappingStatus status_filter) {
  std::vector<RemapCase> cases;
  const auto& tg = train.graph;
  const auto& vg = valid.graph;
  for (kg::EntityIndex i = 0; i < tg.entity_count(); ++i) {
    const auto& cve = tg.entity(i);
    if (cve.ns() != kg::Namespace::Cve) continue;
    const auto vi = vg.find(cve);
    if (!vi) continue;
    const auto before = cwes_of(tg, i);
    const auto after = cwes_of(vg, *vi);

    std::vector<EntityId> truth;
    for (const auto& w : after) {
      if (std::binary_search(before.begin(), before.end(), w)) continue;
      const auto* node = vg.cwe_node(w);
      if (node && node->kind == kg::CweKind::Weakness && node->status == kg::MappingStatus::Allowed) {
        truth.push_back(w);
      }
    }
    if (truth.empty()) continue;

    for (const auto& old : before) {
      const auto* node = tg.cwe_node(old);
      if (!node || node->status != status_filter) continue;
      if (std::binary_search(after.begin(), after.end(), old)) continue;
      RemapCase c{cve, old, status_filter};
      c.truth = truth;
      cases.push_back(std::move(c));
    }
  }
  std::sort(cases.begin(), cases.end(), [](const RemapCase& a, const RemapCase& b) {
    return std::tie(a.cve, a.old_cwe) < std::tie(b.cve, b.old_cwe);
  });
  return cases;
}

void save_snapshot(const Snapshot& snapshot, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "as_of.txt", std::ios::binary);
    out << format_date(snapshot.as_of) << '\n';
  }
  {
    std::ofstream out(dir / "entities.tsv", std::ios::binary);
    kg::dump_entities(snapshot.graph, out);
  }
  {
    std::ofstream out(dir / "cwe_nodes.tsv", std::ios::binary);
    kg::dump_cwe_nodes(snapshot.graph, out);
  }
  {
    std::ofstream out(dir / "triples.tsv", std::ios::binary);
    kg::dump_triples(snapshot.graph, out);
  }
}

Snapshot load_snapshot(const std::filesystem::path& dir) {
  Snapshot snap;
  {
    auto in = open_in(dir / "as_of.txt");
    std::string line;
    std::getline(in, line);
    snap.as_of = parse_date(line);
  }
  {
    auto in = open_in(dir / "entities.tsv");
    kg::load_entities(in, snap.graph);
  }
  {
    auto in = open_in(dir / "cwe_nodes.tsv");
    kg::load_cwe_nodes(in, snap.graph);
  }
  {
    auto in = open_in(dir / "triples.tsv");
    kg::load_triples(in, snap.graph);
  }
  return snap;
}

}  // namespace fixv2w::ingest
