// SPDX-License-Identifier: Apache-2.0
#include "fixv2w/candidates.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <set>

#include <json.hpp>

#include "fixv2w/csv.hpp"
#include "fixv2w/error.hpp"

namespace fixv2w {

std::string_view to_string(CandidateStrategy s) {
  switch (s) {
    case CandidateStrategy::Cwe1003: return "Cwe1003";
    case CandidateStrategy::Top25: return "Top25";
    case CandidateStrategy::Descendants: return "Descendants";
    case CandidateStrategy::Family: return "Family";
    case CandidateStrategy::Members: return "Members";
    case CandidateStrategy::MembersFnn: return "MembersFnn";
    case CandidateStrategy::PerCweTailored: return "PerCweTailored";
  }
  return "?";
}

CandidateStrategy parse_strategy(std::string_view s) {
  std::string key;
  for (char c : s) {
    if (c != '-' && c != '_') key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  static const std::array<std::pair<std::string_view, CandidateStrategy>, 10> names{{
      {"cwe1003", CandidateStrategy::Cwe1003},
      {"top25", CandidateStrategy::Top25},
      {"descendants", CandidateStrategy::Descendants},
      {"family", CandidateStrategy::Family},
      {"members", CandidateStrategy::Members},
      {"membersfnn", CandidateStrategy::MembersFnn},
      {"fnn", CandidateStrategy::MembersFnn},
      {"percwetailored", CandidateStrategy::PerCweTailored},
      {"tailored", CandidateStrategy::PerCweTailored},
      {"view1003", CandidateStrategy::Cwe1003},
  }};
  for (const auto& [name, value] : names) {
    if (key == name) return value;
  }
  throw ConfigError("unknown candidate strategy '" + std::string(s) + "'");
}

std::string_view to_string(FillSource f) {
  return f == FillSource::ParentExpansion ? "ParentExpansion" : "FnnFill";
}

namespace candidates {
namespace {

using kg::CweKind;
using kg::EntityId;
using kg::KnowledgeGraph;
using kg::MappingStatus;

const kg::CweNode* node_of(const KnowledgeGraph& kg, const EntityId& id) {
  const auto idx = kg.find(id);
  return idx ? kg.cwe_node(*idx) : nullptr;
}

bool is_placeholder(const KnowledgeGraph& kg, const EntityId& id) {
  if (id.is_placeholder()) return true;
  const auto* n = node_of(kg, id);
  return n && n->kind == CweKind::Placeholder;
}

bool is_baseline(CandidateStrategy s) {
  return s == CandidateStrategy::Cwe1003 || s == CandidateStrategy::Top25;
}

// Keeps admissible ids other than `old_cwe`, dropping repeats of `seen`.
void append_admissible(const KnowledgeGraph& kg, const EntityId& old_cwe, std::span<const EntityId> ids,
                       std::set<EntityId>& seen, std::vector<EntityId>& out) {
  for (const auto& id : ids) {
    if (id == old_cwe || !admissible(kg, id)) continue;
    if (seen.insert(id).second) out.push_back(id);
  }
}

std::vector<EntityId> sorted(std::vector<EntityId> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

std::vector<EntityId> members_closure(const KnowledgeGraph& kg, const EntityId& old_cwe) {
  std::vector<EntityId> out;
  for (const auto& m : kg::members_of(kg, old_cwe)) {
    const auto* n = node_of(kg, m);
    if (!n || n->kind != CweKind::Weakness) continue;
    out.push_back(m);
    for (auto& d : kg::descendants_in_view(kg, m)) out.push_back(std::move(d));
  }
  return sorted(std::move(out));
}

}  // namespace

std::vector<EntityId> default_top25() {
  std::vector<EntityId> out;
  for (unsigned n : {787u, 79u, 125u, 20u, 78u, 89u, 416u, 22u, 352u, 434u, 306u, 190u, 502u,
                     287u, 476u, 798u, 119u, 862u, 276u, 200u, 522u, 732u, 611u, 918u, 77u}) {
    out.push_back(EntityId::cwe(n));
  }
  return out;
}

std::vector<EntityId> parse_top25(std::string_view text) {
  csv::Table table(csv::parse(text));
  const auto col = table.require_column("cwe");
  const auto rank_col = table.column("rank");
  std::vector<std::pair<long, EntityId>> rows;
  long line = 0;
  for (const auto& row : table.rows()) {
    ++line;
    const auto field = csv::Table::field(row, col);
    auto id = kg::parse_cwe_tag(field);
    if (!id || id->is_placeholder()) throw ParseError("Top-25 list: bad id '" + std::string(field) + "'");
    long rank = line;
    if (rank_col) {
      try {
        rank = std::stol(std::string(csv::Table::field(row, *rank_col)));
      } catch (const std::exception&) {
        throw ParseError("Top-25 list: bad rank on row " + std::to_string(line));
      }
    }
    rows.emplace_back(rank, *id);
  }
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<EntityId> out;
  for (auto& [rank, id] : rows) {
    if (std::find(out.begin(), out.end(), id) == out.end()) out.push_back(id);
  }
  return out;
}

bool admissible(const KnowledgeGraph& kg, const EntityId& c) {
  const auto* n = node_of(kg, c);
  return n && n->kind == CweKind::Weakness && n->in_view_1003 && n->status == MappingStatus::Allowed;
}

std::vector<EntityId> cwe1003_pool(const KnowledgeGraph& kg) {
  std::vector<EntityId> out;
  for (const auto* n : kg.cwe_nodes()) {
    if (admissible(kg, n->id)) out.push_back(n->id);
  }
  return sorted(std::move(out));
}

void check_strategy(const KnowledgeGraph& kg, const EntityId& old_cwe, CandidateStrategy s) {
  if (s == CandidateStrategy::PerCweTailored || is_baseline(s)) return;
  if (is_placeholder(kg, old_cwe)) {
    throw StrategyMismatchError(std::string(to_string(s)) + " does not apply to placeholder " + old_cwe.key() +
                                "; use a baseline strategy");
  }
  const auto* n = node_of(kg, old_cwe);
  if (!n) throw UnknownEntityError(old_cwe.key() + " has no CWE catalog entry");
  if (s == CandidateStrategy::Descendants || s == CandidateStrategy::Family) {
    if (n->status != MappingStatus::Discouraged) {
      throw StrategyMismatchError(std::string(to_string(s)) + " applies to Discouraged CWEs, " + old_cwe.key() +
                                  " is " + std::string(kg::to_string(n->status)));
    }
    return;
  }
  if (n->status != MappingStatus::Prohibited || (n->kind != CweKind::Category && n->kind != CweKind::View)) {
    throw StrategyMismatchError(std::string(to_string(s)) + " applies to Prohibited categories and views, " +
                                old_cwe.key() + " is a " + std::string(kg::to_string(n->status)) + " " +
                                std::string(kg::to_string(n->kind)));
  }
}

CandidateStrategy default_tailored_strategy(const KnowledgeGraph& kg, const EntityId& old_cwe) {
  if (is_placeholder(kg, old_cwe)) return CandidateStrategy::Cwe1003;
  const auto* n = node_of(kg, old_cwe);
  if (!n) return CandidateStrategy::Cwe1003;
  if (n->status == MappingStatus::Discouraged) return CandidateStrategy::Family;
  if (n->kind == CweKind::Category || n->kind == CweKind::View) return CandidateStrategy::Members;
  return CandidateStrategy::Cwe1003;
}

CandidateSet build_candidates(const KnowledgeGraph& kg, const embed::EmbeddingModel* model, const RemapCase& c,
                              CandidateStrategy strategy, const CandidateOptions& options) {
  CandidateSet out{c.cve, c.old_cwe, strategy};
  out.resolved = strategy;
  if (strategy == CandidateStrategy::PerCweTailored) {
    out.resolved = default_tailored_strategy(kg, c.old_cwe);
    if (options.tailored) {
      if (auto it = options.tailored->find(c.old_cwe); it != options.tailored->end()) out.resolved = it->second;
    }
    if (out.resolved == CandidateStrategy::PerCweTailored) {
      throw ConfigError("tailored table maps " + c.old_cwe.key() + " to PerCweTailored");
    }
  }
  check_strategy(kg, c.old_cwe, out.resolved);
  if (out.resolved == CandidateStrategy::MembersFnn && !model) {
    throw ConfigError("MembersFnn needs a trained model");
  }

  std::set<EntityId> seen;
  switch (out.resolved) {
    case CandidateStrategy::Cwe1003:
      append_admissible(kg, c.old_cwe, cwe1003_pool(kg), seen, out.cwes);
      break;
    case CandidateStrategy::Top25:
      append_admissible(kg, c.old_cwe, sorted(options.top25), seen, out.cwes);
      break;
    case CandidateStrategy::Descendants:
    case CandidateStrategy::Family:
      append_admissible(kg, c.old_cwe, kg::descendants_in_view(kg, c.old_cwe), seen, out.cwes);
      break;
    case CandidateStrategy::Members:
    case CandidateStrategy::MembersFnn:
      append_admissible(kg, c.old_cwe, members_closure(kg, c.old_cwe), seen, out.cwes);
      break;
    case CandidateStrategy::PerCweTailored:
      break;
  }

  if (out.resolved == CandidateStrategy::Family && out.cwes.size() < options.threshold) {
    const auto before = out.cwes.size();
    for (auto p : kg::parents_of(kg, kg.require(c.old_cwe))) {
      append_admissible(kg, c.old_cwe, kg::descendants_in_view(kg, kg.entity(p)), seen, out.cwes);
    }
    if (out.cwes.size() > before) out.fill_source = FillSource::ParentExpansion;
  }

  if (out.resolved == CandidateStrategy::MembersFnn && out.cwes.size() < options.threshold) {
    if (!model->contains(c.old_cwe)) {
      out.diagnostics.push_back(c.old_cwe.key() + " is not embedded; no nearest-neighbour fill");
    } else {
      std::vector<EntityId> pool;
      for (const auto& w : cwe1003_pool(kg)) {
        if (w != c.old_cwe && !seen.contains(w) && model->contains(w)) pool.push_back(w);
      }
      const auto want = options.threshold - out.cwes.size();
      std::vector<EntityId> near;
      for (const auto& nb : embed::nearest_neighbors(*model, c.old_cwe, pool, want)) near.push_back(nb.id);
      append_admissible(kg, c.old_cwe, near, seen, out.cwes);
      if (!near.empty()) out.fill_source = FillSource::FnnFill;
    }
  }

  if (out.cwes.empty()) {
    out.empty_result = true;
    out.diagnostics.push_back(std::string(to_string(out.resolved)) + " produced no candidates for " +
                              c.old_cwe.key());
  }
  return out;
}

TailoredTable tailored_strategy_table(const KnowledgeGraph& kg, std::span<const RemapCase> history,
                                      const CandidateOptions& options) {
  constexpr std::array order{CandidateStrategy::Descendants, CandidateStrategy::Members, CandidateStrategy::Top25,
                             CandidateStrategy::Cwe1003};
  std::map<EntityId, std::array<std::size_t, order.size()>> votes;
  for (const auto& c : history) {
    if (!c.truth || c.truth->empty()) continue;
    for (std::size_t i = 0; i < order.size(); ++i) {
      try {
        check_strategy(kg, c.old_cwe, order[i]);
      } catch (const StrategyMismatchError&) {
        continue;
      } catch (const UnknownEntityError&) {
        continue;
      }
      const auto set = build_candidates(kg, nullptr, c, order[i], options);
      const bool hit = std::any_of(c.truth->begin(), c.truth->end(), [&](const EntityId& t) {
        return std::find(set.cwes.begin(), set.cwes.end(), t) != set.cwes.end();
      });
      if (hit) {
        ++votes[c.old_cwe][i];
        break;
      }
    }
  }
  TailoredTable out;
  for (const auto& [old, counts] : votes) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < order.size(); ++i) {
      if (counts[i] > counts[best]) best = i;
    }
    out.emplace(old, order[best]);
  }
  return out;
}

std::string candidates_jsonl(std::span<const CandidateSet> sets) {
  std::string out;
  for (const auto& s : sets) {
    nlohmann::ordered_json j;
    j["cve"] = s.cve.key();
    j["old_cwe"] = s.old_cwe.key();
    j["strategy"] = to_string(s.strategy);
    if (s.resolved != s.strategy) j["resolved"] = to_string(s.resolved);
    auto& list = j["candidates"] = nlohmann::ordered_json::array();
    for (const auto& c : s.cwes) list.push_back(c.key());
    j["fill_source"] = s.fill_source ? nlohmann::ordered_json(to_string(*s.fill_source)) : nlohmann::ordered_json();
    if (!s.diagnostics.empty()) j["diagnostics"] = s.diagnostics;
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace candidates
}  // namespace fixv2w
