// SPDX-License-Identifier: Apache-2.0
#include "fixv2w/remap.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <thread>

#include <json.hpp>

#include "fixv2w/csv.hpp"
#include "fixv2w/error.hpp"

namespace fixv2w::remap {
namespace {

using kg::EntityId;
using kg::KnowledgeGraph;
using kg::MappingStatus;
using kg::RelationKind;

std::string format_score(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", s);
  return buf;
}

void rank_case(const KnowledgeGraph& kg, const embed::EmbeddingModel& model, RemapCase& c,
               CandidateStrategy strategy, const FixOptions& options) {
  try {
    c.candidates = candidates::build_candidates(kg, &model, c, strategy, options.candidates);
  } catch (const Error& e) {
    c.diagnostics.push_back(std::string("no candidates: ") + e.what());
    return;
  }
  auto& set = *c.candidates;
  std::vector<EntityId> kept;
  for (const auto& w : set.cwes) {
    if (model.contains(w)) {
      kept.push_back(w);
    } else {
      set.diagnostics.push_back(w.key() + " is not embedded; dropped from candidates");
    }
  }
  set.cwes = std::move(kept);
  if (!model.contains(c.cve)) {
    c.diagnostics.push_back(c.cve.key() + " is not embedded; left unranked");
    return;
  }
  c.predictions = rank_candidates(model, c.cve, set.cwes);
}

}  // namespace

std::vector<RemapCase> determine_invalid(const KnowledgeGraph& kg, std::optional<MappingStatus> status) {
  std::vector<RemapCase> out;
  for (const auto& ref : kg.triple_refs()) {
    if (ref.relation != RelationKind::MatchingCWE) continue;
    const auto* node = kg.cwe_node(ref.tail);
    if (!node || !node->invalid()) continue;
    if (status && node->status != *status) continue;
    RemapCase c{kg.entity(ref.head), node->id};
    c.old_status = node->status;
    out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end(), [](const RemapCase& a, const RemapCase& b) {
    return std::tie(a.cve, a.old_cwe) < std::tie(b.cve, b.old_cwe);
  });
  return out;
}

std::vector<Prediction> rank_candidates(const embed::EmbeddingModel& model, const EntityId& cve,
                                        std::span<const EntityId> cwes) {
  const auto head = model.require_row(cve);
  std::vector<Prediction> out;
  out.reserve(cwes.size());
  for (const auto& w : cwes) {
    out.push_back({w, static_cast<double>(model.score(head, RelationKind::MatchingCWE, model.require_row(w)))});
  }
  std::sort(out.begin(), out.end(), [](const Prediction& a, const Prediction& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.cwe < b.cwe;
  });
  return out;
}

std::vector<RemapCase> fix_v2w(const KnowledgeGraph& kg, const embed::EmbeddingModel& model,
                               std::vector<RemapCase> cases, CandidateStrategy strategy, const FixOptions& options) {
  const std::size_t threads = std::clamp<std::size_t>(options.threads, 1, std::max<std::size_t>(1, cases.size()));
  auto work = [&](std::size_t t) {
    for (std::size_t i = t; i < cases.size(); i += threads) rank_case(kg, model, cases[i], strategy, options);
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work, t);
    for (auto& th : pool) th.join();
  }
  return cases;
}

FixResult apply_fixes(const KnowledgeGraph& kg, std::span<const RemapCase> cases, std::size_t top_n) {
  if (top_n < 1 || top_n > 3) throw ConfigError("top_n must be 1, 2 or 3");
  FixResult result{kg.thawed()};
  std::vector<kg::Triple> doomed, added;
  std::set<EntityId> fixed;
  for (const auto& c : cases) {
    if (!c.predictions || c.predictions->empty()) {
      result.diagnostics.push_back(c.cve.key() + " / " + c.old_cwe.key() + " is unranked; not fixed");
      continue;
    }
    const kg::Triple old{c.cve, RelationKind::MatchingCWE, c.old_cwe};
    if (!kg.contains(old)) {
      result.diagnostics.push_back(c.cve.key() + " is not mapped to " + c.old_cwe.key() + "; not fixed");
      continue;
    }
    doomed.push_back(old);
    const auto n = std::min(top_n, c.predictions->size());
    for (std::size_t i = 0; i < n; ++i) added.push_back({c.cve, RelationKind::MatchingCWE, (*c.predictions)[i].cwe});
    fixed.insert(c.cve);
  }
  result.removed = result.graph.remove_triples(doomed);
  for (const auto& t : added) result.added += result.graph.add_triple(t) ? 1 : 0;
  result.graph.freeze();
  result.fixed_cves.assign(fixed.begin(), fixed.end());
  return result;
}

std::string predictions_jsonl(std::span<const RemapCase> cases) {
  std::string out;
  for (const auto& c : cases) {
    nlohmann::ordered_json j;
    j["cve"] = c.cve.key();
    j["old_cwe"] = c.old_cwe.key();
    j["strategy"] = c.candidates ? nlohmann::ordered_json(to_string(c.candidates->strategy)) : nlohmann::ordered_json();
    if (c.candidates && c.candidates->resolved != c.candidates->strategy) {
      j["resolved"] = to_string(c.candidates->resolved);
    }
    auto& ranked = j["ranked"] = nlohmann::ordered_json::array();
    if (c.predictions) {
      std::size_t rank = 0;
      for (const auto& p : *c.predictions) {
        ranked.push_back({{"cwe", p.cwe.key()}, {"score", std::stod(format_score(p.score))}, {"rank", ++rank}});
      }
    }
    if (c.truth) {
      auto& truth = j["truth"] = nlohmann::ordered_json::array();
      for (const auto& t : *c.truth) truth.push_back(t.key());
    }
    std::vector<std::string> diags = c.diagnostics;
    if (c.candidates) diags.insert(diags.end(), c.candidates->diagnostics.begin(), c.candidates->diagnostics.end());
    if (!diags.empty()) j["diagnostics"] = diags;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string predictions_csv(std::span<const RemapCase> cases) {
  std::string out = "cve,old_cwe,old_status,strategy,candidates,top1,top1_score,truth\n";
  for (const auto& c : cases) {
    std::string truth;
    if (c.truth) {
      for (const auto& t : *c.truth) truth += (truth.empty() ? "" : ";") + t.key();
    }
    const bool ranked = c.predictions && !c.predictions->empty();
    out += csv::escape(c.cve.key()) + ',' + csv::escape(c.old_cwe.key()) + ',' +
           std::string(kg::to_string(c.old_status)) + ',' +
           (c.candidates ? std::string(to_string(c.candidates->resolved)) : std::string()) + ',' +
           std::to_string(c.candidates ? c.candidates->cwes.size() : 0) + ',' +
           (ranked ? c.predictions->front().cwe.key() : std::string()) + ',' +
           (ranked ? format_score(c.predictions->front().score) : std::string()) + ',' + csv::escape(truth) + '\n';
  }
  return out;
}

}  // namespace fixv2w::remap
