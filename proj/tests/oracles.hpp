// SPDX-License-Identifier: Apache-2.0
//
// Independent recomputations shared by the unit and acceptance suites.
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "fixtures.hpp"
#include "fixv2w/embed.hpp"
#include "fixv2w/ingest.hpp"
#include "fixv2w/longitudinal.hpp"

namespace fixv2w::testing {

// ---------------------------------------------------------------------------
// Gradients

// Random toy problem in double: `entities` rows, all relations, dim k.
struct Toy {
  std::size_t k;
  std::vector<double> ent, rel;
  std::vector<embed::Sample> batch;
  embed::ParamView<double> view() const { return {k, ent, rel}; }
};

inline Toy make_toy(std::size_t k, std::size_t entities, std::size_t triples, std::size_t negatives,
                    std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-0.8, 0.8);
  Toy t{k, std::vector<double>(entities * k), std::vector<double>(kg::kRelationCount * k), {}};
  for (auto& x : t.ent) x = d(rng);
  for (auto& x : t.rel) x = d(rng);
  std::uniform_int_distribution<embed::Row> pick(0, static_cast<embed::Row>(entities - 1));
  std::uniform_int_distribution<int> rel(0, 2);
  for (std::size_t i = 0; i < triples; ++i) {
    embed::Sample s{pick(rng), static_cast<std::uint8_t>(rel(rng)), pick(rng), {}};
    for (std::size_t j = 0; j < negatives; ++j) s.negatives.push_back(pick(rng));
    t.batch.push_back(std::move(s));
  }
  return t;
}

// Largest |analytic - central difference| / max(|analytic|, |fd|, 1e-7)
// over every parameter.
inline double max_fd_error(Toy toy, const embed::LossConfig& cfg) {
  embed::SparseGradient<double> grad(toy.ent.size() / toy.k, kg::kRelationCount, toy.k);
  embed::loss_and_gradient<double>(toy.view(), toy.batch, cfg, &grad);
  const double h = 1e-4;
  double worst = 0;
  auto check = [&](std::vector<double>& params, std::size_t i, double analytic) {
    const double x = params[i];
    params[i] = x + h;
    const double up = embed::loss_and_gradient<double>(toy.view(), toy.batch, cfg, nullptr);
    params[i] = x - h;
    const double down = embed::loss_and_gradient<double>(toy.view(), toy.batch, cfg, nullptr);
    params[i] = x;
    const double fd = (up - down) / (2 * h);
    const double denom = std::max({std::fabs(fd), std::fabs(analytic), 1e-7});
    worst = std::max(worst, std::fabs(fd - analytic) / denom);
  };
  for (std::size_t i = 0; i < toy.ent.size(); ++i) {
    const double* g = grad.entity_grad(static_cast<embed::Row>(i / toy.k));
    check(toy.ent, i, g ? g[i % toy.k] : 0.0);
  }
  for (std::size_t i = 0; i < toy.rel.size(); ++i) {
    const double* g = grad.relation_grad(i / toy.k);
    check(toy.rel, i, g ? g[i % toy.k] : 0.0);
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Longitudinal

using EdgeList = std::vector<std::pair<unsigned, unsigned>>;

// Undirected BFS over an explicit edge list.
inline std::optional<std::size_t> bfs(const EdgeList& edges, unsigned a, unsigned b) {
  std::map<unsigned, std::vector<unsigned>> adj;
  for (auto [c, p] : edges) {
    adj[c].push_back(p);
    adj[p].push_back(c);
  }
  std::map<unsigned, std::size_t> dist{{a, 0}};
  std::queue<unsigned> q;
  q.push(a);
  while (!q.empty()) {
    auto u = q.front();
    q.pop();
    if (u == b) return dist[u];
    for (auto v : adj[u])
      if (!dist.contains(v)) {
        dist[v] = dist[u] + 1;
        q.push(v);
      }
  }
  return std::nullopt;
}

// Weaknesses CWE-1..15 in a random forest plus category CWE-100 = {3, 4, 5};
// `events` random remaps over them, the category and the placeholders.
struct RandomHistory {
  KnowledgeGraph graph;
  EdgeList edges;
  std::vector<ingest::ChangeEvent> events;
};

inline constexpr unsigned kRandomCategory = 100;

inline RandomHistory random_history(std::mt19937& rng, int events) {
  RandomHistory h;
  const unsigned n = 15;
  for (unsigned i = 1; i <= n; ++i) weakness(h.graph, i, i <= 2 ? Abstraction::Pillar : Abstraction::Base);
  for (unsigned i = 3; i <= n; ++i) {
    if (rng() % 5 == 0) continue;  // leave some disconnected
    const unsigned p = 1 + static_cast<unsigned>(rng() % (i - 1));
    child_of(h.graph, i, p);
    h.edges.emplace_back(i, p);
  }
  category(h.graph, kRandomCategory, {3, 4, 5});
  const auto start = parse_timestamp("2020-01-01T00:00:00.000");
  for (int e = 0; e < events; ++e) {
    auto pick = [&]() -> EntityId {
      const auto r = rng() % 20;
      if (r == 0) return EntityId::cwe_noinfo();
      if (r == 1) return EntityId::cwe_other();
      if (r == 2) return cwe(kRandomCategory);
      return cwe(1 + static_cast<unsigned>(rng() % n));
    };
    std::vector<EntityId> removed, added;
    for (int k = 0, m = static_cast<int>(rng() % 3); k < m; ++k) removed.push_back(pick());
    for (int k = 0, m = 1 + static_cast<int>(rng() % 2); k < m; ++k) added.push_back(pick());
    h.events.push_back({cve("CVE-2020-" + std::to_string(1000 + e)), start + std::chrono::days{e}, removed, added});
  }
  return h;
}

struct NaiveStats {
  std::array<std::size_t, longitudinal::kBucketCount> buckets{};
  std::size_t counted = 0;
  std::map<std::pair<std::string, std::string>, std::size_t> pairs;
  std::map<std::string, std::size_t> added, removed;
};

// One pass over the events: hop buckets (placeholders and self-remaps
// skipped, the category has no path), pair counts with noinfo targets
// collapsed to CWE-Any, added/removed tallies.
inline NaiveStats naive_stats(const RandomHistory& h) {
  NaiveStats s;
  for (const auto& e : h.events) {
    for (const auto& a : e.added_cwes) ++s.added[a.key()];
    for (const auto& r : e.removed_cwes) ++s.removed[r.key()];
    for (const auto& r : e.removed_cwes)
      for (const auto& a : e.added_cwes) {
        if (r == a) continue;
        ++s.pairs[{a == EntityId::cwe_noinfo() ? "CWE-Any" : r.key(), a.key()}];
        if (r.is_placeholder() || a.is_placeholder()) continue;
        std::optional<std::size_t> hops;
        if (r != cwe(kRandomCategory) && a != cwe(kRandomCategory)) hops = bfs(h.edges, *r.cwe_number(), *a.cwe_number());
        const std::size_t b = hops ? std::min<std::size_t>(*hops, 4) - 1 : 4;
        ++s.buckets[b];
        ++s.counted;
      }
  }
  return s;
}

// Mismatches between the library statistics and naive_stats; empty when
// they agree.
inline std::vector<std::string> longitudinal_mismatches(const RandomHistory& h) {
  std::vector<std::string> bad;
  const auto s = naive_stats(h);
  const auto d = longitudinal::remap_distance_distribution(h.events, h.graph);
  if (d.counts != s.buckets) bad.push_back("hop buckets");
  if (d.counted != s.counted) bad.push_back("counted pairs");
  const auto pairs = longitudinal::remap_pair_frequencies(h.events, &h.graph);
  std::map<std::pair<std::string, std::string>, std::size_t> got;
  for (const auto& p : pairs) got[{p.old_cwe.key(), p.new_cwe.key()}] = p.count;
  if (got != s.pairs || pairs.size() != s.pairs.size()) bad.push_back("pair frequencies");
  const auto top = longitudinal::top_added_removed(h.events, 1u << 20);
  std::map<std::string, std::size_t> added, removed;
  for (const auto& c : top.added) added[c.cwe.key()] = c.count;
  for (const auto& c : top.removed) removed[c.cwe.key()] = c.count;
  if (added != s.added) bad.push_back("added counts");
  if (removed != s.removed) bad.push_back("removed counts");
  return bad;
}

// A random feed over the fixture catalog's CWEs with a history of `events`
// changes, published and changed across 2019-2021.
struct RandomFeed {
  std::vector<ingest::CveRecord> feed;
  ingest::ChangeHistory history;
};

inline RandomFeed random_feed(std::mt19937& rng, const ingest::CweCatalog& catalog, int cves, int events) {
  std::vector<EntityId> pool;
  for (const auto& n : catalog.nodes) pool.push_back(n.id);
  pool.push_back(EntityId::cwe_noinfo());
  pool.push_back(EntityId::cwe_other());
  pool.push_back(cwe(99999));  // not in the catalog
  auto pick = [&] { return pool[rng() % pool.size()]; };
  RandomFeed f;
  const auto base = std::chrono::sys_days{Date{std::chrono::year{2019}, std::chrono::January, std::chrono::day{1}}};
  for (int i = 0; i < cves; ++i) {
    ingest::CveRecord r{cve("CVE-2019-" + std::to_string(20000 + i)),
                        Date{base + std::chrono::days{static_cast<int>(rng() % 1000)}}, {}, {}};
    for (int k = 0, m = static_cast<int>(rng() % 3); k < m; ++k) {
      const auto c = pick();
      if (std::find(r.cwe_ids.begin(), r.cwe_ids.end(), c) == r.cwe_ids.end()) r.cwe_ids.push_back(c);
    }
    f.feed.push_back(std::move(r));
  }
  for (int e = 0; e < events; ++e) {
    const auto& r = f.feed[rng() % f.feed.size()];
    const auto day = std::chrono::sys_days{r.published} + std::chrono::days{1 + static_cast<int>(rng() % 400)};
    ingest::ChangeEvent ev{r.id, Timestamp{day} + std::chrono::hours{static_cast<int>(rng() % 24)}, {}, {}};
    for (int k = 0, m = static_cast<int>(rng() % 2); k < m; ++k) ev.removed_cwes.push_back(pick());
    for (int k = 0, m = static_cast<int>(rng() % 2) + (ev.removed_cwes.empty() ? 1 : 0); k < m; ++k) {
      ev.added_cwes.push_back(pick());
    }
    f.history.events.push_back(std::move(ev));
  }
  std::stable_sort(f.history.events.begin(), f.history.events.end(),
                   [](const auto& a, const auto& b) { return std::tie(a.timestamp, a.cve) < std::tie(b.timestamp, b.cve); });
  f.history.covered_until = parse_timestamp("2021-12-31T00:00:00.000");
  return f;
}

// Year-end mapping counts by replaying the events on per-CVE sets.
inline std::vector<longitudinal::YearCounts> naive_yearly_counts(const RandomFeed& f,
                                                                 const ingest::CweCatalog& catalog,
                                                                 int first_year, int last_year) {
  std::map<EntityId, kg::MappingStatus> status;
  // Categories, views and deprecated entries are Prohibited whatever the
  // catalog says.
  for (const auto& n : catalog.nodes) {
    status[n.id] = n.kind == kg::CweKind::Weakness ? n.status : kg::MappingStatus::Prohibited;
  }
  std::vector<longitudinal::YearCounts> out;
  for (int y = first_year; y <= last_year; ++y) {
    const Date end{std::chrono::year{y}, std::chrono::December, std::chrono::day{31}};
    std::map<EntityId, std::set<EntityId>> mapped;
    for (const auto& r : f.feed) {
      if (r.published <= end) mapped[r.id].insert(r.cwe_ids.begin(), r.cwe_ids.end());
    }
    for (const auto& e : f.history.events) {
      if (!(e.timestamp < end_of_day(end)) || !mapped.contains(e.cve)) continue;
      for (const auto& c : e.removed_cwes) mapped[e.cve].erase(c);
      for (const auto& c : e.added_cwes) mapped[e.cve].insert(c);
    }
    longitudinal::YearCounts c{y};
    for (const auto& [id, cwes] : mapped) {
      ++c.cves;
      if (cwes.empty()) ++c.unmapped_cves;
      for (const auto& w : cwes) {
        if (w == EntityId::cwe_other()) {
          ++c.other;
        } else if (w == EntityId::cwe_noinfo()) {
          ++c.noinfo;
        } else if (auto it = status.find(w); it != status.end()) {
          c.discouraged += it->second == kg::MappingStatus::Discouraged;
          c.prohibited += it->second == kg::MappingStatus::Prohibited;
        }
      }
    }
    out.push_back(c);
  }
  return out;
}

inline bool same_counts(const std::vector<longitudinal::YearCounts>& a, const std::vector<longitudinal::YearCounts>& b) {
  auto key = [](const longitudinal::YearCounts& c) {
    return std::tie(c.year, c.discouraged, c.prohibited, c.other, c.noinfo, c.cves, c.unmapped_cves);
  };
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (key(a[i]) != key(b[i])) return false;
  }
  return true;
}

}  // namespace fixv2w::testing
