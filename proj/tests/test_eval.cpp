// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <set>

#include <doctest.h>
#include <json.hpp>

#include "fixtures.hpp"
#include "fixv2w/error.hpp"
#include "fixv2w/eval.hpp"
#include "fixv2w/remap.hpp"

using namespace fixv2w;
using namespace fixv2w::eval;
using namespace fixv2w::testing;

namespace {

Date ymd(int y, unsigned m, unsigned d) {
  return Date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
}

RemapCase ranked_case(const std::string& id, unsigned old, std::vector<unsigned> ranking, std::vector<unsigned> truth,
                      MappingStatus status = MappingStatus::Discouraged) {
  RemapCase c{cve(id), cwe(old)};
  c.old_status = status;
  std::vector<Prediction> p;
  double score = 0;
  for (unsigned w : ranking) p.push_back({cwe(w), score -= 1});
  c.predictions = std::move(p);
  std::vector<EntityId> t;
  for (unsigned w : truth) t.push_back(cwe(w));
  c.truth = std::move(t);
  return c;
}

// Neutralization slice plus a second branch and leaves for fine/coarse checks.
KnowledgeGraph eval_graph() {
  auto g = neutralization_graph();
  weakness(g, 141, Abstraction::Variant, MappingStatus::Allowed, true);
  child_of(g, 141, 138);
  weakness(g, 664, Abstraction::Pillar, MappingStatus::Discouraged);
  for (unsigned w : {400u, 401u, 402u, 403u, 404u, 405u, 406u, 407u, 408u, 409u}) {
    weakness(g, w, Abstraction::Base, MappingStatus::Allowed, true);
    child_of(g, w, 664);
  }
  g.freeze();
  return g;
}

}  // namespace

TEST_SUITE("eval matches") {
  TEST_CASE("worked example: exact at 4, fine at 2, coarse at 1") {
    const auto g = neutralization_graph();
    const std::vector<EntityId> ranking{cwe(228), cwe(138), cwe(707), cwe(140)};
    const std::vector<EntityId> truth{cwe(140)};
    const auto m = classify_ranking(g, ranking, truth);
    CHECK(m.kind == MatchKind::Exact);
    CHECK(m.rank == 4u);
    CHECK(m.exact_rank == 4u);
    CHECK(m.fine_rank == 2u);
    CHECK(m.coarse_rank == 1u);
  }

  TEST_CASE("truth first is exact at rank 1") {
    const auto g = eval_graph();
    const auto m = classify_match(ranked_case("CVE-2020-0001", 138, {140, 228}, {140}), g);
    CHECK(m.kind == MatchKind::Exact);
    CHECK(m.rank == 1u);
  }

  TEST_CASE("a direct neighbour inside the cutoff is fine, a sibling only coarse") {
    const auto g = eval_graph();
    // Truth 140 sits at rank 12; its parent 138 at rank 3.
    const auto parent =
        classify_match(ranked_case("CVE-2020-0001", 707, {400, 401, 138, 402, 403, 404, 405, 406, 407, 408, 409, 140},
                                   {140}),
                       g);
    CHECK(parent.kind == MatchKind::Fine);
    CHECK(parent.rank == 3u);
    CHECK_FALSE(parent.exact_rank.has_value());
    // Sibling 141 shares the parent but is two hops away.
    const auto sibling = classify_match(ranked_case("CVE-2020-0001", 707, {400, 401, 141, 402}, {140}), g);
    CHECK(sibling.kind == MatchKind::Coarse);
    CHECK(sibling.rank == 3u);
    const auto none = classify_match(ranked_case("CVE-2020-0001", 707, {400, 401}, {140}), g);
    CHECK(none.kind == MatchKind::None);
    CHECK_FALSE(none.rank.has_value());
  }

  TEST_CASE("any truth label qualifies and the cutoff is honoured") {
    const auto g = eval_graph();
    const auto m = classify_match(ranked_case("CVE-2020-0001", 707, {400, 401, 228}, {140, 401}), g);
    CHECK(m.kind == MatchKind::Exact);
    CHECK(m.rank == 2u);
    CHECK(classify_match(ranked_case("CVE-2020-0001", 707, {400, 140}, {140}), g, 1).kind == MatchKind::None);
    CHECK(truth_rank(ranked_case("CVE-2020-0001", 707, {400, 401, 140}, {140})) == 3u);
  }

  TEST_CASE("unlabelled or unranked cases are rejected") {
    const auto g = eval_graph();
    auto c = ranked_case("CVE-2020-0001", 138, {140}, {140});
    c.truth.reset();
    CHECK_THROWS_AS(classify_match(c, g), UnlabeledCaseError);
    auto d = ranked_case("CVE-2020-0001", 138, {140}, {140});
    d.predictions.reset();
    CHECK_THROWS_AS(classify_match(d, g), UnlabeledCaseError);
  }
}

TEST_SUITE("eval metrics") {
  TEST_CASE("ranks 1, 2, 4") {
    const std::vector<std::size_t> ranks{1, 2, 4};
    const auto r = rank_metrics(ranks);
    CHECK(std::fabs(r.mrr - 0.58333333333333333) < 1e-9);
    CHECK(std::fabs(r.mr - 2.33333333333333333) < 1e-9);
    CHECK(r.hits.at(1) == doctest::Approx(1.0 / 3));
    CHECK(r.hits.at(3) == doctest::Approx(2.0 / 3));
    CHECK(r.hits.at(5) == 1.0);
  }

  TEST_CASE("a perfect ranking") {
    const std::vector<std::size_t> ranks{1, 1, 1, 1};
    const auto r = rank_metrics(ranks);
    CHECK(r.mrr == 1.0);
    CHECK(r.mr == 1.0);
    for (auto n : kHitsAt) CHECK(r.hits.at(n) == 1.0);
  }

  TEST_CASE("unfound truths") {
    const std::vector<RankEntry> e{{1, 10}, {std::nullopt, 10}, {4, 10}};
    const auto pen = rank_metrics(e);
    CHECK(pen.count == 3);
    CHECK(pen.unfound == 1);
    CHECK(pen.mr == doctest::Approx((1 + 11 + 4) / 3.0));
    CHECK(pen.mrr == doctest::Approx(1.25 / 3));
    const auto ex = rank_metrics(e, UnfoundPolicy::Exclude);
    CHECK(ex.count == 2);
    CHECK(ex.mr == doctest::Approx(2.5));
    CHECK_THROWS_AS(rank_metrics(std::span<const std::size_t>{}), EmptyInputError);
    const std::vector<std::size_t> zero{0};
    CHECK_THROWS_AS(rank_metrics(zero), ValidationError);
    const auto json = nlohmann::json::parse(rank_report_json(pen, "filtered"));
    CHECK(json["ranking"] == "filtered");
    CHECK(json["hits"]["10"] == doctest::Approx(2.0 / 3));
  }

  TEST_CASE("metric properties on random rank lists") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<std::size_t> ranks(1 + rng() % 30);
      for (auto& r : ranks) r = 1 + rng() % 40;
      const auto m = rank_metrics(ranks);
      CHECK(m.mrr >= 0.0);
      CHECK(m.mrr <= 1.0);
      CHECK(m.hits.at(1) <= m.mrr);
      double prev = 0;
      for (auto n : kHitsAt) {
        CHECK(m.hits.at(n) >= prev);
        prev = m.hits.at(n);
      }
    }
  }
}

TEST_SUITE("eval coverage") {
  TEST_CASE("single exact rank-1 case fills the first bucket") {
    const auto g = eval_graph();
    const std::vector<RemapCase> cases{ranked_case("CVE-2020-0001", 138, {140}, {140})};
    const auto r = coverage_report(cases, g, "Family");
    CHECK(r.cases == 1);
    CHECK(r.fraction(MatchKind::Exact, 0) == 1.0);
    CHECK(r.per_rank[0][0] == 1);
  }

  TEST_CASE("five cases against a hand tally") {
    const auto g = eval_graph();
    std::vector<RemapCase> cases{
        ranked_case("CVE-2020-0001", 707, {140}, {140}),                 // exact 1
        ranked_case("CVE-2020-0002", 707, {400, 401, 140}, {140}),       // exact 3
        ranked_case("CVE-2020-0003", 707, {400, 138}, {140}),            // fine 2
        ranked_case("CVE-2020-0004", 707, {400, 401, 402, 403, 404, 405, 228}, {140}),  // coarse 7
        ranked_case("CVE-2020-0005", 707, {400, 401}, {140}),            // none
    };
    auto unranked = ranked_case("CVE-2020-0006", 707, {}, {140});
    unranked.predictions.reset();
    cases.push_back(unranked);
    const auto r = coverage_report(cases, g, "Family");
    CHECK(r.cases == 6);
    CHECK(r.counts[0] == std::array<std::size_t, 4>{1, 1, 0, 0});
    CHECK(r.counts[1] == std::array<std::size_t, 4>{0, 1, 0, 0});
    CHECK(r.counts[2] == std::array<std::size_t, 4>{0, 0, 1, 0});
    CHECK(r.unmatched == 2);
    CHECK(r.unranked == 1);
    CHECK(r.per_rank[2][6] == 1);
    const std::vector<CoverageReport> reports{r};
    const auto csv = coverage_csv(reports);
    CHECK(csv.starts_with("strategy,cases,kind,rank_1,rank_2-5,rank_6-10,rank_10+,unmatched,unranked\n"));
    CHECK(csv.find("Family,6,exact,0.166667,0.166667,0.000000,0.000000,2,1\n") != std::string::npos);
    const auto hist = rank_histogram_csv(reports);
    CHECK(hist.find("Family,coarse,7,1\n") != std::string::npos);
  }
}

TEST_SUITE("eval completion") {
  TEST_CASE("closed-world ranks equal a brute-force oracle") {
    auto p = planted_graph(40, 4, 6);
    p.graph.freeze();
    const auto split = closed_world_split(p.graph, 0.25, 3);
    CHECK(split.held_out.size() == 10);
    for (const auto& t : split.held_out) {
      CHECK(t.relation == RelationKind::MatchingCWE);
      CHECK_FALSE(split.train.contains(t));
      CHECK(split.train.find(t.head).has_value());
    }
    embed::TrainingConfig cfg;
    cfg.dim = 8;
    cfg.epochs = 30;
    cfg.batch_size = 16;
    cfg.negatives = 5;
    cfg.learning_rate = 1e-2;
    const auto model = embed::train(split.train, cfg).model;
    const auto pool = p.cwes;
    const auto res = graph_completion_eval(split.train, split.held_out, WorldMode::Closed, model, pool);
    REQUIRE(res.ranks.size() == split.held_out.size());
    const std::set<kg::Triple> held(split.held_out.begin(), split.held_out.end());
    for (std::size_t i = 0; i < split.held_out.size(); ++i) {
      const auto& t = split.held_out[i];
      // Score every pool tail; sort descending with id ties; drop known ones.
      std::vector<std::pair<float, EntityId>> all;
      for (const auto& w : pool) {
        const kg::Triple c{t.head, t.relation, w};
        if (w != t.tail && (split.train.contains(c) || held.contains(c))) continue;
        all.emplace_back(model.score(c), w);
      }
      std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
      });
      std::size_t rank = 0;
      while (all[rank].second != t.tail) ++rank;
      CHECK(res.ranks[i].rank == rank + 1);
    }
    std::vector<RankEntry> expect = res.ranks;
    CHECK(res.report.mrr == doctest::Approx(rank_metrics(expect).mrr));
    CHECK_THROWS_AS(closed_world_split(p.graph, 1.5, 1), ConfigError);
  }

  TEST_CASE("open world rejects leaked triples and ranks the nearest tail first") {
    KnowledgeGraph g;
    weakness(g, 1, Abstraction::Base, MappingStatus::Allowed, true);
    weakness(g, 2, Abstraction::Base, MappingStatus::Allowed, true);
    weakness(g, 3, Abstraction::Base, MappingStatus::Allowed, true);
    g.add_triple({cve("CVE-2020-0001"), RelationKind::MatchingCWE, cwe(1)});
    g.freeze();
    embed::EmbeddingModel m(1, {cve("CVE-2020-0001"), cwe(1), cwe(2), cwe(3)});
    m.entity(m.require_row(cwe(1)))[0] = 5;   // known true, would rank first
    m.entity(m.require_row(cwe(2)))[0] = 0.1f;
    m.entity(m.require_row(cwe(3)))[0] = 2;
    const std::vector<EntityId> pool{cwe(1), cwe(2), cwe(3)};
    const std::vector<kg::Triple> eval{{cve("CVE-2020-0001"), RelationKind::MatchingCWE, cwe(2)}};
    const auto r = graph_completion_eval(g, eval, WorldMode::Open, m, pool);
    CHECK(r.ranks[0].rank == 1u);
    const std::vector<kg::Triple> leak{{cve("CVE-2020-0001"), RelationKind::MatchingCWE, cwe(1)}};
    CHECK_THROWS_AS(graph_completion_eval(g, leak, WorldMode::Open, m, pool), LeakageError);
    CHECK_NOTHROW(graph_completion_eval(g, leak, WorldMode::Closed, m, pool));
    const std::vector<kg::Triple> foreign{{cve("CVE-2024-9999"), RelationKind::MatchingCWE, cwe(2)}};
    const auto f = graph_completion_eval(g, foreign, WorldMode::Open, m, pool);
    CHECK_FALSE(f.ranks[0].rank.has_value());
    CHECK(f.report.mr == 4.0);
    CHECK(f.diagnostics.size() == 1);
  }

  TEST_CASE("open-world triples are later Allowed additions for known CVEs") {
    KnowledgeGraph before, after;
    for (auto* g : {&before, &after}) {
      weakness(*g, 1, Abstraction::Base, MappingStatus::Allowed, true);
      weakness(*g, 2, Abstraction::Class, MappingStatus::Discouraged);
      weakness(*g, 3, Abstraction::Base, MappingStatus::Allowed, true);
      g->add_triple({cve("CVE-2020-0001"), RelationKind::MatchingCWE, cwe(2)});
    }
    after.add_triple({cve("CVE-2020-0001"), RelationKind::MatchingCWE, cwe(1)});
    after.add_triple({cve("CVE-2020-0001"), RelationKind::MatchingCWE, cwe(3)});
    after.add_triple({cve("CVE-2023-0001"), RelationKind::MatchingCWE, cwe(3)});
    const auto t = open_world_triples(before, after);
    CHECK(t == std::vector<kg::Triple>{{cve("CVE-2020-0001"), RelationKind::MatchingCWE, cwe(1)},
                                       {cve("CVE-2020-0001"), RelationKind::MatchingCWE, cwe(3)}});
  }
}

TEST_SUITE("eval exploits") {
  TEST_CASE("three exploited CVEs with mixed dates") {
    const auto g = eval_graph();
    const std::vector<RemapCase> cases{
        ranked_case("CVE-2020-0001", 138, {140, 141}, {140}),  // exploited, later remapped: correct
        ranked_case("CVE-2020-0002", 138, {400}, {140}),       // exploited after remap
        ranked_case("CVE-2020-0003", 707, {400}, {140}, MappingStatus::Prohibited),  // exploited, wrong
        ranked_case("CVE-2020-0004", 138, {140}, {140}),       // never exploited
        ranked_case("CVE-2020-0005", 138, {140}, {140}),       // exploited before the window
    };
    auto ex = [](const std::string& id, Date d) {
      return ingest::ExploitEvent{cve(id), ingest::ExploitSource::Kev, d};
    };
    const std::vector<ingest::ExploitEvent> exploits{
        ex("CVE-2020-0001", ymd(2022, 1, 5)), ex("CVE-2020-0001", ymd(2023, 1, 5)),
        ex("CVE-2020-0002", ymd(2022, 9, 1)), ex("CVE-2020-0003", ymd(2022, 2, 1)),
        ex("CVE-2020-0005", ymd(2020, 2, 1))};
    ingest::ChangeHistory h;
    auto remap = [](const std::string& id, unsigned old, unsigned add, const char* when) {
      return ingest::ChangeEvent{cve(id), parse_timestamp(when), {cwe(old)}, {cwe(add)}};
    };
    h.events = {remap("CVE-2020-0002", 138, 140, "2022-03-01T00:00:00"),
                remap("CVE-2020-0001", 138, 140, "2022-06-01T00:00:00"),
                remap("CVE-2020-0003", 707, 140, "2022-07-01T00:00:00"),
                remap("CVE-2020-0005", 138, 140, "2022-07-01T00:00:00")};
    const auto r = exploit_analysis(cases, exploits, h, g, ymd(2021, 8, 4), ymd(2024, 12, 17));
    REQUIRE(r.rows.size() == 3);
    CHECK(r.rows[0].remapped_after_exploit);
    CHECK(r.rows[0].correctly_predicted);
    CHECK(r.rows[0].exploit_date == ymd(2022, 1, 5));
    CHECK(r.rows[0].remap_date == ymd(2022, 6, 1));
    CHECK_FALSE(r.rows[1].remapped_after_exploit);
    CHECK_FALSE(r.rows[1].correctly_predicted);
    CHECK(r.rows[2].remapped_after_exploit);
    CHECK_FALSE(r.rows[2].correctly_predicted);
    CHECK(r.discouraged.exploited == 2);
    CHECK(r.discouraged.remapped == 2);
    CHECK(r.discouraged.remapped_after_exploit == 1);
    CHECK(r.discouraged.correctly_predicted == 1);
    CHECK(r.discouraged.by_kind[0] == 1);
    CHECK(r.prohibited.exploited == 1);
    CHECK(r.prohibited.correctly_predicted == 0);
    const auto j = nlohmann::json::parse(exploit_report_json(r));
    CHECK(j["discouraged"]["correctly_predicted"] == 1);
    CHECK(j["cases"][0]["remap_date"] == "2022-06-01");
  }
}
