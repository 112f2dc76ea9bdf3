// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <map>
#include <queue>
#include <random>
#include <set>

#include <doctest.h>
#include <json.hpp>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "fixv2w/longitudinal.hpp"

using namespace fixv2w;
using namespace fixv2w::longitudinal;
using namespace fixv2w::testing;
using ingest::ChangeEvent;

namespace {

Date ymd(int y, unsigned m, unsigned d) {
  return Date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
}

ChangeEvent remap(const std::string& id, std::vector<EntityId> removed, std::vector<EntityId> added,
                  int day = 0) {
  return {cve(id), parse_timestamp("2020-01-01T00:00:00.000") + std::chrono::days{day}, std::move(removed),
          std::move(added)};
}

}  // namespace

TEST_SUITE("longitudinal") {
  TEST_CASE("one 138 to 140 remap is one hop") {
    const auto g = neutralization_graph();
    const std::vector events = {remap("CVE-2020-0001", {cwe(138)}, {cwe(140)})};
    const auto d = remap_distance_distribution(events, g);
    CHECK(d.counted == 1);
    CHECK(d.fraction(HopBucket::One) == 1.0);
    CHECK(d.counts[static_cast<std::size_t>(HopBucket::NoPath)] == 0);
  }

  TEST_CASE("self-remaps and placeholders are excluded, optionally reported") {
    const auto g = neutralization_graph();
    std::vector events = {remap("CVE-2020-0001", {cwe(138)}, {cwe(138)}),
                          remap("CVE-2020-0002", {cwe(140)}, {kg::EntityId::cwe_noinfo()}),
                          remap("CVE-2020-0003", {cwe(707)}, {cwe(140)})};
    const auto d = remap_distance_distribution(events, g);
    CHECK(d.self_remaps == 1);
    CHECK(d.placeholder_pairs == 1);
    CHECK(d.counted == 1);
    CHECK(d.fraction(HopBucket::Two) == 1.0);

    const auto with = remap_distance_distribution(events, g, {.exclude_placeholders = false});
    CHECK(with.counted == 2);
    CHECK(with.counts[static_cast<std::size_t>(HopBucket::NoPath)] == 1);
    CHECK(with.fraction(HopBucket::NoPath) == 0.5);
  }

  TEST_CASE("paths of five or more hops land in 4+ and are flagged") {
    KnowledgeGraph g;
    for (unsigned i = 1; i <= 7; ++i) weakness(g, i, Abstraction::Base);
    for (unsigned i = 2; i <= 7; ++i) child_of(g, i, i - 1);
    const std::vector events = {remap("CVE-2020-0001", {cwe(1)}, {cwe(5)}),
                                remap("CVE-2020-0002", {cwe(1)}, {cwe(7)})};
    const auto d = remap_distance_distribution(events, g);
    CHECK(d.counts[static_cast<std::size_t>(HopBucket::FourPlus)] == 2);
    CHECK(d.beyond_four == 1);
    CHECK(d.diagnostics().size() == 1);
  }

  TEST_CASE("valid-only filter and unknown CWEs") {
    const auto g = cwe189_graph();
    const std::vector events = {remap("CVE-2020-0001", {cwe(189)}, {cwe(190)}),
                                remap("CVE-2020-0002", {cwe(119)}, {cwe(787)}),
                                remap("CVE-2020-0003", {cwe(119)}, {cwe(4242)})};
    const auto all = remap_distance_distribution(events, g);
    CHECK(all.unknown_pairs == 1);
    CHECK(all.counted == 2);
    const auto valid = remap_distance_distribution(events, g, {.valid_only = true});
    CHECK(valid.invalid_pairs == 1);
    CHECK(valid.counted == 1);
    CHECK(valid.fraction(HopBucket::One) == 1.0);
  }

  TEST_CASE("every statistic equals a naive recomputation on 100 random events") {
    std::mt19937 rng(3);
    for (int trial = 0; trial < 10; ++trial) {
      const auto h = random_history(rng, 100);
      CHECK(longitudinal_mismatches(h).empty());

      const auto d = remap_distance_distribution(h.events, h.graph);
      std::size_t sum = 0;
      double fsum = 0;
      for (std::size_t b = 0; b < kBucketCount; ++b) {
        sum += d.counts[b];
        fsum += d.fraction(static_cast<HopBucket>(b));
      }
      CHECK(sum == d.counted);
      if (d.counted) CHECK(fsum == doctest::Approx(1.0));

      const auto pairs = remap_pair_frequencies(h.events, &h.graph);
      for (std::size_t i = 1; i < pairs.size(); ++i) {
        const auto& a = pairs[i - 1];
        const auto& b = pairs[i];
        CHECK((a.count > b.count || (a.count == b.count && std::tie(a.old_cwe, a.new_cwe) < std::tie(b.old_cwe, b.new_cwe))));
      }
    }
  }

  TEST_CASE("yearly counts equal a naive replay of a random history") {
    const auto catalog = ingest::parse_cwe_catalog(read_fixture("cwe_catalog.xml"));
    std::mt19937 rng(11);
    for (int trial = 0; trial < 5; ++trial) {
      const auto f = random_feed(rng, catalog, 40, 100);
      const auto got = cumulative_invalid_counts(yearly_snapshots(f.feed, f.history, catalog, 2019, 2021));
      CHECK(same_counts(got, naive_yearly_counts(f, catalog, 2019, 2021)));
    }
  }

  TEST_CASE("pair frequencies: noinfo row, branch and membership columns") {
    const auto g = cwe189_graph();
    std::vector events = {
        remap("CVE-2020-0001", {cwe(119)}, {cwe(787)}),
        remap("CVE-2020-0002", {cwe(119)}, {cwe(787)}),
        remap("CVE-2020-0003", {cwe(189)}, {cwe(190)}),
        remap("CVE-2020-0004", {cwe(189)}, {cwe(22)}),
        remap("CVE-2020-0005", {cwe(119)}, {kg::EntityId::cwe_noinfo()}),
        remap("CVE-2020-0006", {cwe(190)}, {kg::EntityId::cwe_noinfo()}),
        remap("CVE-2020-0007", {cwe(190)}, {kg::EntityId::cwe_noinfo()}),
    };
    const auto pairs = remap_pair_frequencies(events, &g);
    REQUIRE(pairs.size() == 4);
    CHECK(pairs[0].old_cwe == kg::EntityId::any_cwe());
    CHECK(pairs[0].new_cwe == kg::EntityId::cwe_noinfo());
    CHECK(pairs[0].count == 3);
    CHECK(pairs[0].fraction == doctest::Approx(3.0 / 7.0));
    CHECK(pairs[1].old_cwe == cwe(119));
    CHECK(pairs[1].same_branch == true);
    CHECK_FALSE(pairs[1].is_member.has_value());
    // 189->22 sorts before 189->190 on the tie.
    CHECK(pairs[2].new_cwe == cwe(22));
    CHECK(pairs[2].is_member == false);
    CHECK_FALSE(pairs[2].same_branch.has_value());
    CHECK(pairs[3].is_member == true);

    CHECK(remap_pair_frequencies({}, &g).empty());
    CHECK_FALSE(remap_pair_frequencies(events).front().same_branch.has_value());
  }

  TEST_CASE("top added and removed on the ten-change fixture") {
    const auto h = ingest::parse_change_history(read_fixture("change_history.json"));
    const auto top = top_added_removed(h.events, 10);
    REQUIRE(top.added.size() == 4);
    CHECK(top.added[0].cwe == cwe(787));
    CHECK(top.added[0].count == 2);
    CHECK(top.added[1].cwe == cwe(119));
    CHECK(top.added[2].cwe == cwe(140));
    CHECK(top.added[3].cwe == cwe(190));
    REQUIRE(top.removed.size() == 4);
    CHECK(top.removed[0].cwe == cwe(119));
    CHECK(top.removed[3].cwe == kg::EntityId::cwe_noinfo());

    const auto one = top_added_removed(std::vector{remap("CVE-2020-0001", {cwe(20)}, {cwe(79)})}, 5);
    CHECK(one.added.size() == 1);
    CHECK(one.removed.front().cwe == cwe(20));
    CHECK(top_added_removed(h.events, 2).added.size() == 2);
  }

  TEST_CASE("cumulative counts follow a three-year replay") {
    ingest::CweCatalog catalog = ingest::parse_cwe_catalog(read_fixture("cwe_catalog.xml"));
    std::vector<ingest::CveRecord> feed = {
        {cve("CVE-2019-0001"), ymd(2019, 2, 1), {cwe(119)}, {}},
        {cve("CVE-2019-0002"), ymd(2019, 3, 1), {cwe(189)}, {}},
        {cve("CVE-2020-0001"), ymd(2020, 5, 1), {cwe(119), cwe(20)}, {}},
        {cve("CVE-2021-0001"), ymd(2021, 1, 9), {kg::EntityId::cwe_noinfo()}, {}},
        {cve("CVE-2021-0002"), ymd(2021, 2, 9), {}, {}},
    };
    ingest::ChangeHistory h;
    h.events = {remap("CVE-2019-0001", {cwe(119)}, {cwe(787)}, 200),  // 2020-07-19
                remap("CVE-2019-0002", {}, {cwe(264)}, 600),            // 2021-08-23
                remap("CVE-2020-0001", {cwe(119)}, {}, 700)};           // 2021-12-01
    h.covered_until = parse_timestamp("2021-12-31T00:00:00.000");

    const auto snaps = yearly_snapshots(feed, h, catalog, 2019, 2021);
    const auto counts = cumulative_invalid_counts(snaps);
    REQUIRE(counts.size() == 3);
    // 2019: 0001->119 (D), 0002->189 (P).
    CHECK(counts[0].year == 2019);
    CHECK(counts[0].discouraged == 1);
    CHECK(counts[0].prohibited == 1);
    // 2020: 119 replaced by 787; 0001-2020 adds 119 (D) and 20.
    CHECK(counts[1].discouraged == 1);
    CHECK(counts[1].prohibited == 1);
    // 2021: 189 + 264 (P), 119 removed, noinfo mapping, one unmapped CVE.
    CHECK(counts[2].discouraged == 0);
    CHECK(counts[2].prohibited == 2);
    CHECK(counts[2].noinfo == 1);
    CHECK(counts[2].cves == 5);
    CHECK(counts[2].unmapped_cves == 1);

    const auto flat = cumulative_invalid_counts(yearly_snapshots(feed, {}, catalog, 2022, 2023));
    CHECK(flat[0].discouraged == flat[1].discouraged);
    CHECK(flat[0].prohibited == flat[1].prohibited);
  }

  TEST_CASE("reports") {
    const auto g = neutralization_graph();
    const std::vector events = {remap("CVE-2020-0001", {cwe(138)}, {cwe(140)})};
    Report r;
    r.distance = remap_distance_distribution(events, g);
    r.pairs = remap_pair_frequencies(events, &g);
    r.top = top_added_removed(events, 10);
    r.events = events.size();
    CHECK(distance_csv(r.distance).starts_with("bucket,count,fraction\n1,1,1\n"));
    CHECK(pairs_csv(r.pairs) == "old_cwe,new_cwe,count,fraction,same_branch,is_member\nCWE-138,CWE-140,1,1,yes,-\n");
    CHECK(top_csv(r.top) == "list,rank,cwe,count\nadded,1,CWE-140,1\nremoved,1,CWE-138,1\n");
    const auto doc = nlohmann::json::parse(report_json(r));
    CHECK(doc["distance"]["buckets"]["1"]["fraction"] == 1.0);
    CHECK(doc["pairs"][0]["is_member"].is_null());
  }
}
