// SPDX-License-Identifier: Apache-2.0
//
// Readers for the public data sources (NVD CVE feeds and change history,
// the MITRE CWE catalog, CISA KEV, Exploit-DB) and snapshot replay.
#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fixv2w/date.hpp"
#include "fixv2w/kg.hpp"
#include "fixv2w/remap_case.hpp"

namespace fixv2w::ingest {

// Non-fatal problems found while reading a document.
struct Diagnostics {
  std::vector<std::string> warnings;
  void warn(std::string message) { warnings.push_back(std::move(message)); }
};

// ---------------------------------------------------------------------------
// NVD CVE feed

struct CveRecord {
  kg::EntityId id;
  Date published;
  // "CWE-<n>" ids or the two NVD placeholders; empty when NVD lists none.
  std::vector<kg::EntityId> cwe_ids;
  std::vector<std::string> cpe_uris;

  friend bool operator==(const CveRecord&, const CveRecord&) = default;
};

struct CveFeed {
  std::vector<CveRecord> records;
  Diagnostics diagnostics;
};

// Reads an NVD API 2.0 response ("vulnerabilities") or a legacy 1.1 feed
// ("CVE_Items"). Throws ParseError with the byte offset for documents that
// are not JSON or have neither key; records that fail to read are skipped
// and reported in the diagnostics.
CveFeed parse_cve_feed(std::string_view document);

// Writes records in the API 2.0 response shape.
std::string emit_cve_feed(std::span<const CveRecord> records);

// ---------------------------------------------------------------------------
// CWE catalog

struct CweCatalog {
  std::string version;
  std::vector<kg::CweNode> nodes;
  // ChildOf, HasMember/MemberOf and RelatedTo edges between CWEs.
  std::vector<kg::Triple> edges;
  Diagnostics diagnostics;
};

// Reads the MITRE XML export (Weakness_Catalog). View 1003 membership sets
// in_view_1003; <Mapping_Notes><Usage> sets the mapping status.
CweCatalog parse_cwe_catalog(std::string_view xml);

// Reads a MITRE CSV view export (e.g. the CWE-1003 or Top-25 slice): the
// "CWE-ID" column, or the first column when absent. Order is preserved.
std::vector<kg::EntityId> parse_cwe_id_list(std::string_view csv);

// Marks the listed CWEs as members of view 1003 (clearing all others).
void set_view_1003(CweCatalog& catalog, std::span<const kg::EntityId> members);

// Applies a "CWE-ID,Status" CSV, for catalog releases that predate
// mapping-usage notes.
void apply_status_overrides(CweCatalog& catalog, std::string_view csv);

// Adds every node and edge to the graph.
void add_catalog(kg::KnowledgeGraph& graph, const CweCatalog& catalog);

// ---------------------------------------------------------------------------
// NVD change history

struct ChangeEvent {
  kg::EntityId cve;
  Timestamp timestamp;
  std::vector<kg::EntityId> removed_cwes;
  std::vector<kg::EntityId> added_cwes;
  std::string event_name;

  friend bool operator==(const ChangeEvent&, const ChangeEvent&) = default;
};

struct ChangeHistory {
  // Sorted by timestamp (then CVE id), stable for equal keys.
  std::vector<ChangeEvent> events;
  // Latest instant the history is known to cover.
  std::optional<Timestamp> covered_until;
  Diagnostics diagnostics;
};

// Keeps CWE-affecting changes only.
ChangeHistory parse_change_history(std::string_view document);
ChangeHistory merge_histories(std::vector<ChangeHistory> parts);

// Events whose timestamp falls on [from, to] (dates inclusive).
std::vector<ChangeEvent> events_between(const ChangeHistory& h, Date from, Date to);

// ---------------------------------------------------------------------------
// Snapshots

struct Snapshot {
  Date as_of;
  kg::KnowledgeGraph graph;
};

enum class FeedState {
  // The feed is the state before the first history event.
  Base,
  // The feed is the present state; history is undone to recover the base.
  Current,
};

// Replays every event dated on or before `as_of` on top of the feed's
// mappings, drops CVEs published after `as_of`, and attaches the catalog.
// Throws DateRangeError when `as_of` lies past the history's coverage.
Snapshot build_snapshot(std::span<const CveRecord> feed, const ChangeHistory& history,
                        const CweCatalog& catalog, Date as_of,
                        FeedState state = FeedState::Base);

// Per-CVE CWE sets after undoing every event (for FeedState::Current).
std::vector<CveRecord> rewind_feed(std::span<const CveRecord> feed, const ChangeHistory& history);

// One case per (CVE, old CWE) where the CVE is mapped to a CWE of
// `status_filter` in `train`, that mapping is gone in `valid`, and `valid`
// adds at least one Allowed CWE; those additions are the truth labels.
std::vector<RemapCase> build_test_set(const Snapshot& train, const Snapshot& valid,
                                      kg::MappingStatus status_filter);

void save_snapshot(const Snapshot& snapshot, const std::filesystem::path& dir);
Snapshot load_snapshot(const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Exploits

enum class ExploitSource { Kev, ExploitDb };
std::string_view to_string(ExploitSource s);

struct ExploitEvent {
  kg::EntityId cve;
  ExploitSource source;
  Date exploit_date;
  bool verified = true;

  friend bool operator==(const ExploitEvent&, const ExploitEvent&) = default;
};

// KEV as JSON or CSV (auto-detected), Exploit-DB as its files_exploits.csv
// index. Either input may be empty. Unverified Exploit-DB rows are dropped;
// the result holds one event per (cve, source), the earliest, sorted.
std::vector<ExploitEvent> parse_exploits(std::string_view kev, std::string_view exploitdb);

// ---------------------------------------------------------------------------
// NVD API client

struct FetchWindow {
  Date from;
  Date to;
};

// Thin paged client for the NVD 2.0 CVE and change-history endpoints.
// Every response page is cached on disk under a digest of its URL, so a
// warm cache replays without network access.
class NvdClient {
 public:
  using Transport = std::function<std::string(const std::string& url)>;

  NvdClient(std::filesystem::path cache_dir, std::optional<std::string> api_key,
            Transport transport = {});

  // Returns one document per page.
  std::vector<std::string> fetch_cves(FetchWindow window);
  std::vector<std::string> fetch_history(FetchWindow window);

  static std::string cache_key(const std::string& url);

 private:
  std::vector<std::string> fetch_paged(const std::string& path, const std::string& start_param,
                                       const std::string& end_param, std::string_view list_key,
                                       int page_size, FetchWindow window);
  std::string get(const std::string& url);

  std::filesystem::path cache_dir_;
  std::optional<std::string> api_key_;
  Transport transport_;
};

}  // namespace fixv2w::ingest
