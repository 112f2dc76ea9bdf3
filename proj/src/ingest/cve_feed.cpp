// SPDX-License-Identifier: Apache-2.0
#include <algorithm>

#include <json.hpp>

#include "fixv2w/error.hpp"
#include "fixv2w/ingest.hpp"

namespace fixv2w::ingest {
namespace {

using nlohmann::json;

template <class T>
void push_unique(std::vector<T>& xs, T x) {
  if (std::find(xs.begin(), xs.end(), x) == xs.end()) xs.push_back(std::move(x));
}

void read_weakness_values(const json& descriptions, CveRecord& rec, Diagnostics& diag) {
  for (const auto& d : descriptions) {
    const auto value = d.value("value", std::string{});
    if (auto id = kg::parse_cwe_tag(value)) {
      push_unique(rec.cwe_ids, *id);
    } else {
      diag.warn(rec.id.key() + ": ignoring weakness value '" + value + "'");
    }
  }
}

void add_cpe(const json& value, CveRecord& rec, Diagnostics& diag) {
  const auto uri = value.get<std::string>();
  try {
    kg::EntityId::cpe(uri);
    push_unique(rec.cpe_uris, uri);
  } catch (const ValidationError&) {
    diag.warn(rec.id.key() + ": ignoring malformed CPE '" + uri + "'");
  }
}

// API 2.0: configurations[].nodes[].cpeMatch[].criteria
void read_cpe_nodes_v2(const json& configurations, CveRecord& rec, Diagnostics& diag) {
  for (const auto& conf : configurations) {
    if (!conf.contains("nodes")) continue;
    for (const auto& node : conf["nodes"]) {
      if (!node.contains("cpeMatch")) continue;
      for (const auto& m : node["cpeMatch"]) {
        if (!m.value("vulnerable", true)) continue;
        if (m.contains("criteria")) add_cpe(m["criteria"], rec, diag);
      }
    }
  }
}

// 1.1: nodes[].cpe_match[].cpe23Uri with nested children.
void read_cpe_nodes_v1(const json& nodes, CveRecord& rec, Diagnostics& diag) {
  for (const auto& node : nodes) {
    if (node.contains("cpe_match")) {
      for (const auto& m : node["cpe_match"]) {
        if (!m.value("vulnerable", true)) continue;
        if (m.contains("cpe23Uri")) add_cpe(m["cpe23Uri"], rec, diag);
      }
    }
    if (node.contains("children")) read_cpe_nodes_v1(node["children"], rec, diag);
  }
}

CveRecord read_v2(const json& item, Diagnostics& diag) {
  const json& cve = item.at("cve");
  CveRecord rec{kg::EntityId::cve(cve.at("id").get<std::string>()),
                parse_date(cve.at("published").get<std::string>())};
  if (cve.contains("weaknesses")) {
    for (const auto& w : cve["weaknesses"]) {
      if (w.contains("description")) read_weakness_values(w["description"], rec, diag);
    }
  }
  if (cve.contains("configurations")) read_cpe_nodes_v2(cve["configurations"], rec, diag);
  return rec;
}

CveRecord read_v1(const json& item, Diagnostics& diag) {
  const json& cve = item.at("cve");
  CveRecord rec{kg::EntityId::cve(cve.at("CVE_data_meta").at("ID").get<std::string>()),
                parse_date(item.at("publishedDate").get<std::string>())};
  if (cve.contains("problemtype")) {
    for (const auto& pt : cve["problemtype"].value("problemtype_data", json::array())) {
      if (pt.contains("description")) read_weakness_values(pt["description"], rec, diag);
    }
  }
  if (item.contains("configurations") && item["configurations"].contains("nodes")) {
    read_cpe_nodes_v1(item["configurations"]["nodes"], rec, diag);
  }
  return rec;
}

}  // namespace

CveFeed parse_cve_feed(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed CVE feed: ") + e.what(), e.byte);
  }
  if (!doc.is_object()) throw ParseError("CVE feed is not a JSON object", 0);

  const bool v2 = doc.contains("vulnerabilities");
  const bool v1 = doc.contains("CVE_Items");
  if (!v2 && !v1) {
    throw ParseError("CVE feed has neither 'vulnerabilities' nor 'CVE_Items'", 0);
  }
  const json& items = v2 ? doc["vulnerabilities"] : doc["CVE_Items"];
  if (!items.is_array()) throw ParseError("CVE feed record list is not an array", 0);

  CveFeed feed;
  std::size_t pos = 0;
  for (const auto& item : items) {
    try {
      feed.records.push_back(v2 ? read_v2(item, feed.diagnostics) : read_v1(item, feed.diagnostics));
    } catch (const std::exception& e) {
      feed.diagnostics.warn("skipping record #" + std::to_string(pos) + ": " + e.what());
    }
    ++pos;
  }
  return feed;
}

std::string emit_cve_feed(std::span<const CveRecord> records) {
  json vulns = json::array();
  for (const auto& r : records) {
    json cve = {{"id", r.id.key()}, {"published", format_date(r.published) + "T00:00:00.000"}};
    if (!r.cwe_ids.empty()) {
      json desc = json::array();
      for (const auto& w : r.cwe_ids) desc.push_back({{"lang", "en"}, {"value", w.key()}});
      cve["weaknesses"] = json::array(
          {{{"source", "nvd@nist.gov"}, {"type", "Primary"}, {"description", desc}}});
    }
    if (!r.cpe_uris.empty()) {
      json matches = json::array();
      for (const auto& c : r.cpe_uris) matches.push_back({{"vulnerable", true}, {"criteria", c}});
      cve["configurations"] = json::array(
          {{{"nodes", json::array({{{"operator", "OR"}, {"negate", false}, {"cpeMatch", matches}}})}}});
    }
    vulns.push_back({{"cve", std::move(cve)}});
  }
  json doc = {{"resultsPerPage", records.size()},
              {"startIndex", 0},
              {"totalResults", records.size()},
              {"format", "NVD_CVE"},
              {"version", "2.0"},
              {"vulnerabilities", std::move(vulns)}};
  return doc.dump(2);
}

}  // namespace fixv2w::ingest
