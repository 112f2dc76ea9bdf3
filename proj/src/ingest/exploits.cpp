// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <map>
#include <regex>

#include <json.hpp>

#include "fixv2w/csv.hpp"
#include "fixv2w/error.hpp"
#include "fixv2w/ingest.hpp"

namespace fixv2w::ingest {
namespace {

using kg::EntityId;
using Key = std::pair<EntityId, ExploitSource>;

void keep_earliest(std::map<Key, ExploitEvent>& acc, ExploitEvent e) {
  auto [it, fresh] = acc.try_emplace({e.cve, e.source}, e);
  if (!fresh && e.exploit_date < it->second.exploit_date) it->second = std::move(e);
}

bool blank(std::string_view s) { return s.find_first_not_of(" \t\r\n") == std::string_view::npos; }

void read_kev(std::string_view text, std::map<Key, ExploitEvent>& acc) {
  const auto first = text.find_first_not_of(" \t\r\n\xEF\xBB\xBF");
  if (first != std::string_view::npos && text[first] == '{') {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("malformed KEV catalog: ") + e.what(), e.byte);
    }
    if (!doc.contains("vulnerabilities") || !doc["vulnerabilities"].is_array()) {
      throw ParseError("KEV catalog has no 'vulnerabilities' array", 0);
    }
    for (const auto& v : doc["vulnerabilities"]) {
      try {
        keep_earliest(acc, {EntityId::cve(v.at("cveID").get<std::string>()), ExploitSource::Kev,
                            parse_date(v.at("dateAdded").get<std::string>())});
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("KEV entry: ") + e.what(), 0);
      }
    }
    return;
  }
  csv::Table table(csv::parse(text));
  const auto id_col = table.require_column("cveID");
  const auto date_col = table.require_column("dateAdded");
  for (const auto& row : table.rows()) {
    keep_earliest(acc, {EntityId::cve(csv::Table::field(row, id_col)), ExploitSource::Kev,
                        parse_date(csv::Table::field(row, date_col))});
  }
}

void read_exploitdb(std::string_view text, std::map<Key, ExploitEvent>& acc) {
  csv::Table table(csv::parse(text));
  const auto date_col = table.require_column("date_published");
  const auto verified_col = table.require_column("verified");
  const auto codes_col = table.require_column("codes");
  static const std::regex cve_token(R"(CVE-[0-9]{4}-[0-9]{4,})");
  for (const auto& row : table.rows()) {
    if (csv::Table::field(row, verified_col) != "1") continue;
    const std::string codes(csv::Table::field(row, codes_col));
    const auto date = parse_date(csv::Table::field(row, date_col));
    for (auto it = std::sregex_iterator(codes.begin(), codes.end(), cve_token);
         it != std::sregex_iterator(); ++it) {
      keep_earliest(acc, {EntityId::cve(it->str()), ExploitSource::ExploitDb, date, true});
    }
  }
}

}  // namespace

std::string_view to_string(ExploitSource s) {
  return s == ExploitSource::Kev ? "KEV" : "ExploitDB";
}

std::vector<ExploitEvent> parse_exploits(std::string_view kev, std::string_view exploitdb) {
  std::map<Key, ExploitEvent> acc;
  if (!blank(kev)) read_kev(kev, acc);
  if (!blank(exploitdb)) read_exploitdb(exploitdb, acc);
  std::vector<ExploitEvent> out;
  out.reserve(acc.size());
  for (auto& [k, e] : acc) out.push_back(std::move(e));
  return out;
}

}  // namespace fixv2w::ingest
