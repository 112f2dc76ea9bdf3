// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cctype>
#include <charconv>

#include "fixv2w/error.hpp"
#include "fixv2w/kg.hpp"

namespace fixv2w::kg {
namespace {

bool all_digits(std::string_view s) {
  return !s.empty() &&
         std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

bool is_cve_key(std::string_view k) {
  // CVE-YYYY-NNNN+
  if (k.size() < 13 || k.substr(0, 4) != "CVE-" || k[8] != '-') return false;
  return all_digits(k.substr(4, 4)) && all_digits(k.substr(9));
}

bool is_numbered_cwe(std::string_view k) {
  return k.size() > 4 && k.substr(0, 4) == "CWE-" && all_digits(k.substr(4)) && k[4] != '0';
}

bool is_cwe_sentinel(std::string_view k) {
  return k == "NVD-CWE-Other" || k == "NVD-CWE-noinfo" || k == "CWE-Any";
}

bool is_cpe23_key(std::string_view k) {
  if (k.substr(0, 8) != "cpe:2.3:") return false;
  std::size_t colons = 0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (k[i] == '\\') {
      ++i;  // escaped character
    } else if (k[i] == ':') {
      ++colons;
    }
  }
  return colons == 12;
}

unsigned cwe_value(std::string_view k) {
  unsigned n = 0;
  std::from_chars(k.data() + 4, k.data() + k.size(), n);
  return n;
}

// Sentinels sort after numbered CWEs, in a fixed order.
int sentinel_rank(std::string_view k) {
  if (k == "NVD-CWE-Other") return 0;
  if (k == "NVD-CWE-noinfo") return 1;
  return 2;
}

}  // namespace

std::string_view to_string(Namespace ns) {
  switch (ns) {
    case Namespace::Cve: return "CVE";
    case Namespace::Cwe: return "CWE";
    case Namespace::Cpe: return "CPE";
  }
  return "?";
}

EntityId EntityId::cve(std::string_view key) {
  if (!is_cve_key(key)) {
    throw ValidationError("malformed CVE id '" + std::string(key) + "'");
  }
  return EntityId(Namespace::Cve, std::string(key));
}

EntityId EntityId::cwe(std::string_view key) {
  if (!is_numbered_cwe(key) && !is_cwe_sentinel(key)) {
    throw ValidationError("malformed CWE id '" + std::string(key) + "'");
  }
  return EntityId(Namespace::Cwe, std::string(key));
}

EntityId EntityId::cwe(unsigned number) {
  if (number == 0) {
    throw ValidationError("CWE ids are positive integers");
  }
  return EntityId(Namespace::Cwe, "CWE-" + std::to_string(number));
}

EntityId EntityId::cpe(std::string_view uri) {
  if (!is_cpe23_key(uri)) {
    throw ValidationError("malformed CPE 2.3 name '" + std::string(uri) + "'");
  }
  return EntityId(Namespace::Cpe, std::string(uri));
}

EntityId EntityId::parse(std::string_view key) {
  if (key.substr(0, 4) == "CVE-") return cve(key);
  if (key.substr(0, 4) == "cpe:") return cpe(key);
  return cwe(key);
}

bool EntityId::is_placeholder() const {
  return ns_ == Namespace::Cwe && (key_ == "NVD-CWE-Other" || key_ == "NVD-CWE-noinfo");
}

std::optional<unsigned> EntityId::cwe_number() const {
  if (ns_ != Namespace::Cwe || !is_numbered_cwe(key_)) return std::nullopt;
  return cwe_value(key_);
}

std::strong_ordering operator<=>(const EntityId& a, const EntityId& b) {
  if (auto c = a.ns_ <=> b.ns_; c != 0) return c;
  if (a.ns_ == Namespace::Cwe) {
    const bool an = is_numbered_cwe(a.key_);
    const bool bn = is_numbered_cwe(b.key_);
    if (an && bn) return cwe_value(a.key_) <=> cwe_value(b.key_);
    if (an != bn) return an ? std::strong_ordering::less : std::strong_ordering::greater;
    return sentinel_rank(a.key_) <=> sentinel_rank(b.key_);
  }
  if (a.ns_ == Namespace::Cve) {
    // Year, then sequence number numerically.
    auto year = [](const std::string& k) { return k.substr(4, 4); };
    if (auto c = year(a.key_) <=> year(b.key_); c != 0) return c;
    if (auto c = a.key_.size() <=> b.key_.size(); c != 0) return c;
  }
  return a.key_ <=> b.key_;
}

std::optional<EntityId> parse_cwe_tag(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) {
    text.remove_prefix(1);
  }
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) {
    text.remove_suffix(1);
  }
  if (text == "NVD-CWE-Other" || text == "NVD-CWE-noinfo") {
    return EntityId::cwe(text);
  }
  // Short spellings seen in change records and reports.
  if (text == "CWE-Other") return EntityId::cwe_other();
  if (text == "CWE-noinfo") return EntityId::cwe_noinfo();
  if (text.size() > 4 && (text.substr(0, 4) == "CWE-" || text.substr(0, 4) == "cwe-")) {
    text.remove_prefix(4);
  }
  if (all_digits(text) && text.front() != '0') {
    return EntityId::cwe("CWE-" + std::string(text));
  }
  return std::nullopt;
}

std::string_view to_string(RelationKind r) {
  switch (r) {
    case RelationKind::MatchingCWE: return "MatchingCWE";
    case RelationKind::MatchingCPE: return "MatchingCPE";
    case RelationKind::ChildOf: return "ChildOf";
    case RelationKind::ParentOf: return "ParentOf";
    case RelationKind::MemberOf: return "MemberOf";
    case RelationKind::HasMember: return "HasMember";
    case RelationKind::RelatedTo: return "RelatedTo";
  }
  return "?";
}

RelationKind parse_relation(std::string_view name) {
  for (RelationKind r : kAllRelations) {
    if (to_string(r) == name) return r;
  }
  throw ValidationError("unknown relation '" + std::string(name) + "'");
}

std::optional<RelationKind> inverse(RelationKind r) {
  switch (r) {
    case RelationKind::ChildOf: return RelationKind::ParentOf;
    case RelationKind::ParentOf: return RelationKind::ChildOf;
    case RelationKind::MemberOf: return RelationKind::HasMember;
    case RelationKind::HasMember: return RelationKind::MemberOf;
    default: return std::nullopt;
  }
}

void validate(const Triple& t) {
  Namespace want_head = Namespace::Cwe;
  Namespace want_tail = Namespace::Cwe;
  switch (t.relation) {
    case RelationKind::MatchingCWE:
      want_head = Namespace::Cve;
      break;
    case RelationKind::MatchingCPE:
      want_head = Namespace::Cve;
      want_tail = Namespace::Cpe;
      break;
    default:
      break;
  }
  if (t.head.ns() != want_head || t.tail.ns() != want_tail) {
    throw ValidationError("triple (" + t.head.key() + ", " + std::string(to_string(t.relation)) +
                          ", " + t.tail.key() + ") needs a " +
                          std::string(to_string(want_head)) + " head and a " +
                          std::string(to_string(want_tail)) + " tail");
  }
  if (t.head.key() == "CWE-Any" || t.tail.key() == "CWE-Any") {
    throw ValidationError("the CWE-Any wildcard cannot appear in a triple");
  }
}

std::string_view to_string(CweKind k) {
  switch (k) {
    case CweKind::Weakness: return "Weakness";
    case CweKind::Category: return "Category";
    case CweKind::View: return "View";
    case CweKind::Deprecated: return "Deprecated";
    case CweKind::Placeholder: return "Placeholder";
  }
  return "?";
}

std::string_view to_string(Abstraction a) {
  switch (a) {
    case Abstraction::Pillar: return "Pillar";
    case Abstraction::Class: return "Class";
    case Abstraction::Base: return "Base";
    case Abstraction::Variant: return "Variant";
    case Abstraction::Compound: return "Compound";
  }
  return "?";
}

std::string_view to_string(MappingStatus s) {
  switch (s) {
    case MappingStatus::Allowed: return "Allowed";
    case MappingStatus::Discouraged: return "Discouraged";
    case MappingStatus::Prohibited: return "Prohibited";
    case MappingStatus::Placeholder: return "Placeholder";
  }
  return "?";
}

CweKind parse_cwe_kind(std::string_view s) {
  for (CweKind k : {CweKind::Weakness, CweKind::Category, CweKind::View, CweKind::Deprecated,
                    CweKind::Placeholder}) {
    if (to_string(k) == s) return k;
  }
  throw ValidationError("unknown CWE kind '" + std::string(s) + "'");
}

std::optional<Abstraction> parse_abstraction(std::string_view s) {
  for (Abstraction a : {Abstraction::Pillar, Abstraction::Class, Abstraction::Base,
                        Abstraction::Variant, Abstraction::Compound}) {
    if (to_string(a) == s) return a;
  }
  return std::nullopt;
}

std::optional<MappingStatus> parse_status(std::string_view s) {
  if (s == "Allowed" || s == "Allowed-with-Review") return MappingStatus::Allowed;
  if (s == "Discouraged") return MappingStatus::Discouraged;
  if (s == "Prohibited") return MappingStatus::Prohibited;
  if (s == "Placeholder") return MappingStatus::Placeholder;
  return std::nullopt;
}

CweNode normalized(CweNode node) {
  if (node.id.ns() != Namespace::Cwe) {
    throw ValidationError("CWE node with non-CWE id '" + node.id.key() + "'");
  }
  if (node.id.is_placeholder()) {
    node.kind = CweKind::Placeholder;
  }
  switch (node.kind) {
    case CweKind::Weakness:
      if (!node.abstraction) node.abstraction = Abstraction::Base;
      if (node.status == MappingStatus::Placeholder) node.status = MappingStatus::Allowed;
      break;
    case CweKind::Placeholder:
      node.abstraction.reset();
      node.status = MappingStatus::Placeholder;
      node.in_view_1003 = false;
      break;
    default:
      node.abstraction.reset();
      node.status = MappingStatus::Prohibited;
      break;
  }
  if (node.status == MappingStatus::Prohibited) {
    node.in_view_1003 = false;
  }
  return node;
}

}  // namespace fixv2w::kg
