// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace fixv2w {

using Date = std::chrono::year_month_day;
using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

// Accepts "YYYY-MM-DD" and any ISO-8601 datetime that starts with it.
Date parse_date(std::string_view text);

// "YYYY-MM-DDTHH:MM[:SS[.fff]]" with optional trailing "Z"; a bare date is
// read as midnight UTC.
Timestamp parse_timestamp(std::string_view text);

std::string format_date(Date d);
std::string format_timestamp(Timestamp t);

inline Date date_of(Timestamp t) {
  return Date{std::chrono::floor<std::chrono::days>(t)};
}

// First instant after the end of `d`; events strictly before it happened on
// or before `d`.
inline Timestamp end_of_day(Date d) {
  return Timestamp{std::chrono::sys_days{d} + std::chrono::days{1}};
}

}  // namespace fixv2w
