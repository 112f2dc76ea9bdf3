// SPDX-License-Identifier: Apache-2.0
#include "fixv2w/date.hpp"

#include <charconv>
#include <cstdio>

#include "fixv2w/error.hpp"

namespace fixv2w {
namespace {

int read_int(std::string_view text, std::size_t pos, std::size_t len) {
  if (pos + len > text.size()) {
    throw ParseError("truncated date/time '" + std::string(text) + "'", pos);
  }
  int value = 0;
  auto first = text.data() + pos;
  auto [ptr, ec] = std::from_chars(first, first + len, value);
  if (ec != std::errc{} || ptr != first + len) {
    throw ParseError("bad date/time field in '" + std::string(text) + "'", pos);
  }
  return value;
}

void expect(std::string_view text, std::size_t pos, char c) {
  if (pos >= text.size() || text[pos] != c) {
    throw ParseError("expected '" + std::string(1, c) + "' in '" + std::string(text) + "'", pos);
  }
}

}  // namespace

Date parse_date(std::string_view text) {
  const int y = read_int(text, 0, 4);
  expect(text, 4, '-');
  const int m = read_int(text, 5, 2);
  expect(text, 7, '-');
  const int d = read_int(text, 8, 2);
  Date date{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
            std::chrono::day{static_cast<unsigned>(d)}};
  if (!date.ok()) {
    throw ParseError("invalid calendar date '" + std::string(text) + "'", 0);
  }
  return date;
}

Timestamp parse_timestamp(std::string_view text) {
  using namespace std::chrono;
  const Date date = parse_date(text);
  Timestamp t{sys_days{date}};
  if (text.size() <= 10) {
    return t;
  }
  if (text[10] != 'T' && text[10] != ' ') {
    throw ParseError("expected time separator in '" + std::string(text) + "'", 10);
  }
  const int hh = read_int(text, 11, 2);
  expect(text, 13, ':');
  const int mm = read_int(text, 14, 2);
  int ss = 0;
  int ms = 0;
  std::size_t pos = 16;
  if (pos < text.size() && text[pos] == ':') {
    ss = read_int(text, pos + 1, 2);
    pos += 3;
    if (pos < text.size() && text[pos] == '.') {
      ++pos;
      // Keep millisecond resolution; extra digits are truncated.
      int digits = 0;
      while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
        if (digits < 3) {
          ms = ms * 10 + (text[pos] - '0');
        }
        ++digits;
        ++pos;
      }
      for (; digits < 3; ++digits) {
        ms *= 10;
      }
    }
  }
  if (pos < text.size() && text[pos] == 'Z') {
    ++pos;
  }
  if (pos != text.size() || hh > 23 || mm > 59 || ss > 60) {
    throw ParseError("invalid time in '" + std::string(text) + "'", pos);
  }
  return t + hours{hh} + minutes{mm} + seconds{ss} + milliseconds{ms};
}

std::string format_date(Date d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
  return buf;
}

std::string format_timestamp(Timestamp t) {
  using namespace std::chrono;
  const auto day = floor<days>(t);
  const auto rest = t - day;
  const auto h = duration_cast<hours>(rest);
  const auto m = duration_cast<minutes>(rest - h);
  const auto s = duration_cast<seconds>(rest - h - m);
  const auto ms = duration_cast<milliseconds>(rest - h - m - s);
  char buf[40];
  std::snprintf(buf, sizeof buf, "%sT%02d:%02d:%02d.%03dZ", format_date(Date{day}).c_str(),
                static_cast<int>(h.count()), static_cast<int>(m.count()),
                static_cast<int>(s.count()), static_cast<int>(ms.count()));
  return buf;
}

}  // namespace fixv2w
