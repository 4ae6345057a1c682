#include "cgae/text.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cgae/errors.hpp"

namespace cgae::text {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string format_int(long long v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s, std::string_view what) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw DataError("cannot parse '" + std::string(s) + "' as a number for " + std::string(what));
  }
  return v;
}

long long parse_int(std::string_view s, std::string_view what) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  long long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw DataError("cannot parse '" + std::string(s) + "' as an integer for " + std::string(what));
  }
  return v;
}

std::vector<std::string> split(std::string_view line, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      break;
    }
    out.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

bool starts_with(std::string_view s, std::string_view prefix) { return s.substr(0, prefix.size()) == prefix; }

namespace {

int digits(std::string_view s, std::size_t pos, std::size_t count, std::string_view full) {
  if (pos + count > s.size()) throw DataError("truncated timestamp '" + std::string(full) + "'");
  int v = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const char c = s[pos + i];
    if (c < '0' || c > '9') throw DataError("malformed timestamp '" + std::string(full) + "'");
    v = v * 10 + (c - '0');
  }
  return v;
}

void expect(std::string_view s, std::size_t pos, char c, std::string_view full) {
  if (pos >= s.size() || s[pos] != c) throw DataError("malformed timestamp '" + std::string(full) + "'");
}

}  // namespace

std::int64_t parse_timestamp(std::string_view raw) {
  using namespace std::chrono;
  const std::string_view s = trim(raw);
  const int y = digits(s, 0, 4, s);
  expect(s, 4, '-', s);
  const int mo = digits(s, 5, 2, s);
  expect(s, 7, '-', s);
  const int d = digits(s, 8, 2, s);
  if (s.size() <= 10 || (s[10] != 'T' && s[10] != ' ')) throw DataError("malformed timestamp '" + std::string(s) + "'");
  const int hh = digits(s, 11, 2, s);
  expect(s, 13, ':', s);
  const int mm = digits(s, 14, 2, s);
  std::size_t pos = 16;
  int ss = 0;
  if (pos < s.size() && s[pos] == ':') {
    ss = digits(s, pos + 1, 2, s);
    pos += 3;
  }
  int offset_minutes = 0;
  if (pos < s.size()) {
    const char z = s[pos];
    if (z == 'Z' && pos + 1 == s.size()) {
      // UTC
    } else if ((z == '+' || z == '-') && pos + 6 == s.size()) {
      const int oh = digits(s, pos + 1, 2, s);
      expect(s, pos + 3, ':', s);
      const int om = digits(s, pos + 4, 2, s);
      offset_minutes = (z == '+' ? 1 : -1) * (oh * 60 + om);
    } else {
      throw DataError("malformed timestamp zone in '" + std::string(s) + "'");
    }
  }
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || hh > 23 || mm > 59 || ss > 60) {
    throw DataError("invalid calendar timestamp '" + std::string(s) + "'");
  }
  const auto days_since = sys_days(ymd).time_since_epoch().count();
  return static_cast<std::int64_t>(days_since) * 86400 + hh * 3600 + mm * 60 + ss -
         static_cast<std::int64_t>(offset_minutes) * 60;
}

std::string format_timestamp(std::int64_t epoch_seconds) {
  using namespace std::chrono;
  std::int64_t day_index = epoch_seconds / 86400;
  std::int64_t rem = epoch_seconds % 86400;
  if (rem < 0) {
    rem += 86400;
    --day_index;
  }
  const year_month_day ymd{sys_days{days{day_index}}};
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(rem / 3600), static_cast<int>((rem / 60) % 60), static_cast<int>(rem % 60));
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << contents;
  if (!out) throw IoError("write failed for " + path);
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

}  // namespace cgae::text
