#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

// Locale-independent text helpers shared by the file formats.
namespace cgae::text {

// Shortest representation that parses back to the identical double.
std::string format_double(double v);
std::string format_int(long long v);

double parse_double(std::string_view s, std::string_view what);
long long parse_int(std::string_view s, std::string_view what);

std::vector<std::string> split(std::string_view line, char delim);
std::string_view trim(std::string_view s);
bool starts_with(std::string_view s, std::string_view prefix);

// ISO-8601 "YYYY-MM-DDTHH:MM[:SS][Z|+HH:MM|-HH:MM]" to seconds since the Unix
// epoch (UTC). A missing zone designator is read as UTC.
std::int64_t parse_timestamp(std::string_view s);
// Seconds since epoch to "YYYY-MM-DDTHH:MM:SSZ".
std::string format_timestamp(std::int64_t epoch_seconds);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);
std::vector<std::string> read_lines(const std::string& path);

}  // namespace cgae::text
