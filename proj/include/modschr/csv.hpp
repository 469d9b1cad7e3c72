#pragma once

#include <charconv>
#include <cstddef>
#include <cstdio>
#include <istream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace modschr {

/// Malformed CSV input; `line()` is 1-based.
class CsvError : public std::invalid_argument {
public:
  CsvError(std::size_t line, const std::string& what)
    : std::invalid_argument("line " + std::to_string(line) + ": " + what),
      line_(line)
  {}
  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

namespace csv {

inline std::vector<std::string_view> split(std::string_view line)
{
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos)
      break;
    start = comma + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s)
{
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

inline double parse_double(std::string_view s, std::size_t line)
{
  s = trim(s);
  if (!s.empty() && s.front() == '+')
    s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
    throw CsvError(line, "not a number: '" + std::string(s) + "'");
  return v;
}

inline std::size_t parse_index(std::string_view s, std::size_t line)
{
  s = trim(s);
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
    throw CsvError(line, "not a cell index: '" + std::string(s) + "'");
  return v;
}

/// Shortest text that is guaranteed to round-trip: 17 significant digits.
inline std::string format_double(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Six significant digits, for messages.
inline std::string format_short(double x)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

/// Reads one logical line, stripping a trailing CR. Returns false at EOF.
inline bool read_line(std::istream& in, std::string& line)
{
  if (!std::getline(in, line))
    return false;
  if (!line.empty() && line.back() == '\r')
    line.pop_back();
  return true;
}

}  // namespace csv
}  // namespace modschr
