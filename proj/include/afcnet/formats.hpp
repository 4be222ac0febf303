#pragma once

// Plain-text file formats: time-tag streams, histogram tables and
// `key = value` records.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "afcnet/events.hpp"
#include "afcnet/histogram.hpp"

namespace afcnet {

class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& source, std::size_t line, const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what) {}
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, ptr);
}

inline std::ifstream open_in(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + p.string() + " for reading");
  return in;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + p.string() + " for writing");
  return out;
}

}  // namespace detail

// --- time tags ---------------------------------------------------------------

inline constexpr std::string_view kTagHeader = "# channel\ttime_ps\torigin";

inline void write_tags(std::ostream& out, std::span<const TimeTag> tags) {
  std::string buf;
  buf.reserve(1 << 16);
  buf.append(kTagHeader).push_back('\n');
  char num[32];
  for (const TimeTag& t : tags) {
    auto r = std::to_chars(num, num + sizeof num, t.channel);
    buf.append(num, r.ptr).push_back('\t');
    r = std::to_chars(num, num + sizeof num, t.t);
    buf.append(num, r.ptr);
    if (t.origin != Origin::unknown) buf.append("\t").append(to_string(t.origin));
    buf.push_back('\n');
    if (buf.size() > (1 << 16) - 64) {
      out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
      buf.clear();
    }
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

/// Reads a tag stream; the records must be sorted by time.
inline std::vector<TimeTag> read_tags(std::istream& in, const std::string& source = "<tags>") {
  std::vector<TimeTag> tags;
  std::string line;
  std::size_t n = 0;
  if (!std::getline(in, line) || detail::trim(line) != kTagHeader)
    throw FormatError(source, 1, "missing header '# channel<TAB>time_ps<TAB>origin'");
  ++n;
  while (std::getline(in, line)) {
    ++n;
    if (detail::trim(line).empty()) continue;
    std::string_view rest(line);
    std::vector<std::string_view> fields;
    while (true) {
      const auto tab = rest.find('\t');
      fields.push_back(rest.substr(0, tab));
      if (tab == std::string_view::npos) break;
      rest.remove_prefix(tab + 1);
    }
    if (fields.size() < 2 || fields.size() > 3) throw FormatError(source, n, "expected 2 or 3 tab-separated fields");
    TimeTag t;
    if (!detail::parse_number(fields[0], t.channel)) throw FormatError(source, n, "bad channel");
    if (!detail::parse_number(fields[1], t.t)) throw FormatError(source, n, "bad time_ps");
    if (fields.size() == 3) {
      const auto o = parse_origin(detail::trim(fields[2]));
      if (!o) throw FormatError(source, n, "unknown origin '" + std::string(fields[2]) + "'");
      t.origin = *o;
    }
    if (!tags.empty() && t.t < tags.back().t) throw FormatError(source, n, "records are not sorted by time_ps");
    tags.push_back(t);
  }
  return tags;
}

inline void save_tags(const std::filesystem::path& p, std::span<const TimeTag> tags) {
  auto out = detail::open_out(p);
  write_tags(out, tags);
}

inline std::vector<TimeTag> load_tags(const std::filesystem::path& p) {
  auto in = detail::open_in(p);
  return read_tags(in, p.string());
}

// --- histograms --------------------------------------------------------------

inline void write_histogram_csv(std::ostream& out, const Histogram& h) {
  out << "bin_start_ps,count\n";
  for (std::size_t i = 0; i < h.size(); ++i) out << h.bin_start(i) << ',' << h.counts[i] << '\n';
}

/// Bin width is taken from the first two rows; rows must be evenly spaced.
inline Histogram read_histogram_csv(std::istream& in, const std::string& source = "<histogram>") {
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != "bin_start_ps,count")
    throw FormatError(source, 1, "missing header 'bin_start_ps,count'");
  std::vector<std::int64_t> starts;
  Histogram h;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (detail::trim(line).empty()) continue;
    const auto comma = line.find(',');
    std::int64_t start = 0;
    std::uint64_t count = 0;
    if (comma == std::string::npos || !detail::parse_number(std::string_view(line).substr(0, comma), start) ||
        !detail::parse_number(std::string_view(line).substr(comma + 1), count))
      throw FormatError(source, n, "expected 'bin_start_ps,count'");
    starts.push_back(start);
    h.counts.push_back(count);
  }
  if (starts.size() < 2) throw FormatError(source, n, "need at least two bins to infer the bin width");
  h.origin = starts[0];
  h.bin_width = starts[1] - starts[0];
  if (h.bin_width <= 0) throw FormatError(source, 3, "bin starts must increase");
  for (std::size_t i = 1; i < starts.size(); ++i)
    if (starts[i] != h.bin_start(i)) throw FormatError(source, i + 2, "bins are not evenly spaced");
  return h;
}

// --- key = value records -----------------------------------------------------

using Records = std::vector<std::pair<std::string, std::string>>;

inline void write_records(std::ostream& out, const Records& records) {
  for (const auto& [k, v] : records) out << k << " = " << v << '\n';
}

struct RecordLine {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

/// Parses `key = value` lines; blank lines and `#` comments are skipped.
/// Duplicate keys are rejected.
inline std::vector<RecordLine> read_records(std::istream& in, const std::string& source = "<records>") {
  std::vector<RecordLine> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    std::string_view s = detail::trim(line);
    if (s.empty() || s.front() == '#') continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) throw FormatError(source, n, "expected 'key = value'");
    RecordLine r{std::string(detail::trim(s.substr(0, eq))), std::string(detail::trim(s.substr(eq + 1))), n};
    if (r.key.empty()) throw FormatError(source, n, "empty key");
    for (const RecordLine& prev : out)
      if (prev.key == r.key)
        throw FormatError(source, n, "duplicate key '" + r.key + "' (first set on line " + std::to_string(prev.line) + ")");
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace afcnet
