#pragma once

// Integer-picosecond time base, periodic square gating, and the closed-form
// overlap of two gates that sets the shape of the accidental-coincidence floor.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "afcnet/histogram.hpp"

namespace afcnet {

using Duration = std::int64_t;   // picoseconds
using TimePoint = std::int64_t;  // picoseconds since the simulation epoch

inline constexpr Duration kPicosecond = 1;
inline constexpr Duration kNanosecond = 1'000;
inline constexpr Duration kMicrosecond = 1'000'000;
inline constexpr Duration kMillisecond = 1'000'000'000;
inline constexpr Duration kSecond = 1'000'000'000'000;

constexpr double to_seconds(Duration d) { return static_cast<double>(d) / static_cast<double>(kSecond); }

constexpr Duration from_seconds(double s) {
  return static_cast<Duration>(s * static_cast<double>(kSecond) + (s >= 0 ? 0.5 : -0.5));
}

/// Mathematical modulo: result in [0, m) for m > 0.
constexpr std::int64_t floor_mod(std::int64_t a, std::int64_t m) {
  const std::int64_t r = a % m;
  return r < 0 ? r + m : r;
}

constexpr std::int64_t floor_div(std::int64_t a, std::int64_t m) {
  const std::int64_t q = a / m;
  return (a % m != 0 && ((a < 0) != (m < 0))) ? q - 1 : q;
}

/// Half-open time interval [begin, end).
struct TimeRange {
  TimePoint begin = 0;
  TimePoint end = 0;

  constexpr Duration length() const { return end - begin; }
  constexpr bool empty() const { return end <= begin; }
  constexpr bool contains(TimePoint t) const { return t >= begin && t < end; }
  friend constexpr bool operator==(const TimeRange&, const TimeRange&) = default;
};

/// Periodic square window: open on [offset + k*period, offset + k*period + on).
struct GatingSchedule {
  Duration period_ps = 1;
  Duration on_ps = 1;
  Duration offset_ps = 0;

  static constexpr GatingSchedule always_open(Duration period) { return {period, period, 0}; }
  static constexpr GatingSchedule square(Duration period, Duration on, Duration offset = 0) {
    return {period, on, offset};
  }

  constexpr bool is_always_open() const { return on_ps == period_ps; }
  constexpr double duty() const { return static_cast<double>(on_ps) / static_cast<double>(period_ps); }

  void validate() const {
    if (period_ps <= 0) throw std::invalid_argument("gating schedule: period must be positive");
    if (on_ps <= 0 || on_ps > period_ps)
      throw std::invalid_argument("gating schedule: on-time must lie in (0, period]");
    if (offset_ps < 0 || offset_ps >= period_ps)
      throw std::invalid_argument("gating schedule: offset must lie in [0, period)");
  }

  friend constexpr bool operator==(const GatingSchedule&, const GatingSchedule&) = default;
};

constexpr bool is_open(const GatingSchedule& s, TimePoint t) {
  return floor_mod(t - s.offset_ps, s.period_ps) < s.on_ps;
}

/// Calls fn(TimeRange) for every maximal open interval of `s` clipped to `range`,
/// in increasing time order.
template <class Fn>
void for_each_open_interval(const GatingSchedule& s, TimeRange range, Fn&& fn) {
  if (range.empty()) return;
  if (s.is_always_open()) {
    fn(range);
    return;
  }
  TimePoint start = s.offset_ps + floor_div(range.begin - s.offset_ps, s.period_ps) * s.period_ps;
  for (; start < range.end; start += s.period_ps) {
    const TimePoint lo = std::max(start, range.begin);
    const TimePoint hi = std::min(start + s.on_ps, range.end);
    if (lo < hi) fn(TimeRange{lo, hi});
  }
}

inline std::vector<TimeRange> open_intervals(const GatingSchedule& s, TimeRange range) {
  std::vector<TimeRange> out;
  for_each_open_interval(s, range, [&](TimeRange r) { out.push_back(r); });
  return out;
}

/// Total open time of `s` inside `range`.
inline Duration open_time(const GatingSchedule& s, TimeRange range) {
  Duration total = 0;
  for_each_open_interval(s, range, [&](TimeRange r) { total += r.length(); });
  return total;
}

namespace detail {

// Length of {t in one period : a open at t and b open at t + lag}, in ps.
inline Duration overlap_length(const GatingSchedule& a, const GatingSchedule& b, Duration lag) {
  const Duration p = a.period_ps;
  const Duration la = a.on_ps;
  const Duration lb = b.on_ps;
  // b(t + lag) is open for t in [b.offset - lag, b.offset - lag + lb) mod p; measure that
  // interval relative to a's window start.
  const Duration d = floor_mod(b.offset_ps - lag - a.offset_ps, p);
  const Duration first = std::max<Duration>(0, std::min(la, d + lb) - d);
  const Duration wrapped = std::max<Duration>(0, std::min(la, d - p + lb));
  return first + wrapped;
}

inline void require_same_period(const GatingSchedule& a, const GatingSchedule& b) {
  a.validate();
  b.validate();
  if (a.period_ps != b.period_ps)
    throw std::invalid_argument("overlap_profile: schedules have different periods (" +
                                std::to_string(a.period_ps) + " vs " + std::to_string(b.period_ps) + " ps)");
}

}  // namespace detail

/// Fraction of one period during which `a` is open at t and `b` is open at t + lag.
/// With `a` gating start events and `b` gating stop events, this is the relative
/// density of accidental start-stop pairs at delay `lag`.
inline double overlap_fraction(const GatingSchedule& a, const GatingSchedule& b, Duration lag) {
  detail::require_same_period(a, b);
  return static_cast<double>(detail::overlap_length(a, b, lag)) / static_cast<double>(a.period_ps);
}

inline std::vector<double> overlap_profile(const GatingSchedule& a, const GatingSchedule& b,
                                           std::span<const Duration> lag_grid) {
  detail::require_same_period(a, b);
  std::vector<double> out;
  out.reserve(lag_grid.size());
  const double p = static_cast<double>(a.period_ps);
  for (Duration lag : lag_grid) out.push_back(static_cast<double>(detail::overlap_length(a, b, lag)) / p);
  return out;
}

/// Exact integral of overlap_fraction over lag in [lo, hi), in ps.
/// The overlap is piecewise linear in lag; the kinks sit where window edges meet.
inline double integrated_overlap(const GatingSchedule& a, const GatingSchedule& b, Duration lo, Duration hi) {
  detail::require_same_period(a, b);
  if (hi <= lo) return 0.0;
  const Duration p = a.period_ps;
  const Duration la = a.on_ps;
  const Duration lb = b.on_ps;
  const Duration base = b.offset_ps - a.offset_ps;
  const Duration kinks_d[] = {0, la, floor_mod(la - lb, p), floor_mod(p - lb, p)};

  std::vector<Duration> pts{lo, hi};
  for (Duration dk : kinks_d) {
    const Duration phase = floor_mod(base - dk, p);  // lag values with d == dk
    for (Duration x = lo + floor_mod(phase - lo, p); x < hi; x += p) pts.push_back(x);
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

  double area = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    // The overlap is continuous in lag, so the trapezoid rule is exact on each linear piece.
    const double y0 = static_cast<double>(detail::overlap_length(a, b, pts[i - 1]));
    const double y1 = static_cast<double>(detail::overlap_length(a, b, pts[i]));
    area += 0.5 * (y0 + y1) * static_cast<double>(pts[i] - pts[i - 1]);
  }
  return area / static_cast<double>(p);
}

/// Expected accidental counts per delay bin for two independent Poisson streams.
/// Rates are photons per second while the respective gate is open; `start_gate`
/// gates the start stream, `stop_gate` the stop stream, delay = t_stop - t_start.
inline ExpectedHistogram expected_accidental_profile(double rate_start, double rate_stop,
                                                     const GatingSchedule& start_gate,
                                                     const GatingSchedule& stop_gate, Duration bin_width,
                                                     Duration range_min, Duration range_max,
                                                     Duration duration) {
  if (duration <= 0) throw std::invalid_argument("expected_accidental_profile: duration must be positive");
  if (rate_start < 0 || rate_stop < 0)
    throw std::invalid_argument("expected_accidental_profile: rates must be non-negative");
  if (bin_width <= 0 || range_max <= range_min || (range_max - range_min) % bin_width != 0)
    throw std::invalid_argument("expected_accidental_profile: invalid bin geometry");
  detail::require_same_period(start_gate, stop_gate);

  ExpectedHistogram h;
  h.bin_width = bin_width;
  h.origin = range_min;
  const auto n = static_cast<std::size_t>((range_max - range_min) / bin_width);
  h.counts.assign(n, 0.0);
  const double scale = rate_start * rate_stop * to_seconds(duration);
  if (scale == 0.0) return h;
  for (std::size_t i = 0; i < n; ++i) {
    const Duration lo = range_min + static_cast<Duration>(i) * bin_width;
    h.counts[i] = scale * integrated_overlap(start_gate, stop_gate, lo, lo + bin_width) /
                  static_cast<double>(kSecond);
  }
  return h;
}

}  // namespace afcnet
