#pragma once

// Gated SPDC pair source: correlated signal/idler emission plus uncorrelated
// pump-induced photons, and the herald-triggered pump blanking used when the
// idler is detected next to the source.

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "afcnet/errors.hpp"
#include "afcnet/events.hpp"
#include "afcnet/random.hpp"
#include "afcnet/timeline.hpp"

namespace afcnet {

struct SourceConfig {
  double pair_rate_on = 25'000.0;       // pairs/s while the pump is on
  double coupling_signal = 0.3;         // survival through signal filtering and coupling
  double coupling_idler = 0.8;          // survival through the idler filter cavity and coupling
  Duration pair_correlation_sigma = 90 * kNanosecond;  // ~1/(2*pi*1.8 MHz)
  double leak_rate_signal = 20'000.0;   // uncorrelated photons/s in the signal arm, pump on
  double leak_rate_idler = 100.0;       // uncorrelated photons/s in the idler arm, pump on
  double intrinsic_visibility = 0.84;   // pump-coherence limit on two-photon interference
  Duration mode_duration = 400 * kNanosecond;

  void collect_errors(const std::string& path, std::vector<std::string>& out) const {
    detail::check_non_negative(out, path + ".pair_rate_on", pair_rate_on);
    detail::check_probability(out, path + ".coupling_signal", coupling_signal);
    detail::check_probability(out, path + ".coupling_idler", coupling_idler);
    detail::check_non_negative(out, path + ".pair_correlation_sigma_ps", static_cast<double>(pair_correlation_sigma));
    detail::check_non_negative(out, path + ".leak_rate_signal", leak_rate_signal);
    detail::check_non_negative(out, path + ".leak_rate_idler", leak_rate_idler);
    detail::check_probability(out, path + ".intrinsic_visibility", intrinsic_visibility);
    if (mode_duration <= 0) out.push_back(path + ".mode_duration_ps: must be positive");
  }

  void validate() const {
    std::vector<std::string> p;
    collect_errors("source", p);
    detail::throw_if_any(std::move(p));
  }
};

/// A correlated pair. `mode_index` counts mode_duration slots from the start of
/// the pump window that contains t_emit.
struct PairEvent {
  PairId pair_id = 0;
  TimePoint t_emit = 0;
  int mode_index = 0;

  friend constexpr bool operator==(const PairEvent&, const PairEvent&) = default;
};

/// Poisson pair emission at pair_rate_on, restricted to pump-open time inside `range`.
/// Ids are assigned consecutively from `first_id`.
inline std::vector<PairEvent> generate_pairs(const SourceConfig& cfg, const GatingSchedule& pump, TimeRange range,
                                             std::uint64_t seed, PairId first_id = 0) {
  cfg.validate();
  pump.validate();
  std::vector<PairEvent> pairs;
  if (cfg.pair_rate_on <= 0.0 || range.empty()) return pairs;
  pairs.reserve(static_cast<std::size_t>(cfg.pair_rate_on * pump.duty() * to_seconds(range.length()) * 1.05) + 16);
  Rng rng = make_rng(seed, Stage::pairs);
  PairId next = first_id;
  poisson_arrivals(cfg.pair_rate_on, pump, range, rng, [&](TimePoint t) {
    const auto slot = floor_mod(t - pump.offset_ps, pump.period_ps) / cfg.mode_duration;
    pairs.push_back(PairEvent{next++, t, static_cast<int>(slot)});
  });
  return pairs;
}

inline std::vector<PairEvent> generate_pairs(const SourceConfig& cfg, const GatingSchedule& pump, Duration duration,
                                             std::uint64_t seed) {
  if (duration <= 0) throw std::invalid_argument("generate_pairs: duration must be positive");
  return generate_pairs(cfg, pump, TimeRange{0, duration}, seed);
}

struct ArmStreams {
  std::vector<Photon> signal;
  std::vector<Photon> idler;
};

/// Splits pairs into the two arms with independent coupling losses, adds the
/// idler's emission-time jitter, and merges in pump-induced uncorrelated photons.
inline ArmStreams emit_arms(std::span<const PairEvent> pairs, const SourceConfig& cfg, const GatingSchedule& pump,
                            TimeRange range, std::uint64_t seed) {
  cfg.validate();
  pump.validate();
  ArmStreams out;
  out.signal.reserve(static_cast<std::size_t>(pairs.size() * cfg.coupling_signal * 1.1) + 16);
  out.idler.reserve(static_cast<std::size_t>(pairs.size() * cfg.coupling_idler * 1.1) + 16);

  for (const PairEvent& p : pairs) {
    KeyedRng g(seed, Stage::arms, p.pair_id);
    const double us = uniform01(g);
    const double ui = uniform01(g);
    if (us < cfg.coupling_signal) out.signal.push_back(Photon{p.t_emit, p.pair_id, Origin::pair});
    if (ui < cfg.coupling_idler) {
      const TimePoint t = std::max<TimePoint>(0, p.t_emit + gaussian_jitter(cfg.pair_correlation_sigma, g));
      out.idler.push_back(Photon{t, p.pair_id, Origin::pair});
    }
  }

  Rng rng = make_rng(seed, Stage::arms, 1);
  std::vector<Photon> leaks;
  poisson_arrivals(cfg.leak_rate_signal, pump, range, rng,
                   [&](TimePoint t) { leaks.push_back(Photon{t, kNoPair, Origin::leak}); });
  const auto mid = static_cast<std::ptrdiff_t>(out.signal.size());
  out.signal.insert(out.signal.end(), leaks.begin(), leaks.end());
  std::inplace_merge(out.signal.begin(), out.signal.begin() + mid, out.signal.end(),
                     [](const Photon& a, const Photon& b) { return earlier(a, b); });

  poisson_arrivals(cfg.leak_rate_idler, pump, range, rng,
                   [&](TimePoint t) { out.idler.push_back(Photon{t, kNoPair, Origin::leak}); });
  std::sort(out.idler.begin(), out.idler.end(), [](const Photon& a, const Photon& b) { return earlier(a, b); });
  return out;
}

inline ArmStreams emit_arms(std::span<const PairEvent> pairs, const SourceConfig& cfg, const GatingSchedule& pump,
                            Duration duration, std::uint64_t seed) {
  return emit_arms(pairs, cfg, pump, TimeRange{0, duration}, seed);
}

/// Intervals during which the pump is forced off: the union of
/// [t, t + hold_off) over all herald detections.
inline std::vector<TimeRange> heralded_pump_gate(std::span<const TimePoint> detections, Duration hold_off) {
  if (hold_off < 0) throw std::invalid_argument("heralded_pump_gate: hold-off must be non-negative");
  std::vector<TimeRange> blocked;
  if (hold_off == 0) return blocked;
  std::vector<TimePoint> sorted(detections.begin(), detections.end());
  if (!std::is_sorted(sorted.begin(), sorted.end())) std::sort(sorted.begin(), sorted.end());
  for (TimePoint t : sorted) {
    if (!blocked.empty() && t <= blocked.back().end)
      blocked.back().end = std::max(blocked.back().end, t + hold_off);
    else
      blocked.push_back(TimeRange{t, t + hold_off});
  }
  return blocked;
}

/// True if t lies in one of the sorted, disjoint `blocked` intervals.
inline bool is_blocked(std::span<const TimeRange> blocked, TimePoint t) {
  auto it = std::upper_bound(blocked.begin(), blocked.end(), t,
                             [](TimePoint v, const TimeRange& r) { return v < r.begin; });
  if (it == blocked.begin()) return false;
  return std::prev(it)->contains(t);
}

struct HeraldedRecord {
  std::vector<TimeTag> recorded;    // heralds the TDC kept
  std::vector<TimeRange> blocked;   // pump-off intervals they triggered
};

/// Causal herald feedback over a candidate idler click stream (pump assumed on).
/// Clicks are visited in time order. A click inside a running hold-off is not
/// recorded; a click whose photon was emitted while the pump was already off never
/// happened. Every other click is recorded and blanks the pump for `hold_off`.
/// `emission_of(tag)` returns the emission time of the click's photon, or
/// std::nullopt for detector dark counts.
template <class EmissionOf>
HeraldedRecord apply_herald_feedback(std::span<const TimeTag> candidates, Duration hold_off, EmissionOf&& emission_of) {
  HeraldedRecord out;
  TimePoint blocked_until = std::numeric_limits<TimePoint>::min();
  for (const TimeTag& tag : candidates) {
    if (tag.t < blocked_until) continue;
    const std::optional<TimePoint> emitted = emission_of(tag);
    if (emitted && is_blocked(out.blocked, *emitted)) continue;
    out.recorded.push_back(tag);
    out.blocked.push_back(TimeRange{tag.t, tag.t + hold_off});
    blocked_until = tag.t + hold_off;
  }
  return out;
}

}  // namespace afcnet
