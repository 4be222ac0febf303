#pragma once

// Single-photon detectors behind mechanical choppers, TDC recording windows,
// and the recording-offset calibration scan.

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "afcnet/errors.hpp"
#include "afcnet/events.hpp"
#include "afcnet/random.hpp"
#include "afcnet/timeline.hpp"

namespace afcnet {

struct DetectorConfig {
  double efficiency = 0.85;
  double dark_rate = 10.0;  // counts/s
  Duration jitter_sigma = 50;
  Duration dead_time = 50 * kNanosecond;
  bool dark_gated = false;  // if true, dark counts only while the chopper is open

  void collect_errors(const std::string& path, std::vector<std::string>& out) const {
    detail::check_probability(out, path + ".efficiency", efficiency);
    detail::check_non_negative(out, path + ".dark_rate", dark_rate);
    if (jitter_sigma < 0) out.push_back(path + ".jitter_sigma_ps: must be non-negative");
    if (dead_time < 0) out.push_back(path + ".dead_time_ps: must be non-negative");
  }

  void validate() const {
    std::vector<std::string> p;
    collect_errors("detector", p);
    detail::throw_if_any(std::move(p));
  }
};

/// Non-paralyzable dead time: drops every click closer than `dead_time` to the
/// previous kept click. Input must be sorted.
inline std::vector<TimeTag> enforce_dead_time(std::vector<TimeTag> tags, Duration dead_time) {
  if (dead_time <= 0 || tags.empty()) return tags;
  std::size_t kept = 1;
  for (std::size_t i = 1; i < tags.size(); ++i) {
    if (tags[i].t - tags[kept - 1].t >= dead_time) tags[kept++] = tags[i];
  }
  tags.resize(kept);
  return tags;
}

/// Clicks from `photons` (sorted): chopper blocking at arrival, efficiency,
/// Gaussian jitter, Poisson dark counts over `range`, then dead time.
inline std::vector<TimeTag> detect(std::span<const Photon> photons, const DetectorConfig& cfg,
                                   const GatingSchedule& chopper, TimeRange range, std::uint64_t seed,
                                   ChannelId channel = 0, Stage stage = Stage::idler_detector) {
  cfg.validate();
  chopper.validate();
  std::vector<TimeTag> tags;
  tags.reserve(static_cast<std::size_t>(static_cast<double>(photons.size()) * cfg.efficiency * 1.1) + 16);
  std::uint64_t position = 0;
  for (const Photon& ph : photons) {
    const std::uint64_t key = ph.pair_id != kNoPair ? ph.pair_id : (std::uint64_t{1} << 63) | position;
    ++position;
    if (!is_open(chopper, ph.t)) continue;
    KeyedRng g(seed, stage, key);
    if (uniform01(g) >= cfg.efficiency) continue;
    const TimePoint t = std::max<TimePoint>(0, ph.t + gaussian_jitter(cfg.jitter_sigma, g));
    tags.push_back(TimeTag{t, ph.pair_id, channel, ph.origin});
  }

  const auto mid = static_cast<std::ptrdiff_t>(tags.size());
  if (cfg.dark_rate > 0.0) {
    Rng rng = make_rng(seed, stage, 1);
    const GatingSchedule gate = cfg.dark_gated ? chopper : GatingSchedule::always_open(kSecond);
    poisson_arrivals(cfg.dark_rate, gate, range, rng,
                     [&](TimePoint t) { tags.push_back(TimeTag{t, kNoPair, channel, Origin::dark}); });
  }
  // Jitter can swap neighbouring photon clicks, so the first block needs a sort too.
  std::sort(tags.begin(), tags.begin() + mid, [](const TimeTag& a, const TimeTag& b) { return earlier(a, b); });
  std::inplace_merge(tags.begin(), tags.begin() + mid, tags.end(),
                     [](const TimeTag& a, const TimeTag& b) { return earlier(a, b); });
  return enforce_dead_time(std::move(tags), cfg.dead_time);
}

inline std::vector<TimeTag> detect(std::span<const Photon> photons, const DetectorConfig& cfg,
                                   const GatingSchedule& chopper, Duration duration, std::uint64_t seed,
                                   ChannelId channel = 0) {
  return detect(photons, cfg, chopper, TimeRange{0, duration}, seed, channel);
}

/// Keeps only tags that fall inside the TDC recording windows.
inline std::vector<TimeTag> tdc_gate(std::span<const TimeTag> tags, const GatingSchedule& recording) {
  recording.validate();
  std::vector<TimeTag> out;
  out.reserve(tags.size());
  for (const TimeTag& tag : tags)
    if (is_open(recording, tag.t)) out.push_back(tag);
  return out;
}

/// Recording offset (a multiple of `step` in [0, period)) that keeps the most
/// tags under `recording_template`'s period and on-time. Ties go to the
/// smallest offset.
inline Duration calibrate_offset(std::span<const TimeTag> tags, const GatingSchedule& recording_template,
                                 Duration step) {
  recording_template.validate();
  if (tags.empty()) throw std::invalid_argument("calibrate_offset: empty tag stream");
  const Duration period = recording_template.period_ps;
  if (step <= 0 || period % step != 0) throw std::invalid_argument("calibrate_offset: step must divide the period");

  // Tag phases binned on the offset grid. An offset o keeps tags with phase in
  // [o, o + on) mod period; whole bins cover that set except for the final
  // partial bin when on is not a multiple of step.
  const auto n = static_cast<std::size_t>(period / step);
  std::vector<std::vector<Duration>> residues(n);
  std::vector<std::int64_t> bins(n, 0);
  const Duration on = recording_template.on_ps;
  const auto whole = static_cast<std::size_t>(on / step);
  const Duration rest = on % step;
  for (const TimeTag& tag : tags) {
    const Duration phase = floor_mod(tag.t, period);
    bins[static_cast<std::size_t>(phase / step)] += 1;
    if (rest > 0) residues[static_cast<std::size_t>(phase / step)].push_back(phase % step);
  }

  auto retained = [&](std::size_t k) {
    std::int64_t sum = 0;
    for (std::size_t j = 0; j < whole; ++j) sum += bins[(k + j) % n];
    if (rest > 0)
      for (Duration r : residues[(k + whole) % n]) sum += r < rest ? 1 : 0;
    return sum;
  };

  std::int64_t window = -1;
  std::size_t best = 0;
  std::int64_t best_count = -1;
  for (std::size_t k = 0; k < n; ++k) {
    if (rest == 0) {
      // Sliding sum when the on-time is a whole number of steps.
      if (k == 0) {
        window = retained(0);
      } else {
        window += bins[(k - 1 + whole) % n] - bins[k - 1];
      }
    } else {
      window = retained(k);
    }
    if (window > best_count) {
      best_count = window;
      best = k;
    }
  }
  return static_cast<Duration>(best) * step;
}

}  // namespace afcnet
