#pragma once

// Fibre links (loss, group delay, optional background) and the lossless
// electrical-to-optical relay that carries detector pulses back to the TDC.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "afcnet/errors.hpp"
#include "afcnet/events.hpp"
#include "afcnet/random.hpp"
#include "afcnet/timeline.hpp"

namespace afcnet {

inline double transmission_from_db(double loss_db) {
  if (!(loss_db >= 0.0)) throw std::invalid_argument("transmission_from_db: loss must be non-negative");
  return std::pow(10.0, -loss_db / 10.0);
}

struct ChannelConfig {
  double length_km = 0.0;
  double loss_db = 0.0;
  Duration delay_per_km = 5 * kMicrosecond;
  Duration extra_delay = 0;
  std::optional<Duration> quoted_delay;  // measured link delay; replaces length * delay_per_km
  double background_rate = 0.0;          // photons/s added at the output

  Duration propagation_delay() const {
    const Duration fibre =
        quoted_delay ? *quoted_delay : static_cast<Duration>(std::llround(length_km * static_cast<double>(delay_per_km)));
    return fibre + extra_delay;
  }

  void collect_errors(const std::string& path, std::vector<std::string>& out) const {
    detail::check_non_negative(out, path + ".length_km", length_km);
    detail::check_non_negative(out, path + ".loss_db", loss_db);
    if (delay_per_km <= 0) out.push_back(path + ".delay_per_km_ps: must be positive");
    if (quoted_delay && *quoted_delay < 0) out.push_back(path + ".quoted_delay_ps: must be non-negative");
    detail::check_non_negative(out, path + ".background_rate", background_rate);
    if (propagation_delay() < 0) out.push_back(path + ".extra_delay_ps: total delay must be non-negative");
  }

  void validate() const {
    std::vector<std::string> p;
    collect_errors("channel", p);
    detail::throw_if_any(std::move(p));
  }
};

/// Fibre transit: independent survival with 10^(-loss/10), a fixed shift, and
/// Poisson background over the shifted `range` merged into the sorted output.
inline std::vector<Photon> propagate(std::span<const Photon> input, const ChannelConfig& cfg, TimeRange range,
                                     std::uint64_t seed, Stage stage = Stage::idler_channel) {
  cfg.validate();
  const double keep = transmission_from_db(cfg.loss_db);
  const Duration shift = cfg.propagation_delay();
  std::vector<Photon> out;
  out.reserve(static_cast<std::size_t>(static_cast<double>(input.size()) * keep * 1.1) + 16);
  std::uint64_t position = 0;
  for (const Photon& ph : input) {
    const std::uint64_t key = ph.pair_id != kNoPair ? ph.pair_id : (std::uint64_t{1} << 63) | position;
    ++position;
    if (keep < 1.0) {
      KeyedRng g(seed, stage, key);
      if (uniform01(g) >= keep) continue;
    }
    out.push_back(Photon{ph.t + shift, ph.pair_id, ph.origin});
  }
  if (cfg.background_rate > 0.0) {
    Rng rng = make_rng(seed, stage, 1);
    const auto mid = static_cast<std::ptrdiff_t>(out.size());
    poisson_arrivals(cfg.background_rate, GatingSchedule::always_open(kSecond),
                     TimeRange{range.begin + shift, range.end + shift}, rng,
                     [&](TimePoint t) { out.push_back(Photon{t, kNoPair, Origin::leak}); });
    std::inplace_merge(out.begin(), out.begin() + mid, out.end(),
                       [](const Photon& a, const Photon& b) { return earlier(a, b); });
  }
  return out;
}

inline std::vector<Photon> propagate(std::span<const Photon> input, const ChannelConfig& cfg, Duration duration,
                                     std::uint64_t seed) {
  return propagate(input, cfg, TimeRange{0, duration}, seed);
}

/// Detector pulses sent over the classical link: every tag shifted by `relay_delay`.
inline std::vector<TimeTag> eto_relay(std::span<const TimeTag> tags, Duration relay_delay) {
  if (relay_delay < 0) throw std::invalid_argument("eto_relay: delay must be non-negative");
  std::vector<TimeTag> out(tags.begin(), tags.end());
  for (TimeTag& tag : out) tag.t += relay_delay;
  return out;
}

}  // namespace afcnet
