#pragma once

// Atomic-frequency-comb storage (fixed echo delay, flat efficiency) and the
// time-bin analyzers used for the two-photon interference test.

#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "afcnet/errors.hpp"
#include "afcnet/events.hpp"
#include "afcnet/random.hpp"
#include "afcnet/timeline.hpp"

namespace afcnet {

/// Echo delay of a comb with tooth spacing `comb_spacing_hz`, rounded to the picosecond.
inline Duration afc_storage_time(double comb_spacing_hz) {
  if (!(comb_spacing_hz > 0.0)) throw std::invalid_argument("afc_storage_time: comb spacing must be positive");
  return static_cast<Duration>(std::llround(static_cast<double>(kSecond) / comb_spacing_hz));
}

/// Number of whole temporal modes that fit in one storage window.
inline std::int64_t mode_capacity(Duration storage_time, Duration mode_duration) {
  if (storage_time <= 0 || mode_duration <= 0)
    throw std::invalid_argument("mode_capacity: durations must be positive");
  return storage_time / mode_duration;
}

class AfcConfig {
 public:
  AfcConfig() : AfcConfig(100'000.0, 0.22) {}

  AfcConfig(double comb_spacing_hz, double efficiency, Duration mode_duration = 400 * kNanosecond,
            double capture_fraction = 0.92)
      : comb_spacing_hz_(comb_spacing_hz),
        storage_time_(afc_storage_time(comb_spacing_hz)),
        efficiency(efficiency),
        mode_duration(mode_duration),
        capture_fraction(capture_fraction) {}

  static AfcConfig with_storage_time(Duration storage_time, double efficiency,
                                     Duration mode_duration = 400 * kNanosecond, double capture_fraction = 0.92) {
    if (storage_time <= 0) throw std::invalid_argument("afc: storage time must be positive");
    AfcConfig c(static_cast<double>(kSecond) / static_cast<double>(storage_time), efficiency, mode_duration,
                capture_fraction);
    c.storage_time_ = storage_time;
    return c;
  }

  double comb_spacing_hz() const { return comb_spacing_hz_; }
  Duration storage_time() const { return storage_time_; }

  /// Changes the comb and the echo delay together.
  void set_comb_spacing(double hz) {
    storage_time_ = afc_storage_time(hz);
    comb_spacing_hz_ = hz;
  }

  double survival() const { return efficiency * capture_fraction; }
  std::int64_t capacity() const { return mode_capacity(storage_time_, mode_duration); }

  void collect_errors(const std::string& path, std::vector<std::string>& out) const {
    if (!(comb_spacing_hz_ > 0.0)) out.push_back(path + ".comb_spacing_hz: must be positive");
    detail::check_probability(out, path + ".efficiency", efficiency);
    detail::check_probability(out, path + ".capture_fraction", capture_fraction);
    if (mode_duration <= 0) out.push_back(path + ".mode_duration_ps: must be positive");
  }

  void validate() const {
    std::vector<std::string> p;
    collect_errors("afc", p);
    detail::throw_if_any(std::move(p));
  }

 private:
  double comb_spacing_hz_;
  Duration storage_time_;

 public:
  double efficiency;
  Duration mode_duration;
  double capture_fraction;  // share of a photon's wavepacket inside its mode window
};

/// Each photon is re-emitted one storage time later with probability
/// efficiency * capture_fraction; survivors keep their order and labels.
/// The survival draw is keyed on the pair id (or stream position for unpaired
/// photons), so lowering the efficiency only ever removes photons.
inline std::vector<Photon> store_retrieve(std::span<const Photon> input, const AfcConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::vector<Photon> out;
  const double p = cfg.survival();
  out.reserve(static_cast<std::size_t>(static_cast<double>(input.size()) * p * 1.1) + 16);
  std::uint64_t position = 0;
  for (const Photon& ph : input) {
    const std::uint64_t key = ph.pair_id != kNoPair ? ph.pair_id : (std::uint64_t{1} << 63) | position;
    ++position;
    KeyedRng g(seed, Stage::memory, key);
    if (uniform01(g) < p) out.push_back(Photon{ph.t + cfg.storage_time(), ph.pair_id, ph.origin});
  }
  return out;
}

struct InterferometerSetting {
  double phase = 0.0;                  // radians
  Duration delay = 1 * kMicrosecond;   // long arm minus short arm

  void validate() const {
    if (delay <= 0) throw std::invalid_argument("interferometer: delay must be positive");
  }
};

enum class Branch : std::uint8_t { early, late };
enum class BranchMode : std::uint8_t { random, force_early, force_late };

struct BranchResult {
  Branch branch = Branch::early;
  TimePoint t = 0;
  double phase = 0.0;  // phase picked up on the late branch, 0 on the early one
};

/// Signal-side analyzer: transmission through the analysis comb (early) or
/// absorption and re-emission one delay later (late), each with probability 1/2.
template <class Urbg>
BranchResult signal_analyzer_branch(TimePoint t, const InterferometerSetting& setting, Urbg& g,
                                    BranchMode mode = BranchMode::random) {
  setting.validate();
  bool late = false;
  switch (mode) {
    case BranchMode::force_early: late = false; break;
    case BranchMode::force_late: late = true; break;
    case BranchMode::random: late = uniform01(g) < 0.5; break;
  }
  if (!late) return BranchResult{Branch::early, t, 0.0};
  return BranchResult{Branch::late, t + setting.delay, setting.phase};
}

enum class FransonKind : std::uint8_t { central_coincidence, side_bin, lost };

struct FransonOutcome {
  FransonKind kind = FransonKind::lost;
  bool signal_late = false;
  bool idler_late = false;
};

/// Probability of a registered coincidence given that the pair took the
/// indistinguishable early-early or late-late paths.
inline double central_coincidence_probability(const InterferometerSetting& signal,
                                              const InterferometerSetting& idler, double intrinsic_visibility) {
  return 0.5 * (1.0 + intrinsic_visibility * std::cos(signal.phase + idler.phase));
}

/// Joint fate of a pair whose two photons both reach their analyzers.
/// Half the pairs take distinguishable paths (side bins). The other half are
/// postselected into the central bin, where interference decides whether the
/// coincidence is registered or the idler leaves through the unmonitored port.
template <class Urbg>
FransonOutcome franson_pair_outcome(const InterferometerSetting& signal, const InterferometerSetting& idler,
                                    double intrinsic_visibility, Urbg& g) {
  signal.validate();
  idler.validate();
  if (signal.delay != idler.delay)
    throw std::invalid_argument("franson_pair_outcome: analyzer delays differ (" + std::to_string(signal.delay) +
                                " vs " + std::to_string(idler.delay) + " ps)");
  if (!(intrinsic_visibility >= 0.0 && intrinsic_visibility <= 1.0))
    throw std::invalid_argument("franson_pair_outcome: visibility must lie in [0, 1]");
  const bool signal_late = uniform01(g) < 0.5;
  const bool same_bin = uniform01(g) < 0.5;
  if (!same_bin) return FransonOutcome{FransonKind::side_bin, signal_late, !signal_late};
  const double p = central_coincidence_probability(signal, idler, intrinsic_visibility);
  const FransonKind kind = uniform01(g) < p ? FransonKind::central_coincidence : FransonKind::lost;
  return FransonOutcome{kind, signal_late, signal_late};
}

}  // namespace afcnet
