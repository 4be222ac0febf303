#pragma once

// Seeding helpers. Sequential streams use std::mt19937_64; per-photon decisions
// use a counter-keyed SplitMix64 so that a photon's fate depends only on
// (seed, stage, pair id) and not on how many other photons were drawn before it.

#include <cstdint>
#include <limits>
#include <random>

#include "afcnet/timeline.hpp"

namespace afcnet {

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0) {
  return splitmix64(splitmix64(splitmix64(a) ^ b) ^ (c * 0x2545f4914f6cdd1dULL));
}

/// Pipeline stages, used to decorrelate the random streams of each stage.
enum class Stage : std::uint64_t {
  pairs = 1,
  arms = 2,
  memory = 3,
  signal_channel = 4,
  idler_channel = 5,
  signal_detector = 6,
  idler_detector = 7,
  interferometer = 8,
  test = 99,
};

inline Rng make_rng(std::uint64_t seed, Stage stage, std::uint64_t index = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stage), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

/// Small UniformRandomBitGenerator over a SplitMix64 counter.
class KeyedRng {
 public:
  using result_type = std::uint64_t;

  constexpr KeyedRng(std::uint64_t seed, Stage stage, std::uint64_t key)
      : state_(mix_seed(seed, static_cast<std::uint64_t>(stage), key)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return splitmix64(state_);
  }

 private:
  std::uint64_t state_;
};

/// Uniform double in [0, 1).
template <class Urbg>
double uniform01(Urbg& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

/// Homogeneous Poisson arrivals at `rate_per_s` over the open part of `gate`
/// inside `range`. Calls emit(TimePoint) in increasing time order.
template <class Emit>
void poisson_arrivals(double rate_per_s, const GatingSchedule& gate, TimeRange range, Rng& rng, Emit&& emit) {
  if (rate_per_s <= 0.0 || range.empty()) return;
  std::exponential_distribution<double> gap(rate_per_s / static_cast<double>(kSecond));
  for_each_open_interval(gate, range, [&](TimeRange r) {
    const double len = static_cast<double>(r.length());
    double pos = gap(rng);
    while (pos < len) {
      emit(r.begin + static_cast<TimePoint>(pos));
      pos += gap(rng);
    }
  });
}

/// Gaussian timing offset rounded to whole picoseconds.
template <class Urbg>
Duration gaussian_jitter(Duration sigma, Urbg& g) {
  if (sigma <= 0) return 0;
  std::normal_distribution<double> n(0.0, static_cast<double>(sigma));
  const double x = n(g);
  return static_cast<Duration>(x < 0 ? x - 0.5 : x + 0.5);
}

}  // namespace afcnet
