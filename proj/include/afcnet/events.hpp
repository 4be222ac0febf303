#pragma once

// Photon and time-tag records shared by every stage of the pipeline.

#include <cstdint>
#include <limits>
#include <optional>
#include <string_view>

#include "afcnet/timeline.hpp"

namespace afcnet {

using PairId = std::uint64_t;
inline constexpr PairId kNoPair = std::numeric_limits<PairId>::max();

using ChannelId = std::uint16_t;
inline constexpr ChannelId kSignalChannel = 1;
inline constexpr ChannelId kIdlerChannel = 2;

/// Where a click came from. Diagnostic only: analysis never looks at it.
enum class Origin : std::uint8_t { pair, leak, dark, unknown };

constexpr std::string_view to_string(Origin o) {
  switch (o) {
    case Origin::pair: return "pair";
    case Origin::leak: return "leak";
    case Origin::dark: return "dark";
    case Origin::unknown: break;
  }
  return "";
}

inline std::optional<Origin> parse_origin(std::string_view s) {
  if (s == "pair") return Origin::pair;
  if (s == "leak") return Origin::leak;
  if (s == "dark") return Origin::dark;
  return std::nullopt;
}

/// A photon travelling through the optical part of the setup.
struct Photon {
  TimePoint t = 0;
  PairId pair_id = kNoPair;
  Origin origin = Origin::pair;

  friend constexpr bool operator==(const Photon&, const Photon&) = default;
};

/// One detector click as recorded by the TDC.
struct TimeTag {
  TimePoint t = 0;
  PairId pair_id = kNoPair;  // not serialized
  ChannelId channel = 0;
  Origin origin = Origin::unknown;

  /// Equality over the recorded fields (channel, time, origin).
  friend constexpr bool operator==(const TimeTag& a, const TimeTag& b) {
    return a.t == b.t && a.channel == b.channel && a.origin == b.origin;
  }
};

constexpr bool earlier(const Photon& a, const Photon& b) {
  return a.t != b.t ? a.t < b.t : a.pair_id < b.pair_id;
}

constexpr bool earlier(const TimeTag& a, const TimeTag& b) {
  if (a.t != b.t) return a.t < b.t;
  if (a.channel != b.channel) return a.channel < b.channel;
  return a.pair_id < b.pair_id;
}

}  // namespace afcnet
