#pragma once

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

namespace afcnet {

/// Delay histogram with uniform bins starting at `origin` (signed, ps).
/// Bin i covers [origin + i*bin_width, origin + (i+1)*bin_width).
template <class Count>
struct BasicHistogram {
  std::int64_t bin_width = 1;
  std::int64_t origin = 0;
  std::vector<Count> counts;

  std::size_t size() const { return counts.size(); }
  std::int64_t bin_start(std::size_t i) const { return origin + static_cast<std::int64_t>(i) * bin_width; }
  std::int64_t bin_center(std::size_t i) const { return bin_start(i) + bin_width / 2; }
  std::int64_t range_end() const { return bin_start(counts.size()); }

  std::optional<std::size_t> bin_index(std::int64_t delay) const {
    if (delay < origin || delay >= range_end()) return std::nullopt;
    return static_cast<std::size_t>((delay - origin) / bin_width);
  }

  Count total() const { return std::accumulate(counts.begin(), counts.end(), Count{}); }

  BasicHistogram& operator+=(const BasicHistogram& other) {
    if (bin_width != other.bin_width || origin != other.origin || counts.size() != other.counts.size())
      throw std::invalid_argument("histogram: cannot add histograms with different bin geometry");
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
    return *this;
  }

  friend bool operator==(const BasicHistogram&, const BasicHistogram&) = default;
};

using Histogram = BasicHistogram<std::uint64_t>;
using ExpectedHistogram = BasicHistogram<double>;

}  // namespace afcnet
