#pragma once

// Offline statistics on recorded tag streams: start-stop histograms, g2 from
// accidental windows, the triangular accidental floor, two-photon fringes and
// the entanglement thresholds they are compared against.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "afcnet/errors.hpp"
#include "afcnet/events.hpp"
#include "afcnet/histogram.hpp"
#include "afcnet/timeline.hpp"

namespace afcnet {

/// Delay interval [begin, end) on the start-stop axis; may be negative.
using DelayWindow = TimeRange;

inline DelayWindow centered_window(Duration center, Duration width) {
  if (width <= 0) throw std::invalid_argument("window width must be positive");
  const Duration begin = center - width / 2;
  return DelayWindow{begin, begin + width};
}

/// Start-stop delay histogram: every pair with t_stop - t_start in
/// [range_min, range_max) is counted once. Both streams must be sorted.
inline Histogram coincidence_histogram(std::span<const TimeTag> start, std::span<const TimeTag> stop,
                                       Duration bin_width, Duration range_min, Duration range_max) {
  if (bin_width <= 0) throw std::invalid_argument("coincidence_histogram: bin width must be positive");
  if (range_min >= range_max) throw std::invalid_argument("coincidence_histogram: range_min must be below range_max");
  if ((range_max - range_min) % bin_width != 0)
    throw std::invalid_argument("coincidence_histogram: range must be a whole number of bins");

  Histogram h;
  h.bin_width = bin_width;
  h.origin = range_min;
  h.counts.assign(static_cast<std::size_t>((range_max - range_min) / bin_width), 0);

  std::size_t lo = 0;
  for (const TimeTag& s : start) {
    const TimePoint first = s.t + range_min;
    const TimePoint last = s.t + range_max;
    while (lo < stop.size() && stop[lo].t < first) ++lo;
    for (std::size_t j = lo; j < stop.size() && stop[j].t < last; ++j)
      ++h.counts[static_cast<std::size_t>((stop[j].t - first) / bin_width)];
  }
  return h;
}

namespace detail {

inline std::pair<std::size_t, std::size_t> window_bins(const Histogram& h, const DelayWindow& w) {
  if (w.empty()) throw std::invalid_argument("window is empty");
  if (w.begin < h.origin || w.end > h.range_end())
    throw std::invalid_argument("window [" + std::to_string(w.begin) + ", " + std::to_string(w.end) +
                                ") ps lies outside the histogram range");
  if ((w.begin - h.origin) % h.bin_width != 0 || (w.end - h.origin) % h.bin_width != 0)
    throw std::invalid_argument("window edges must fall on histogram bin edges");
  return {static_cast<std::size_t>((w.begin - h.origin) / h.bin_width),
          static_cast<std::size_t>((w.end - h.origin) / h.bin_width)};
}

}  // namespace detail

/// Total count of the bins covered by `w`, whose edges must be bin edges.
inline std::uint64_t window_count(const Histogram& h, const DelayWindow& w) {
  const auto [a, b] = detail::window_bins(h, w);
  std::uint64_t n = 0;
  for (std::size_t i = a; i < b; ++i) n += h.counts[i];
  return n;
}

struct G2Result {
  double g2 = 0.0;
  double sigma = 0.0;
  std::uint64_t n_echo = 0;
  double n_acc_mean = 0.0;
  std::uint64_t n_acc_total = 0;
  double rate_idler = 0.0;  // idler clicks/s; filled in by the caller that knows the stream
  DelayWindow echo_window;
  std::vector<DelayWindow> accidental_windows;
};

/// g2 = N_echo / mean(N_acc), with Poisson error g2 * sqrt(1/N_echo + 1/sum N_acc).
/// With N_echo = 0 the relative term is taken as one count.
inline G2Result g2_from_histogram(const Histogram& h, const DelayWindow& echo,
                                  std::span<const DelayWindow> accidental) {
  if (accidental.empty()) throw std::invalid_argument("g2_from_histogram: need at least one accidental window");
  std::vector<DelayWindow> all{echo};
  all.insert(all.end(), accidental.begin(), accidental.end());
  for (const DelayWindow& w : all) {
    if (w.length() != echo.length()) throw std::invalid_argument("g2_from_histogram: windows must share one width");
    detail::window_bins(h, w);
  }
  std::sort(all.begin(), all.end(), [](const DelayWindow& a, const DelayWindow& b) { return a.begin < b.begin; });
  for (std::size_t i = 1; i < all.size(); ++i)
    if (all[i].begin < all[i - 1].end) throw std::invalid_argument("g2_from_histogram: windows overlap");

  G2Result r;
  r.echo_window = echo;
  r.accidental_windows.assign(accidental.begin(), accidental.end());
  r.n_echo = window_count(h, echo);
  for (const DelayWindow& w : accidental) r.n_acc_total += window_count(h, w);
  if (r.n_acc_total == 0) throw UndefinedG2("g2 undefined: no accidental coincidences in the reference windows");
  r.n_acc_mean = static_cast<double>(r.n_acc_total) / static_cast<double>(accidental.size());
  r.g2 = static_cast<double>(r.n_echo) / r.n_acc_mean;
  r.sigma = r.n_echo > 0 ? r.g2 * std::sqrt(1.0 / static_cast<double>(r.n_echo) +
                                            1.0 / static_cast<double>(r.n_acc_total))
                         : 1.0 / r.n_acc_mean;
  return r;
}

/// Accidental windows one pattern period apart after the echo: centers at
/// echo_center + k * pattern_period, k = 1..n_windows. When `range` is given,
/// every window must fit inside it.
inline std::vector<DelayWindow> place_accidental_windows(Duration echo_center, Duration window_width,
                                                         Duration pattern_period, int n_windows,
                                                         std::optional<DelayWindow> range = std::nullopt) {
  if (n_windows < 1) throw std::invalid_argument("place_accidental_windows: need at least one window");
  if (window_width <= 0) throw std::invalid_argument("place_accidental_windows: width must be positive");
  if (pattern_period <= 0) throw std::invalid_argument("place_accidental_windows: period must be positive");
  if (window_width > pattern_period)
    throw std::invalid_argument("place_accidental_windows: width exceeds the pattern period, windows would overlap");
  std::vector<DelayWindow> out;
  for (int k = 1; k <= n_windows; ++k) {
    const DelayWindow w = centered_window(echo_center + k * pattern_period, window_width);
    if (range && (w.begin < range->begin || w.end > range->end))
      throw std::invalid_argument("place_accidental_windows: window " + std::to_string(k) +
                                  " exceeds the histogram range");
    out.push_back(w);
  }
  return out;
}

/// Adjacent windows in the flat region before the echo, used with heralded
/// gating: centers at echo_center - (skip + k) * width, k = 1..n_windows.
inline std::vector<DelayWindow> place_preecho_windows(Duration echo_center, Duration window_width, int n_windows,
                                                      int skip = 1) {
  if (n_windows < 1) throw std::invalid_argument("place_preecho_windows: need at least one window");
  if (skip < 0) throw std::invalid_argument("place_preecho_windows: skip must be non-negative");
  std::vector<DelayWindow> out;
  for (int k = 1; k <= n_windows; ++k)
    out.push_back(centered_window(echo_center - (skip + k) * window_width, window_width));
  return out;
}

// --- triangular accidental floor ---------------------------------------------

struct TriangleFit {
  Duration period = 0;
  double peak = 0.0;          // fitted maximum, counts per bin
  double trough = 0.0;        // fitted minimum, counts per bin
  double phase = 0.0;         // delay of a trough, in [0, period)
  double rms_residual = 0.0;  // rms residual divided by peak
  double sse = 0.0;
  bool degenerate = false;    // amplitude not resolved above the residual scatter
};

namespace detail {

// Antiderivative of the unit triangle wave tri(u) with tri = 0 at u = 0 mod P
// and tri = 1 at u = P/2 mod P.
inline double triangle_antiderivative(double x, double p) {
  const double k = std::floor(x / p);
  const double u = x - k * p;
  const double g = u <= p / 2 ? u * u / p : 2.0 * u - u * u / p - p / 2;
  return k * p / 2 + g;
}

struct TriangleProblem {
  std::vector<double> lo, hi, y;
  double period = 0.0;

  // Bin-averaged unit triangle with its trough at `phase`.
  double basis(std::size_t i, double phase) const {
    return (triangle_antiderivative(hi[i] - phase, period) - triangle_antiderivative(lo[i] - phase, period)) /
           (hi[i] - lo[i]);
  }

  // Least-squares (offset, amplitude, sse) for a fixed phase.
  std::array<double, 3> solve(double phase) const {
    double n = 0, sx = 0, sxx = 0, sy = 0, sxy = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double x = basis(i, phase);
      n += 1;
      sx += x;
      sxx += x * x;
      sy += y[i];
      sxy += x * y[i];
    }
    const double det = n * sxx - sx * sx;
    double c0 = sy / n, c1 = 0.0;
    if (std::abs(det) > 1e-12 * n * n) {
      c1 = (n * sxy - sx * sy) / det;
      c0 = (sy - c1 * sx) / n;
    }
    double sse = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double r = y[i] - c0 - c1 * basis(i, phase);
      sse += r * r;
    }
    return {c0, c1, sse};
  }
};

}  // namespace detail

/// Least-squares fit of a periodic triangle wave (bin-averaged) to the
/// histogram, skipping every bin that touches an exclusion window.
inline TriangleFit fit_triangle(const Histogram& h, Duration period, std::span<const DelayWindow> exclusions = {}) {
  if (period <= 0) throw std::invalid_argument("fit_triangle: period must be positive");
  if (static_cast<Duration>(h.size()) * h.bin_width < 2 * period)
    throw std::invalid_argument("fit_triangle: histogram spans less than two periods");

  detail::TriangleProblem prob;
  prob.period = static_cast<double>(period);
  for (std::size_t i = 0; i < h.size(); ++i) {
    const Duration a = h.bin_start(i);
    const Duration b = a + h.bin_width;
    const bool excluded = std::any_of(exclusions.begin(), exclusions.end(),
                                      [&](const DelayWindow& w) { return a < w.end && w.begin < b; });
    if (excluded) continue;
    prob.lo.push_back(static_cast<double>(a));
    prob.hi.push_back(static_cast<double>(b));
    prob.y.push_back(static_cast<double>(h.counts[i]));
  }
  if (prob.y.size() < 3) throw std::invalid_argument("fit_triangle: too few bins left after exclusions");

  const double p = prob.period;
  const int grid = std::max(64, static_cast<int>(4 * period / h.bin_width));
  int best = 0;
  double best_sse = std::numeric_limits<double>::infinity();
  for (int k = 0; k < grid; ++k) {
    const double sse = prob.solve(p * k / grid)[2];
    if (sse < best_sse) {
      best_sse = sse;
      best = k;
    }
  }

  // Golden-section refinement inside the neighbouring grid cells.
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = p * (best - 1) / grid, b = p * (best + 1) / grid;
  double c = b - invphi * (b - a), d = a + invphi * (b - a);
  double fc = prob.solve(c)[2], fd = prob.solve(d)[2];
  for (int it = 0; it < 60 && b - a > 1e-3; ++it) {
    if (fc < fd) {
      b = d, d = c, fd = fc;
      c = b - invphi * (b - a);
      fc = prob.solve(c)[2];
    } else {
      a = c, c = d, fc = fd;
      d = a + invphi * (b - a);
      fd = prob.solve(d)[2];
    }
  }
  double phase = (a + b) / 2;
  auto sol = prob.solve(phase);
  if (sol[2] > best_sse) {
    phase = p * best / grid;
    sol = prob.solve(phase);
  }

  double offset = sol[0], amp = sol[1];
  if (amp < 0) {  // an inverted triangle is the same wave shifted by half a period
    offset += amp;
    amp = -amp;
    phase += p / 2;
  }
  phase -= p * std::floor(phase / p);

  TriangleFit fit;
  fit.period = period;
  fit.trough = offset;
  fit.peak = offset + amp;
  fit.phase = phase;
  fit.sse = sol[2];
  const double rms = std::sqrt(sol[2] / static_cast<double>(prob.y.size()));
  fit.rms_residual = fit.peak > 0 ? rms / fit.peak : std::numeric_limits<double>::infinity();
  fit.degenerate = amp < 3.0 * rms || amp <= 0.0;
  return fit;
}

/// Fits every candidate period and returns the fit with the smallest residual.
inline TriangleFit scan_triangle_period(const Histogram& h, std::span<const Duration> candidates,
                                        std::span<const DelayWindow> exclusions = {}) {
  if (candidates.empty()) throw std::invalid_argument("scan_triangle_period: no candidate periods");
  std::optional<TriangleFit> best;
  for (Duration p : candidates) {
    TriangleFit f = fit_triangle(h, p, exclusions);
    if (!best || f.sse < best->sse) best = f;
  }
  return *best;
}

/// Distance from `delay` to the nearest fitted trough, in ps.
inline double distance_to_trough(const TriangleFit& fit, Duration delay) {
  const double p = static_cast<double>(fit.period);
  double d = std::fmod(static_cast<double>(delay) - fit.phase, p);
  if (d < 0) d += p;
  return std::min(d, p - d);
}

/// Bin center of the most prominent correlation peak. With a pattern period
/// (a multiple of the bin width) each bin is compared with the mean of the
/// bins at the same phase, so a periodic floor does not mask the peak.
inline Duration locate_echo_peak(const Histogram& h, std::optional<Duration> pattern_period = std::nullopt) {
  if (h.counts.empty()) throw std::invalid_argument("locate_echo_peak: empty histogram");
  std::vector<double> score(h.size());
  if (!pattern_period) {
    for (std::size_t i = 0; i < h.size(); ++i) score[i] = static_cast<double>(h.counts[i]);
  } else {
    if (*pattern_period <= 0 || *pattern_period % h.bin_width != 0)
      throw std::invalid_argument("locate_echo_peak: pattern period must be a multiple of the bin width");
    const auto m = static_cast<std::size_t>(*pattern_period / h.bin_width);
    std::vector<double> sum(m, 0.0), sumsq(m, 0.0), n(m, 0.0);
    for (std::size_t i = 0; i < h.size(); ++i) {
      const double c = static_cast<double>(h.counts[i]);
      sum[i % m] += c;
      sumsq[i % m] += c * c;
      n[i % m] += 1;
    }
    for (std::size_t i = 0; i < h.size(); ++i) {
      const std::size_t k = i % m;
      const double c = static_cast<double>(h.counts[i]);
      // Leave-one-out reference so the peak does not pull its own baseline up.
      const double ref = n[k] > 1 ? (sum[k] - c) / (n[k] - 1) : 0.0;
      score[i] = (c - ref) / std::sqrt(std::max(ref, 1.0));
    }
  }
  const auto it = std::max_element(score.begin(), score.end());
  return h.bin_center(static_cast<std::size_t>(it - score.begin()));
}

// --- visibility and entanglement --------------------------------------------

struct Estimate {
  double value = 0.0;
  double sigma = 0.0;
};

/// V = (a - b)/(a + b); Poisson propagation gives sigma = 2 sqrt(a b / (a + b)^3).
inline Estimate visibility_maxmin(double n_max, double n_min) {
  if (n_max < 0 || n_min < 0) throw std::invalid_argument("visibility_maxmin: counts must be non-negative");
  const double s = n_max + n_min;
  if (s <= 0) throw std::invalid_argument("visibility_maxmin: both counts are zero");
  return Estimate{(n_max - n_min) / s, 2.0 * std::sqrt(n_max * n_min / (s * s * s))};
}

struct FringeFit {
  double visibility = 0.0;
  double sigma = 0.0;
  double phase_offset = 0.0;  // phi0 in A (1 + V cos(phi + phi0))
  double mean = 0.0;          // A
};

/// Weighted linear least squares of y = A + B cos(phi) + C sin(phi) with
/// Poisson weights 1/max(y, 1); V = sqrt(B^2 + C^2)/A clamped to [0, 1].
inline FringeFit fit_fringe(std::span<const double> phases, std::span<const double> counts) {
  if (phases.size() != counts.size()) throw std::invalid_argument("fit_fringe: phases and counts differ in length");
  std::vector<double> distinct;
  for (double ph : phases) {
    const double w = std::remainder(ph, 2 * std::numbers::pi);
    const bool seen = std::any_of(distinct.begin(), distinct.end(), [&](double d) {
      return std::abs(std::remainder(d - w, 2 * std::numbers::pi)) < 1e-9;
    });
    if (!seen) distinct.push_back(w);
  }
  if (distinct.size() < 4) throw std::invalid_argument("fit_fringe: need at least four distinct phases");

  const auto n = static_cast<Eigen::Index>(phases.size());
  Eigen::MatrixXd x(n, 3);
  Eigen::VectorXd y(n), w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    x(i, 0) = 1.0;
    x(i, 1) = std::cos(phases[k]);
    x(i, 2) = std::sin(phases[k]);
    y(i) = counts[k];
    w(i) = 1.0 / std::max(counts[k], 1.0);
  }
  const Eigen::Matrix3d normal = x.transpose() * w.asDiagonal() * x;
  const Eigen::Vector3d beta = normal.ldlt().solve(x.transpose() * w.asDiagonal() * y);
  const Eigen::Matrix3d cov = normal.inverse();

  const double a = beta(0), b = beta(1), c = beta(2);
  if (a <= 0) throw std::invalid_argument("fit_fringe: fitted mean is not positive");
  const double r = std::hypot(b, c);
  FringeFit fit;
  fit.mean = a;
  fit.visibility = std::clamp(r / a, 0.0, 1.0);
  fit.phase_offset = std::atan2(-c, b);
  Eigen::Vector3d grad;
  if (r > 0) {
    grad << -r / (a * a), b / (r * a), c / (r * a);
    fit.sigma = std::sqrt(std::max(0.0, grad.dot(cov * grad)));
  } else {
    fit.sigma = std::sqrt(std::max(0.0, cov(1, 1) + cov(2, 2))) / a;
  }
  return fit;
}

/// Inverse-variance weighted mean.
inline Estimate combine_settings(std::span<const Estimate> results) {
  if (results.empty()) throw std::invalid_argument("combine_settings: no results");
  double sw = 0, swx = 0;
  for (const Estimate& e : results) {
    if (!(e.sigma > 0)) throw std::invalid_argument("combine_settings: every sigma must be positive");
    const double w = 1.0 / (e.sigma * e.sigma);
    sw += w;
    swx += w * e.value;
  }
  return Estimate{swx / sw, std::sqrt(1.0 / sw)};
}

inline double fidelity_from_visibility(double v) {
  if (!(v >= -1.0 && v <= 1.0)) throw std::invalid_argument("fidelity_from_visibility: V must lie in [-1, 1]");
  return (3.0 * v + 1.0) / 4.0;
}

struct NoiseBound {
  double value = 0.0;
  bool clamped = false;  // g2 < 1, raw bound was negative
};

/// Largest fringe visibility that accidental noise alone permits at this g2.
inline NoiseBound visibility_bound_from_g2(double g2) {
  if (!(g2 >= 0.0)) throw std::invalid_argument("visibility_bound_from_g2: g2 must be non-negative");
  if (std::isinf(g2)) return NoiseBound{1.0, false};
  const double v = (g2 - 1.0) / (g2 + 1.0);
  return v < 0 ? NoiseBound{0.0, true} : NoiseBound{v, false};
}

inline constexpr double kClassicalG2Bound = 2.0;           // thermal fields cannot exceed this cross-correlation
inline constexpr double kSeparabilityThreshold = 1.0 / 3.0;
inline constexpr double kChshThreshold = 0.70710678118654752;  // 1/sqrt(2)
inline constexpr double kQkdThreshold = 0.78;

struct ThresholdCheck {
  std::string name;
  double threshold = 0.0;
  bool passed = false;
  double significance = 0.0;  // (V - threshold) / sigma
};

struct EntanglementReport {
  double visibility = 0.0;
  double sigma = 0.0;
  std::array<ThresholdCheck, 3> checks;
};

inline EntanglementReport classify_entanglement(double v, double sigma) {
  if (sigma < 0) throw std::invalid_argument("classify_entanglement: sigma must be non-negative");
  EntanglementReport r{v, sigma, {}};
  const std::array<std::pair<const char*, double>, 3> t{
      {{"non_separable", kSeparabilityThreshold}, {"chsh", kChshThreshold}, {"qkd", kQkdThreshold}}};
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double diff = v - t[i].second;
    const double sig = sigma > 0 ? diff / sigma
                                 : (diff > 0 ? std::numeric_limits<double>::infinity()
                                             : (diff < 0 ? -std::numeric_limits<double>::infinity() : 0.0));
    r.checks[i] = ThresholdCheck{t[i].first, t[i].second, diff > 0, sig};
  }
  return r;
}

struct FransonSetting {
  double phase_signal = 0.0;
  std::vector<double> phases_idler;
  std::vector<double> counts;
  Estimate visibility;
};

struct FransonResult {
  double visibility = 0.0;
  double sigma_v = 0.0;
  double fidelity = 0.0;
  double sigma_f = 0.0;
  std::vector<FransonSetting> per_setting;
};

/// Combines per-setting visibilities and converts to fidelity.
inline FransonResult summarize_franson(std::vector<FransonSetting> settings) {
  std::vector<Estimate> e;
  for (const auto& s : settings) e.push_back(s.visibility);
  const Estimate v = combine_settings(e);
  FransonResult r;
  r.visibility = v.value;
  r.sigma_v = v.sigma;
  r.fidelity = fidelity_from_visibility(std::clamp(v.value, -1.0, 1.0));
  r.sigma_f = 0.75 * v.sigma;
  r.per_setting = std::move(settings);
  return r;
}

}  // namespace afcnet
