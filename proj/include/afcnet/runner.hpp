#pragma once

// End-to-end runs: source -> memory -> fibre -> (analyzers) -> detectors ->
// relay -> TDC, followed by the g2 analysis, the accidental-floor fit and the
// optional two-photon interference sweep.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "afcnet/analysis.hpp"
#include "afcnet/channel.hpp"
#include "afcnet/detection.hpp"
#include "afcnet/formats.hpp"
#include "afcnet/memory.hpp"
#include "afcnet/random.hpp"
#include "afcnet/scenario.hpp"
#include "afcnet/source.hpp"

namespace afcnet {

/// Interferometer settings for one point of the phase sweep.
struct AnalyzerPoint {
  InterferometerSetting signal;
  InterferometerSetting idler;
};

/// Detector output of one simulated run. In periodic mode the idler stream is
/// not yet gated by the TDC recording window; in heralded mode it holds the
/// recorded heralds.
struct TagStreams {
  std::vector<TimeTag> signal;
  std::vector<TimeTag> idler;
  std::uint64_t pairs = 0;
};

namespace detail {

inline void sort_photons(std::vector<Photon>& v) {
  std::sort(v.begin(), v.end(), [](const Photon& a, const Photon& b) { return earlier(a, b); });
}

inline void sort_tags(std::vector<TimeTag>& v) {
  std::sort(v.begin(), v.end(), [](const TimeTag& a, const TimeTag& b) { return earlier(a, b); });
}

inline std::uint64_t unpaired_key(std::uint64_t position) { return (std::uint64_t{1} << 63) | position; }

// Joint analyzer outcome for pairs whose two photons both reached the
// analyzers; independent branches for everything else. A dropped idler left
// through the unmonitored port. Idler singles see the monitored port with
// probability 1/2 whatever the phase.
inline void apply_analyzers(std::vector<Photon>& signal, std::vector<Photon>& idler, const AnalyzerPoint& point,
                            double visibility, std::uint64_t seed) {
  std::vector<std::pair<PairId, std::size_t>> by_id;
  for (std::size_t i = 0; i < idler.size(); ++i)
    if (idler[i].pair_id != kNoPair) by_id.emplace_back(idler[i].pair_id, i);
  std::sort(by_id.begin(), by_id.end());

  std::vector<char> handled(idler.size(), 0), keep(idler.size(), 1);
  const double cos_sum = std::cos(point.signal.phase + point.idler.phase);
  const Duration delay = point.signal.delay;
  for (std::size_t k = 0; k < signal.size(); ++k) {
    Photon& s = signal[k];
    const auto it = s.pair_id == kNoPair
                        ? by_id.end()
                        : std::lower_bound(by_id.begin(), by_id.end(), std::make_pair(s.pair_id, std::size_t{0}));
    if (it != by_id.end() && it->first == s.pair_id) {
      Photon& i = idler[it->second];
      KeyedRng g(seed, Stage::interferometer, s.pair_id);
      const FransonOutcome o = franson_pair_outcome(point.signal, point.idler, visibility, g);
      if (o.signal_late) s.t += delay;
      if (o.idler_late) i.t += delay;
      if (o.kind == FransonKind::lost) keep[it->second] = 0;
      if (o.kind == FransonKind::side_bin) keep[it->second] = uniform01(g) < (1.0 - visibility * cos_sum) / 2.0;
      handled[it->second] = 1;
    } else {
      KeyedRng g(seed, Stage::interferometer, s.pair_id != kNoPair ? s.pair_id : unpaired_key(k));
      s.t = signal_analyzer_branch(s.t, point.signal, g).t;
    }
  }
  std::vector<Photon> kept;
  kept.reserve(idler.size());
  for (std::size_t i = 0; i < idler.size(); ++i) {
    if (!handled[i]) {
      KeyedRng g(seed ^ 0x5bd1e995ULL, Stage::interferometer,
                 idler[i].pair_id != kNoPair ? idler[i].pair_id : unpaired_key(i));
      if (uniform01(g) < 0.5) idler[i].t += delay;
      keep[i] = uniform01(g) < 0.5;
    }
    if (keep[i]) kept.push_back(idler[i]);
  }
  idler = std::move(kept);
  sort_photons(signal);
  sort_photons(idler);
}

struct SegmentOutput {
  std::vector<TimeTag> signal;
  std::vector<TimeTag> idler;
  std::uint64_t pairs = 0;
};

// One stretch of emission time. Dead time is left to the caller, which
// enforces it once on the concatenated streams.
inline SegmentOutput simulate_segment(const Scenario& s, TimeRange range, std::uint64_t seed, PairId first_id,
                                      const AnalyzerPoint* point) {
  SegmentOutput out;
  const std::vector<PairEvent> pairs = generate_pairs(s.source, s.pump, range, seed, first_id);
  out.pairs = pairs.size();
  ArmStreams arms = emit_arms(pairs, s.source, s.pump, range, seed);

  std::vector<Photon> signal_pairs, signal_leaks;
  for (const Photon& p : arms.signal) (p.origin == Origin::pair ? signal_pairs : signal_leaks).push_back(p);
  arms.signal.clear();
  arms.signal.shrink_to_fit();

  // Pair photons go through the memory; pump-induced signal noise is not
  // absorbed by the comb and reaches the analysis stage directly.
  signal_pairs = store_retrieve(signal_pairs, s.afc, seed);
  ChannelConfig quiet = s.signal_channel;
  quiet.background_rate = 0.0;
  signal_pairs = propagate(signal_pairs, quiet, range, seed, Stage::signal_channel);
  std::vector<Photon> idler = propagate(arms.idler, s.idler_channel, range, seed, Stage::idler_channel);
  arms.idler.clear();
  arms.idler.shrink_to_fit();

  if (point) apply_analyzers(signal_pairs, idler, *point, s.source.intrinsic_visibility, seed);

  DetectorConfig idler_det = s.idler_detector;
  idler_det.dead_time = 0;
  DetectorConfig signal_det = s.signal_detector;
  signal_det.dead_time = 0;

  std::vector<TimeTag> idler_tags = detect(idler, idler_det, s.idler_chopper, range, seed, kIdlerChannel);
  if (s.pump_mode == PumpMode::heralded) {
    idler_tags = enforce_dead_time(std::move(idler_tags), s.idler_detector.dead_time);
    const Duration idler_delay = s.idler_channel.propagation_delay();
    auto emission_of = [&](const TimeTag& t) -> std::optional<TimePoint> {
      if (t.pair_id != kNoPair) return pairs[t.pair_id - first_id].t_emit;
      if (t.origin == Origin::dark) return std::nullopt;
      return t.t - idler_delay;  // leak or fibre background; detector jitter ignored
    };
    HeraldedRecord herald = apply_herald_feedback(idler_tags, s.herald_hold_off, emission_of);
    idler_tags = std::move(herald.recorded);
    std::erase_if(signal_pairs,
                  [&](const Photon& p) { return is_blocked(herald.blocked, pairs[p.pair_id - first_id].t_emit); });
    std::erase_if(signal_leaks, [&](const Photon& p) { return is_blocked(herald.blocked, p.t); });
  }
  out.idler = eto_relay(idler_tags, s.relay_delay);

  signal_leaks = propagate(signal_leaks, s.signal_channel, range, seed, Stage::signal_channel);
  if (point) {
    for (std::size_t k = 0; k < signal_leaks.size(); ++k) {
      KeyedRng g(seed, Stage::interferometer, unpaired_key(k) ^ (std::uint64_t{1} << 62));
      signal_leaks[k].t = signal_analyzer_branch(signal_leaks[k].t, point->signal, g).t;
    }
    sort_photons(signal_leaks);
  }
  std::vector<Photon> signal;
  signal.reserve(signal_pairs.size() + signal_leaks.size());
  std::merge(signal_pairs.begin(), signal_pairs.end(), signal_leaks.begin(), signal_leaks.end(),
             std::back_inserter(signal), [](const Photon& a, const Photon& b) { return earlier(a, b); });
  out.signal = detect(signal, signal_det, s.signal_chopper, range, seed, kSignalChannel, Stage::signal_detector);
  return out;
}

}  // namespace detail

/// Simulates `duration` of emission. Periodic scenarios run in segments with
/// per-segment seeds and globally unique pair ids; the heralded feedback loop
/// needs the whole stream and runs as one segment.
inline TagStreams simulate_streams(const Scenario& s, std::uint64_t seed, Duration duration,
                                   const AnalyzerPoint* point = nullptr) {
  s.validate();
  TagStreams out;
  if (duration <= 0) return out;
  const Duration segment = s.pump_mode == PumpMode::heralded ? duration : s.segment;
  PairId next_id = 0;
  std::uint64_t index = 0;
  for (TimePoint t0 = 0; t0 < duration; t0 += segment, ++index) {
    const TimeRange range{t0, std::min(duration, t0 + segment)};
    detail::SegmentOutput seg = detail::simulate_segment(s, range, mix_seed(seed, index, 0x5e6), next_id, point);
    next_id += seg.pairs;
    out.pairs += seg.pairs;
    out.signal.insert(out.signal.end(), seg.signal.begin(), seg.signal.end());
    out.idler.insert(out.idler.end(), seg.idler.begin(), seg.idler.end());
  }
  detail::sort_tags(out.signal);
  detail::sort_tags(out.idler);
  out.signal = enforce_dead_time(std::move(out.signal), s.signal_detector.dead_time);
  out.idler = enforce_dead_time(std::move(out.idler), s.idler_detector.dead_time);
  return out;
}

/// Histogram geometry used for a scenario: the echo window is aligned to a bin,
/// and the range reaches two pattern periods before and the accidental windows
/// after the echo.
inline DelayWindow histogram_range(const Scenario& s, Duration echo) {
  const Duration w = s.analysis.window;
  const Duration p = s.pattern_period();
  const DelayWindow e = centered_window(echo, w);
  const int after = std::max(s.analysis.accidental_windows + 1, 2);
  return DelayWindow{e.begin - 2 * p, e.end + after * p};
}

inline std::vector<DelayWindow> accidental_windows_for(const Scenario& s, Duration echo) {
  if (s.pump_mode == PumpMode::heralded)
    return place_preecho_windows(echo, s.analysis.window, s.analysis.accidental_windows);
  return place_accidental_windows(echo, s.analysis.window, s.pattern_period(), s.analysis.accidental_windows,
                                  histogram_range(s, echo));
}

struct RunReport {
  std::string scenario;
  DelayLedger ledger;
  Duration echo_delay = 0;
  Duration tdc_offset = 0;
  Histogram histogram;
  std::optional<G2Result> g2;
  std::string g2_error;  // why g2 is missing, if it is
  std::optional<TriangleFit> triangle;
  std::optional<FransonResult> franson;
  std::uint64_t pairs = 0;
  std::uint64_t signal_tags = 0;
  std::uint64_t idler_tags = 0;      // after the TDC recording window
  double rate_signal = 0.0;          // clicks/s
  double rate_idler = 0.0;           // recorded clicks/s
  std::vector<std::filesystem::path> files;
};

struct RunOptions {
  std::optional<std::filesystem::path> out_dir;  // write tag files, histogram and records here
  bool fit_triangle = true;
};

namespace detail {

inline std::uint64_t central_count(const Scenario& s, const TagStreams& streams, const GatingSchedule& recording,
                                   Duration echo) {
  const std::vector<TimeTag> idler =
      s.pump_mode == PumpMode::periodic ? tdc_gate(streams.idler, recording) : streams.idler;
  const DelayWindow w = centered_window(echo, s.analysis.window);
  return coincidence_histogram(idler, streams.signal, w.length(), w.begin, w.end).total();
}

inline FransonResult run_franson(const Scenario& s, const GatingSchedule& recording, Duration echo) {
  const FransonPlan& plan = s.franson;
  std::vector<FransonSetting> settings;
  std::uint64_t point_index = 0;
  for (double phase_s : plan.signal_phases) {
    FransonSetting setting;
    setting.phase_signal = phase_s;
    if (plan.fringe_points > 0) {
      for (int k = 0; k < plan.fringe_points; ++k)
        setting.phases_idler.push_back(2.0 * std::numbers::pi * k / plan.fringe_points);
    } else {
      setting.phases_idler = {-phase_s, std::numbers::pi - phase_s};
    }
    for (double phase_i : setting.phases_idler) {
      const AnalyzerPoint point{InterferometerSetting{phase_s, plan.interferometer_delay},
                                InterferometerSetting{phase_i, plan.interferometer_delay}};
      const TagStreams streams =
          simulate_streams(s, mix_seed(s.seed, 1000 + point_index++, 0xf4a), plan.duration_per_point, &point);
      setting.counts.push_back(static_cast<double>(central_count(s, streams, recording, echo)));
    }
    if (plan.fringe_points > 0) {
      const FringeFit fit = fit_fringe(setting.phases_idler, setting.counts);
      setting.visibility = Estimate{fit.visibility, fit.sigma};
    } else {
      setting.visibility = visibility_maxmin(setting.counts[0], setting.counts[1]);
    }
    settings.push_back(std::move(setting));
  }
  return summarize_franson(std::move(settings));
}

inline Records report_records(const RunReport& r) {
  Records out;
  auto num = [&](const char* k, double v) { out.emplace_back(k, format_double(v)); };
  auto integer = [&](const char* k, std::int64_t v) { out.emplace_back(k, std::to_string(v)); };
  out.emplace_back("scenario", r.scenario);
  integer("echo_delay_ps", r.echo_delay);
  integer("tdc_offset_ps", r.tdc_offset);
  integer("pairs", static_cast<std::int64_t>(r.pairs));
  integer("signal_tags", static_cast<std::int64_t>(r.signal_tags));
  integer("idler_tags", static_cast<std::int64_t>(r.idler_tags));
  num("rate_signal", r.rate_signal);
  num("rate_idler", r.rate_idler);
  if (r.g2) {
    num("g2", r.g2->g2);
    num("sigma", r.g2->sigma);
    integer("n_echo", static_cast<std::int64_t>(r.g2->n_echo));
    num("n_acc", r.g2->n_acc_mean);
    integer("n_acc_total", static_cast<std::int64_t>(r.g2->n_acc_total));
    integer("accidental_windows", static_cast<std::int64_t>(r.g2->accidental_windows.size()));
    num("classical_g2_bound", kClassicalG2Bound);
    num("g2_above_classical_sigma", r.g2->sigma > 0 ? (r.g2->g2 - kClassicalG2Bound) / r.g2->sigma : 0.0);
    const NoiseBound nb = visibility_bound_from_g2(r.g2->g2);
    num("visibility_noise_bound", nb.value);
  } else {
    out.emplace_back("g2", "undefined");
    out.emplace_back("g2_error", r.g2_error);
  }
  if (r.triangle) {
    num("triangle_peak", r.triangle->peak);
    num("triangle_trough", r.triangle->trough);
    num("triangle_phase_ps", r.triangle->phase);
    num("triangle_rms_residual", r.triangle->rms_residual);
    out.emplace_back("triangle_degenerate", r.triangle->degenerate ? "true" : "false");
  }
  if (r.franson) {
    num("visibility", r.franson->visibility);
    num("sigma_v", r.franson->sigma_v);
    num("fidelity", r.franson->fidelity);
    num("sigma_f", r.franson->sigma_f);
    for (std::size_t i = 0; i < r.franson->per_setting.size(); ++i) {
      const auto& st = r.franson->per_setting[i];
      const std::string p = "setting" + std::to_string(i) + ".";
      out.emplace_back(p + "phase_signal", format_double(st.phase_signal));
      out.emplace_back(p + "visibility", format_double(st.visibility.value));
      out.emplace_back(p + "sigma", format_double(st.visibility.sigma));
      std::string counts;
      for (double c : st.counts) counts += (counts.empty() ? "" : ", ") + format_double(c);
      out.emplace_back(p + "counts", counts);
    }
    const EntanglementReport cls = classify_entanglement(r.franson->visibility, r.franson->sigma_v);
    for (const auto& c : cls.checks) {
      out.emplace_back("threshold." + c.name, format_double(c.threshold));
      out.emplace_back("threshold." + c.name + ".passed", c.passed ? "true" : "false");
      out.emplace_back("threshold." + c.name + ".significance", format_double(c.significance));
    }
  }
  return out;
}

}  // namespace detail

inline Records ledger_records(const DelayLedger& l) {
  Records out;
  for (const auto& i : l.items) out.emplace_back(i.name + "_ps", std::to_string(i.delay));
  out.emplace_back("total_ps", std::to_string(l.total()));
  return out;
}

/// Runs the scenario, analyses it and, with `out_dir`, writes signal.tags,
/// idler.tags, histogram.csv, results.txt, ledger.txt and scenario.cfg.
/// A run without accidental coincidences reports g2 as undefined.
inline RunReport run_scenario(const Scenario& s, const RunOptions& opt = {}) {
  s.validate();
  RunReport r;
  r.scenario = s.name;
  r.ledger = delay_ledger(s);
  r.echo_delay = r.ledger.total();

  TagStreams streams = simulate_streams(s, s.seed, s.duration);
  r.pairs = streams.pairs;
  GatingSchedule recording = s.tdc_recording;
  if (s.pump_mode == PumpMode::periodic) {
    if (s.calibrate_tdc && !streams.idler.empty())
      recording.offset_ps = calibrate_offset(streams.idler, recording, s.analysis.calibration_step);
    streams.idler = tdc_gate(streams.idler, recording);
  }
  r.tdc_offset = recording.offset_ps;
  r.signal_tags = streams.signal.size();
  r.idler_tags = streams.idler.size();
  if (s.duration > 0) {
    r.rate_signal = static_cast<double>(r.signal_tags) / to_seconds(s.duration);
    r.rate_idler = static_cast<double>(r.idler_tags) / to_seconds(s.duration);
  }

  const DelayWindow range = histogram_range(s, r.echo_delay);
  r.histogram = coincidence_histogram(streams.idler, streams.signal, s.analysis.window, range.begin, range.end);
  const DelayWindow echo = centered_window(r.echo_delay, s.analysis.window);
  try {
    r.g2 = g2_from_histogram(r.histogram, echo, accidental_windows_for(s, r.echo_delay));
    r.g2->rate_idler = r.rate_idler;
  } catch (const UndefinedG2& e) {
    r.g2_error = e.what();
  }
  if (opt.fit_triangle && s.pump_mode == PumpMode::periodic && r.histogram.total() > 0) {
    const DelayWindow exclusions[] = {echo};
    r.triangle = fit_triangle(r.histogram, s.pattern_period(), exclusions);
  }
  if (s.franson.enabled) r.franson = detail::run_franson(s, recording, r.echo_delay);

  if (opt.out_dir) {
    const auto& dir = *opt.out_dir;
    std::filesystem::create_directories(dir);
    auto emit = [&](const std::string& name, auto&& write) {
      const auto path = dir / name;
      auto out = detail::open_out(path);
      write(out);
      r.files.push_back(path);
    };
    emit("signal.tags", [&](std::ostream& o) { write_tags(o, streams.signal); });
    emit("idler.tags", [&](std::ostream& o) { write_tags(o, streams.idler); });
    emit("histogram.csv", [&](std::ostream& o) { write_histogram_csv(o, r.histogram); });
    emit("results.txt", [&](std::ostream& o) { write_records(o, detail::report_records(r)); });
    emit("ledger.txt", [&](std::ostream& o) { write_records(o, ledger_records(r.ledger)); });
    emit("scenario.cfg", [&](std::ostream& o) { write_scenario(o, s); });
  }
  return r;
}

inline Records report_records(const RunReport& r) { return detail::report_records(r); }

}  // namespace afcnet
