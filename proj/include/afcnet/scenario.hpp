#pragma once

// Scenario description: every knob of one end-to-end run, the named presets,
// the echo-delay bookkeeping and the flat `key = value` configuration schema.

#include <cmath>
#include <cstdint>
#include <istream>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "afcnet/channel.hpp"
#include "afcnet/detection.hpp"
#include "afcnet/errors.hpp"
#include "afcnet/formats.hpp"
#include "afcnet/memory.hpp"
#include "afcnet/source.hpp"
#include "afcnet/timeline.hpp"

namespace afcnet {

enum class PumpMode : std::uint8_t { heralded, periodic };

constexpr std::string_view to_string(PumpMode m) { return m == PumpMode::heralded ? "heralded" : "periodic"; }

/// Phase sweep for the two-photon interference measurement.
struct FransonPlan {
  bool enabled = false;
  std::vector<double> signal_phases{0.0, std::numbers::pi / 2};
  int fringe_points = 8;  // idler phases per signal setting; 0 selects the max/min pair
  Duration duration_per_point = 10 * kSecond;
  Duration interferometer_delay = 1 * kMicrosecond;
};

struct AnalysisConfig {
  Duration window = 400 * kNanosecond;
  int accidental_windows = 3;
  Duration calibration_step = 100 * kNanosecond;
};

inline constexpr Duration kChopperPeriod = 33'333'333'333;  // 30 Hz

struct Scenario {
  std::string name = "custom";
  SourceConfig source;
  AfcConfig afc;
  ChannelConfig signal_channel;
  ChannelConfig idler_channel;
  DetectorConfig signal_detector{0.7, 10.0, 50, 50 * kNanosecond, false};
  DetectorConfig idler_detector{0.85, 10.0, 50, 50 * kNanosecond, false};
  PumpMode pump_mode = PumpMode::periodic;
  GatingSchedule pump = GatingSchedule::square(20 * kMicrosecond, 10 * kMicrosecond);
  GatingSchedule tdc_recording = GatingSchedule::square(20 * kMicrosecond, 10 * kMicrosecond);
  bool calibrate_tdc = true;  // replace tdc_recording.offset_ps by the calibrated value
  GatingSchedule signal_chopper = GatingSchedule::square(kChopperPeriod, kChopperPeriod / 2);
  GatingSchedule idler_chopper = GatingSchedule::square(kChopperPeriod, kChopperPeriod / 2);
  Duration herald_hold_off = 12 * kMicrosecond;
  Duration relay_delay = 0;
  Duration duration = 30 * kSecond;
  Duration segment = 1 * kSecond;
  std::uint64_t seed = 1;
  AnalysisConfig analysis;
  FransonPlan franson;

  /// Pattern period of the accidental floor (the pump period).
  Duration pattern_period() const { return pump.period_ps; }

  void collect_errors(std::vector<std::string>& out) const;
  void validate() const {
    std::vector<std::string> p;
    collect_errors(p);
    detail::throw_if_any(std::move(p));
  }
};

namespace detail {

inline void check_schedule(std::vector<std::string>& out, const std::string& path, const GatingSchedule& s) {
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    out.push_back(path + ": " + e.what());
  }
}

}  // namespace detail

inline void Scenario::collect_errors(std::vector<std::string>& out) const {
  source.collect_errors("source", out);
  afc.collect_errors("afc", out);
  signal_channel.collect_errors("signal_channel", out);
  idler_channel.collect_errors("idler_channel", out);
  signal_detector.collect_errors("signal_detector", out);
  idler_detector.collect_errors("idler_detector", out);
  detail::check_schedule(out, "pump", pump);
  detail::check_schedule(out, "tdc", tdc_recording);
  detail::check_schedule(out, "signal_chopper", signal_chopper);
  detail::check_schedule(out, "idler_chopper", idler_chopper);

  const Duration tau = afc.storage_time();
  if (pump.period_ps != 2 * tau)
    out.push_back("pump.period_ps: must equal twice the storage time (" + std::to_string(2 * tau) + " ps)");
  if (pump_mode == PumpMode::periodic) {
    if (pump.on_ps != tau)
      out.push_back("pump.on_ps: periodic gating needs on-time equal to the storage time (" + std::to_string(tau) +
                    " ps)");
  } else {
    if (!pump.is_always_open()) out.push_back("pump.on_ps: heralded gating needs an always-on pump schedule");
    if (herald_hold_off <= 0) out.push_back("herald_hold_off_ps: must be positive");
  }
  if (tdc_recording.period_ps != pump.period_ps) out.push_back("tdc.period_ps: must equal the pump period");
  if (relay_delay < 0) out.push_back("relay_delay_ps: must be non-negative");
  if (duration < 0) out.push_back("duration_ps: must be non-negative");
  if (segment <= 0) out.push_back("segment_ps: must be positive");
  if (analysis.window <= 0) out.push_back("analysis.window_ps: must be positive");
  if (analysis.window > pump.period_ps) out.push_back("analysis.window_ps: must not exceed the pump period");
  if (analysis.accidental_windows < 1) out.push_back("analysis.accidental_windows: must be at least 1");
  if (analysis.calibration_step <= 0 || tdc_recording.period_ps % analysis.calibration_step != 0)
    out.push_back("analysis.calibration_step_ps: must be positive and divide the TDC period");
  if (pump_mode == PumpMode::heralded &&
      (analysis.accidental_windows + 2) * analysis.window > 2 * pump.period_ps)
    out.push_back("analysis.accidental_windows: pre-echo windows do not fit in the histogram range");
  if (franson.enabled) {
    if (franson.signal_phases.empty()) out.push_back("franson.signal_phases: need at least one phase");
    if (franson.fringe_points != 0 && franson.fringe_points < 4)
      out.push_back("franson.fringe_points: use 0 (max/min) or at least 4");
    if (franson.duration_per_point <= 0) out.push_back("franson.duration_per_point_ps: must be positive");
    if (franson.interferometer_delay <= 0) out.push_back("franson.interferometer_delay_ps: must be positive");
    else if (franson.interferometer_delay < analysis.window)
      out.push_back("franson.interferometer_delay_ps: side bins would fall inside the analysis window");
  }
}

// --- delay bookkeeping -------------------------------------------------------

struct LedgerItem {
  std::string name;
  Duration delay = 0;  // contribution to t_signal - t_idler at the TDC
};

struct DelayLedger {
  std::vector<LedgerItem> items;

  Duration total() const {
    Duration t = 0;
    for (const auto& i : items) t += i.delay;
    return t;
  }
};

/// Itemized idler-to-signal delay of the retrieved echo as seen by the TDC.
/// Zero contributions are left out.
inline DelayLedger delay_ledger(const Scenario& s) {
  DelayLedger l;
  auto add = [&](std::string name, Duration d) {
    if (d != 0) l.items.push_back(LedgerItem{std::move(name), d});
  };
  add("afc_storage", s.afc.storage_time());
  add("signal_channel", s.signal_channel.propagation_delay());
  add("idler_channel", -s.idler_channel.propagation_delay());
  add("relay", -s.relay_delay);
  return l;
}

// --- presets -----------------------------------------------------------------

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{
      "local-0km",      "spool-10km",      "metro-50km",      "i2cat-remote",
      "local-0km-25us", "spool-10km-25us", "metro-50km-25us", "i2cat-remote-25us"};
  return names;
}

/// Chopper phases chosen so that both photons of a pair see open choppers.
inline void align_choppers(Scenario& s) {
  s.signal_chopper.offset_ps = floor_mod(s.afc.storage_time() + s.signal_channel.propagation_delay(),
                                         s.signal_chopper.period_ps);
  s.idler_chopper.offset_ps = floor_mod(s.idler_channel.propagation_delay(), s.idler_chopper.period_ps);
}

/// Pump, TDC and herald timing that follow from the storage time.
inline void derive_schedules(Scenario& s) {
  const Duration tau = s.afc.storage_time();
  s.pump = s.pump_mode == PumpMode::periodic ? GatingSchedule::square(2 * tau, tau)
                                             : GatingSchedule::always_open(2 * tau);
  s.tdc_recording = s.pump_mode == PumpMode::periodic ? GatingSchedule::square(2 * tau, tau)
                                                      : GatingSchedule::always_open(2 * tau);
  s.calibrate_tdc = s.pump_mode == PumpMode::periodic;
  s.herald_hold_off = tau + 2 * kMicrosecond;
}

inline Scenario preset(std::string_view name) {
  std::string_view base = name;
  const bool long_storage = base.ends_with("-25us");
  if (long_storage) base.remove_suffix(5);

  Scenario s;
  s.name = std::string(name);
  if (long_storage) s.afc = AfcConfig(40'000.0, 0.07);

  if (base == "local-0km") {
    s.pump_mode = PumpMode::heralded;
    s.duration = 30 * kSecond;
    s.analysis.accidental_windows = 10;
    s.franson.fringe_points = 8;
    s.franson.duration_per_point = 20 * kSecond;
  } else if (base == "spool-10km") {
    s.idler_channel.length_km = 10.0;
    s.idler_channel.loss_db = 3.5;
    s.relay_delay = 250 * kMicrosecond;
    s.duration = 60 * kSecond;
    s.analysis.accidental_windows = 20;
    s.franson.fringe_points = 8;
    s.franson.duration_per_point = 60 * kSecond;
  } else if (base == "metro-50km") {
    s.idler_channel.length_km = 50.0;
    s.idler_channel.loss_db = 15.0;
    s.relay_delay = 250 * kMicrosecond;
    s.duration = 300 * kSecond;
    s.analysis.accidental_windows = 20;
    s.franson.fringe_points = 0;
    s.franson.duration_per_point = 600 * kSecond;
  } else if (base == "i2cat-remote") {
    s.idler_channel.length_km = 47.0;
    s.idler_channel.quoted_delay = 210 * kMicrosecond;
    s.idler_channel.loss_db = 15.0 + 13.0;
    s.idler_detector = DetectorConfig{0.10, 10.0, 200, 50 * kNanosecond, false};
    s.relay_delay = 235 * kMicrosecond;
    s.duration = 600 * kSecond;
    s.analysis.accidental_windows = 20;
    s.franson.fringe_points = 0;
    s.franson.duration_per_point = 3000 * kSecond;
  } else {
    std::string known;
    for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
    throw std::invalid_argument("unknown preset '" + std::string(name) + "' (known: " + known + ")");
  }
  derive_schedules(s);
  align_choppers(s);
  return s;
}

// --- key = value schema ------------------------------------------------------

namespace detail {

struct FieldSink {
  virtual ~FieldSink() = default;
  virtual void field(std::string_view key, double& v) = 0;
  virtual void field(std::string_view key, std::int64_t& v) = 0;
  virtual void field(std::string_view key, std::uint64_t& v) = 0;
  virtual void field(std::string_view key, int& v) = 0;
  virtual void field(std::string_view key, bool& v) = 0;
  virtual void field(std::string_view key, std::string& v) = 0;
  virtual void field(std::string_view key, PumpMode& v) = 0;
  virtual void field(std::string_view key, std::optional<std::int64_t>& v) = 0;
  virtual void field(std::string_view key, std::vector<double>& v) = 0;
  virtual void afc_spacing(std::string_view key, AfcConfig& afc) = 0;
};

inline void visit_schedule(FieldSink& f, const std::string& prefix, GatingSchedule& g) {
  f.field(prefix + ".period_ps", g.period_ps);
  f.field(prefix + ".on_ps", g.on_ps);
  f.field(prefix + ".offset_ps", g.offset_ps);
}

inline void visit_channel(FieldSink& f, const std::string& prefix, ChannelConfig& c) {
  f.field(prefix + ".length_km", c.length_km);
  f.field(prefix + ".loss_db", c.loss_db);
  f.field(prefix + ".delay_per_km_ps", c.delay_per_km);
  f.field(prefix + ".extra_delay_ps", c.extra_delay);
  f.field(prefix + ".quoted_delay_ps", c.quoted_delay);
  f.field(prefix + ".background_rate", c.background_rate);
}

inline void visit_detector(FieldSink& f, const std::string& prefix, DetectorConfig& d) {
  f.field(prefix + ".efficiency", d.efficiency);
  f.field(prefix + ".dark_rate", d.dark_rate);
  f.field(prefix + ".jitter_sigma_ps", d.jitter_sigma);
  f.field(prefix + ".dead_time_ps", d.dead_time);
  f.field(prefix + ".dark_gated", d.dark_gated);
}

// Every configurable field, in the order they are written out.
inline void visit_scenario(FieldSink& f, Scenario& s) {
  f.field("name", s.name);
  f.field("source.pair_rate_on", s.source.pair_rate_on);
  f.field("source.coupling_signal", s.source.coupling_signal);
  f.field("source.coupling_idler", s.source.coupling_idler);
  f.field("source.pair_correlation_sigma_ps", s.source.pair_correlation_sigma);
  f.field("source.leak_rate_signal", s.source.leak_rate_signal);
  f.field("source.leak_rate_idler", s.source.leak_rate_idler);
  f.field("source.intrinsic_visibility", s.source.intrinsic_visibility);
  f.field("source.mode_duration_ps", s.source.mode_duration);
  f.afc_spacing("afc.comb_spacing_hz", s.afc);
  f.field("afc.efficiency", s.afc.efficiency);
  f.field("afc.mode_duration_ps", s.afc.mode_duration);
  f.field("afc.capture_fraction", s.afc.capture_fraction);
  visit_channel(f, "signal_channel", s.signal_channel);
  visit_channel(f, "idler_channel", s.idler_channel);
  visit_detector(f, "signal_detector", s.signal_detector);
  visit_detector(f, "idler_detector", s.idler_detector);
  f.field("pump.mode", s.pump_mode);
  visit_schedule(f, "pump", s.pump);
  visit_schedule(f, "tdc", s.tdc_recording);
  f.field("tdc.calibrate", s.calibrate_tdc);
  visit_schedule(f, "signal_chopper", s.signal_chopper);
  visit_schedule(f, "idler_chopper", s.idler_chopper);
  f.field("herald_hold_off_ps", s.herald_hold_off);
  f.field("relay_delay_ps", s.relay_delay);
  f.field("duration_ps", s.duration);
  f.field("segment_ps", s.segment);
  f.field("seed", s.seed);
  f.field("analysis.window_ps", s.analysis.window);
  f.field("analysis.accidental_windows", s.analysis.accidental_windows);
  f.field("analysis.calibration_step_ps", s.analysis.calibration_step);
  f.field("franson.enabled", s.franson.enabled);
  f.field("franson.signal_phases", s.franson.signal_phases);
  f.field("franson.fringe_points", s.franson.fringe_points);
  f.field("franson.duration_per_point_ps", s.franson.duration_per_point);
  f.field("franson.interferometer_delay_ps", s.franson.interferometer_delay);
}

struct Writer final : FieldSink {
  Records out;
  void put(std::string_view k, std::string v) { out.emplace_back(std::string(k), std::move(v)); }
  void field(std::string_view k, double& v) override { put(k, format_double(v)); }
  void field(std::string_view k, std::int64_t& v) override { put(k, std::to_string(v)); }
  void field(std::string_view k, std::uint64_t& v) override { put(k, std::to_string(v)); }
  void field(std::string_view k, int& v) override { put(k, std::to_string(v)); }
  void field(std::string_view k, bool& v) override { put(k, v ? "true" : "false"); }
  void field(std::string_view k, std::string& v) override { put(k, v); }
  void field(std::string_view k, PumpMode& v) override { put(k, std::string(to_string(v))); }
  void field(std::string_view k, std::optional<std::int64_t>& v) override {
    put(k, v ? std::to_string(*v) : std::string("none"));
  }
  void field(std::string_view k, std::vector<double>& v) override {
    std::string s;
    for (double x : v) s += (s.empty() ? "" : ", ") + format_double(x);
    put(k, s);
  }
  void afc_spacing(std::string_view k, AfcConfig& afc) override { put(k, format_double(afc.comb_spacing_hz())); }
};

struct Reader final : FieldSink {
  std::string_view key;
  std::string_view value;
  bool matched = false;
  std::string error;

  bool hit(std::string_view k) {
    if (matched || k != key) return false;
    matched = true;
    return true;
  }
  void fail(const char* expected) { error = std::string(key) + ": expected " + expected + ", got '" + std::string(value) + "'"; }

  void field(std::string_view k, double& v) override {
    if (hit(k) && !parse_number(value, v)) fail("a number");
  }
  void field(std::string_view k, std::int64_t& v) override {
    if (hit(k) && !parse_number(value, v)) fail("an integer");
  }
  void field(std::string_view k, std::uint64_t& v) override {
    if (hit(k) && !parse_number(value, v)) fail("a non-negative integer");
  }
  void field(std::string_view k, int& v) override {
    if (hit(k) && !parse_number(value, v)) fail("an integer");
  }
  void field(std::string_view k, bool& v) override {
    if (!hit(k)) return;
    if (value == "true") v = true;
    else if (value == "false") v = false;
    else fail("true or false");
  }
  void field(std::string_view k, std::string& v) override {
    if (hit(k)) v = std::string(value);
  }
  void field(std::string_view k, PumpMode& v) override {
    if (!hit(k)) return;
    if (value == "heralded") v = PumpMode::heralded;
    else if (value == "periodic") v = PumpMode::periodic;
    else fail("heralded or periodic");
  }
  void field(std::string_view k, std::optional<std::int64_t>& v) override {
    if (!hit(k)) return;
    if (value == "none") {
      v.reset();
      return;
    }
    std::int64_t x = 0;
    if (parse_number(value, x)) v = x;
    else fail("an integer or none");
  }
  void field(std::string_view k, std::vector<double>& v) override {
    if (!hit(k)) return;
    std::vector<double> out;
    std::string_view rest = value;
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      double x = 0;
      if (!parse_number(rest.substr(0, comma), x)) return fail("a comma-separated list of numbers");
      out.push_back(x);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    v = std::move(out);
  }
  void afc_spacing(std::string_view k, AfcConfig& afc) override {
    if (!hit(k)) return;
    double hz = 0;
    if (!parse_number(value, hz)) return fail("a number");
    if (!(hz > 0)) return fail("a positive frequency");
    afc.set_comb_spacing(hz);
  }
};

}  // namespace detail

/// The scenario as `key = value` records covering every field.
inline Records scenario_records(const Scenario& s) {
  Scenario copy = s;
  detail::Writer w;
  detail::visit_scenario(w, copy);
  return w.out;
}

inline void write_scenario(std::ostream& out, const Scenario& s) {
  out << "# afcnet scenario\n";
  write_records(out, scenario_records(s));
}

/// Overlays `key = value` lines onto `base`. Unknown keys, duplicates and
/// malformed values are reported together; the result is then validated.
inline Scenario apply_config(Scenario base, std::istream& in, const std::string& source = "<config>") {
  std::vector<std::string> problems;
  for (const RecordLine& r : read_records(in, source)) {
    detail::Reader reader;
    reader.key = r.key;
    reader.value = r.value;
    detail::visit_scenario(reader, base);
    if (!reader.matched)
      problems.push_back(source + ":" + std::to_string(r.line) + ": unknown key '" + r.key + "'");
    else if (!reader.error.empty())
      problems.push_back(source + ":" + std::to_string(r.line) + ": " + reader.error);
  }
  detail::throw_if_any(std::move(problems));
  base.validate();
  return base;
}

inline Scenario apply_config_text(Scenario base, std::string_view text) {
  std::istringstream in{std::string(text)};
  return apply_config(std::move(base), in);
}

}  // namespace afcnet
