// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "oracles.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

using namespace afcnet;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what;
    if (!ok) {
      pass = false;
      detail += " [x]";
    }
  }
};

std::string num(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<TimeTag> poisson_tags(double rate, Duration T, std::uint64_t seed, ChannelId ch) {
  Rng rng = make_rng(seed, Stage::test);
  std::vector<TimeTag> v;
  poisson_arrivals(rate, GatingSchedule::always_open(kSecond), TimeRange{0, T}, rng,
                   [&](TimePoint t) { v.push_back(TimeTag{t, kNoPair, ch, Origin::dark}); });
  return v;
}

RunReport run_quiet(Scenario s, Duration duration, int acc_windows = -1) {
  s.duration = duration;
  if (acc_windows > 0) s.analysis.accidental_windows = acc_windows;
  return run_scenario(s, RunOptions{std::nullopt, false});
}

std::string g2_text(const RunReport& r) {
  return r.g2 ? num(r.g2->g2) + "+-" + num(r.g2->sigma, 2) : "undefined";
}

Outcome c1() {
  Outcome o;
  const auto a = mode_capacity(10 * kMicrosecond, 400 * kNanosecond);
  const auto b = mode_capacity(25 * kMicrosecond, 400 * kNanosecond);
  o.check(a == 25, "capacity(10us) = " + std::to_string(a));
  o.check(b == 62, "capacity(25us) = " + std::to_string(b));
  o.check(AfcConfig(1e5, 0.22).capacity() == 25 && AfcConfig(4e4, 0.07).capacity() == 62, "via AfcConfig");
  return o;
}

Outcome c2() {
  Outcome o;
  const Duration T = 100 * kSecond;
  const auto idler = poisson_tags(1e3, T, 21, kIdlerChannel);
  const auto signal = poisson_tags(1e3, T, 22, kSignalChannel);
  const Duration bw = 400 * kNanosecond, echo = 10 * kMicrosecond, p = 20 * kMicrosecond;
  const DelayWindow e = centered_window(echo, bw);
  const auto acc = place_accidental_windows(echo, bw, p, 20);
  const auto h = coincidence_histogram(idler, signal, bw, e.begin, e.end + 21 * p);
  const G2Result r = g2_from_histogram(h, e, acc);
  o.check(oracle::within_sigma(r.g2, 1.0, r.sigma), "g2 = " + num(r.g2) + " +- " + num(r.sigma, 2));
  return o;
}

Outcome c3() {
  Outcome o;
  std::mt19937_64 g(33);
  int equal = 0;
  for (int k = 0; k < 100; ++k) {
    auto draw = [&](ChannelId ch) {
      std::vector<TimeTag> v(std::uniform_int_distribution<int>(0, 1000)(g));
      const Duration span = std::uniform_int_distribution<Duration>(1, 200 * kMicrosecond)(g);
      for (auto& t : v) t = TimeTag{std::uniform_int_distribution<Duration>(0, span)(g), kNoPair, ch, Origin::unknown};
      std::sort(v.begin(), v.end(), [](const TimeTag& a, const TimeTag& b) { return a.t < b.t; });
      return v;
    };
    const auto a = draw(kIdlerChannel), b = draw(kSignalChannel);
    const Duration bw = std::uniform_int_distribution<Duration>(1, 5 * kMicrosecond)(g);
    const Duration lo = std::uniform_int_distribution<Duration>(-100 * kMicrosecond, 50 * kMicrosecond)(g);
    const Duration hi = lo + bw * std::uniform_int_distribution<Duration>(1, 100)(g);
    equal += coincidence_histogram(a, b, bw, lo, hi) == oracle::brute_force_histogram(a, b, bw, lo, hi);
  }
  o.check(equal == 100, std::to_string(equal) + "/100 identical");
  return o;
}

Outcome c4() {
  Outcome o;
  Scenario s = preset("spool-10km");
  const RunReport r = run_quiet(s, 60 * kSecond);
  const DelayWindow echo = centered_window(r.echo_delay, s.analysis.window);
  const std::uint64_t acc = r.histogram.total() - window_count(r.histogram, echo);
  o.check(acc >= 100'000, "accidentals " + std::to_string(acc));
  const Duration bw = r.histogram.bin_width, p = s.pattern_period();
  std::vector<Duration> candidates;
  for (int k = -5; k <= 5; ++k) candidates.push_back(p + k * bw);
  const DelayWindow excl[] = {echo};
  const TriangleFit f = scan_triangle_period(r.histogram, candidates, excl);
  o.check(!f.degenerate && f.trough / f.peak < 0.1, "trough/peak " + num(f.trough / f.peak, 3));
  o.check(std::abs(f.period - p) <= bw, "period " + num(static_cast<double>(f.period) / kMicrosecond) + " us");
  const double d = distance_to_trough(f, r.echo_delay);
  o.check(d <= static_cast<double>(bw), "echo-trough " + num(d / kNanosecond, 3) + " ns");
  return o;
}

Outcome c5() {
  Outcome o;
  auto exact = [](double a, double b) { return std::abs(a - b) < 1e-12; };
  o.check(exact(fidelity_from_visibility(0.84), 0.88), "F(0.84) = " + num(fidelity_from_visibility(0.84), 6));
  o.check(exact(fidelity_from_visibility(0.83), 0.8725), "F(0.83) = " + num(fidelity_from_visibility(0.83), 6));
  o.check(visibility_bound_from_g2(1.0).value == 0.0, "bound(g2=1) = 0");
  auto four = [](double v) { return std::round(v * 1e4) / 1e4; };
  o.check(four(kSeparabilityThreshold) == 0.3333 && four(kChshThreshold) == 0.7071 && four(kQkdThreshold) == 0.78,
          "thresholds 0.3333/0.7071/0.78");
  return o;
}

Outcome c6() {
  Outcome o;
  // Long runs: the spool/metro separation comes only from idler dark counts
  // and is a few percent.
  const RunReport local = run_quiet(preset("local-0km"), 30 * kSecond);
  const RunReport spool = run_quiet(preset("spool-10km"), 2000 * kSecond, 50);
  const RunReport metro = run_quiet(preset("metro-50km"), 12000 * kSecond, 50);
  const RunReport i2cat = run_quiet(preset("i2cat-remote"), 3000 * kSecond, 50);
  const RunReport* seq[] = {&spool, &metro, &i2cat};
  o.check(local.g2 && local.g2->g2 >= 50, "local " + g2_text(local));
  double last = std::numeric_limits<double>::infinity();
  bool monotone = true;
  for (const RunReport* r : seq) {
    const bool ok = r->g2 && r->g2->g2 - kClassicalG2Bound >= 5 * r->g2->sigma;
    o.check(ok, r->scenario + " " + g2_text(*r) +
                    (r->g2 ? " (" + num((r->g2->g2 - 2) / r->g2->sigma, 3) + " sigma)" : ""));
    if (r->g2) {
      monotone &= r->g2->g2 <= last;
      last = r->g2->g2;
    } else {
      monotone = false;
    }
  }
  o.check(monotone, "non-increasing");
  return o;
}

Outcome c7() {
  Outcome o;
  // Independent seed from criterion 6; the preset's 600 s alone leaves a ~30% error.
  Scenario s = preset("i2cat-remote");
  s.seed = 7;
  const RunReport r = run_quiet(s, 3000 * kSecond, 50);
  o.check(r.g2 && r.g2->g2 >= 10 && r.g2->g2 <= 40, "g2 " + g2_text(r));
  return o;
}

Outcome c8() {
  Outcome o;
  auto franson = [](const char* name) {
    Scenario s = preset(name);
    s.franson.enabled = true;
    s.duration = std::min<Duration>(s.duration, 60 * kSecond);
    return *run_scenario(s, RunOptions{std::nullopt, false}).franson;
  };
  const FransonResult local = franson("local-0km");
  o.check(std::abs(local.visibility - 0.83) <= 0.03, "local V " + num(local.visibility, 3) + "+-" + num(local.sigma_v, 2));
  for (const char* name : {"spool-10km", "metro-50km"}) {
    const FransonResult f = franson(name);
    o.check(std::abs(f.visibility - local.visibility) <= 0.05 && f.visibility - kQkdThreshold >= f.sigma_v,
            std::string(name) + " V " + num(f.visibility, 3) + "+-" + num(f.sigma_v, 2));
  }
  return o;
}

Outcome c9() {
  Outcome o;
  auto probe = [&](const char* name, double pair_rate, Duration duration, Duration per_point) {
    Scenario s = preset(name);
    s.source.intrinsic_visibility = 1.0;
    s.source.pair_rate_on = pair_rate;
    s.duration = duration;
    s.franson.enabled = true;
    s.franson.fringe_points = 0;
    s.franson.duration_per_point = per_point;
    const RunReport r = run_scenario(s, RunOptions{std::nullopt, false});
    if (!r.g2 || !r.franson) {
      o.check(false, std::string(name) + ": g2 undefined");
      return;
    }
    const double bound = visibility_bound_from_g2(r.g2->g2).value;
    const double v = r.franson->visibility, sv = r.franson->sigma_v;
    o.check(v <= bound + 2 * sv, std::string(name) + " V " + num(v, 3) + "+-" + num(sv, 2) + " vs bound " +
                                     num(bound, 3) + " (g2 " + num(r.g2->g2, 3) + ")");
  };
  probe("local-0km", 25'000, 20 * kSecond, 20 * kSecond);
  probe("metro-50km", 200'000, 100 * kSecond, 100 * kSecond);
  return o;
}

Outcome c10() {
  Outcome o;
  Scenario s = preset("spool-10km");
  s.duration = 2 * kSecond;
  const fs::path base = fs::temp_directory_path() / "afcnet_acceptance";
  fs::remove_all(base);
  run_scenario(s, RunOptions{base / "a", false});
  run_scenario(s, RunOptions{base / "b", false});
  bool same = true;
  for (const char* f : {"signal.tags", "idler.tags", "histogram.csv", "results.txt"})
    same &= slurp(base / "a" / f) == slurp(base / "b" / f);
  o.check(same, "byte-identical outputs");
  fs::remove_all(base);

  for (const auto& name : preset_names()) {
    Scenario p = preset(name);
    // Long enough to lift the echo clearly above the floor.
    Duration d = 10 * kSecond;
    if (name.starts_with("metro")) d = 60 * kSecond;
    if (name.starts_with("i2cat")) d = name.ends_with("-25us") ? 2000 * kSecond : 600 * kSecond;
    const RunReport r = run_quiet(p, d);
    std::optional<Duration> period;
    if (p.pump_mode == PumpMode::periodic) period = p.pattern_period();
    const Duration peak = locate_echo_peak(r.histogram, period);
    const Duration off = std::abs(peak - r.echo_delay);
    o.check(off <= p.analysis.window, name + " peak-ledger " + num(static_cast<double>(off) / kNanosecond, 3) + " ns");
  }
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const Criterion criteria[] = {
      {1, "mode capacity", 0.001, c1},        {2, "null correlation", 10, c2},
      {3, "histogram oracle", 10, c3},        {4, "triangle pattern", 60, c4},
      {5, "formulas", 0.001, c5},             {6, "non-classical across presets", 300, c6},
      {7, "i2cat magnitude", 120, c7},        {8, "visibility constancy", 300, c8},
      {9, "noise bound", 120, c9},            {10, "determinism and ledger", 60, c10},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.check(secs < c.budget_s, "runtime " + num(secs, 3) + " s");
    failed += !o.pass;
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
