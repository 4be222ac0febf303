// afcnet command line: simulate a preset, analyse recorded tag files, or
// summarise a finished run directory.

#include <CLI11.hpp>

#include <afcnet/afcnet.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

namespace fs = std::filesystem;
using namespace afcnet;

namespace {

int cmd_simulate(const std::string& preset_name, const std::string& config, std::optional<std::uint64_t> seed,
                 const std::string& out_dir) {
  Scenario s = preset(preset_name);
  if (!config.empty()) {
    auto in = detail::open_in(config);
    s = apply_config(std::move(s), in, config);
  }
  if (seed) s.seed = *seed;
  s.validate();
  const fs::path dir = out_dir.empty() ? fs::path("runs") / s.name : fs::path(out_dir);
  const RunReport r = run_scenario(s, RunOptions{dir, true});
  write_records(std::cout, report_records(r));
  std::cout << "# wrote " << r.files.size() << " files to " << dir.string() << '\n';
  if (!r.g2) {
    std::cerr << "afcnet: " << r.g2_error << '\n';
    return 3;
  }
  return 0;
}

int cmd_analyze(const std::string& signal_path, const std::string& idler_path, double window_ns,
                Duration echo_delay, std::optional<Duration> period, int n_windows, const std::string& hist_out) {
  const auto signal = load_tags(signal_path);
  const auto idler = load_tags(idler_path);
  const auto window = static_cast<Duration>(std::llround(window_ns * static_cast<double>(kNanosecond)));
  if (window <= 0) throw std::invalid_argument("--window-ns must be positive");
  const DelayWindow echo = centered_window(echo_delay, window);

  DelayWindow range;
  std::vector<DelayWindow> acc;
  if (period) {
    range = DelayWindow{echo.begin - 2 * *period, echo.end + (n_windows + 1) * *period};
    acc = place_accidental_windows(echo_delay, window, *period, n_windows, range);
  } else {
    range = DelayWindow{echo.begin - (n_windows + 1) * window, echo.end};
    acc = place_preecho_windows(echo_delay, window, n_windows);
  }
  const Histogram h = coincidence_histogram(idler, signal, window, range.begin, range.end);
  if (!hist_out.empty()) {
    auto out = detail::open_out(hist_out);
    write_histogram_csv(out, h);
  }

  Records rec;
  rec.emplace_back("signal_tags", std::to_string(signal.size()));
  rec.emplace_back("idler_tags", std::to_string(idler.size()));
  rec.emplace_back("echo_delay_ps", std::to_string(echo_delay));
  try {
    const G2Result g = g2_from_histogram(h, echo, acc);
    rec.emplace_back("g2", detail::format_double(g.g2));
    rec.emplace_back("sigma", detail::format_double(g.sigma));
    rec.emplace_back("n_echo", std::to_string(g.n_echo));
    rec.emplace_back("n_acc", detail::format_double(g.n_acc_mean));
    rec.emplace_back("classical_g2_bound", detail::format_double(kClassicalG2Bound));
    rec.emplace_back("visibility_noise_bound", detail::format_double(visibility_bound_from_g2(g.g2).value));
    if (period && h.total() > 0) {
      const DelayWindow ex[] = {echo};
      const TriangleFit f = fit_triangle(h, *period, ex);
      rec.emplace_back("triangle_trough_over_peak", detail::format_double(f.peak > 0 ? f.trough / f.peak : 0.0));
      rec.emplace_back("echo_to_trough_ps", detail::format_double(distance_to_trough(f, echo_delay)));
    }
    write_records(std::cout, rec);
  } catch (const UndefinedG2& e) {
    write_records(std::cout, rec);
    std::cerr << "afcnet: " << e.what() << '\n';
    return 3;
  }
  return 0;
}

std::map<std::string, std::string> load_record_map(const fs::path& p) {
  auto in = detail::open_in(p);
  std::map<std::string, std::string> m;
  for (auto& r : read_records(in, p.string())) m[r.key] = r.value;
  return m;
}

int cmd_report(const std::string& run_dir) {
  const fs::path dir(run_dir);
  const auto results = load_record_map(dir / "results.txt");

  std::cout << "scenario " << (results.count("scenario") ? results.at("scenario") : "?") << "\n\n";
  std::cout << "echo delay ledger\n";
  {
    auto in = detail::open_in(dir / "ledger.txt");
    for (const auto& r : read_records(in)) std::cout << "  " << r.key << " = " << r.value << '\n';
  }
  auto number = [&](const std::string& key) -> std::optional<double> {
    const auto it = results.find(key);
    double v = 0;
    if (it == results.end() || !detail::parse_number(it->second, v)) return std::nullopt;
    return v;
  };
  std::cout << "\ncross-correlation\n";
  if (const auto g2 = number("g2")) {
    const double sigma = number("sigma").value_or(0.0);
    std::cout << "  g2 = " << *g2 << " +- " << sigma << '\n';
    std::cout << "  classical bound " << kClassicalG2Bound << ": " << (*g2 > kClassicalG2Bound ? "exceeded" : "not exceeded");
    if (sigma > 0) std::cout << " by " << (*g2 - kClassicalG2Bound) / sigma << " sigma";
    std::cout << "\n  visibility noise bound = " << visibility_bound_from_g2(*g2).value << '\n';
  } else {
    std::cout << "  g2 undefined\n";
  }
  if (const auto v = number("visibility")) {
    const double sv = number("sigma_v").value_or(0.0);
    std::cout << "\ntwo-photon interference\n  V = " << *v << " +- " << sv << "\n  F = "
              << fidelity_from_visibility(std::clamp(*v, -1.0, 1.0)) << " +- " << 0.75 * sv << '\n';
    for (const auto& c : classify_entanglement(*v, sv).checks)
      std::cout << "  " << c.name << " (" << c.threshold << "): " << (c.passed ? "pass" : "fail") << ", "
                << c.significance << " sigma\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"afcnet: quantum-memory link simulator and time-tag analysis"};
  app.require_subcommand(1);

  std::string preset_name, config, out_dir;
  std::optional<std::uint64_t> seed;
  auto* sim = app.add_subcommand("simulate", "run a preset scenario and write tag files and results");
  sim->add_option("--preset", preset_name, "preset name")->required();
  sim->add_option("--config", config, "key = value overrides")->check(CLI::ExistingFile);
  sim->add_option("--seed", seed, "random seed");
  sim->add_option("--out", out_dir, "output directory (default runs/<preset>)");

  std::string signal_path, idler_path, hist_out;
  double window_ns = 400.0;
  Duration echo_delay = 0;
  std::optional<Duration> period;
  int n_windows = 3;
  auto* ana = app.add_subcommand("analyze", "g2 from recorded signal and idler tag files");
  ana->add_option("--signal", signal_path, "signal tag file")->required()->check(CLI::ExistingFile);
  ana->add_option("--idler", idler_path, "idler tag file")->required()->check(CLI::ExistingFile);
  ana->add_option("--window-ns", window_ns, "coincidence window")->capture_default_str();
  ana->add_option("--echo-delay-ps", echo_delay, "expected echo delay t_signal - t_idler")->required();
  ana->add_option("--pattern-period-ps", period, "accidental pattern period; omit for pre-echo windows");
  ana->add_option("--accidental-windows", n_windows, "number of accidental windows")->capture_default_str();
  ana->add_option("--histogram", hist_out, "write the histogram CSV here");

  std::string run_dir;
  auto* rep = app.add_subcommand("report", "threshold classification and delay ledger of a run");
  rep->add_option("--run", run_dir, "run directory")->required()->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*sim) return cmd_simulate(preset_name, config, seed, out_dir);
    if (*ana) return cmd_analyze(signal_path, idler_path, window_ns, echo_delay, period, n_windows, hist_out);
    if (*rep) return cmd_report(run_dir);
  } catch (const ConfigError& e) {
    std::cerr << "afcnet: invalid configuration\n";
    for (const auto& p : e.problems()) std::cerr << "  " << p << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "afcnet: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
