// Accidental floor under periodic pump gating: the analytic overlap of the
// pump and recording windows next to a simulated 10 km run.

#include <afcnet/afcnet.hpp>

#include <iomanip>
#include <iostream>

int main() {
  using namespace afcnet;
  Scenario s = preset("spool-10km");
  s.duration = 10 * kSecond;
  const RunReport r = run_scenario(s);

  std::cout << "echo at " << r.echo_delay << " ps, recording offset " << r.tdc_offset << " ps\n";
  if (r.triangle)
    std::cout << "fit: trough " << r.triangle->trough << ", peak " << r.triangle->peak << ", echo "
              << distance_to_trough(*r.triangle, r.echo_delay) << " ps from the trough\n";

  // Shape expected from pump-on signal noise against the recording window.
  GatingSchedule pump = s.pump;
  GatingSchedule rec = s.tdc_recording;
  rec.offset_ps = r.tdc_offset;
  std::cout << "\n  delay_us  measured  overlap\n";
  for (std::size_t i = 0; i < r.histogram.size(); i += 5) {
    const Duration lag = r.histogram.bin_center(i);
    std::cout << std::setw(10) << std::fixed << std::setprecision(1) << lag / 1e6 << std::setw(10)
              << r.histogram.counts[i] << std::setw(9) << std::setprecision(3) << overlap_fraction(rec, pump, lag)
              << '\n';
  }
}
