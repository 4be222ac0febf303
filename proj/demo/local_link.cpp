// Short run of the 0 km link with herald-triggered pump blanking: prints the
// delay ledger, the echo g2 and the visibility ceiling it implies.

#include <afcnet/afcnet.hpp>

#include <iostream>

int main() {
  using namespace afcnet;
  Scenario s = preset("local-0km");
  s.duration = 5 * kSecond;

  for (const auto& item : delay_ledger(s).items) std::cout << item.name << ": " << item.delay << " ps\n";

  const RunReport r = run_scenario(s);
  std::cout << "pairs emitted:  " << r.pairs << '\n'
            << "heralds:        " << r.idler_tags << " (" << r.rate_idler << " /s)\n"
            << "signal clicks:  " << r.signal_tags << '\n';
  if (!r.g2) {
    std::cout << "g2 undefined: " << r.g2_error << '\n';
    return 1;
  }
  std::cout << "g2 = " << r.g2->g2 << " +- " << r.g2->sigma << " (echo " << r.g2->n_echo << ", accidentals "
            << r.g2->n_acc_mean << " per window)\n"
            << "visibility ceiling from noise: " << visibility_bound_from_g2(r.g2->g2).value << '\n';
}
