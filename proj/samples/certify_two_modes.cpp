// Sample: bound the JSR of a two-mode system from simulated observations and
// compare with the brute-force bracket.

#include <iostream>

#include "scenario_jsr.hpp"

int main() {
  using namespace sjsr;
  sjsr::Matrix A1(2, 2), A2(2, 2);
  A1 << 0.6, 0.3, 0.1, 0.5;
  A2 << 0.4, 0.5, 0.3, 0.7;
  const SwitchedSystem sys({A1, A2});

  Rng rng(42);
  const SampleSet obs = observe_many(sys, 2000, rng);

  CertConfig cfg;
  cfg.beta = 0.01;
  cfg.modes = sys.m();
  const JsrCertificate cert = certify(obs, cfg);
  const JsrBracket truth = jsr_bruteforce_bounds(sys, 10);

  std::cout << "gamma*      " << cert.gamma_star << '\n'
            << "kappa       " << cert.kappa << '\n'
            << "eps         " << cert.eps << '\n'
            << "status      " << to_string(cert.status) << '\n';
  if (cert.bound) std::cout << "upper bound " << *cert.bound << '\n';
  std::cout << "brute force [" << truth.lower << ", " << truth.upper << "]\n";
}
