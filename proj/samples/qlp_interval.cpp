// Sample: a one-dimensional quasi-linear program solved with both level
// oracles, plus its essential set.

#include <iostream>

#include "scenario_jsr.hpp"

int main() {
  using namespace sjsr;
  const auto v = [](double x) { return Vector::Constant(1, x); };
  const QlpInstance inst(1, {{v(3.0), v(1.0)}, {v(1.0), v(1.0)}}, {ConvexSet(Box{v(1.0), v(2.0)})});

  for (LevelOracle oracle : {LevelOracle::Auto, LevelOracle::Dykstra}) {
    SolveOptions opts;
    opts.oracle = oracle;
    const QlpSolution sol = solve(inst, opts);
    std::cout << (oracle == LevelOracle::Auto ? "barrier " : "dykstra ") << "lambda* = " << sol.lambda_star
              << ", x* = " << sol.x_star(0) << ", status " << to_string(sol.status) << '\n';
  }

  const EssentialSet es = essential_set_exhaustive(inst);
  std::cout << "essential set:";
  for (std::size_t i : es.indices) std::cout << ' ' << i;
  std::cout << '\n';
}
