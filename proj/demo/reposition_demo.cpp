// Builds a small scenario in code, prints its bounds, then moves the strongest element
// with the analytic rule and with an exhaustive line search.
#include <iostream>

#include "nfcrb.hpp"

int main() try {
  using namespace nfcrb;

  Scenario s;
  s.velocity_mps = 1500.0;
  s.signals = {{20.0, {1.0, 1.0}}, {15.0, {2.0, -1.0}}};
  s.sensors = {{0.0, 0.0}, {2.0, 0.0}, {3.0, deg_to_rad(200.0)}, {4.5, deg_to_rad(-30.0)}};
  s.sources = {{25.0, deg_to_rad(70.0)}, {18.0, deg_to_rad(120.0)}};

  const Constellation c = Constellation::from_polar(s);
  std::cout << format_run_report(make_run_report("demo", c, {}));

  const auto k = received_power(steering_matrix(s), s.signals).strongest;
  const RepositionPlan analytic = analytic_reposition(c, k);
  std::cout << "\n" << format_plan(analytic);
  std::cout << format_comparison(compare_report(figures_of(s), figures_of(apply_reposition(c, analytic).scenario)));

  const RepositionPlan search = line_search_reposition(c, k, Objective::det, LineGrid{-20.0, 20.0, 401});
  std::cout << "\n" << format_plan(search);
  std::cout << format_comparison(compare_report(figures_of(s), figures_of(apply_reposition(c, search).scenario)));
} catch (const std::exception& e) {
  std::cerr << "error: " << e.what() << "\n";
  return 1;
}
