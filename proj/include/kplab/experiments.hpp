#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "kplab/norms.hpp"
#include "kplab/solver.hpp"

namespace kplab {

// Seeded initial data. kind: "zero", "smooth", "rough", "cosine".
//   smooth: random phases, |phi^| ~ |xi| exp(-(xi^2 + mu^2))
//   rough:  random phases, |phi^| ~ p^{-1} (1+|xi|)^{-1} (1+|xi|+|mu|)^{-s}, s = rough_s,
//           tapered near the resolved edge so the top band stays empty
//   cosine: cos(x dxi + y dmu), the lowest admissible mode
// Scaled to ||phi||_{E^1} = amplitude (zero stays zero).
struct DataRecipe {
  std::string kind = "smooth";
  uint64_t seed = 1;
  double amplitude = 0.1;
  double rough_s = 1.05;
};

Field make_datum(const SpectralGrid& g, const DataRecipe& d);
// Same function on a grid with the same box and more points.
Field embed(const Field& u, const SpectralGrid& fine);

struct Sweep {
  std::vector<int> K{2, 3, 4, 5, 6};
  std::vector<double> dt{0.04, 0.02, 0.01, 0.005, 0.0025};
  std::vector<double> lambda{0.5, 1.0};
  std::vector<double> amplitudes{0.05, 0.1, 0.2};
  std::vector<int> sigma{1, 2, 3};
  int runs = 10;
  bool refine = true;  // companion run on the grid doubled in both directions with dt halved
};

struct ExperimentSpec {
  std::string name;
  SolverConfig solver;
  DataRecipe data;
  Sweep sweep;
};

struct ExperimentReport {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::map<std::string, double> summary;
  std::map<std::string, std::string> notes;
};

// Desk-scale defaults: 128^2 on [0, 16 pi)^2, dt = 1e-3, T = 1, smooth data with ||phi||_{E^1} = 0.1.
ExperimentSpec default_spec(const std::string& name);
std::vector<std::string> experiment_names();
// Throws ConfigError listing the available names.
ExperimentReport run_experiment(const ExperimentSpec& spec);

// Relative drift of E0 and E1 and sup_t ||u(t)||_{E^1} / ||phi||_{E^1}.
ExperimentReport run_conservation(const ExperimentSpec& spec);
// ||P_k u(t)||^2 - ||P_k phi||^2 - 2 int_0^t int P_k u P_k v for random forced linear runs.
ExperimentReport run_energy_identity(const ExperimentSpec& spec);
// Error at T against a manufactured solution for each dt, and the fitted order.
ExperimentReport run_convergence(const ExperimentSpec& spec);
// F vs B + N, N vs F^2, B^2 vs E^2 + F^3 and sup_t E^1 vs F over an ensemble.
ExperimentReport run_apriori_triplet(const ExperimentSpec& spec);
// F^s vs B^s + N^s(v) for forced linear runs with v = 0 and with phi = 0.
ExperimentReport run_linear_estimate(const ExperimentSpec& spec);
// B^s^2 vs E^s^2 + F^1 F^s^2 for nonlinear runs.
ExperimentReport run_energy_estimate(const ExperimentSpec& spec);
// u_l(x, y, t) = l^2 u(l x, l^2 y, l^3 t) against a direct solve on the scaled box.
ExperimentReport run_scaling(const ExperimentSpec& spec);
// D(K) = sup_t ||S(phi) - S(P_{<=K} phi)||_{E^1} and the Ebar^0 difference ratio at T.
ExperimentReport run_bona_smith(const ExperimentSpec& spec);

// Least-squares slope of log(y) against log(x).
double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y);
// Largest ratio num/den over entries with den > 1e-10 * max(den).
double guarded_max_ratio(const std::vector<double>& num, const std::vector<double>& den);

}  // namespace kplab
