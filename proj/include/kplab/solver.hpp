#pragma once

#include <functional>
#include <vector>

#include "kplab/spectral_core.hpp"

namespace kplab {

// Field-valued function of time; the returned field may be in either representation.
using TimeField = std::function<Field(double)>;

struct SolverConfig {
  SpectralGrid grid;
  int sign = kKPI;
  double dt = 1e-3;
  double T = 1.0;
  bool dealias = true;
  int snapshot_stride = 10;
  bool nonlinear = true;
  // Abort when the top resolved dyadic band holds more than this fraction of sum |u^|^2.
  double guard = 1e-6;
  TimeField forcing;
  // Called after every step with (t, u in Fourier repr); used for running quadratures.
  std::function<void(double, const Field&)> observer;
};

struct Monitor {
  double t = 0, E0 = 0, E1 = 0, L2 = 0, E1norm = 0, maxabs = 0;
};

struct Trajectory {
  int sign = kKPI;
  std::vector<double> times;
  std::vector<Field> snapshots;  // Fourier repr
  std::vector<Monitor> monitors;
};

// -d_x(u^2/2) with the 2/3 rule (or Nyquist removal only when dealias is false).
Field nonlinearity(const Field& u, bool dealias = true);

// Exponential fourth-order Runge-Kutta for u^ ' = L u^ + N(u^, t) with L = i w_sign diagonal.
class Etdrk4 {
 public:
  Etdrk4(const SpectralGrid& g, double dt, int sign);
  using Rhs = std::function<Field(const Field&, double)>;
  Field step(const Field& u, double t, const Rhs& N) const;
  double dt() const { return h_; }

 private:
  SpectralGrid grid_;
  double h_;
  std::vector<cplx> E_, E2_, Q_, f1_, f2_, f3_;
};

// One step of the configured problem (nonlinearity and forcing per cfg).
Field step(const Field& state, double t, const SolverConfig& cfg);

Monitor monitor(const Field& u, double t, int sign);

// Integrates on [0, T]. Snapshots every snapshot_stride steps plus the final time.
Trajectory solve(const SolverConfig& cfg, const Field& phi);
// Trajectory on [-T, T]; the negative half uses the (t, x) -> (-t, -x) symmetry.
Trajectory solve_symmetric(const SolverConfig& cfg, const Field& phi);
// u_t + u_xxx - sign d_x^{-1}u_yy = v with the nonlinearity disabled.
Trajectory solve_linear_forced(const SolverConfig& cfg, const Field& phi, const TimeField& v);

// Closed-form space-time field and its time derivative.
struct ManufacturedSolution {
  std::function<double(double, double, double)> u;
  std::function<double(double, double, double)> u_t;
};

Field sample_at(const SpectralGrid& g, const std::function<double(double, double, double)>& f,
                double t);
// f = u*_t + u*_xxx + sign d_x^{-1}u*_yy + d_x(u*^2/2), spatial terms spectral.
TimeField manufactured_forcing(const ManufacturedSolution& ms, const SolverConfig& cfg);

// Largest fraction of spectral mass in the top resolved band.
double top_band_fraction(const Field& u_fourier, bool dealiased);

}  // namespace kplab
