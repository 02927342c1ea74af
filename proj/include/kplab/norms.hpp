#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "kplab/solver.hpp"
#include "kplab/spectral_core.hpp"

namespace kplab {

// ---------------------------------------------------------------------------
// Energies and data norms

double energy_E0(const Field& u);
double energy_E1(const Field& u, int sign = kKPI);
double norm_E_sigma(const Field& u, int sigma);
double norm_Ebar_sigma(const Field& u, int sigma);
// ||w u^||_{L^2_{xi,mu}} normalized so that w = 1 gives the L^2_{x,y} norm.
double weighted_l2(const Field& u, const std::function<double(double, double)>& w);
// Norm of the band P_k u with the E_k weight p (or without it for the barred space).
double norm_Ek(const Field& u, int k, bool barred);

// ---------------------------------------------------------------------------
// Space-time blocks

// Fourier-series coefficients c_m(t) of a band, stored in the co-moving frame
// g_m(t) = e^{-i t w(xi_m, mu_m)} c_m(t) on a uniform time lattice t_n = t0 + n dt.
// The time transform of g_m at theta is the transform of c_m at tau = theta + w, so
// modulation bins are evaluated without resolving w itself.
struct SpaceTimeBlock {
  std::vector<double> xi, mu;
  double t0 = 0.0, dt = 1.0;
  int nt = 0;
  double area = 1.0;  // Lx Ly: ||u||^2_{L^2_{x,y}} = area sum |c|^2
  std::vector<cplx> g;  // g[m * nt + n]
  size_t modes() const { return xi.size(); }
};

struct XkOptions {
  int k = 0;
  bool p_weight = true;         // multiply by p(xi, mu)
  bool inverse_modulation = false;  // multiply by |theta + i 2^{k+}|^{-1}
  int jmax = -1;                // default: floor(log2(pi/dt)); mass beyond goes to the top bin
  double support_tol = 1e-12;   // modes outside the wide band must be below this
};

// sum_j 2^{j/2} || eta_j(tau - w) f ||_{L^2} of the (already windowed) block.
double norm_Xk(const SpaceTimeBlock& block, const XkOptions& opt);
// Per-bin L^2 masses; entry j is ||eta_j(theta) w f||.
std::vector<double> modulation_profile(const SpaceTimeBlock& block, const XkOptions& opt);
// || int |f| dtau ||_{L^2_{xi,mu}}, the trace quantity dominated by the X_k norm.
double trace_norm(const SpaceTimeBlock& block, bool p_weight);

// Samples a band in the co-moving frame at times t_first + n dt, n < nt.
using BandSampler = std::function<void(double t_first, double dt, int nt, SpaceTimeBlock& out)>;

struct WindowOptions {
  int nt = 128;  // samples across the window support [-1.6, 1.6] 2^{-k+}
};

int kplus(int k);
double window_dt(int k, int nt);
// Window centers: multiples of 2^{-k+-2} covering [-T - 2^{-k+}, T + 2^{-k+}].
std::vector<double> window_centers(int k, double T);
// max over centers of || weight F[u_k eta0(2^{k+}(t - t_c))] ||_{X_k}.
double sup_windowed_Xk(const BandSampler& sampler, const std::vector<double>& centers,
                       const XkOptions& opt, const WindowOptions& wopt = {},
                       double* argmax = nullptr);

// Sampler for P_k of a trajectory covering [-T, T], extended outside by the free flow
// from the endpoint values times eta0(2^{k+ + 5}(t -/+ T)). Snapshot values are
// interpolated (cubic) in the co-moving frame.
BandSampler trajectory_band_sampler(const Trajectory& traj, int k, double T);
// Trajectory of a derived quantity, e.g. the nonlinearity, at the same snapshot times.
Trajectory map_trajectory(const Trajectory& traj, const std::function<Field(const Field&)>& f);

// Throws ResolutionError if traj does not cover [-T, T].
void require_coverage(const Trajectory& traj, double T);

double norm_Fk_T(const Trajectory& traj, int k, double T, bool barred = false,
                 const WindowOptions& wopt = {});
double norm_Nk_T(const Trajectory& traj, int k, double T, bool barred = false,
                 const WindowOptions& wopt = {});

// Bands whose sharp set meets the lattice of the trajectory's grid.
std::vector<int> resolved_bands(const SpectralGrid& g);

double norm_B_sigma_T(const Trajectory& traj, int sigma, double T);
double norm_Bbar0_T(const Trajectory& traj, double T);
double norm_F_sigma_T(const Trajectory& traj, int sigma, double T, const WindowOptions& wopt = {});
double norm_N_sigma_T(const Trajectory& traj, int sigma, double T, const WindowOptions& wopt = {});
double norm_Fbar0_T(const Trajectory& traj, double T, const WindowOptions& wopt = {});
double norm_Nbar0_T(const Trajectory& traj, double T, const WindowOptions& wopt = {});

// (sum_t sum_{x,y} |u|^4 dx dy dt)^{1/4} over the snapshots (uniform spacing assumed).
double norm_L4_spacetime(const Trajectory& traj);
double norm_L4_spacetime(const std::vector<Field>& slices, double dt);

// sum_{j=0}^{10} 2^{-j k+} ||d^j m||_inf with spectral derivatives of the samples,
// which are taken as one period of a periodic function on [0, n dt).
double norm_Sk(const std::vector<double>& m, double dt, int k);

// ---------------------------------------------------------------------------
// Reports

struct NormReport {
  std::map<std::string, double> values;  // "<norm>/<k-or-sigma>/<T>"
  std::vector<std::string> unresolved;
  std::map<std::string, std::string> provenance;
};

std::string norm_key(const std::string& name, const std::string& param, double T);

}  // namespace kplab
