#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "kplab/spectral_core.hpp"

namespace kplab {

// D_{k,l,j} = {xi in wide band k, |mu| <= 2^l, |tau - w(xi,mu)| <= 2^j}; l = +inf allowed.
struct DyadicRegion {
  int k = 0;
  double l = std::numeric_limits<double>::infinity();
  int j = 0;
  bool contains(double xi, double mu, double tau) const;
};

// Common spacing of a 3-axis (xi, mu, tau) lattice.
struct Lattice3 {
  std::array<double, 3> h{1.0, 1.0, 1.0};
  double cell() const { return h[0] * h[1] * h[2]; }
  bool operator==(const Lattice3& o) const { return h == o.h; }
};

// Nonnegative function on a box of the lattice: point (a,b,c) sits at
// ((origin[0]+a) h0, (origin[1]+b) h1, (origin[2]+c) h2); values c fastest.
struct BoxFunction {
  Lattice3 lat;
  std::array<long, 3> origin{0, 0, 0};
  std::array<int, 3> n{0, 0, 0};
  std::vector<double> v;

  size_t size() const { return v.size(); }
  size_t index(int a, int b, int c) const {
    return (static_cast<size_t>(a) * n[1] + b) * n[2] + c;
  }
  double coord(int axis, int i) const { return (origin[axis] + i) * lat.h[axis]; }
};

enum class Profile { Bump, Indicator };

// f = b((xi-xi_c)/w_xi) b((mu-mu_c)/w_mu) b((tau - w(xi,mu) - theta_c)/w_theta).
struct Placement {
  double xi_c = 1.0, mu_c = 0.0, theta_c = 0.0;
  double w_xi = 0.1, w_mu = 0.1, w_theta = 1.0;
  Profile profile = Profile::Bump;
};

// Lattice fine enough for a set of placements: each width carries at least `ppw` points and the
// shear of w across one step stays below w_theta / ppw.
Lattice3 lattice_for(const std::vector<Placement>& places, int ppw);
BoxFunction place_function(const Placement& p, const Lattice3& lat);

// Random placement inside the region, mixing indicator sub-boxes and smooth bumps; ||f|| = 1.
// Throws ParameterError if the region is empty on the lattice scale requested.
BoxFunction sample_region_function(const DyadicRegion& region, uint64_t seed, int ppw = 6);
// Placement inside the region drawn from seed (the lattice-independent part of the above).
Placement random_placement(const DyadicRegion& region, uint64_t seed);
bool supported_in(const BoxFunction& f, const DyadicRegion& region);

double l2_norm(const BoxFunction& f);
// ||w(xi,mu) f||.
double weighted_norm(const BoxFunction& f, const std::function<double(double, double)>& w);
void scale(BoxFunction& f, double s);
// f~(z) = f(-z).
BoxFunction reflect(const BoxFunction& f);
// (f1 * f2) by zero-padded FFT, multiplied by the cell volume.
BoxFunction convolve(const BoxFunction& f1, const BoxFunction& f2);
// Lattice inner product times cell volume over the overlap of the boxes.
double inner(const BoxFunction& a, const BoxFunction& b);
// int (f1 * f2) f3.
double trilinear_form(const BoxFunction& f1, const BoxFunction& f2, const BoxFunction& f3);
// Same by direct summation over all pairs of lattice points.
double trilinear_direct(const BoxFunction& f1, const BoxFunction& f2, const BoxFunction& f3);
// || 1_D (f1 * f2) ||_{L^2}.
double restricted_conv_norm(const BoxFunction& f1, const BoxFunction& f2, const DyadicRegion& d);

// ---------------------------------------------------------------------------
// Trials

struct EstimateTrial {
  std::string lemma;
  int k = 0, k1 = 0, k2 = 0;
  int j1 = 0, j2 = 0, j3 = 0;
  double l1 = 0.0, l2 = 0.0, l3 = 0.0;  // only set by the l-limited checks
  uint64_t seed = 0;
  double lhs = 0.0, rhs = 0.0, ratio = 0.0;
  double gain = 0.0;  // lhs / product of the input norms (rhs without the dyadic factor)
};

struct TrialOptions {
  int trials = 200;
  uint64_t seed = 1;
  int ppw = 4;       // lattice points per minimum width
  int ref_ppw = 8;   // trial geometry is shrunk until it fits the cap at this resolution
  size_t max_points = size_t(1) << 21;  // per padded convolution
};

// Trilinear bound with the relaxed hypothesis max(j) <= k1+k2+k3-4.
std::vector<EstimateTrial> check_lemma51a(std::array<int, 3> k, std::array<int, 3> j,
                                          const TrialOptions& opt);
// Bound 2^{[min k + min l + min j]/2} prod ||f_i||.
std::vector<EstimateTrial> check_lemma51b(std::array<int, 3> k, std::array<double, 3> l,
                                          std::array<int, 3> j, const TrialOptions& opt);
// Same bound over random parameter draws; k3 is the band of xi1 + xi2 at the centers.
std::vector<EstimateTrial> check_lemma51b_random(const TrialOptions& opt);
// Bound 2^{(j1+j2+j3 - max j)/2} prod ||f_i||.
std::vector<EstimateTrial> check_lemma52(std::array<int, 3> k, std::array<int, 3> j,
                                         const TrialOptions& opt);

enum class Cor53Branch { JJ1, LowK, HighK };
// || 1_{D_{k,inf,j}} (f1 * f2) || against the three right-hand sides; k = {k1, k2, k}, j likewise.
std::vector<EstimateTrial> check_cor53(Cor53Branch branch, std::array<int, 3> k,
                                       std::array<int, 3> j, const TrialOptions& opt);

// ||W(t) phi||_{L^4(box x [0,T])} / ||phi||_{L^2}; |u|^4 is integrated exactly on a doubled grid
// and in time by Simpson's rule with nt intervals.
double strichartz_ratio(const Field& phi, double T, int nt = 256);

// Per-trial CSV rows with columns lemma,k,k1,k2,j1,j2,j3,seed,lhs,rhs,ratio.
std::string trials_csv(const std::vector<EstimateTrial>& trials);

double max_ratio(const std::vector<EstimateTrial>& trials);
double max_gain(const std::vector<EstimateTrial>& trials);
// Least-squares slope of log2(y) against x.
double fit_log2_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace kplab
