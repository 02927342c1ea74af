#include "kplab/estimates.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "kplab/errors.hpp"
#include "kplab/fft.hpp"
#include "kplab/parallel.hpp"

namespace kplab {

namespace {

const double kSqrt3 = std::sqrt(3.0);

double bump(double s) {
  double a = 1.0 - s * s;
  return a > 0.0 ? std::exp(1.0 - 1.0 / a) : 0.0;
}

double profile_value(Profile p, double s) {
  if (p == Profile::Bump) return bump(s);
  return std::abs(s) < 1.0 ? 1.0 : 0.0;
}

uint64_t mix_seed(uint64_t a, uint64_t b) {
  uint64_t z = a * 0x9E3779B97F4A7C15ULL + b + 0x632BE59BD9B4E019ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double unif(std::mt19937_64& rng, double a, double b) {
  return std::uniform_real_distribution<double>(a, b)(rng);
}

// 2^{U(a,b)}
double log_unif(std::mt19937_64& rng, double a, double b) { return std::exp2(unif(rng, a, b)); }

int good_size(int n) {
  int best = 1 << 30;
  for (long p2 = 1; p2 < 2L * n; p2 *= 2)
    for (long p3 = p2; p3 < 2L * n; p3 *= 3)
      for (long p5 = p3; p5 < 2L * n; p5 *= 5)
        if (p5 >= n && p5 < best) best = static_cast<int>(p5);
  return best;
}

struct Extent {
  double xi_lo, xi_hi, mu_abs_max, xi_abs_min;
};

Extent extent_of(const Placement& p) {
  Extent e;
  e.xi_lo = p.xi_c - p.w_xi;
  e.xi_hi = p.xi_c + p.w_xi;
  e.mu_abs_max = std::max(std::abs(p.mu_c - p.w_mu), std::abs(p.mu_c + p.w_mu));
  e.xi_abs_min = (e.xi_lo > 0) ? e.xi_lo : -e.xi_hi;
  return e;
}

// Index range of lattice points strictly inside (c - w, c + w) along one axis.
void axis_range(double c, double w, double h, long& i0, long& i1) {
  i0 = static_cast<long>(std::floor((c - w) / h)) + 1;
  i1 = static_cast<long>(std::ceil((c + w) / h)) - 1;
}

std::array<long, 3> tau_range(const Placement& p, const Lattice3& lat, long a0, long a1, long b0,
                              long b1) {
  double wmin = 1e300, wmax = -1e300;
  for (long a = a0; a <= a1; ++a)
    for (long b = b0; b <= b1; ++b) {
      double w = dispersion_omega(a * lat.h[0], b * lat.h[1]);
      wmin = std::min(wmin, w);
      wmax = std::max(wmax, w);
    }
  long c0, c1, dummy;
  axis_range(wmin + p.theta_c, p.w_theta, lat.h[2], c0, dummy);
  axis_range(wmax + p.theta_c, p.w_theta, lat.h[2], dummy, c1);
  return {c0, c1, 0};
}

size_t padded_points(const std::vector<std::array<int, 3>>& dims) {
  // The convolution of the first two boxes dominates the cost.
  size_t tot = 1;
  for (int ax = 0; ax < 3; ++ax) tot *= static_cast<size_t>(good_size(dims[0][ax] + dims[1][ax] - 1));
  return tot;
}

std::array<int, 3> box_dims(const Placement& p, const Lattice3& lat) {
  long a0, a1, b0, b1;
  axis_range(p.xi_c, p.w_xi, lat.h[0], a0, a1);
  axis_range(p.mu_c, p.w_mu, lat.h[1], b0, b1);
  // Cheap tau estimate from the corner values of w, plus mu = 0 when the box straddles it.
  Extent e = extent_of(p);
  double ws[6];
  int m = 0;
  for (double xi : {e.xi_lo, e.xi_hi})
    for (double mu : {p.mu_c - p.w_mu, p.mu_c + p.w_mu}) ws[m++] = dispersion_omega(xi, mu);
  if (std::abs(p.mu_c) < p.w_mu)
    for (double xi : {e.xi_lo, e.xi_hi}) ws[m++] = dispersion_omega(xi, 0.0);
  double span = *std::max_element(ws, ws + m) - *std::min_element(ws, ws + m);
  int nt = static_cast<int>((span + 2.0 * p.w_theta) / lat.h[2]) + 2;
  return {static_cast<int>(std::max(0L, a1 - a0 + 1)), static_cast<int>(std::max(0L, b1 - b0 + 1)), nt};
}

size_t trial_cost(const std::vector<Placement>& ps, int ppw) {
  Lattice3 lat = lattice_for(ps, ppw);
  std::vector<std::array<int, 3>> dims;
  for (const auto& p : ps) dims.push_back(box_dims(p, lat));
  return padded_points(dims);
}

// Shrinks the xi and mu widths (centers fixed, so support stays in the regions) until the
// padded convolution fits. Widths far above the smallest one go first.
void fit_cost(std::vector<Placement>& ps, const TrialOptions& opt) {
  int ref = std::max(opt.ppw, opt.ref_ppw);
  for (int it = 0; it < 400 && trial_cost(ps, ref) > opt.max_points; ++it) {
    double mx = 1e300, mm = 1e300;
    for (const auto& p : ps) {
      mx = std::min(mx, p.w_xi);
      mm = std::min(mm, p.w_mu);
    }
    bool any = false;
    for (auto& p : ps) {
      if (p.w_xi > 2.0 * mx) p.w_xi *= 0.85, any = true;
      if (p.w_mu > 2.0 * mm) p.w_mu *= 0.85, any = true;
    }
    if (!any)
      for (auto& p : ps) {
        p.w_xi *= 0.85;
        p.w_mu *= 0.85;
      }
  }
  if (trial_cost(ps, ref) > opt.max_points)
    throw ResolutionError("trial lattice exceeds the point budget");
}

struct Eval {
  double lhs = 0.0;
  std::array<double, 3> norm{0.0, 0.0, 0.0};
  double pnorm1 = 0.0;
};

Eval eval_trilinear(const std::vector<Placement>& ps, int ppw) {
  Lattice3 lat = lattice_for(ps, ppw);
  BoxFunction f1 = place_function(ps[0], lat), f2 = place_function(ps[1], lat),
              f3 = place_function(ps[2], lat);
  Eval e;
  e.lhs = trilinear_form(f1, f2, f3);
  e.norm = {l2_norm(f1), l2_norm(f2), l2_norm(f3)};
  return e;
}

Eval eval_restricted(const std::vector<Placement>& ps, const DyadicRegion& d, int ppw) {
  Lattice3 lat = lattice_for(ps, ppw);
  BoxFunction f1 = place_function(ps[0], lat), f2 = place_function(ps[1], lat);
  Eval e;
  e.lhs = restricted_conv_norm(f1, f2, d);
  e.norm = {l2_norm(f1), l2_norm(f2), 1.0};
  e.pnorm1 = weighted_norm(f1, [](double xi, double mu) { return weight_p(xi, mu); });
  return e;
}

// |xi| in the open interior [3/4 2^k, 3/2 2^k] of the sharp band, random sign.
double draw_xi(std::mt19937_64& rng, int k) {
  double s = unif(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0;
  return s * std::ldexp(unif(rng, 0.75, 1.5), k);
}

// Draws xi1, xi2 with xi1 + xi2 in sharp band k3 (k3 = INT_MIN: any nonzero band).
bool draw_xi_pair(std::mt19937_64& rng, int k1, int k2, int& k3, double& x1, double& x2) {
  for (int t = 0; t < 4000; ++t) {
    x1 = draw_xi(rng, k1);
    x2 = draw_xi(rng, k2);
    double x3 = x1 + x2;
    if (k3 == std::numeric_limits<int>::min()) {
      if (std::abs(x3) < std::ldexp(0.75, std::min(k1, k2) - 4)) continue;
      k3 = band_of(x3);
      return true;
    }
    if (std::abs(x3) > std::ldexp(0.76, k3) && std::abs(x3) < std::ldexp(1.49, k3)) return true;
  }
  return false;
}

// Largest half-width about |xi_c| inside the wide band k.
double xi_room(double xi_c, int k) {
  double a = std::abs(xi_c);
  return std::min(a - std::ldexp(1.0, k - 1), std::ldexp(1.0, k + 1) - a) * (1.0 - 1e-9);
}

double clampd(double x, double lim) { return std::max(-lim, std::min(lim, x)); }

std::string xi_message(int k1, int k2, int k3) {
  return "no xi1 in I_" + std::to_string(k1) + ", xi2 in I_" + std::to_string(k2) +
         " with xi1 + xi2 in I_" + std::to_string(k3);
}

// Three placements for f1, f2 and the output slot, in D_{k_i,inf,j_i}. Even trials are
// indicator slabs on the resonant set {mu1/xi1 - mu2/xi2 = +-sqrt3 (xi1+xi2)}, odd trials are
// bumps with unrelated mu centers.
std::vector<Placement> aligned_geometry(std::array<int, 3> k, std::array<int, 3> j, uint64_t seed,
                                        bool aligned) {
  std::mt19937_64 rng(seed);
  double x1, x2;
  int k3 = k[2];
  if (!draw_xi_pair(rng, k[0], k[1], k3, x1, x2)) throw ParameterError(xi_message(k[0], k[1], k[2]));
  double x3 = x1 + x2;
  int J = *std::max_element(j.begin(), j.end());
  int S = k[0] + k[1] + k[2];
  int kmax = std::max({k[0], k[1], k[2]});
  double dnu = std::ldexp(1.0, J) / (2.0 * kSqrt3 * std::abs(x1 * x2));
  double rx = log_unif(rng, -1.0, 3.0), rm = log_unif(rng, -2.0, 1.0);

  std::vector<Placement> ps(3);
  ps[0].xi_c = x1;
  ps[1].xi_c = x2;
  ps[2].xi_c = x3;
  for (int i = 0; i < 2; ++i) {
    auto& p = ps[i];
    p.profile = aligned ? Profile::Indicator : Profile::Bump;
    p.w_xi = std::min(std::ldexp(rx, J - S) * log_unif(rng, -0.3, 0.3), xi_room(p.xi_c, k[i]));
    p.w_mu = std::abs(p.xi_c) * dnu * rm * log_unif(rng, -0.3, 0.3);
    p.w_theta = std::ldexp(unif(rng, 0.3, 1.0), j[i]);
    p.theta_c = unif(rng, -1.0, 1.0) * (std::ldexp(1.0, j[i]) - p.w_theta);
  }
  double slope2 = unif(rng, -2.0, 2.0) * std::ldexp(1.0, kmax);
  ps[1].mu_c = x2 * slope2;
  if (aligned) {
    double sg = unif(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0;
    ps[0].mu_c = x1 * (slope2 + sg * kSqrt3 * x3);
  } else {
    ps[0].mu_c = x1 * unif(rng, -3.0, 3.0) * std::ldexp(1.0, kmax);
  }
  auto& q = ps[2];
  q.profile = ps[0].profile;
  q.w_xi = std::min(ps[0].w_xi + ps[1].w_xi, xi_room(x3, k[2]));
  q.mu_c = ps[0].mu_c + ps[1].mu_c;
  q.w_mu = ps[0].w_mu + ps[1].w_mu;
  q.w_theta = std::ldexp(unif(rng, 0.5, 1.0), j[2]);
  double om = resonance_Omega(x1, ps[0].mu_c, x2, ps[1].mu_c);
  q.theta_c = clampd(ps[0].theta_c + ps[1].theta_c + om, std::ldexp(1.0, j[2]) - q.w_theta);
  return ps;
}

struct LParams {
  std::array<int, 3> k;
  std::array<double, 3> l;
  std::array<int, 3> j;
};

// Placements in D_{k_i,l_i,j_i}. f3 sits at the sum of the first two centers, clipped.
std::vector<Placement> limited_geometry(LParams& prm, uint64_t seed, bool auto_k3) {
  std::mt19937_64 rng(seed);
  double x1, x2;
  int k3 = auto_k3 ? std::numeric_limits<int>::min() : prm.k[2];
  if (!draw_xi_pair(rng, prm.k[0], prm.k[1], k3, x1, x2))
    throw ParameterError(xi_message(prm.k[0], prm.k[1], prm.k[2]));
  prm.k[2] = k3;
  bool ind = (seed & 1) == 0;
  std::vector<Placement> ps(3);
  ps[0].xi_c = x1;
  ps[1].xi_c = x2;
  for (int i = 0; i < 2; ++i) {
    auto& p = ps[i];
    p.profile = ind ? Profile::Indicator : Profile::Bump;
    p.w_xi = std::min(std::ldexp(unif(rng, 0.1, 0.25), prm.k[i]), xi_room(p.xi_c, prm.k[i]));
    double L = std::exp2(prm.l[i]);
    p.w_mu = L * unif(rng, 0.3, 1.0);
    p.mu_c = unif(rng, -1.0, 1.0) * (L - p.w_mu);
    p.w_theta = std::ldexp(unif(rng, 0.3, 1.0), prm.j[i]);
    p.theta_c = unif(rng, -1.0, 1.0) * (std::ldexp(1.0, prm.j[i]) - p.w_theta);
  }
  // Every other indicator trial fills the full mu range of f1.
  if (ind && (seed & 2) == 0) {
    ps[0].w_mu = std::exp2(prm.l[0]) * (1.0 - 1e-9);
    ps[0].mu_c = 0.0;
  }
  auto& q = ps[2];
  q.profile = ps[0].profile;
  q.xi_c = x1 + x2;
  q.w_xi = std::min(ps[0].w_xi + ps[1].w_xi, xi_room(q.xi_c, k3));
  double L3 = std::exp2(prm.l[2]);
  q.w_mu = std::min(ps[0].w_mu + ps[1].w_mu, L3 * (1.0 - 1e-9));
  q.mu_c = clampd(ps[0].mu_c + ps[1].mu_c, L3 - q.w_mu);
  q.w_theta = std::ldexp(unif(rng, 0.6, 1.0), prm.j[2]);
  double om = resonance_Omega(x1, ps[0].mu_c, x2, ps[1].mu_c);
  q.theta_c = clampd(ps[0].theta_c + ps[1].theta_c + om, std::ldexp(1.0, prm.j[2]) - q.w_theta);
  return ps;
}

void check_j(const std::array<int, 3>& j) {
  for (int x : j)
    if (x < 0) throw ParameterError("j_i >= 0 violated");
}

}  // namespace

// ---------------------------------------------------------------------------

bool DyadicRegion::contains(double xi, double mu, double tau) const {
  if (xi == 0.0 || !in_wide_band(k, xi)) return false;
  if (std::isfinite(l) && std::abs(mu) > std::exp2(l)) return false;
  return std::abs(tau - dispersion_omega(xi, mu)) <= std::ldexp(1.0, j);
}

Lattice3 lattice_for(const std::vector<Placement>& places, int ppw) {
  if (places.empty() || ppw < 1) throw ConfigError("lattice_for: need placements and ppw >= 1");
  Lattice3 lat;
  lat.h = {1e300, 1e300, 1e300};
  for (const auto& p : places) {
    if (!(p.w_xi > 0 && p.w_mu > 0 && p.w_theta > 0))
      throw ParameterError("placement widths must be positive");
    Extent e = extent_of(p);
    if (e.xi_abs_min <= 0) throw ParameterError("placement crosses xi = 0");
    double xmax = std::max(std::abs(e.xi_lo), std::abs(e.xi_hi));
    double gxi = 3.0 * xmax * xmax + e.mu_abs_max * e.mu_abs_max / (e.xi_abs_min * e.xi_abs_min);
    double gmu = 2.0 * e.mu_abs_max / e.xi_abs_min;
    lat.h[0] = std::min({lat.h[0], p.w_xi / ppw, p.w_theta / (ppw * gxi)});
    lat.h[1] = std::min(lat.h[1], p.w_mu / ppw);
    if (gmu > 0) lat.h[1] = std::min(lat.h[1], p.w_theta / (ppw * gmu));
    lat.h[2] = std::min(lat.h[2], p.w_theta / ppw);
  }
  return lat;
}

BoxFunction place_function(const Placement& p, const Lattice3& lat) {
  long a0, a1, b0, b1;
  axis_range(p.xi_c, p.w_xi, lat.h[0], a0, a1);
  axis_range(p.mu_c, p.w_mu, lat.h[1], b0, b1);
  BoxFunction f;
  f.lat = lat;
  if (a1 < a0 || b1 < b0) return f;
  if (a0 <= 0 && a1 >= 0) throw ParameterError("placement crosses xi = 0");
  auto tr = tau_range(p, lat, a0, a1, b0, b1);
  if (tr[1] < tr[0]) return f;
  f.origin = {a0, b0, tr[0]};
  f.n = {static_cast<int>(a1 - a0 + 1), static_cast<int>(b1 - b0 + 1),
         static_cast<int>(tr[1] - tr[0] + 1)};
  f.v.assign(static_cast<size_t>(f.n[0]) * f.n[1] * f.n[2], 0.0);
  for (int a = 0; a < f.n[0]; ++a) {
    double xi = f.coord(0, a);
    double bx = profile_value(p.profile, (xi - p.xi_c) / p.w_xi);
    if (bx == 0.0) continue;
    for (int b = 0; b < f.n[1]; ++b) {
      double mu = f.coord(1, b);
      double bm = profile_value(p.profile, (mu - p.mu_c) / p.w_mu);
      if (bm == 0.0) continue;
      double w = dispersion_omega(xi, mu);
      for (int c = 0; c < f.n[2]; ++c) {
        double s = (f.coord(2, c) - w - p.theta_c) / p.w_theta;
        f.v[f.index(a, b, c)] = bx * bm * profile_value(p.profile, s);
      }
    }
  }
  return f;
}

Placement random_placement(const DyadicRegion& r, uint64_t seed) {
  if (r.j < 0) throw ParameterError("empty region: j must be >= 0");
  std::mt19937_64 rng(mix_seed(seed, 0x51));
  Placement p;
  p.profile = unif(rng, 0.0, 1.0) < 0.5 ? Profile::Indicator : Profile::Bump;
  p.xi_c = draw_xi(rng, r.k);
  p.w_xi = xi_room(p.xi_c, r.k) * unif(rng, 0.2, 1.0);
  double L = std::isfinite(r.l) ? std::exp2(r.l) : std::ldexp(1.0, 2 * r.k);
  p.w_mu = L * unif(rng, 0.1, 0.5);
  p.mu_c = unif(rng, -1.0, 1.0) * (L - p.w_mu);
  double J = std::ldexp(1.0, r.j);
  p.w_theta = J * unif(rng, 0.2, 1.0);
  p.theta_c = unif(rng, -1.0, 1.0) * (J - p.w_theta);
  return p;
}

BoxFunction sample_region_function(const DyadicRegion& region, uint64_t seed, int ppw) {
  Placement p = random_placement(region, seed);
  std::vector<Placement> ps{p};
  TrialOptions opt;
  opt.ppw = opt.ref_ppw = ppw;
  opt.max_points = size_t(1) << 24;
  fit_cost(ps, opt);
  BoxFunction f = place_function(ps[0], lattice_for(ps, ppw));
  double n = l2_norm(f);
  if (!(n > 0)) throw ParameterError("empty region on this lattice");
  scale(f, 1.0 / n);
  return f;
}

bool supported_in(const BoxFunction& f, const DyadicRegion& region) {
  for (int a = 0; a < f.n[0]; ++a)
    for (int b = 0; b < f.n[1]; ++b)
      for (int c = 0; c < f.n[2]; ++c)
        if (f.v[f.index(a, b, c)] != 0.0 &&
            !region.contains(f.coord(0, a), f.coord(1, b), f.coord(2, c)))
          return false;
  return true;
}

double l2_norm(const BoxFunction& f) {
  double s = 0.0;
  for (double x : f.v) s += x * x;
  return std::sqrt(s * f.lat.cell());
}

double weighted_norm(const BoxFunction& f, const std::function<double(double, double)>& w) {
  double s = 0.0;
  for (int a = 0; a < f.n[0]; ++a)
    for (int b = 0; b < f.n[1]; ++b) {
      double wt = 0.0;
      bool have = false;
      for (int c = 0; c < f.n[2]; ++c) {
        double x = f.v[f.index(a, b, c)];
        if (x == 0.0) continue;
        if (!have) {
          wt = w(f.coord(0, a), f.coord(1, b));
          have = true;
        }
        s += wt * wt * x * x;
      }
    }
  return std::sqrt(s * f.lat.cell());
}

void scale(BoxFunction& f, double s) {
  for (double& x : f.v) x *= s;
}

BoxFunction reflect(const BoxFunction& f) {
  BoxFunction g = f;
  for (int ax = 0; ax < 3; ++ax) g.origin[ax] = -(f.origin[ax] + f.n[ax] - 1);
  for (int a = 0; a < f.n[0]; ++a)
    for (int b = 0; b < f.n[1]; ++b)
      for (int c = 0; c < f.n[2]; ++c)
        g.v[g.index(f.n[0] - 1 - a, f.n[1] - 1 - b, f.n[2] - 1 - c)] = f.v[f.index(a, b, c)];
  return g;
}

BoxFunction convolve(const BoxFunction& f1, const BoxFunction& f2) {
  if (!(f1.lat == f2.lat)) throw ResolutionError("convolution of functions on different lattices");
  BoxFunction out;
  out.lat = f1.lat;
  if (f1.v.empty() || f2.v.empty()) return out;
  std::array<int, 3> m, N;
  for (int ax = 0; ax < 3; ++ax) {
    m[ax] = f1.n[ax] + f2.n[ax] - 1;
    N[ax] = good_size(m[ax]);
    out.origin[ax] = f1.origin[ax] + f2.origin[ax];
  }
  // Zero padding to at least n1 + n2 - 1 per axis makes the cyclic convolution linear.
  for (int ax = 0; ax < 3; ++ax)
    if (N[ax] < m[ax]) throw ResolutionError("convolution padding would alias");
  size_t tot = static_cast<size_t>(N[0]) * N[1] * N[2];
  std::vector<fft::cplx> A(tot, 0.0), B(tot, 0.0);
  auto load = [&](const BoxFunction& f, std::vector<fft::cplx>& X) {
    for (int a = 0; a < f.n[0]; ++a)
      for (int b = 0; b < f.n[1]; ++b)
        for (int c = 0; c < f.n[2]; ++c)
          X[(static_cast<size_t>(a) * N[1] + b) * N[2] + c] = f.v[f.index(a, b, c)];
  };
  load(f1, A);
  load(f2, B);
  std::vector<int> dims{N[0], N[1], N[2]};
  fft::transform(dims, -1, A);
  fft::transform(dims, -1, B);
  for (size_t i = 0; i < tot; ++i) A[i] *= B[i];
  fft::transform(dims, +1, A);
  out.n = m;
  out.v.assign(static_cast<size_t>(m[0]) * m[1] * m[2], 0.0);
  double s = f1.lat.cell() / static_cast<double>(tot);
  for (int a = 0; a < m[0]; ++a)
    for (int b = 0; b < m[1]; ++b)
      for (int c = 0; c < m[2]; ++c)
        out.v[out.index(a, b, c)] = A[(static_cast<size_t>(a) * N[1] + b) * N[2] + c].real() * s;
  return out;
}

double inner(const BoxFunction& x, const BoxFunction& y) {
  if (!(x.lat == y.lat)) throw ResolutionError("inner product of functions on different lattices");
  std::array<long, 3> lo, hi;
  for (int ax = 0; ax < 3; ++ax) {
    lo[ax] = std::max(x.origin[ax], y.origin[ax]);
    hi[ax] = std::min(x.origin[ax] + x.n[ax], y.origin[ax] + y.n[ax]);
    if (hi[ax] <= lo[ax]) return 0.0;
  }
  double s = 0.0;
  for (long a = lo[0]; a < hi[0]; ++a)
    for (long b = lo[1]; b < hi[1]; ++b)
      for (long c = lo[2]; c < hi[2]; ++c) {
        double u = x.v[x.index(a - x.origin[0], b - x.origin[1], c - x.origin[2])];
        double w = y.v[y.index(a - y.origin[0], b - y.origin[1], c - y.origin[2])];
        s += u * w;
      }
  return s * x.lat.cell();
}

double trilinear_form(const BoxFunction& f1, const BoxFunction& f2, const BoxFunction& f3) {
  if (!(f1.lat == f3.lat)) throw ResolutionError("trilinear form on different lattices");
  if (f1.v.empty() || f2.v.empty() || f3.v.empty()) return 0.0;
  return inner(convolve(f1, f2), f3);
}

double trilinear_direct(const BoxFunction& f1, const BoxFunction& f2, const BoxFunction& f3) {
  if (!(f1.lat == f2.lat) || !(f1.lat == f3.lat))
    throw ResolutionError("trilinear form on different lattices");
  double s = 0.0;
  for (int a1 = 0; a1 < f1.n[0]; ++a1)
    for (int b1 = 0; b1 < f1.n[1]; ++b1)
      for (int c1 = 0; c1 < f1.n[2]; ++c1) {
        double x = f1.v[f1.index(a1, b1, c1)];
        if (x == 0.0) continue;
        for (int a2 = 0; a2 < f2.n[0]; ++a2)
          for (int b2 = 0; b2 < f2.n[1]; ++b2)
            for (int c2 = 0; c2 < f2.n[2]; ++c2) {
              double y = f2.v[f2.index(a2, b2, c2)];
              if (y == 0.0) continue;
              long A = f1.origin[0] + a1 + f2.origin[0] + a2 - f3.origin[0];
              long B = f1.origin[1] + b1 + f2.origin[1] + b2 - f3.origin[1];
              long C = f1.origin[2] + c1 + f2.origin[2] + c2 - f3.origin[2];
              if (A < 0 || B < 0 || C < 0 || A >= f3.n[0] || B >= f3.n[1] || C >= f3.n[2])
                continue;
              s += x * y * f3.v[f3.index(A, B, C)];
            }
      }
  double cell = f1.lat.cell();
  return s * cell * cell;
}

double restricted_conv_norm(const BoxFunction& f1, const BoxFunction& f2, const DyadicRegion& d) {
  BoxFunction g = convolve(f1, f2);
  double s = 0.0;
  for (int a = 0; a < g.n[0]; ++a) {
    double xi = g.coord(0, a);
    if (xi == 0.0 || !in_wide_band(d.k, xi)) continue;
    for (int b = 0; b < g.n[1]; ++b)
      for (int c = 0; c < g.n[2]; ++c) {
        double x = g.v[g.index(a, b, c)];
        if (x != 0.0 && d.contains(xi, g.coord(1, b), g.coord(2, c))) s += x * x;
      }
  }
  return std::sqrt(s * g.lat.cell());
}

// ---------------------------------------------------------------------------

namespace {

template <class Geo, class Fill>
std::vector<EstimateTrial> run_trials(const TrialOptions& opt, Geo&& geo, Fill&& fill) {
  std::vector<EstimateTrial> out(opt.trials);
  parallel_for(out.size(), [&](size_t i) {
    uint64_t seed = mix_seed(opt.seed, i);
    // Keep the parity of the trial index as the profile selector.
    seed = (seed & ~uint64_t(3)) | (i & 3);
    std::vector<Placement> ps = geo(seed, i);
    fit_cost(ps, opt);
    EstimateTrial t;
    t.seed = seed;
    fill(ps, t);
    t.ratio = t.rhs > 0 ? t.lhs / t.rhs : 0.0;
    out[i] = t;
  });
  return out;
}

double prod3(const std::array<double, 3>& n) { return n[0] * n[1] * n[2]; }

}  // namespace

std::vector<EstimateTrial> check_lemma51a(std::array<int, 3> k, std::array<int, 3> j,
                                          const TrialOptions& opt) {
  check_j(j);
  int S = k[0] + k[1] + k[2];
  if (*std::max_element(j.begin(), j.end()) > S - 4)
    throw ParameterError("max(j1,j2,j3) <= k1+k2+k3-4 violated");
  double dy = std::exp2(0.5 * (j[0] + j[1] + j[2]) - 0.5 * S);
  return run_trials(
      opt, [&](uint64_t s, size_t i) { return aligned_geometry(k, j, s, i % 2 == 0); },
      [&](const std::vector<Placement>& ps, EstimateTrial& t) {
        Eval e = eval_trilinear(ps, opt.ppw);
        t.lemma = "5.1a";
        t.k1 = k[0];
        t.k2 = k[1];
        t.k = k[2];
        t.j1 = j[0];
        t.j2 = j[1];
        t.j3 = j[2];
        t.lhs = e.lhs;
        double pn = prod3(e.norm);
        t.rhs = dy * pn;
        t.gain = pn > 0 ? e.lhs / pn : 0.0;
      });
}

namespace {

std::vector<EstimateTrial> lemma51b_impl(LParams base, bool auto_k3, bool random_params,
                                         const TrialOptions& opt) {
  return run_trials(
      opt,
      [&](uint64_t s, size_t) {
        LParams prm = base;
        if (random_params) {
          std::mt19937_64 rng(mix_seed(s, 0xb));
          for (int i = 0; i < 3; ++i) {
            prm.k[i] = std::uniform_int_distribution<int>(0, 2)(rng);
            prm.l[i] = std::uniform_int_distribution<int>(-2, 1)(rng);
            prm.j[i] = std::uniform_int_distribution<int>(2, 8)(rng);
          }
        }
        return limited_geometry(prm, s, auto_k3);
      },
      [&](const std::vector<Placement>& ps, EstimateTrial& t) {
        // Recover the parameters drawn for this seed.
        LParams prm = base;
        if (random_params) {
          std::mt19937_64 rng(mix_seed(t.seed, 0xb));
          for (int i = 0; i < 3; ++i) {
            prm.k[i] = std::uniform_int_distribution<int>(0, 2)(rng);
            prm.l[i] = std::uniform_int_distribution<int>(-2, 1)(rng);
            prm.j[i] = std::uniform_int_distribution<int>(2, 8)(rng);
          }
        }
        if (auto_k3) prm.k[2] = band_of(ps[2].xi_c);
        Eval e = eval_trilinear(ps, opt.ppw);
        t.lemma = "5.1b";
        t.k1 = prm.k[0];
        t.k2 = prm.k[1];
        t.k = prm.k[2];
        t.j1 = prm.j[0];
        t.j2 = prm.j[1];
        t.j3 = prm.j[2];
        t.l1 = prm.l[0];
        t.l2 = prm.l[1];
        t.l3 = prm.l[2];
        int mk = std::min({prm.k[0], prm.k[1], prm.k[2]});
        double ml = std::min({prm.l[0], prm.l[1], prm.l[2]});
        int mj = std::min({prm.j[0], prm.j[1], prm.j[2]});
        double pn = prod3(e.norm);
        t.lhs = e.lhs;
        t.rhs = std::exp2(0.5 * (mk + ml + mj)) * pn;
        t.gain = pn > 0 ? e.lhs / pn : 0.0;
      });
}

}  // namespace

std::vector<EstimateTrial> check_lemma51b(std::array<int, 3> k, std::array<double, 3> l,
                                          std::array<int, 3> j, const TrialOptions& opt) {
  check_j(j);
  for (double x : l)
    if (!std::isfinite(x)) throw ParameterError("l_i must be finite");
  return lemma51b_impl(LParams{k, l, j}, false, false, opt);
}

std::vector<EstimateTrial> check_lemma51b_random(const TrialOptions& opt) {
  return lemma51b_impl(LParams{{0, 0, 0}, {0, 0, 0}, {2, 2, 2}}, true, true, opt);
}

std::vector<EstimateTrial> check_lemma52(std::array<int, 3> k, std::array<int, 3> j,
                                         const TrialOptions& opt) {
  check_j(j);
  int J = *std::max_element(j.begin(), j.end());
  double dy = std::exp2(0.5 * (j[0] + j[1] + j[2] - J));
  return run_trials(
      opt, [&](uint64_t s, size_t i) { return aligned_geometry(k, j, s, i % 2 == 0); },
      [&](const std::vector<Placement>& ps, EstimateTrial& t) {
        Eval e = eval_trilinear(ps, opt.ppw);
        t.lemma = "5.2";
        t.k1 = k[0];
        t.k2 = k[1];
        t.k = k[2];
        t.j1 = j[0];
        t.j2 = j[1];
        t.j3 = j[2];
        double pn = prod3(e.norm);
        t.lhs = e.lhs;
        t.rhs = dy * pn;
        t.gain = pn > 0 ? e.lhs / pn : 0.0;
      });
}

std::vector<EstimateTrial> check_cor53(Cor53Branch branch, std::array<int, 3> k,
                                       std::array<int, 3> j, const TrialOptions& opt) {
  check_j(j);
  if (branch == Cor53Branch::LowK && k[0] > 100) throw ParameterError("k1 <= 100 violated");
  if (branch == Cor53Branch::HighK && k[0] < -100) throw ParameterError("k1 >= -100 violated");
  DyadicRegion d{k[2], std::numeric_limits<double>::infinity(), j[2]};
  int mk = std::min({k[0], k[1], k[2]});
  int mj = std::min({j[0], j[1], j[2]});
  int J = std::max({j[0], j[1], j[2]});
  double dy = 0.0;
  const char* name = "5.3a";
  switch (branch) {
    case Cor53Branch::JJ1:
      dy = std::exp2(0.5 * (j[0] + j[1] + j[2])) /
           std::sqrt(std::ldexp(1.0, J) + std::exp2(k[0] + k[1] + k[2]));
      break;
    case Cor53Branch::LowK:
      dy = std::exp2(0.5 * (k[0] + mk + mj));
      name = "5.3b-low";
      break;
    case Cor53Branch::HighK:
      dy = std::exp2(0.5 * (2 * k[0] + mk + mj));
      name = "5.3b-high";
      break;
  }
  return run_trials(
      opt, [&](uint64_t s, size_t i) { return aligned_geometry(k, j, s, i % 2 == 0); },
      [&](const std::vector<Placement>& ps, EstimateTrial& t) {
        Eval e = eval_restricted(ps, d, opt.ppw);
        t.lemma = name;
        t.k1 = k[0];
        t.k2 = k[1];
        t.k = k[2];
        t.j1 = j[0];
        t.j2 = j[1];
        t.j3 = j[2];
        double n1 = branch == Cor53Branch::JJ1 ? e.norm[0] : e.pnorm1;
        t.lhs = e.lhs;
        t.rhs = dy * n1 * e.norm[1];
        t.gain = n1 * e.norm[1] > 0 ? e.lhs / (n1 * e.norm[1]) : 0.0;
      });
}

// ---------------------------------------------------------------------------

double strichartz_ratio(const Field& phi, double T, int nt) {
  if (nt < 2) nt = 2;
  if (nt % 2) ++nt;
  Field f = to_fourier(phi);
  const SpectralGrid& g = f.grid;
  double n2 = 0.0;
  for (const auto& c : f.data) n2 += std::norm(c);
  double l2 = std::sqrt(g.lx * g.ly * n2) / static_cast<double>(g.size());
  if (l2 == 0.0) return 0.0;
  SpectralGrid G(2 * g.nx, 2 * g.ny, g.lx, g.ly);
  double h = T / nt;
  double s = 0.0;
  std::vector<cplx> pad(G.size());
  for (int n = 0; n <= nt; ++n) {
    Field u = free_propagator(f, n * h);
    std::fill(pad.begin(), pad.end(), cplx(0.0));
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        if (g.nyquist(i, j)) continue;
        int I = (g.mx(i) + G.nx) % G.nx, J = (g.my(j) + G.ny) % G.ny;
        pad[static_cast<size_t>(J) * G.nx + I] = u.at(i, j);
      }
    fft::transform({G.ny, G.nx}, +1, pad);
    double q = 0.0;
    for (const auto& c : pad) {
      double a = std::norm(c / static_cast<double>(g.size()));
      q += a * a;
    }
    q *= G.dx() * G.dy();
    double w = (n == 0 || n == nt) ? 1.0 : (n % 2 ? 4.0 : 2.0);
    s += w * q;
  }
  s *= h / 3.0;
  return std::pow(s, 0.25) / l2;
}

std::string trials_csv(const std::vector<EstimateTrial>& trials) {
  std::ostringstream os;
  os << "lemma,k,k1,k2,j1,j2,j3,seed,lhs,rhs,ratio\n";
  char buf[64];
  auto num = [&](double x) {
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return std::string(buf);
  };
  for (const auto& t : trials)
    os << t.lemma << ',' << t.k << ',' << t.k1 << ',' << t.k2 << ',' << t.j1 << ',' << t.j2 << ','
       << t.j3 << ',' << t.seed << ',' << num(t.lhs) << ',' << num(t.rhs) << ',' << num(t.ratio)
       << '\n';
  return os.str();
}

double max_ratio(const std::vector<EstimateTrial>& trials) {
  double m = 0.0;
  for (const auto& t : trials) m = std::max(m, t.ratio);
  return m;
}

double max_gain(const std::vector<EstimateTrial>& trials) {
  double m = 0.0;
  for (const auto& t : trials) m = std::max(m, t.gain);
  return m;
}

double fit_log2_slope(const std::vector<double>& x, const std::vector<double>& y) {
  size_t n = std::min(x.size(), y.size());
  if (n < 2) throw ConfigError("slope fit needs at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < n; ++i) {
    double ly = std::log2(y[i]);
    sx += x[i];
    sy += ly;
    sxx += x[i] * x[i];
    sxy += x[i] * ly;
  }
  double den = n * sxx - sx * sx;
  if (den == 0.0) throw ConfigError("slope fit needs distinct abscissae");
  return (n * sxy - sx * sy) / den;
}

}  // namespace kplab
