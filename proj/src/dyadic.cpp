#include "kplab/dyadic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <unordered_map>

#include "kplab/errors.hpp"
#include "kplab/norms.hpp"
#include "kplab/parallel.hpp"

namespace kplab {

namespace {

constexpr double kPi = 3.14159265358979323846;
const double kSqrt3 = std::sqrt(3.0);

uint64_t mix(uint64_t a, uint64_t b) {
  uint64_t z = a * 0x9E3779B97F4A7C15ULL + b + 0x2545F4914F6CDD1DULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double unif(std::mt19937_64& r, double a, double b) {
  return std::uniform_real_distribution<double>(a, b)(r);
}
double log_unif(std::mt19937_64& r, double a, double b) { return std::exp2(unif(r, a, b)); }

int64_t key(int i, int j) { return (static_cast<int64_t>(i) << 32) ^ static_cast<uint32_t>(j); }

int next_pow2(double x) {
  int n = 1;
  while (n < x) n *= 2;
  return n;
}

void require_band(const ModeSet& s, int k, const char* who) {
  for (size_t m = 0; m < s.size(); ++m)
    if (s.a[m] != cplx(0.0) && (s.i[m] == 0 || !in_wide_band(k, s.xi(m))))
      throw ConstraintError(std::string(who) + " has a mode outside the wide band k=" +
                            std::to_string(k));
}

void require_same_lattice(const ModeSet& a, const ModeSet& b) {
  if (a.dxi != b.dxi || a.dmu != b.dmu) throw ConfigError("mode sets live on different lattices");
}

bool barred_lemma(DyadicLemma l) {
  return l == DyadicLemma::L81 || l == DyadicLemma::L82 || l == DyadicLemma::L83 ||
         l == DyadicLemma::L84;
}

double coeff_norm(const ModeSet& s, bool p_weight) {
  double q = 0.0;
  for (size_t m = 0; m < s.size(); ++m) {
    double w = p_weight ? weight_p(s.xi(m), s.mu(m)) : 1.0;
    q += w * w * std::norm(s.a[m]);
  }
  return std::sqrt(s.area() * q);
}

// Largest half-width about |x| inside the wide band k.
double room(double x, int k) {
  double a = std::abs(x);
  return std::min(a - std::ldexp(1.0, k - 1), std::ldexp(1.0, k + 1) - a) * 0.999;
}

double draw_xi(std::mt19937_64& r, int k, bool positive = false) {
  double s = (positive || unif(r, 0, 1) < 0.5) ? 1.0 : -1.0;
  return s * std::ldexp(unif(r, 0.8, 1.4), k);
}

// xi_a in I_ka, xi_b in I_kb with xi_a + xi_b well inside I_k.
void draw_pair(std::mt19937_64& r, int ka, int kb, int k, double& xa, double& xb) {
  for (int t = 0; t < 20000; ++t) {
    xa = draw_xi(r, ka);
    xb = draw_xi(r, kb);
    double s = std::abs(xa + xb);
    if (s > std::ldexp(0.8, k) && s < std::ldexp(1.4, k)) return;
  }
  throw ParameterError("no xi1 in I_k1, xi2 in I_k2 with xi1 + xi2 in I_k");
}

// Upright box of lattice modes: |xi - xc| < wx, |mu - mc| < wm.
void fill_box(ModeSet& s, double xc, double wx, double mc, double wm, int kband,
              std::mt19937_64* rng) {
  int i0 = static_cast<int>(std::ceil((xc - wx) / s.dxi)),
      i1 = static_cast<int>(std::floor((xc + wx) / s.dxi));
  for (int i = i0; i <= i1; ++i) {
    if (i == 0 || !in_sharp_band(kband, i * s.dxi)) continue;
    int j0 = static_cast<int>(std::ceil((mc - wm) / s.dmu)),
        j1 = static_cast<int>(std::floor((mc + wm) / s.dmu));
    for (int j = j0; j <= j1; ++j) s.add(i, j, rng ? unif(*rng, 0.2, 1.0) : 1.0);
  }
}

// Box sheared so that column xi is centered at mu = xi * slope(xi).
template <class F>
void fill_sheared(ModeSet& s, double xc, double wx, F&& mu_center, double wm, int kband,
                  std::mt19937_64* rng) {
  int i0 = static_cast<int>(std::ceil((xc - wx) / s.dxi)),
      i1 = static_cast<int>(std::floor((xc + wx) / s.dxi));
  for (int i = i0; i <= i1; ++i) {
    double x = i * s.dxi;
    if (i == 0 || !in_sharp_band(kband, x)) continue;
    double mc = mu_center(x);
    int j0 = static_cast<int>(std::ceil((mc - wm) / s.dmu)),
        j1 = static_cast<int>(std::floor((mc + wm) / s.dmu));
    for (int j = j0; j <= j1; ++j) s.add(i, j, rng ? unif(*rng, 0.2, 1.0) : 1.0);
  }
}

// Lattice spacing: `points` across the smallest width, at most `cap` points across the largest.
double spacing(std::initializer_list<double> widths, int points, int cap) {
  double lo = *std::min_element(widths.begin(), widths.end());
  double hi = *std::max_element(widths.begin(), widths.end());
  return std::max(lo / points, 2.0 * hi / cap);
}

struct PairGeometry {
  ModeSet u, v;
};

// u in band ka, v in band kb, u + v aimed at band k. Even trials put the higher-frequency box
// on the resonant curve mu_h/xi_h = mu_l/xi_l -+ sqrt3 (xi_l + xi_h) of the lower one, with unit
// coefficients; odd trials use a random mu offset and random coefficients.
PairGeometry bilinear_geometry(int ka, int kb, int k, uint64_t seed, int points) {
  std::mt19937_64 r(seed);
  bool aligned = (seed & 1) == 0;
  double xa, xb;
  draw_pair(r, ka, kb, k, xa, xb);
  bool u_low = std::abs(xa) <= std::abs(xb);
  double xl = u_low ? xa : xb, xh = u_low ? xb : xa;
  int kl = u_low ? ka : kb, kh = u_low ? kb : ka;
  int km = std::min({ka, kb, k});
  double wxl = std::min({room(xl, kl), room(xh, kh), std::ldexp(unif(r, 0.1, 0.7), km)});
  double wml = std::ldexp(log_unif(r, -2.5, 0.5), km);
  double wxh = std::min(room(xh, kh), wxl * log_unif(r, -1.0, 1.0));
  double wmh = wml * log_unif(r, -1.0, 1.0);
  double ml = std::ldexp(unif(r, -0.5, 0.5), km);
  double sg = unif(r, 0, 1) < 0.5 ? -1.0 : 1.0;
  // Slope offset moving Omega by up to ~12 2^{k+}.
  double off = aligned ? 0.0
                       : unif(r, -12.0, 12.0) * std::ldexp(1.0, kplus(k)) /
                             (2.0 * kSqrt3 * std::abs(xl * xh));
  ModeSet lo, hi;
  double d_x = spacing({wxl, wxh}, points, 48), d_m = spacing({wml, wmh}, points, 48);
  lo.dxi = hi.dxi = d_x;
  lo.dmu = hi.dmu = d_m;
  std::mt19937_64* rr = aligned ? nullptr : &r;
  fill_box(lo, xl, wxl, ml, wml, kl, rr);
  double sl = ml / xl;
  fill_sheared(
      hi, xh, wxh, [&](double x) { return x * (sl - sg * kSqrt3 * (xl + x) + off); }, wmh, kh,
      rr);
  PairGeometry g;
  g.u = u_low ? lo : hi;
  g.v = u_low ? hi : lo;
  return g;
}

struct OutputModes {
  std::vector<double> xi, mu;
  // pairs: output index, coefficient product, Omega
  std::vector<size_t> zi;
  std::vector<cplx> ab;
  std::vector<double> om;
  double max_om = 0.0;
};

OutputModes output_pairs(const ModeSet& u, const ModeSet& v, int k) {
  OutputModes o;
  std::unordered_map<int64_t, size_t> idx;
  for (size_t p = 0; p < u.size(); ++p) {
    if (u.a[p] == cplx(0.0)) continue;
    for (size_t q = 0; q < v.size(); ++q) {
      if (v.a[q] == cplx(0.0)) continue;
      int I = u.i[p] + v.i[q], J = u.j[p] + v.j[q];
      double x = I * u.dxi;
      if (I == 0 || !in_sharp_band(k, x)) continue;
      auto it = idx.find(key(I, J));
      size_t z;
      if (it == idx.end()) {
        z = o.xi.size();
        idx.emplace(key(I, J), z);
        o.xi.push_back(x);
        o.mu.push_back(J * u.dmu);
      } else {
        z = it->second;
      }
      double om = resonance_Omega_factored(u.xi(p), u.mu(p), v.xi(q), v.mu(q));
      o.zi.push_back(z);
      o.ab.push_back(u.a[p] * v.a[q]);
      o.om.push_back(om);
      o.max_om = std::max(o.max_om, std::abs(om));
    }
  }
  return o;
}

// int exp(-3 (2^K t)^2) e^{i t Om} dt
double gaussian_cubed_integral(double Om, int K) {
  double a = 3.0 * std::ldexp(1.0, 2 * K);
  return std::sqrt(kPi / a) * std::exp(-Om * Om / (4.0 * a));
}

}  // namespace

// ---------------------------------------------------------------------------

double ModeSet::area() const { return (2.0 * kPi / dxi) * (2.0 * kPi / dmu); }

void ModeSet::add(int ii, int jj, cplx c) {
  i.push_back(ii);
  j.push_back(jj);
  a.push_back(c);
}

DyadicLemma parse_dyadic_lemma(const std::string& s) {
  static const std::map<std::string, DyadicLemma> m{
      {"7.1", DyadicLemma::L71}, {"7.2", DyadicLemma::L72}, {"7.3", DyadicLemma::L73},
      {"7.4", DyadicLemma::L74}, {"7.5", DyadicLemma::L75}, {"8.1", DyadicLemma::L81},
      {"8.2", DyadicLemma::L82}, {"8.3", DyadicLemma::L83}, {"8.4", DyadicLemma::L84}};
  auto it = m.find(s);
  if (it == m.end()) throw ConfigError("unknown dyadic lemma '" + s + "'");
  return it->second;
}

std::string dyadic_lemma_name(DyadicLemma l) {
  static const char* n[] = {"7.1", "7.2", "7.3", "7.4", "7.5", "8.1", "8.2", "8.3", "8.4"};
  return n[static_cast<int>(l)];
}

void check_dyadic_constraints(DyadicLemma l, int k, int k1, int k2) {
  auto need = [&](bool ok, const char* what) {
    if (!ok) throw ParameterError("lemma " + dyadic_lemma_name(l) + ": " + what + " violated");
  };
  int mn = std::min(k1, k2);
  switch (l) {
    case DyadicLemma::L71:
      need(k1 <= k2, "k1 <= k2");
      need(k1 <= 0, "k1 <= 0");
      need(k >= 0, "k >= 0");
      need(std::abs(k2 - k) <= 40, "|k2 - k| <= 40");
      break;
    case DyadicLemma::L72:
      need(k1 <= k2, "k1 <= k2");
      need(k1 >= 0, "k1 >= 0");
      need(k >= 0, "k >= 0");
      need(std::abs(k2 - k) <= 40, "|k2 - k| <= 40");
      break;
    case DyadicLemma::L73:
      need(k >= 0 && k1 >= 0 && k2 >= 0, "k, k1, k2 >= 0");
      need(std::abs(k1 - k2) <= 4, "|k1 - k2| <= 4");
      need(k <= mn - 3, "k <= min(k1,k2) - 3");
      break;
    case DyadicLemma::L74:
      need(k1 >= 0 && k2 >= 0, "k1, k2 >= 0");
      need(std::abs(k1 - k2) <= 4, "|k1 - k2| <= 4");
      need(k <= 0, "k <= 0");
      need(k <= mn - 3, "k <= min(k1,k2) - 3");
      break;
    case DyadicLemma::L75:
    case DyadicLemma::L81:
      need(k <= 100 && k1 <= 100 && k2 <= 100, "k, k1, k2 <= 100");
      break;
    case DyadicLemma::L82:
      need(mn >= std::max(k - 10, 2), "k1, k2 >= max(k-10, 2)");
      break;
    case DyadicLemma::L83:
      need(k >= 4, "k >= 4");
      need(k2 <= k - 3, "k2 <= k - 3");
      need(std::abs(k1 - k) <= 4, "|k1 - k| <= 4");
      break;
    case DyadicLemma::L84:
      need(k >= 4, "k >= 4");
      need(k1 <= k - 3, "k1 <= k - 3");
      need(std::abs(k - k2) <= 4, "|k - k2| <= 4");
      break;
  }
}

double dyadic_bound(DyadicLemma l, int k, int k1, int k2) {
  switch (l) {
    case DyadicLemma::L71: return std::ldexp(1.0, k1);
    case DyadicLemma::L72: return (1.0 + k1) * std::exp2(-0.5 * k1);
    case DyadicLemma::L73: return std::max(k2, 1) * std::exp2(k2 - 1.5 * k);
    case DyadicLemma::L74: return (k2 - k) * std::exp2(k2 + 0.5 * k);
    case DyadicLemma::L75: return std::exp2(0.5 * (k + k1 + k2));
    case DyadicLemma::L81: return std::exp2(1.5 * k + 0.5 * k2);
    case DyadicLemma::L82: return std::exp2(0.75 * (k2 - std::abs(k)));
    case DyadicLemma::L83:
      return k2 <= 0 ? std::ldexp(1.0, k2) : k2 * std::exp2(-0.5 * k2);
    case DyadicLemma::L84: return std::exp2(-0.5 * k1) * std::max(k2, 1);
  }
  return 0.0;
}

double free_wave_profile(int k) {
  XkOptions o;
  o.k = k;
  o.p_weight = false;
  BandSampler s = [k](double t0, double dt, int nt, SpaceTimeBlock& b) {
    b.xi = {std::ldexp(1.0, k)};
    b.mu = {0.0};
    b.t0 = t0;
    b.dt = dt;
    b.nt = nt;
    b.area = 1.0;
    b.g.assign(nt, cplx(1.0));
  };
  return sup_windowed_Xk(s, {0.0}, o);
}

double localized_wave_profile(int k, int K) {
  XkOptions o;
  o.k = k;
  o.p_weight = false;
  double sK = std::ldexp(1.0, K);
  BandSampler s = [k, sK](double t0, double dt, int nt, SpaceTimeBlock& b) {
    b.xi = {std::ldexp(1.0, k)};
    b.mu = {0.0};
    b.t0 = t0;
    b.dt = dt;
    b.nt = nt;
    b.area = 1.0;
    b.g.resize(nt);
    for (int n = 0; n < nt; ++n) {
      double x = sK * (t0 + n * dt);
      b.g[n] = std::exp(-x * x);
    }
  };
  WindowOptions w;
  w.nt = std::max(128, next_pow2(8.0 * std::ldexp(1.0, K - kplus(k))));
  double step = std::ldexp(1.0, -kplus(k) - 2);
  double reach = 3.0 / sK + std::ldexp(1.0, -kplus(k));
  std::vector<double> centers;
  for (long i = -static_cast<long>(std::ceil(reach / step)); i * step <= reach; ++i)
    centers.push_back(i * step);
  return sup_windowed_Xk(s, centers, o, w);
}

BilinearValue evaluate_bilinear(DyadicLemma l, int k, int k1, int k2, const ModeSet& u,
                                const ModeSet& v, int centers) {
  require_same_lattice(u, v);
  require_band(u, k1, "u");
  require_band(v, k2, "v");
  bool barred = barred_lemma(l);
  BilinearValue r;
  r.norm_u = free_wave_profile(k1) * coeff_norm(u, !barred);
  r.norm_v = free_wave_profile(k2) * coeff_norm(v, true);
  OutputModes o = output_pairs(u, v, k);
  if (o.xi.empty()) return r;

  int kp = kplus(k);
  WindowOptions w;
  double need = 3.2 * std::ldexp(1.0, -kp) * (o.max_om + 16.0 * std::ldexp(1.0, kp)) / kPi;
  if (need > (1 << 16))
    throw ResolutionError("output modulation needs " + std::to_string(static_cast<long>(need)) +
                          " time samples per window (limit 65536)");
  w.nt = std::max(128, next_pow2(need));
  double area = u.area();
  BandSampler s = [&](double t0, double dt, int nt, SpaceTimeBlock& b) {
    b.xi = o.xi;
    b.mu = o.mu;
    b.t0 = t0;
    b.dt = dt;
    b.nt = nt;
    b.area = area;
    b.g.assign(o.xi.size() * nt, cplx(0.0));
    for (size_t p = 0; p < o.zi.size(); ++p) {
      cplx ph = o.ab[p] * std::polar(1.0, o.om[p] * t0);
      cplx st = std::polar(1.0, o.om[p] * dt);
      cplx* g = &b.g[o.zi[p] * nt];
      for (int n = 0; n < nt; ++n) {
        g[n] += ph;
        ph *= st;
      }
    }
    for (size_t z = 0; z < o.xi.size(); ++z)
      for (int n = 0; n < nt; ++n) b.g[z * nt + n] *= cplx(0.0, o.xi[z]);
  };
  XkOptions x;
  x.k = k;
  x.p_weight = !barred;
  x.inverse_modulation = true;
  std::vector<double> cs;
  double step = std::ldexp(1.0, -kp - 2);
  for (int c = -(centers / 2); c <= centers / 2; ++c) cs.push_back(c * step);
  r.lhs = sup_windowed_Xk(s, cs, x, w);
  return r;
}

std::vector<EstimateTrial> check_dyadic_bilinear(DyadicLemma l, int k, int k1, int k2,
                                                 const DyadicOptions& opt) {
  check_dyadic_constraints(l, k, k1, k2);
  double bound = dyadic_bound(l, k, k1, k2);
  std::vector<EstimateTrial> out(opt.trials);
  parallel_for(out.size(), [&](size_t t) {
    uint64_t seed = (mix(opt.seed, t) & ~uint64_t(1)) | (t & 1);
    PairGeometry g = bilinear_geometry(k1, k2, k, seed, opt.points);
    BilinearValue v = evaluate_bilinear(l, k, k1, k2, g.u, g.v, opt.centers);
    EstimateTrial e;
    e.lemma = dyadic_lemma_name(l);
    e.k = k;
    e.k1 = k1;
    e.k2 = k2;
    e.seed = seed;
    double pn = v.norm_u * v.norm_v;
    e.lhs = v.lhs;
    e.rhs = bound * pn;
    e.ratio = e.rhs > 0 ? e.lhs / e.rhs : 0.0;
    e.gain = pn > 0 ? e.lhs / pn : 0.0;
    out[t] = e;
  });
  return out;
}

// ---------------------------------------------------------------------------

TrilinearValue evaluate_trilinear_a(const std::array<ModeSet, 3>& phi, std::array<int, 3> k,
                                    int K) {
  if (K < 2) throw ConfigError("time localization needs K >= 2 to fit inside [0, 1]");
  require_same_lattice(phi[0], phi[1]);
  require_same_lattice(phi[0], phi[2]);
  for (int i = 0; i < 3; ++i) require_band(phi[i], k[i], "u_i");
  TrilinearValue r;
  r.rhs_norms = 1.0;
  for (int i = 0; i < 3; ++i) r.rhs_norms *= localized_wave_profile(k[i], K) * coeff_norm(phi[i], false);
  std::unordered_map<int64_t, cplx> third;
  for (size_t m = 0; m < phi[2].size(); ++m) third[key(phi[2].i[m], phi[2].j[m])] += phi[2].a[m];
  cplx s = 0.0;
  const ModeSet &A = phi[0], &B = phi[1];
  for (size_t p = 0; p < A.size(); ++p)
    for (size_t q = 0; q < B.size(); ++q) {
      auto it = third.find(key(-(A.i[p] + B.i[q]), -(A.j[p] + B.j[q])));
      if (it == third.end()) continue;
      double om = resonance_Omega_factored(A.xi(p), A.mu(p), B.xi(q), B.mu(q));
      s += A.a[p] * B.a[q] * it->second * gaussian_cubed_integral(om, K);
    }
  r.lhs = A.area() * std::abs(s);
  return r;
}

namespace {

// One-sided set plus its mirror image with conjugate coefficients.
ModeSet realify(const ModeSet& s) {
  ModeSet r = s;
  for (size_t m = 0; m < s.size(); ++m) r.add(-s.i[m], -s.j[m], std::conj(s.a[m]));
  return r;
}

}  // namespace

TrilinearValue evaluate_trilinear_b(const ModeSet& u1, const ModeSet& v1, int k, int k1, int K) {
  if (K < 2) throw ConfigError("time localization needs K >= 2 to fit inside [0, 1]");
  require_same_lattice(u1, v1);
  ModeSet u = realify(u1), v = realify(v1);
  require_band(v, k1, "v");
  std::unordered_map<int64_t, cplx> uc;
  for (size_t m = 0; m < u.size(); ++m) uc[key(u.i[m], u.j[m])] += u.a[m];
  cplx s = 0.0;
  for (size_t p = 0; p < u.size(); ++p)
    for (size_t q = 0; q < v.size(); ++q) {
      int I = u.i[p] + v.i[q], J = u.j[p] + v.j[q];
      if (I == 0) continue;
      double x = I * u.dxi;
      double e = bump_chi_k(k, x);
      if (e == 0.0) continue;
      auto it = uc.find(key(-I, -J));
      if (it == uc.end()) continue;
      double om = resonance_Omega_factored(u.xi(p), u.mu(p), v.xi(q), v.mu(q));
      s += e * e * it->second * cplx(0.0, u.xi(p)) * u.a[p] * bump_chi_k(k1, v.xi(q)) * v.a[q] *
           gaussian_cubed_integral(om, K);
    }
  TrilinearValue r;
  r.lhs = u.area() * std::abs(s);
  double band_sum = 0.0;
  for (int kk = k - 10; kk <= k + 10; ++kk) {
    double q = 0.0;
    for (size_t m = 0; m < u.size(); ++m) q += std::pow(bump_chi_k(kk, u.xi(m)), 2) * std::norm(u.a[m]);
    if (q == 0.0) continue;
    double n = localized_wave_profile(kk, K) * std::sqrt(u.area() * q);
    band_sum += n * n;
  }
  r.rhs_norms = localized_wave_profile(k1, K) * coeff_norm(v, false) * band_sum;
  return r;
}

namespace {

// phi_1 in I_k1, phi_2 in I_k2 on the resonant set of phi_1, phi_3 = all -(xi1+xi2) in I_k3.
std::array<ModeSet, 3> trilinear_geometry(std::array<int, 3> k, int K, uint64_t seed,
                                          int points) {
  std::mt19937_64 r(seed);
  bool aligned = (seed & 1) == 0;
  double x1, x2;
  draw_pair(r, k[0], k[1], k[2], x1, x2);
  double x3 = x1 + x2;
  int S = k[0] + k[1] + k[2];
  double dnu = std::ldexp(1.0, K) / (2.0 * kSqrt3 * std::abs(x1 * x2));
  double rx = log_unif(r, -1.0, 2.0), rm = log_unif(r, -2.0, 1.0);
  double w1 = std::min({room(x1, k[0]), room(x2, k[1]), std::ldexp(rx, K - S)});
  double w2 = std::min(room(x2, k[1]), w1 * log_unif(r, -1.0, 1.0));
  double m1w = std::abs(x1) * dnu * rm, m2w = std::abs(x2) * dnu * rm;
  double m2c = unif(r, -1.0, 1.0) * std::abs(x2) * std::ldexp(1.0, std::max(k[0], k[1]));
  double sg = unif(r, 0, 1) < 0.5 ? -1.0 : 1.0;
  double off = aligned ? 0.0 : unif(r, -4.0, 4.0) * std::ldexp(1.0, K) / (2.0 * kSqrt3 * std::abs(x1 * x2));
  std::array<ModeSet, 3> phi;
  double dx = spacing({w1, w2}, points, 128), dm = spacing({m1w, m2w}, points, 128);
  for (auto& p : phi) {
    p.dxi = dx;
    p.dmu = dm;
  }
  std::mt19937_64* rr = aligned ? nullptr : &r;
  double m1c = x1 * (m2c / x2 + sg * kSqrt3 * x3 + off);
  fill_box(phi[0], x1, w1, m1c, m1w, k[0], rr);
  double s1 = m1c / x1;
  fill_sheared(
      phi[1], x2, w2, [&](double x) { return x * (s1 - sg * kSqrt3 * (x1 + x) - off); }, m2w, k[1],
      rr);
  std::unordered_map<int64_t, bool> seen;
  for (size_t p = 0; p < phi[0].size(); ++p)
    for (size_t q = 0; q < phi[1].size(); ++q) {
      int I = -(phi[0].i[p] + phi[1].i[q]), J = -(phi[0].j[p] + phi[1].j[q]);
      if (I == 0 || !in_sharp_band(k[2], I * dx)) continue;
      if (seen.emplace(key(I, J), true).second) phi[2].add(I, J, rr ? unif(r, 0.2, 1.0) : 1.0);
    }
  return phi;
}

}  // namespace

std::vector<EstimateTrial> check_trilinear_energy_a(std::array<int, 3> k,
                                                    const DyadicOptions& opt) {
  if (std::max({k[0], k[1], k[2]}) < 0) throw ParameterError("max(k1,k2,k3) >= 0 violated");
  int K = std::max(2, std::max({k[0], k[1], k[2]}));
  double bound = std::exp2(-0.5 * std::min({k[0], k[1], k[2]}));
  std::vector<EstimateTrial> out(opt.trials);
  parallel_for(out.size(), [&](size_t t) {
    uint64_t seed = (mix(opt.seed ^ 0x61, t) & ~uint64_t(1)) | (t & 1);
    auto phi = trilinear_geometry(k, K, seed, opt.points);
    TrilinearValue v = evaluate_trilinear_a(phi, k, K);
    EstimateTrial e;
    e.lemma = "6.1a";
    e.k = k[2];
    e.k1 = k[0];
    e.k2 = k[1];
    e.seed = seed;
    e.lhs = v.lhs;
    e.rhs = bound * v.rhs_norms;
    e.ratio = e.rhs > 0 ? e.lhs / e.rhs : 0.0;
    e.gain = v.rhs_norms > 0 ? e.lhs / v.rhs_norms : 0.0;
    out[t] = e;
  });
  return out;
}

namespace {

// v in band k1 with mu/xi near s; u in band k along mu = xi (s - 2 sg sqrt3 x0 + sg sqrt3 xi), on
// which shifts by modes of v stay inside u and are resonant.
PairGeometry commutator_geometry(int k, int k1, uint64_t seed, int points) {
  std::mt19937_64 r(seed);
  bool aligned = (seed & 1) == 0;
  double xv = draw_xi(r, k1, true), x0 = draw_xi(r, k, true);
  double wxv = std::min(room(xv, k1), std::ldexp(unif(r, 0.1, 0.7), k1));
  double wmv = std::ldexp(log_unif(r, -2.5, 0.5), k1);
  double wxu = std::min(room(x0, k), std::ldexp(unif(r, 2.0, 6.0), k1));
  double wmu = wmv * log_unif(r, 0.0, 1.5);
  double sv = unif(r, -0.5, 0.5);
  double sg = unif(r, 0, 1) < 0.5 ? -1.0 : 1.0;
  double off = aligned ? 0.0 : unif(r, -3.0, 3.0) * std::ldexp(1.0, k1);
  ModeSet u, v;
  double d_x = spacing({wxv, wxu}, points, 64), d_m = spacing({wmv, wmu}, points, 48);
  u.dxi = v.dxi = d_x;
  u.dmu = v.dmu = d_m;
  std::mt19937_64* rr = aligned ? nullptr : &r;
  fill_box(v, xv, wxv, xv * sv, wmv, k1, rr);
  fill_sheared(
      u, x0, wxu,
      [&](double x) { return x * (sv - 2.0 * sg * kSqrt3 * x0 + sg * kSqrt3 * x + off); }, wmu,
      k, rr);
  // Real data with real coefficients is even in x and the form vanishes by parity.
  for (auto& c : v.a) c *= aligned ? cplx(0.0, 1.0) : std::polar(1.0, unif(r, 0.0, 2.0 * kPi));
  if (!aligned)
    for (auto& c : u.a) c *= std::polar(1.0, unif(r, 0.0, 2.0 * kPi));
  return {u, v};
}

}  // namespace

std::vector<EstimateTrial> check_trilinear_energy_b(int k, int k1, const DyadicOptions& opt) {
  if (k < 0) throw ParameterError("k >= 0 violated");
  if (k1 > k - 10) throw ParameterError("k1 <= k - 10 violated");
  int K = std::max(2, k);
  double bound = std::exp2(0.5 * k1);
  std::vector<EstimateTrial> out(opt.trials);
  parallel_for(out.size(), [&](size_t t) {
    uint64_t seed = (mix(opt.seed ^ 0x62, t) & ~uint64_t(1)) | (t & 1);
    PairGeometry g = commutator_geometry(k, k1, seed, opt.points);
    TrilinearValue v = evaluate_trilinear_b(g.u, g.v, k, k1, K);
    EstimateTrial e;
    e.lemma = "6.1b";
    e.k = k;
    e.k1 = k1;
    e.k2 = k;
    e.seed = seed;
    e.lhs = v.lhs;
    e.rhs = bound * v.rhs_norms;
    e.ratio = e.rhs > 0 ? e.lhs / e.rhs : 0.0;
    e.gain = v.rhs_norms > 0 ? e.lhs / v.rhs_norms : 0.0;
    out[t] = e;
  });
  return out;
}

}  // namespace kplab
