#include "kplab/norms.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include "kplab/errors.hpp"
#include "kplab/fft.hpp"

namespace kplab {

namespace {
constexpr double kPi = 3.14159265358979323846;

double pad_cubic_integral(const Field& f) {
  // Integral of u^3 on a grid twice as fine, which is exact for grid-band-limited u.
  const auto& g = f.grid;
  int NX = 2 * g.nx, NY = 2 * g.ny;
  std::vector<cplx> pad(static_cast<size_t>(NX) * NY, cplx(0.0));
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      if (g.nyquist(i, j)) continue;
      int I = (g.mx(i) + NX) % NX, J = (g.my(j) + NY) % NY;
      pad[static_cast<size_t>(J) * NX + I] = f.at(i, j);
    }
  fft::transform({NY, NX}, +1, pad);
  double s = 0.0, norm = 1.0 / static_cast<double>(g.size());
  for (const auto& c : pad) {
    double v = c.real() * norm;
    s += v * v * v;
  }
  return s * (g.lx / NX) * (g.ly / NY);
}

}  // namespace

// ---------------------------------------------------------------------------
// Energies

double weighted_l2(const Field& u, const std::function<double(double, double)>& w) {
  Field f = to_fourier(u);
  const auto& g = f.grid;
  double s = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      double xi = g.xi(i);
      if (xi == 0.0 || g.nyquist(i, j)) continue;
      double a = w(xi, g.mu(j));
      s += a * a * std::norm(f.at(i, j));
    }
  return std::sqrt(s * g.lx * g.ly) / static_cast<double>(g.size());
}

double energy_E0(const Field& u) {
  Field p = to_physical(u);
  double s = 0.0;
  for (const auto& c : p.data) s += c.real() * c.real();
  return s * p.grid.dx() * p.grid.dy();
}

double energy_E1(const Field& u, int sign) {
  Field f = to_fourier(u);
  require_zero_x_mean(f);
  double ux = weighted_l2(f, [](double xi, double) { return xi; });
  double dy = weighted_l2(f, [](double xi, double mu) { return mu / xi; });
  return ux * ux - sign * dy * dy - pad_cubic_integral(f) / 3.0;
}

double norm_E_sigma(const Field& u, int sigma) {
  return weighted_l2(u, [sigma](double xi, double mu) {
    return weight_p(xi, mu) * std::pow(1.0 + std::abs(xi), sigma);
  });
}

double norm_Ebar_sigma(const Field& u, int sigma) {
  return weighted_l2(u, [sigma](double xi, double) {
    return (1.0 + std::pow(std::abs(xi), -0.625)) * std::pow(1.0 + std::abs(xi), sigma);
  });
}

double norm_Ek(const Field& u, int k, bool barred) {
  return weighted_l2(u, [k, barred](double xi, double mu) {
    if (!in_sharp_band(k, xi)) return 0.0;
    return barred ? 1.0 : weight_p(xi, mu);
  });
}

// ---------------------------------------------------------------------------
// X_k

int kplus(int k) { return std::max(k, 0); }

double window_dt(int k, int nt) { return 3.2 * std::ldexp(1.0, -kplus(k)) / nt; }

namespace {

double bin_weight(int j, int jmax, double theta) {
  if (j == 0) return bump_eta0(theta);
  if (j == jmax) return 1.0 - bump_eta0(std::ldexp(theta, -(j - 1)));
  return bump_chi_k(j, theta);
}

constexpr int kTimePad = 4;

int default_jmax(double dt) {
  int j = static_cast<int>(std::floor(std::log2(kPi / dt)));
  return std::max(j, 1);
}

}  // namespace

std::vector<double> modulation_profile(const SpaceTimeBlock& b, const XkOptions& opt) {
  if (b.nt <= 0) return {};
  if (b.g.size() != b.modes() * static_cast<size_t>(b.nt))
    throw std::invalid_argument("SpaceTimeBlock: data size mismatch");
  int jmax = opt.jmax > 0 ? opt.jmax : default_jmax(b.dt);
  std::vector<double> mass(static_cast<size_t>(jmax) + 1, 0.0);
  double gmax = 0.0;
  for (const auto& c : b.g) gmax = std::max(gmax, std::abs(c));
  if (gmax == 0.0) return mass;
  double kp = std::ldexp(1.0, kplus(opt.k));
  // Zero padding refines the tau lattice; the block itself is unchanged.
  const int nf = kTimePad * b.nt;
  std::vector<double> theta(nf);
  for (int q = 0; q < nf; ++q) {
    int qq = q < nf / 2 ? q : q - nf;
    theta[q] = 2.0 * kPi * qq / (nf * b.dt);
  }
  std::vector<cplx> buf(nf);
  for (size_t m = 0; m < b.modes(); ++m) {
    const cplx* src = &b.g[m * b.nt];
    double mm = 0.0;
    for (int n = 0; n < b.nt; ++n) mm = std::max(mm, std::abs(src[n]));
    if (mm == 0.0) continue;
    if (!in_wide_band(opt.k, b.xi[m])) {
      if (mm > opt.support_tol * gmax) {
        std::ostringstream os;
        os << "X_k norm: block has content at xi=" << b.xi[m] << " outside the wide band k="
           << opt.k;
        throw ConstraintError(os.str());
      }
      continue;
    }
    std::fill(std::copy(src, src + b.nt, buf.begin()), buf.end(), cplx(0.0, 0.0));
    fft::transform({nf}, -1, buf);
    double w = opt.p_weight ? weight_p(b.xi[m], b.mu[m]) : 1.0;
    for (int q = 0; q < nf; ++q) {
      double a = std::norm(buf[q]) * w * w;
      if (opt.inverse_modulation) a /= theta[q] * theta[q] + kp * kp;
      if (a == 0.0) continue;
      // chi_j(theta) vanishes unless 1.25 2^{j-1} < |theta| < 1.6 2^j.
      double at = std::abs(theta[q]);
      int lo = at < 1.6 ? 0 : std::max(0, static_cast<int>(std::floor(std::log2(at / 1.6))));
      for (int j = std::min(lo, jmax); j <= std::min(jmax, lo + 2); ++j) {
        double e = bin_weight(j, jmax, theta[q]);
        if (e != 0.0) mass[j] += e * e * a;
      }
    }
  }
  double scale = b.area * b.dt / nf;
  for (auto& v : mass) v = std::sqrt(v * scale);
  return mass;
}

double norm_Xk(const SpaceTimeBlock& b, const XkOptions& opt) {
  auto prof = modulation_profile(b, opt);
  double s = 0.0;
  for (size_t j = 0; j < prof.size(); ++j) s += std::sqrt(std::ldexp(1.0, static_cast<int>(j))) * prof[j];
  return s;
}

double trace_norm(const SpaceTimeBlock& b, bool p_weight) {
  std::vector<cplx> buf(b.nt);
  double s = 0.0;
  double dtheta = 2.0 * kPi / (b.nt * b.dt);
  for (size_t m = 0; m < b.modes(); ++m) {
    std::copy(&b.g[m * b.nt], &b.g[m * b.nt] + b.nt, buf.begin());
    fft::transform({b.nt}, -1, buf);
    double l1 = 0.0;
    for (const auto& c : buf) l1 += std::abs(c) * b.dt;
    l1 *= dtheta / (2.0 * kPi);
    double w = p_weight ? weight_p(b.xi[m], b.mu[m]) : 1.0;
    s += w * w * l1 * l1;
  }
  return std::sqrt(s * b.area);
}

// ---------------------------------------------------------------------------
// Windows

std::vector<double> window_centers(int k, double T) {
  double step = std::ldexp(1.0, -kplus(k) - 2);
  double reach = T + std::ldexp(1.0, -kplus(k));
  long n = static_cast<long>(std::ceil(reach / step - 1e-12));
  std::vector<double> c;
  for (long i = -n; i <= n; ++i) c.push_back(i * step);
  return c;
}

double sup_windowed_Xk(const BandSampler& sampler, const std::vector<double>& centers,
                       const XkOptions& opt, const WindowOptions& wopt, double* argmax) {
  if (wopt.nt < 16) throw ResolutionError("window sampling needs at least 16 time samples");
  double dt = window_dt(opt.k, wopt.nt);
  double kp = std::ldexp(1.0, kplus(opt.k));
  double best = 0.0, arg = centers.empty() ? 0.0 : centers.front();
  SpaceTimeBlock b;
  for (double c : centers) {
    double t_first = c - (wopt.nt / 2) * dt;
    sampler(t_first, dt, wopt.nt, b);
    for (int n = 0; n < wopt.nt; ++n) {
      double w = bump_eta0(kp * (t_first + n * dt - c));
      for (size_t m = 0; m < b.modes(); ++m) b.g[m * wopt.nt + n] *= w;
    }
    double v = norm_Xk(b, opt);
    if (v > best) {
      best = v;
      arg = c;
    }
  }
  if (argmax) *argmax = arg;
  return best;
}

void require_coverage(const Trajectory& traj, double T) {
  double tol = 1e-9 * std::max(1.0, T);
  if (traj.times.empty() || traj.times.front() > -T + tol || traj.times.back() < T - tol) {
    std::ostringstream os;
    os << "trajectory must cover [-T, T] = [" << -T << ", " << T << "] (window length " << 2 * T
       << "); got [" << (traj.times.empty() ? 0.0 : traj.times.front()) << ", "
       << (traj.times.empty() ? 0.0 : traj.times.back()) << "]";
    throw ResolutionError(os.str());
  }
}

BandSampler trajectory_band_sampler(const Trajectory& traj, int k, double T) {
  require_coverage(traj, T);
  const SpectralGrid& g = traj.snapshots.front().grid;
  std::vector<size_t> idx;
  std::vector<double> xi, mu, om;
  double inv = 1.0 / static_cast<double>(g.size());
  std::vector<size_t> snaps;
  double tol = 1e-9 * std::max(1.0, T);
  for (size_t s = 0; s < traj.times.size(); ++s)
    if (traj.times[s] >= -T - tol && traj.times[s] <= T + tol) snaps.push_back(s);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      double x = g.xi(i);
      if (x == 0.0 || g.nyquist(i, j) || !in_sharp_band(k, x)) continue;
      size_t id = static_cast<size_t>(j) * g.nx + i;
      bool nz = false;
      for (size_t s : snaps)
        if (traj.snapshots[s].data[id] != cplx(0.0)) {
          nz = true;
          break;
        }
      if (!nz) continue;
      idx.push_back(id);
      xi.push_back(x);
      mu.push_back(g.mu(j));
      om.push_back(dispersion_omega(x, g.mu(j)));
    }
  size_t M = idx.size(), S = snaps.size();
  auto ts = std::make_shared<std::vector<double>>(S);
  auto G = std::make_shared<std::vector<cplx>>(S * M);
  for (size_t s = 0; s < S; ++s) {
    double t = traj.times[snaps[s]];
    (*ts)[s] = t;
    const Field& f = traj.snapshots[snaps[s]];
    for (size_t m = 0; m < M; ++m)
      (*G)[s * M + m] = std::polar(inv, -t * om[m]) * f.data[idx[m]];
  }
  double area = g.lx * g.ly;
  int kp5 = kplus(k) + 5;
  return [=](double t_first, double dt, int nt, SpaceTimeBlock& out) {
    out.xi = xi;
    out.mu = mu;
    out.t0 = t_first;
    out.dt = dt;
    out.nt = nt;
    out.area = area;
    out.g.assign(M * static_cast<size_t>(nt), cplx(0.0));
    const auto& tv = *ts;
    const auto& GG = *G;
    for (int n = 0; n < nt; ++n) {
      double t = t_first + n * dt;
      if (t > tv.back() || t < tv.front()) {
        bool right = t > tv.back();
        double cut = bump_eta0(std::ldexp(t - (right ? tv.back() : tv.front()), kp5));
        if (cut == 0.0) continue;
        size_t s = right ? S - 1 : 0;
        for (size_t m = 0; m < M; ++m) out.g[m * nt + n] = cut * GG[s * M + m];
        continue;
      }
      size_t hi = std::upper_bound(tv.begin(), tv.end(), t) - tv.begin();
      if (hi >= S) hi = S - 1;
      if (hi == 0) hi = 1;
      size_t lo = hi - 1;
      size_t a = S >= 4 ? std::min(lo > 0 ? lo - 1 : 0, S - 4) : lo;
      size_t npts = S >= 4 ? 4 : 2;
      double w[4];
      for (size_t p = 0; p < npts; ++p) {
        double v = 1.0;
        for (size_t q = 0; q < npts; ++q)
          if (q != p) v *= (t - tv[a + q]) / (tv[a + p] - tv[a + q]);
        w[p] = v;
      }
      for (size_t m = 0; m < M; ++m) {
        cplx v = 0.0;
        for (size_t p = 0; p < npts; ++p) v += w[p] * GG[(a + p) * M + m];
        out.g[m * nt + n] = v;
      }
    }
  };
}

Trajectory map_trajectory(const Trajectory& traj, const std::function<Field(const Field&)>& f) {
  Trajectory out;
  out.sign = traj.sign;
  out.times = traj.times;
  for (const auto& s : traj.snapshots) out.snapshots.push_back(to_fourier(f(s)));
  return out;
}

double norm_Fk_T(const Trajectory& traj, int k, double T, bool barred, const WindowOptions& wopt) {
  XkOptions o;
  o.k = k;
  o.p_weight = !barred;
  return sup_windowed_Xk(trajectory_band_sampler(traj, k, T), window_centers(k, T), o, wopt);
}

double norm_Nk_T(const Trajectory& traj, int k, double T, bool barred, const WindowOptions& wopt) {
  XkOptions o;
  o.k = k;
  o.p_weight = !barred;
  o.inverse_modulation = true;
  return sup_windowed_Xk(trajectory_band_sampler(traj, k, T), window_centers(k, T), o, wopt);
}

std::vector<int> resolved_bands(const SpectralGrid& g) {
  std::vector<int> ks;
  for (int k = g.k_min(); k <= g.k_max(false); ++k) ks.push_back(k);
  return ks;
}

namespace {

size_t index_of_time(const Trajectory& traj, double t) {
  size_t best = 0;
  for (size_t s = 1; s < traj.times.size(); ++s)
    if (std::abs(traj.times[s] - t) < std::abs(traj.times[best] - t)) best = s;
  return best;
}

double b_norm(const Trajectory& traj, double T, bool barred, int sigma) {
  if (traj.snapshots.empty()) return 0.0;
  const Field& u0 = traj.snapshots[index_of_time(traj, 0.0)];
  Field low = project_low(u0, 0, BandKind::Sharp);
  double lo = barred ? norm_Ebar_sigma(low, 0) : norm_E_sigma(low, sigma);
  double s = lo * lo;
  const SpectralGrid& g = u0.grid;
  double tol = 1e-9 * std::max(1.0, T);
  for (int k = 1; k <= g.k_max(false); ++k) {
    double best = 0.0;
    for (size_t n = 0; n < traj.times.size(); ++n) {
      if (std::abs(traj.times[n]) > T + tol) continue;
      best = std::max(best, norm_Ek(traj.snapshots[n], k, barred));
    }
    s += std::ldexp(1.0, 2 * sigma * k) * best * best;
  }
  return std::sqrt(s);
}

template <class F>
double band_sum(const SpectralGrid& g, F&& per_band) {
  double s = 0.0;
  for (int k : resolved_bands(g)) s += per_band(k);
  return std::sqrt(s);
}

}  // namespace

double norm_B_sigma_T(const Trajectory& traj, int sigma, double T) {
  return b_norm(traj, T, false, sigma);
}

double norm_Bbar0_T(const Trajectory& traj, double T) { return b_norm(traj, T, true, 0); }

double norm_F_sigma_T(const Trajectory& traj, int sigma, double T, const WindowOptions& wopt) {
  require_coverage(traj, T);
  return band_sum(traj.snapshots.front().grid, [&](int k) {
    double v = norm_Fk_T(traj, k, T, false, wopt);
    return std::ldexp(1.0, 2 * sigma * kplus(k)) * v * v;
  });
}

double norm_N_sigma_T(const Trajectory& traj, int sigma, double T, const WindowOptions& wopt) {
  require_coverage(traj, T);
  return band_sum(traj.snapshots.front().grid, [&](int k) {
    double v = norm_Nk_T(traj, k, T, false, wopt);
    return std::ldexp(1.0, 2 * sigma * kplus(k)) * v * v;
  });
}

double norm_Fbar0_T(const Trajectory& traj, double T, const WindowOptions& wopt) {
  require_coverage(traj, T);
  return band_sum(traj.snapshots.front().grid, [&](int k) {
    double v = norm_Fk_T(traj, k, T, true, wopt);
    return (1.0 + std::pow(2.0, -1.25 * k)) * v * v;
  });
}

double norm_Nbar0_T(const Trajectory& traj, double T, const WindowOptions& wopt) {
  require_coverage(traj, T);
  return band_sum(traj.snapshots.front().grid, [&](int k) {
    double v = norm_Nk_T(traj, k, T, true, wopt);
    return (1.0 + std::pow(2.0, -1.25 * k)) * v * v;
  });
}

// ---------------------------------------------------------------------------
// L^4 and S_k

double norm_L4_spacetime(const std::vector<Field>& slices, double dt) {
  if (slices.empty()) return 0.0;
  double s = 0.0;
  for (size_t n = 0; n < slices.size(); ++n) {
    Field p = to_physical(slices[n]);
    double q = 0.0;
    for (const auto& c : p.data) {
      double a = std::norm(c);
      q += a * a;
    }
    double w = (slices.size() > 1 && (n == 0 || n + 1 == slices.size())) ? 0.5 : 1.0;
    s += w * q * p.grid.dx() * p.grid.dy();
  }
  return std::pow(s * dt, 0.25);
}

double norm_L4_spacetime(const Trajectory& traj) {
  if (traj.times.size() < 2) return 0.0;
  double dt = (traj.times.back() - traj.times.front()) / (traj.times.size() - 1);
  for (size_t n = 1; n < traj.times.size(); ++n)
    if (std::abs(traj.times[n] - traj.times[n - 1] - dt) > 1e-9 * std::max(dt, 1e-300))
      throw ResolutionError("L4 space-time norm requires uniformly spaced snapshots");
  return norm_L4_spacetime(traj.snapshots, dt);
}

double norm_Sk(const std::vector<double>& m, double dt, int k) {
  int n = static_cast<int>(m.size());
  if (n < 4) throw ResolutionError("S_k norm needs at least 4 samples");
  std::vector<cplx> hat(m.begin(), m.end());
  fft::transform({n}, -1, hat);
  double l1 = 0.0, tail = 0.0;
  for (int q = 0; q < n; ++q) {
    int qq = q <= n / 2 ? q : q - n;
    l1 += std::abs(hat[q]);
    if (4 * std::abs(qq) >= 3 * (n / 2)) tail += std::abs(hat[q]);
  }
  if (l1 > 0.0 && tail > 1e-8 * l1)
    throw ResolutionError("S_k norm: samples too coarse for ten spectral derivatives");
  // Roundoff-level coefficients would be amplified by up to (pi n / L)^10.
  for (auto& c : hat)
    if (std::abs(c) <= 64 * std::numeric_limits<double>::epsilon() * l1) c = 0.0;
  double total = 0.0;
  double L = n * dt;
  std::vector<cplx> d(n);
  for (int j = 0; j <= 10; ++j) {
    for (int q = 0; q < n; ++q) {
      int qq = q < n / 2 ? q : q - n;
      if (q == n / 2) qq = 0;
      cplx f = std::pow(cplx(0.0, 2.0 * kPi * qq / L), j);
      d[q] = (j == 0 ? cplx(1.0) : f) * hat[q];
    }
    fft::transform({n}, +1, d);
    double sup = 0.0;
    for (const auto& c : d) sup = std::max(sup, std::abs(c.real()) / n);
    total += std::ldexp(sup, -j * kplus(k));
  }
  return total;
}

// ---------------------------------------------------------------------------

std::string norm_key(const std::string& name, const std::string& param, double T) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, T);
  return name + "/" + param + "/" + std::string(buf, r.ptr);
}

}  // namespace kplab
