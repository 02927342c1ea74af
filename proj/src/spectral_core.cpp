#include "kplab/spectral_core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "kplab/errors.hpp"

namespace kplab {

namespace {
constexpr double kPi = 3.14159265358979323846;

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

double psi(double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; }

double transition(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  double a = psi(s), b = psi(1.0 - s);
  return a / (a + b);
}
}  // namespace

// ---------------------------------------------------------------------------
// Symbols

double dispersion_omega(double xi, double mu) {
  if (xi == 0.0) throw std::domain_error("dispersion_omega: xi = 0 is outside the domain");
  return xi * xi * xi + mu * mu / xi;
}

double dispersion_signed(double xi, double mu, int sign) {
  if (xi == 0.0) throw std::domain_error("dispersion_signed: xi = 0 is outside the domain");
  return xi * xi * xi - sign * mu * mu / xi;
}

double weight_p(double xi, double mu) {
  if (xi == 0.0) throw std::domain_error("weight_p: xi = 0 is outside the domain");
  double a = std::abs(xi);
  return 1.0 + std::abs(mu) / (a + a * a);
}

double resonance_Omega(double xi1, double mu1, double xi2, double mu2) {
  if (xi1 == 0.0 || xi2 == 0.0 || xi1 + xi2 == 0.0)
    throw std::domain_error("resonance_Omega: xi1, xi2 and xi1+xi2 must be nonzero");
  return -dispersion_omega(xi1 + xi2, mu1 + mu2) + dispersion_omega(xi1, mu1) +
         dispersion_omega(xi2, mu2);
}

double resonance_Omega_factored(double xi1, double mu1, double xi2, double mu2) {
  if (xi1 == 0.0 || xi2 == 0.0 || xi1 + xi2 == 0.0)
    throw std::domain_error("resonance_Omega_factored: xi1, xi2 and xi1+xi2 must be nonzero");
  double s = xi1 + xi2;
  double d = mu1 / xi1 - mu2 / xi2;
  return (-xi1 * xi2 / s) * (3.0 * s * s - d * d);
}

double jacobian_det_closed(double xi1, double xi2, double nu) {
  return (2.0 + nu) * std::abs(xi1) * std::abs(xi2 * (2.0 + nu) + xi1 * nu);
}

double jacobian_det_numeric(double xi1, double xi2, double nu, double h) {
  auto map = [](const double v[3], double out[3]) {
    out[0] = v[0] + v[1];
    out[1] = v[0] - v[1] + v[2] * v[0];
    out[2] = v[0] * v[1] * v[2] * (2.0 + v[2]);
  };
  double v[3] = {xi1, xi2, nu};
  double J[3][3];
  for (int c = 0; c < 3; ++c) {
    double step = h * std::max(std::abs(v[c]), 1e-300);
    double vp[3] = {v[0], v[1], v[2]}, vm[3] = {v[0], v[1], v[2]};
    vp[c] += step;
    vm[c] -= step;
    double fp[3], fm[3];
    map(vp, fp);
    map(vm, fm);
    for (int r = 0; r < 3; ++r) J[r][c] = (fp[r] - fm[r]) / (vp[c] - vm[c]);
  }
  double det = J[0][0] * (J[1][1] * J[2][2] - J[1][2] * J[2][1]) -
               J[0][1] * (J[1][0] * J[2][2] - J[1][2] * J[2][0]) +
               J[0][2] * (J[1][0] * J[2][1] - J[1][1] * J[2][0]);
  return std::abs(det);
}

// ---------------------------------------------------------------------------
// Bumps and bands

double bump_eta0(double x) {
  return 1.0 - transition((std::abs(x) - 1.25) / (1.6 - 1.25));
}

double bump_chi_k(int k, double x) {
  return bump_eta0(std::ldexp(x, -k)) - bump_eta0(std::ldexp(x, -(k - 1)));
}

double bump_eta_k(int k, double x) {
  if (k < 0) throw std::domain_error("bump_eta_k: k must be >= 0");
  return k == 0 ? bump_eta0(x) : bump_chi_k(k, x);
}

bool in_sharp_band(int k, double xi) {
  double a = std::abs(xi);
  return a >= std::ldexp(0.75, k) && a < std::ldexp(1.5, k);
}

bool in_wide_band(int k, double xi) {
  double a = std::abs(xi);
  return a >= std::ldexp(1.0, k - 1) && a <= std::ldexp(1.0, k + 1);
}

int band_of(double xi) {
  if (xi == 0.0) throw std::domain_error("band_of: xi = 0 has no dyadic band");
  double a = std::abs(xi);
  int k = static_cast<int>(std::floor(std::log2(a / 0.75)));
  while (a < std::ldexp(0.75, k)) --k;
  while (a >= std::ldexp(1.5, k)) ++k;
  return k;
}

// ---------------------------------------------------------------------------
// Grid

SpectralGrid::SpectralGrid(int nx_, int ny_, double lx_, double ly_)
    : nx(nx_), ny(ny_), lx(lx_), ly(ly_) {
  if (!is_pow2(nx) || nx < 16 || !is_pow2(ny) || ny < 16)
    throw ConfigError("grid: Nx and Ny must be powers of two >= 16");
  if (!(lx > 0.0) || !(ly > 0.0)) throw ConfigError("grid: Lx and Ly must be positive");
}

double SpectralGrid::xi(int i) const { return 2.0 * kPi * mx(i) / lx; }
double SpectralGrid::mu(int j) const { return 2.0 * kPi * my(j) / ly; }

bool SpectralGrid::dealias_keep(int i, int j) const {
  return 3 * std::abs(mx(i)) < nx && 3 * std::abs(my(j)) < ny;
}

int SpectralGrid::k_min() const { return band_of(2.0 * kPi / lx); }

int SpectralGrid::k_max(bool dealiased) const {
  int m = nx / 2 - 1;
  if (dealiased) {
    m = 0;
    while (3 * (m + 1) < nx) ++m;
  }
  return band_of(2.0 * kPi * m / lx);
}

// ---------------------------------------------------------------------------
// Transforms

Field transform_forward(const Field& u) {
  if (u.repr != Repr::Physical) throw std::invalid_argument("transform_forward: expects Physical");
  Field out(u.grid, Repr::Fourier);
  fft::transform({u.grid.ny, u.grid.nx}, -1, u.data.data(), out.data.data());
  return out;
}

Field transform_inverse(const Field& u) {
  if (u.repr != Repr::Fourier) throw std::invalid_argument("transform_inverse: expects Fourier");
  Field out(u.grid, Repr::Physical);
  fft::transform({u.grid.ny, u.grid.nx}, +1, u.data.data(), out.data.data());
  double s = 1.0 / static_cast<double>(u.grid.size());
  for (auto& c : out.data) c *= s;
  return out;
}

Field to_fourier(const Field& u) { return u.repr == Repr::Fourier ? u : transform_forward(u); }
Field to_physical(const Field& u) { return u.repr == Repr::Physical ? u : transform_inverse(u); }

void sanitize(Field& u) {
  const auto& g = u.grid;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      if (g.nyquist(i, j) || g.mx(i) == 0) u.at(i, j) = 0.0;
  for (int j = 0; j < g.ny; ++j) {
    int jm = (g.ny - j) % g.ny;
    for (int i = 0; i < g.nx; ++i) {
      int im = (g.nx - i) % g.nx;
      size_t a = static_cast<size_t>(j) * g.nx + i, b = static_cast<size_t>(jm) * g.nx + im;
      if (b < a) continue;
      cplx avg = 0.5 * (u.data[a] + std::conj(u.data[b]));
      u.data[a] = avg;
      u.data[b] = std::conj(avg);
    }
  }
}

void apply_dealias(Field& u) {
  const auto& g = u.grid;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      if (!g.dealias_keep(i, j)) u.at(i, j) = 0.0;
}

double hermitian_defect(const Field& u) {
  const auto& g = u.grid;
  double worst = 0.0, scale = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      scale = std::max(scale, std::abs(u.at(i, j)));
      if (g.nyquist(i, j)) continue;
      int im = (g.nx - i) % g.nx, jm = (g.ny - j) % g.ny;
      worst = std::max(worst, std::abs(u.at(im, jm) - std::conj(u.at(i, j))));
    }
  return scale > 0.0 ? worst / scale : 0.0;
}

double zero_mean_defect(const Field& u, int* worst_row) {
  Field f = to_fourier(u);
  double worst = 0.0;
  int row = 0;
  for (int j = 0; j < f.grid.ny; ++j) {
    double a = std::abs(f.at(0, j));
    if (a > worst) {
      worst = a;
      row = j;
    }
  }
  if (worst_row) *worst_row = row;
  return worst;
}

double l2_coeffs(const Field& u) {
  double s = 0.0;
  for (const auto& c : u.data) s += std::norm(c);
  return std::sqrt(s);
}

void require_zero_x_mean(const Field& u, double tol) {
  Field f = to_fourier(u);
  int row = 0;
  double d = zero_mean_defect(f, &row);
  double n = l2_coeffs(f);
  if (d > tol * n && d > 0.0) {
    std::ostringstream os;
    os << "zero x-mean constraint violated: |u(xi=0, mu=" << f.grid.mu(row) << ")| = " << d
       << " exceeds " << tol << " * ||u||";
    throw ConstraintError(os.str());
  }
}

double max_abs(const Field& u) {
  Field p = to_physical(u);
  double m = 0.0;
  for (const auto& c : p.data) m = std::max(m, std::abs(c.real()));
  return m;
}

double max_imag(const Field& u) {
  double m = 0.0;
  for (const auto& c : u.data) m = std::max(m, std::abs(c.imag()));
  return m;
}

double integrate_product(const Field& u, const Field& v) {
  Field a = to_physical(u), b = to_physical(v);
  double s = 0.0;
  for (size_t n = 0; n < a.size(); ++n) s += a.data[n].real() * b.data[n].real();
  return s * a.grid.dx() * a.grid.dy();
}

// ---------------------------------------------------------------------------
// Multipliers

namespace {
template <class M>
Field apply_multiplier(const Field& u, M&& m) {
  Field f = to_fourier(u);
  const auto& g = f.grid;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) f.at(i, j) *= m(i, j, g.xi(i), g.mu(j));
  return f;
}
}  // namespace

Field project_band(const Field& u, int k, BandKind kind) {
  return apply_multiplier(u, [&](int, int, double xi, double) -> cplx {
    if (xi == 0.0) return 0.0;
    return kind == BandKind::Sharp ? (in_sharp_band(k, xi) ? 1.0 : 0.0) : bump_chi_k(k, xi);
  });
}

Field project_low(const Field& u, int l, BandKind kind) {
  return apply_multiplier(u, [&](int, int, double xi, double) -> cplx {
    if (kind == BandKind::Sharp) return std::abs(xi) < std::ldexp(1.5, l) ? 1.0 : 0.0;
    return bump_eta0(std::ldexp(xi, -l));
  });
}

Field project_high(const Field& u, int l, BandKind kind) {
  Field lo = project_low(u, l, kind);
  Field f = to_fourier(u);
  for (size_t n = 0; n < f.size(); ++n) f.data[n] -= lo.data[n];
  return f;
}

Field x_derivative(const Field& u) {
  return apply_multiplier(u, [&](int i, int j, double xi, double) -> cplx {
    return u.grid.nyquist(i, j) ? cplx(0.0) : cplx(0.0, xi);
  });
}

Field y_derivative(const Field& u) {
  return apply_multiplier(u, [&](int i, int j, double, double mu) -> cplx {
    return u.grid.nyquist(i, j) ? cplx(0.0) : cplx(0.0, mu);
  });
}

Field x_antiderivative(const Field& u) {
  Field f = to_fourier(u);
  require_zero_x_mean(f);
  return apply_multiplier(f, [&](int i, int j, double xi, double) -> cplx {
    if (xi == 0.0 || f.grid.nyquist(i, j)) return 0.0;
    return cplx(0.0, -1.0 / xi);
  });
}

Field free_propagator(const Field& u, double t, int sign) {
  return apply_multiplier(u, [&](int i, int j, double xi, double mu) -> cplx {
    if (xi == 0.0 || u.grid.nyquist(i, j)) return 0.0;
    return std::polar(1.0, t * dispersion_signed(xi, mu, sign));
  });
}

Field reflect_x(const Field& u) {
  Field out(u.grid, u.repr);
  const auto& g = u.grid;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) out.at(i, j) = u.at((g.nx - i) % g.nx, j);
  return out;
}

Field operator+(const Field& a, const Field& b) {
  if (a.repr == b.repr) {
    Field out = a;
    for (size_t n = 0; n < out.size(); ++n) out.data[n] += b.data[n];
    return out;
  }
  Field out = to_fourier(a);
  Field fb = to_fourier(b);
  for (size_t n = 0; n < out.size(); ++n) out.data[n] += fb.data[n];
  return out;
}

Field operator-(const Field& a, const Field& b) { return a + (-1.0) * b; }

Field operator*(double s, const Field& a) {
  Field out = a;
  for (auto& c : out.data) c *= s;
  return out;
}

}  // namespace kplab
