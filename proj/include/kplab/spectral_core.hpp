#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "kplab/fft.hpp"

namespace kplab {

using cplx = std::complex<double>;

constexpr int kKPI = -1;   // sign in front of d_x^{-1} d_y^2 in u_t + u_xxx + sign d_x^{-1}u_yy + ...
constexpr int kKPII = +1;

// ---------------------------------------------------------------------------
// Symbols

// w(xi, mu) = xi^3 + mu^2/xi. Throws std::domain_error at xi = 0.
double dispersion_omega(double xi, double mu);
// Dispersion of the linear flow for either sign: xi^3 - sign mu^2/xi.
double dispersion_signed(double xi, double mu, int sign);
// p(xi, mu) = 1 + |mu|/(|xi| + xi^2). Throws std::domain_error at xi = 0.
double weight_p(double xi, double mu);

// Resonance -w(xi1+xi2, mu1+mu2) + w(xi1,mu1) + w(xi2,mu2), from the dispersion symbol.
double resonance_Omega(double xi1, double mu1, double xi2, double mu2);
// Same quantity from the factored closed form.
double resonance_Omega_factored(double xi1, double mu1, double xi2, double mu2);

// |det| of the Jacobian of (xi1,xi2,nu) -> [xi1+xi2, xi1-xi2+nu xi1, xi1 xi2 nu(2+nu)].
double jacobian_det_closed(double xi1, double xi2, double nu);
// Same determinant from central differences with relative step h.
double jacobian_det_numeric(double xi1, double xi2, double nu, double h = 1e-5);

// ---------------------------------------------------------------------------
// Bumps and dyadic bands

double bump_eta0(double x);
// eta_k = eta0(x/2^k) - eta0(x/2^{k-1}) for k >= 1, eta0 for k = 0.
double bump_eta_k(int k, double x);
// chi_k = eta0(x/2^k) - eta0(x/2^{k-1}), any integer k.
double bump_chi_k(int k, double x);

// Sharp band I_k = {|xi| in [3/4 2^k, 3/2 2^k]}. Lattice points are assigned with the
// half-open convention [3/4 2^k, 3/2 2^k) so the bands partition R \ {0}.
bool in_sharp_band(int k, double xi);
bool in_wide_band(int k, double xi);
// The unique k with |xi| in [3/4 2^k, 3/2 2^k). Throws std::domain_error at xi = 0.
int band_of(double xi);

// ---------------------------------------------------------------------------
// Grid and fields

struct SpectralGrid {
  int nx = 16, ny = 16;
  double lx = 2.0 * 3.14159265358979323846, ly = 2.0 * 3.14159265358979323846;

  SpectralGrid() = default;
  SpectralGrid(int nx_, int ny_, double lx_, double ly_);  // validates

  size_t size() const { return static_cast<size_t>(nx) * static_cast<size_t>(ny); }
  double dx() const { return lx / nx; }
  double dy() const { return ly / ny; }
  double x(int i) const { return i * dx(); }
  double y(int j) const { return j * dy(); }
  // Signed wavenumber index of FFT slot i; the Nyquist slot maps to -n/2.
  int mx(int i) const { return i < nx / 2 ? i : i - nx; }
  int my(int j) const { return j < ny / 2 ? j : j - ny; }
  double xi(int i) const;
  double mu(int j) const;
  bool nyquist(int i, int j) const { return i == nx / 2 || j == ny / 2; }
  // 2/3-rule retained set: |m| < n/3 in both directions.
  bool dealias_keep(int i, int j) const;
  // Dyadic bands whose sharp set meets the resolved lattice (Nyquist excluded).
  int k_min() const;
  int k_max(bool dealiased = false) const;
  bool operator==(const SpectralGrid& o) const {
    return nx == o.nx && ny == o.ny && lx == o.lx && ly == o.ly;
  }
};

enum class Repr { Physical, Fourier };

// One real scalar field; both representations are held as complex arrays of size nx*ny,
// x fastest. In Fourier repr the coefficients are the unnormalized DFT sum u e^{-i(xi x+mu y)}.
struct Field {
  SpectralGrid grid;
  Repr repr = Repr::Physical;
  std::vector<cplx> data;

  Field() = default;
  Field(const SpectralGrid& g, Repr r) : grid(g), repr(r), data(g.size(), cplx(0.0, 0.0)) {}

  cplx& at(int i, int j) { return data[static_cast<size_t>(j) * grid.nx + i]; }
  const cplx& at(int i, int j) const { return data[static_cast<size_t>(j) * grid.nx + i]; }
  size_t size() const { return data.size(); }
};

Field transform_forward(const Field& u);
Field transform_inverse(const Field& u);
Field to_fourier(const Field& u);   // no-op if already Fourier
Field to_physical(const Field& u);  // no-op if already Physical

// Sample f(x, y) on the grid (Physical repr).
template <class F>
Field sample_field(const SpectralGrid& g, F&& f) {
  Field u(g, Repr::Physical);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) u.at(i, j) = cplx(f(g.x(i), g.y(j)), 0.0);
  return u;
}

// Zero the Nyquist row/column and the xi = 0 column, and symmetrize so the field is real.
void sanitize(Field& u_fourier);
void apply_dealias(Field& u_fourier);
// max |u(-z) - conj u(z)| / max |u| over the non-Nyquist lattice.
double hermitian_defect(const Field& u_fourier);
// max_mu |u(0, mu)| and the row index where it occurs.
double zero_mean_defect(const Field& u_fourier, int* worst_row = nullptr);
// Throws ConstraintError if max_mu |u(0,mu)| > tol * ||u||.
void require_zero_x_mean(const Field& u_fourier, double tol = 1e-10);

double l2_coeffs(const Field& u);   // sqrt(sum |data|^2)
double max_abs(const Field& u_physical);
double max_imag(const Field& u_physical);
// integral of u*v over the box (real parts), any repr (converted).
double integrate_product(const Field& u, const Field& v);

enum class BandKind { Sharp, Smooth };

Field project_band(const Field& u, int k, BandKind kind);
// Low part: sharp keeps |xi| < 3/2 2^l (i.e. sum of P_k for k <= l), smooth multiplies eta0(xi/2^l).
Field project_low(const Field& u, int l, BandKind kind);
// Complement of project_low.
Field project_high(const Field& u, int l, BandKind kind);

Field x_derivative(const Field& u);
Field y_derivative(const Field& u);
// Multiplier 1/(i xi); requires zero x-mean.
Field x_antiderivative(const Field& u);
// Multiplier e^{i t w_sign(xi,mu)}; xi = 0 modes are kept at zero.
Field free_propagator(const Field& u, double t, int sign = kKPI);
// x -> -x reflection.
Field reflect_x(const Field& u);

Field operator+(const Field& a, const Field& b);
Field operator-(const Field& a, const Field& b);
Field operator*(double s, const Field& a);

}  // namespace kplab
