#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "kplab/errors.hpp"
#include "kplab/spectral_core.hpp"

using namespace kplab;

namespace {

constexpr double kPi = 3.14159265358979323846;

Field random_field(const SpectralGrid& g, unsigned seed, double amp = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  Field f(g, Repr::Fourier);
  for (auto& c : f.data) c = amp * cplx(nd(rng), nd(rng));
  sanitize(f);
  apply_dealias(f);
  return f;
}

double rel_diff(const Field& a, const Field& b) {
  Field d = to_fourier(a) - to_fourier(b);
  double n = l2_coeffs(to_fourier(b));
  return l2_coeffs(d) / (n > 0 ? n : 1.0);
}

}  // namespace

TEST(Symbols, DispersionValues) {
  EXPECT_DOUBLE_EQ(dispersion_omega(1, 0), 1.0);
  EXPECT_DOUBLE_EQ(dispersion_omega(2, 4), 16.0);
  EXPECT_DOUBLE_EQ(dispersion_omega(-1, 1), -2.0);
  EXPECT_THROW(dispersion_omega(0.0, 1.0), std::domain_error);
}

TEST(Symbols, WeightValues) {
  EXPECT_DOUBLE_EQ(weight_p(3.0, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(weight_p(1, 2), 2.0);
  EXPECT_DOUBLE_EQ(weight_p(0.5, 0.75), 2.0);
  EXPECT_THROW(weight_p(0.0, 1.0), std::domain_error);
}

TEST(Symbols, KPIISignFlipsTransverseTerm) {
  EXPECT_DOUBLE_EQ(dispersion_signed(2, 4, kKPI), 16.0);
  EXPECT_DOUBLE_EQ(dispersion_signed(2, 4, kKPII), 0.0);
}

TEST(Resonance, ClosedFormsAgree) {
  EXPECT_NEAR(resonance_Omega(1, 0, 1, 0), -6.0, 1e-14);
  EXPECT_NEAR(resonance_Omega(1, 1, 1, 1), -6.0, 1e-14);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-10, 10);
  for (int n = 0; n < 20000; ++n) {
    double a = u(rng), b = u(rng), c = u(rng), d = u(rng);
    if (std::abs(a) < 1e-3 || std::abs(c) < 1e-3 || std::abs(a + c) < 1e-3) continue;
    double x = resonance_Omega(a, b, c, d), y = resonance_Omega_factored(a, b, c, d);
    EXPECT_LE(std::abs(x - y), 1e-10 * std::max(1.0, std::abs(x)));
  }
  EXPECT_THROW(resonance_Omega(1, 0, -1, 0), std::domain_error);
}

TEST(Resonance, JacobianMatchesFiniteDifferences) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.75, 1.5), nu(-1.0 / 1024, 1.0 / 1024);
  for (int n = 0; n < 500; ++n) {
    double x1 = std::ldexp(u(rng), n % 5), x2 = std::ldexp(u(rng), (n / 5) % 5), v = nu(rng);
    double a = jacobian_det_closed(x1, x2, v), b = jacobian_det_numeric(x1, x2, v);
    EXPECT_LE(std::abs(a - b), 1e-8 * std::abs(a));
  }
}

TEST(Bumps, PlateauSupportTelescoping) {
  EXPECT_DOUBLE_EQ(bump_eta0(0.0), 1.0);
  EXPECT_DOUBLE_EQ(bump_eta0(1.25), 1.0);
  EXPECT_DOUBLE_EQ(bump_eta0(2.0), 0.0);
  EXPECT_DOUBLE_EQ(bump_eta0(1.6), 0.0);
  for (double x = -3; x <= 3; x += 0.01) {
    EXPECT_DOUBLE_EQ(bump_eta0(x), bump_eta0(-x));
    EXPECT_GE(bump_eta0(x), 0.0);
    EXPECT_LE(bump_eta0(x), 1.0);
  }
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-2000, 2000);
  for (int n = 0; n < 2000; ++n) {
    double x = u(rng), s = bump_eta0(x);
    for (int k = 1; k <= 10; ++k) s += bump_eta_k(k, x);
    EXPECT_NEAR(s, bump_eta0(x / 1024.0), 1e-12);
  }
}

TEST(Bands, SharpBandsPartitionAndSitInWide) {
  for (double x = 0.01; x < 300; x *= 1.013) {
    int k = band_of(x);
    EXPECT_TRUE(in_sharp_band(k, x));
    EXPECT_TRUE(in_sharp_band(k, -x));
    EXPECT_TRUE(in_wide_band(k, x));
    EXPECT_FALSE(in_sharp_band(k + 1, x));
    EXPECT_FALSE(in_sharp_band(k - 1, x));
  }
  EXPECT_EQ(band_of(1.0), 0);
}

TEST(Grid, RejectsBadSizes) {
  EXPECT_THROW(SpectralGrid(24, 32, 1, 1), ConfigError);
  EXPECT_THROW(SpectralGrid(8, 32, 1, 1), ConfigError);
  EXPECT_THROW(SpectralGrid(32, 32, 0, 1), ConfigError);
  EXPECT_NO_THROW(SpectralGrid(16, 64, 1, 2));
}

TEST(Transforms, CosineModeAndRoundTrip) {
  SpectralGrid g(32, 16, 2 * kPi, 2 * kPi);
  Field u = sample_field(g, [](double x, double) { return std::cos(x); });
  Field f = transform_forward(u);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      double expect = (j == 0 && (g.mx(i) == 1 || g.mx(i) == -1)) ? g.nx * g.ny / 2.0 : 0.0;
      EXPECT_NEAR(std::abs(f.at(i, j)), expect, 1e-9);
    }
  Field z(g, Repr::Physical);
  EXPECT_EQ(l2_coeffs(transform_forward(z)), 0.0);
  Field r = random_field(g, 5);
  Field back = transform_forward(transform_inverse(r));
  EXPECT_LE(rel_diff(back, r), 1e-12);
}

TEST(Transforms, Parseval) {
  SpectralGrid g(32, 32, 3.0, 5.0);
  Field r = random_field(g, 9);
  Field p = transform_inverse(r);
  double phys = 0.0, four = 0.0;
  for (const auto& c : p.data) phys += std::norm(c);
  for (const auto& c : r.data) four += std::norm(c);
  EXPECT_NEAR(phys, four / g.size(), 1e-12 * phys);
  EXPECT_LE(max_imag(p), 1e-12 * max_abs(p));
  EXPECT_LE(hermitian_defect(r), 1e-14);
}

TEST(Projectors, SingleModeAndPartition) {
  SpectralGrid g(32, 32, 2 * kPi, 2 * kPi);
  Field u = to_fourier(sample_field(g, [](double x, double y) { return std::cos(x + y); }));
  EXPECT_LE(rel_diff(project_band(u, 0, BandKind::Sharp), u), 1e-14);
  for (int k = -2; k <= 4; ++k)
    if (k != 0) {
      EXPECT_LE(l2_coeffs(project_band(u, k, BandKind::Sharp)), 1e-14 * l2_coeffs(u));
    }
  Field r = random_field(g, 11);
  for (int l = -1; l <= 3; ++l) {
    Field s = project_low(r, l, BandKind::Sharp) + project_high(r, l, BandKind::Sharp);
    EXPECT_LE(rel_diff(s, r), 1e-14);
  }
  Field sum(g, Repr::Fourier);
  for (int k = g.k_min(); k <= g.k_max(); ++k) sum = sum + project_band(r, k, BandKind::Sharp);
  EXPECT_LE(rel_diff(sum, r), 1e-14);
}

TEST(Projectors, SmoothBoundsAndIdempotence) {
  SpectralGrid g(64, 32, 8 * kPi, 2 * kPi);
  for (unsigned s = 0; s < 100; ++s) {
    Field r = random_field(g, 100 + s);
    double n = l2_coeffs(r);
    for (int k = g.k_min(); k <= g.k_max(); ++k) {
      EXPECT_LE(l2_coeffs(project_band(r, k, BandKind::Smooth)), n * (1 + 1e-14));
      if (s == 0) {
        Field p = project_band(r, k, BandKind::Sharp);
        EXPECT_EQ(rel_diff(project_band(p, k, BandKind::Sharp), p) == 0.0 || l2_coeffs(p) == 0.0,
                  true);
        Field q = project_band(project_band(r, k, BandKind::Smooth), k + 2, BandKind::Smooth);
        EXPECT_EQ(l2_coeffs(q), 0.0);
      }
    }
  }
  Field r = random_field(g, 1);
  Field s = project_low(r, 2, BandKind::Smooth) + project_high(r, 2, BandKind::Smooth);
  EXPECT_LE(rel_diff(s, r), 1e-14);
}

TEST(Operators, Antiderivative) {
  SpectralGrid g(32, 16, 2 * kPi, 2 * kPi);
  Field s = sample_field(g, [](double x, double) { return std::sin(x); });
  Field c = sample_field(g, [](double x, double) { return std::cos(x); });
  EXPECT_LE(rel_diff(x_antiderivative(s), (-1.0) * c), 1e-13);
  EXPECT_LE(rel_diff(x_antiderivative(c), s), 1e-13);
  Field one = sample_field(g, [](double, double y) { return 1.0 + std::cos(y); });
  try {
    x_antiderivative(one);
    FAIL() << "expected constraint error";
  } catch (const ConstraintError& e) {
    EXPECT_NE(std::string(e.what()).find("mu"), std::string::npos);
  }
  Field r = random_field(g, 3);
  EXPECT_LE(rel_diff(x_derivative(x_antiderivative(r)), r), 1e-12);
}

TEST(Operators, FreePropagator) {
  SpectralGrid g(32, 16, 2 * kPi, 2 * kPi);
  double t = 0.37;
  Field c = sample_field(g, [](double x, double) { return std::cos(x); });
  Field ct = sample_field(g, [t](double x, double) { return std::cos(x + t); });
  EXPECT_LE(rel_diff(free_propagator(c, t), ct), 1e-13);
  Field r = random_field(g, 4);
  EXPECT_LE(rel_diff(free_propagator(r, 0.0), r), 1e-15);
  for (double tt : {0.1, 1.0, 10.0})
    EXPECT_NEAR(l2_coeffs(free_propagator(r, tt)), l2_coeffs(r), 1e-12 * l2_coeffs(r));
}

TEST(Operators, FreePropagatorSolvesLinearEquation) {
  SpectralGrid g(32, 32, 4 * kPi, 4 * kPi);
  Field r = project_band(random_field(g, 8), 0, BandKind::Sharp);
  double t = 0.3, wmax = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      if (std::abs(r.at(i, j)) > 0.0) wmax = std::max(wmax, std::abs(dispersion_omega(g.xi(i), g.mu(j))));
  std::vector<double> res_h;
  for (double h : {1e-3, 5e-4}) {
    Field ut = (0.5 / h) * (free_propagator(r, t + h) - free_propagator(r, t - h));
    Field u = free_propagator(r, t);
    Field lin = x_derivative(x_derivative(x_derivative(u))) -
                x_antiderivative(y_derivative(y_derivative(u)));
    Field res = ut + lin;
    double scale = l2_coeffs(to_fourier(ut));
    res_h.push_back(l2_coeffs(res) / scale);
    EXPECT_LE(res_h.back(), wmax * wmax * h * h / 6.0 + 1e-10);
  }
  EXPECT_NEAR(res_h[0] / res_h[1], 4.0, 0.2);
}

TEST(Operators, KPIIPropagatorPhase) {
  SpectralGrid g(32, 32, 2 * kPi, 2 * kPi);
  double t = 0.21;
  Field c = sample_field(g, [](double x, double y) { return std::cos(x + 2 * y); });
  double w2 = dispersion_signed(1.0, 2.0, kKPII);
  Field ct = sample_field(g, [t, w2](double x, double y) { return std::cos(x + 2 * y + w2 * t); });
  EXPECT_LE(rel_diff(free_propagator(c, t, kKPII), ct), 1e-13);
}

TEST(Operators, ReflectionIsInvolution) {
  SpectralGrid g(32, 16, 2 * kPi, 2 * kPi);
  Field s = sample_field(g, [](double x, double y) { return std::sin(x) * std::cos(y); });
  EXPECT_LE(rel_diff(reflect_x(s), (-1.0) * s), 1e-14);
  Field r = random_field(g, 2);
  EXPECT_LE(rel_diff(reflect_x(reflect_x(r)), r), 1e-15);
}
