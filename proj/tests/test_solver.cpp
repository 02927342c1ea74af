#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "kplab/errors.hpp"
#include "kplab/norms.hpp"
#include "kplab/solver.hpp"

using namespace kplab;

namespace {

constexpr double kPi = 3.14159265358979323846;

Field random_field(const SpectralGrid& g, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  Field f(g, Repr::Fourier);
  for (auto& c : f.data) c = cplx(nd(rng), nd(rng));
  sanitize(f);
  apply_dealias(f);
  return f;
}

double rel_diff(const Field& a, const Field& b) {
  Field d = to_fourier(a) - to_fourier(b);
  double n = l2_coeffs(to_fourier(b));
  return l2_coeffs(d) / (n > 0 ? n : 1.0);
}

// u^2/2 convolution evaluated directly on the lattice, then -i xi.
Field direct_nonlinearity(const Field& u) {
  const auto& g = u.grid;
  Field f = to_fourier(u);
  apply_dealias(f);
  Field out(g, Repr::Fourier);
  double inv = 1.0 / static_cast<double>(g.size());
  for (int j1 = 0; j1 < g.ny; ++j1)
    for (int i1 = 0; i1 < g.nx; ++i1) {
      cplx a = f.at(i1, j1);
      if (a == 0.0) continue;
      for (int j2 = 0; j2 < g.ny; ++j2)
        for (int i2 = 0; i2 < g.nx; ++i2) {
          cplx b = f.at(i2, j2);
          if (b == 0.0) continue;
          int m = g.mx(i1) + g.mx(i2), n = g.my(j1) + g.my(j2);
          if (3 * std::abs(m) >= g.nx || 3 * std::abs(n) >= g.ny) continue;
          out.at((m + g.nx) % g.nx, (n + g.ny) % g.ny) += 0.5 * a * b * inv;
        }
    }
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) out.at(i, j) *= cplx(0.0, -g.xi(i));
  return out;
}

}  // namespace

TEST(Nonlinearity, ZeroAndCosine) {
  SpectralGrid g(32, 16, 2 * kPi, 2 * kPi);
  Field z(g, Repr::Fourier);
  EXPECT_EQ(l2_coeffs(nonlinearity(z)), 0.0);
  Field c = sample_field(g, [](double x, double) { return std::cos(x); });
  Field e = sample_field(g, [](double x, double) { return 0.5 * std::sin(2 * x); });
  EXPECT_LE(rel_diff(nonlinearity(c), e), 1e-13);
}

TEST(Nonlinearity, MatchesDirectConvolution) {
  SpectralGrid g(32, 32, 2 * kPi, 3 * kPi);
  for (unsigned s = 0; s < 3; ++s) {
    Field r = random_field(g, 20 + s);
    Field a = nonlinearity(r), b = direct_nonlinearity(r);
    EXPECT_LE(l2_coeffs(a - b), 1e-10 * l2_coeffs(b));
    EXPECT_LE(zero_mean_defect(a), 1e-12 * l2_coeffs(a));
  }
}

TEST(Step, LinearStepIsExact) {
  SpectralGrid g(32, 32, 2 * kPi, 2 * kPi);
  SolverConfig cfg;
  cfg.grid = g;
  cfg.dt = 0.01;
  cfg.nonlinear = false;
  Field z(g, Repr::Fourier);
  EXPECT_EQ(l2_coeffs(step(z, 0.0, cfg)), 0.0);
  Field c = sample_field(g, [](double x, double y) { return std::cos(x + 3 * y); });
  EXPECT_LE(rel_diff(step(c, 0.0, cfg), free_propagator(c, cfg.dt)), 1e-12);
}

TEST(Solve, ZeroDatum) {
  SolverConfig cfg;
  cfg.grid = SpectralGrid(32, 32, 2 * kPi, 2 * kPi);
  cfg.dt = 0.01;
  cfg.T = 0.1;
  Trajectory tr = solve(cfg, Field(cfg.grid, Repr::Fourier));
  for (const auto& s : tr.snapshots) EXPECT_EQ(l2_coeffs(s), 0.0);
  EXPECT_EQ(tr.times.size(), 2u);
}

TEST(Solve, ConfigValidation) {
  SolverConfig cfg;
  cfg.grid = SpectralGrid(16, 16, 2 * kPi, 2 * kPi);
  Field z(cfg.grid, Repr::Fourier);
  cfg.dt = -1;
  EXPECT_THROW(solve(cfg, z), ConfigError);
  cfg.dt = 2;
  cfg.T = 1;
  EXPECT_THROW(solve(cfg, z), ConfigError);
  cfg.dt = 0.3;
  EXPECT_THROW(solve(cfg, z), ConfigError);
  cfg.dt = 0.25;
  Field one = sample_field(cfg.grid, [](double, double y) { return std::cos(y); });
  EXPECT_THROW(solve(cfg, one), ConstraintError);
}

TEST(Solve, LinearForcedMatchesDuhamel) {
  SpectralGrid g(32, 32, 2 * kPi, 2 * kPi);
  SolverConfig cfg;
  cfg.grid = g;
  cfg.dt = 0.01;
  cfg.T = 1.0;
  Field phi = project_band(random_field(g, 2), 1, BandKind::Sharp);
  Trajectory a = solve_linear_forced(cfg, phi, [g](double) { return Field(g, Repr::Fourier); });
  EXPECT_LE(rel_diff(a.snapshots.back(), free_propagator(phi, 1.0)), 1e-10);
  Field psi = project_band(random_field(g, 3), 0, BandKind::Sharp);
  cfg.dt = 1e-3;
  Trajectory b = solve_linear_forced(cfg, Field(g, Repr::Fourier),
                                     [psi](double t) { return free_propagator(psi, t); });
  EXPECT_LE(rel_diff(b.snapshots.back(), free_propagator(psi, 1.0)), 1e-6);
}

TEST(Solve, ForcingMustKeepZeroMean) {
  SpectralGrid g(16, 16, 2 * kPi, 2 * kPi);
  SolverConfig cfg;
  cfg.grid = g;
  cfg.dt = 0.1;
  cfg.T = 0.2;
  TimeField bad = [g](double) { return sample_field(g, [](double, double y) { return std::sin(y); }); };
  EXPECT_THROW(solve_linear_forced(cfg, Field(g, Repr::Fourier), bad), ConstraintError);
}

TEST(Solve, ConservationAndReality) {
  SpectralGrid g(64, 64, 8 * kPi, 8 * kPi);
  Field phi = to_physical(sample_field(g, [](double x, double y) {
    return 0.05 * std::cos(x / 2) * std::exp(-0.02 * (y - 12) * (y - 12)) +
           0.03 * std::sin(x / 4 + y / 4);
  }));
  Field f = to_fourier(phi);
  sanitize(f);
  SolverConfig cfg;
  cfg.grid = g;
  cfg.dt = 1e-3;
  cfg.T = 0.2;
  cfg.snapshot_stride = 50;
  cfg.guard = 0.0;
  double worst_imag = 0.0;
  cfg.observer = [&](double, const Field& u) {
    Field p = to_physical(u);
    worst_imag = std::max(worst_imag, max_imag(p) / std::max(max_abs(p), 1e-300));
  };
  Trajectory tr = solve(cfg, f);
  double e0 = tr.monitors.front().E0, e1 = tr.monitors.front().E1;
  for (const auto& m : tr.monitors) {
    EXPECT_LE(std::abs(m.E0 - e0), 1e-9 * std::abs(e0));
    EXPECT_LE(std::abs(m.E1 - e1), 1e-7 * std::abs(e1));
  }
  EXPECT_LE(worst_imag, 1e-12);
}

TEST(Solve, SymmetricRunMirrorsTime) {
  SpectralGrid g(32, 32, 4 * kPi, 4 * kPi);
  Field phi = 0.05 * random_field(g, 6);
  phi = (1.0 / l2_coeffs(phi)) * phi;
  SolverConfig cfg;
  cfg.grid = g;
  cfg.dt = 0.01;
  cfg.T = 0.2;
  cfg.snapshot_stride = 5;
  cfg.guard = 0.0;
  Trajectory tr = solve_symmetric(cfg, phi);
  EXPECT_DOUBLE_EQ(tr.times.front(), -0.2);
  EXPECT_DOUBLE_EQ(tr.times.back(), 0.2);
  for (size_t n = 1; n < tr.times.size(); ++n) EXPECT_GT(tr.times[n], tr.times[n - 1]);
  // A short forward solve from u(-T) lands back on phi.
  SolverConfig c2 = cfg;
  Trajectory back = solve(c2, tr.snapshots.front());
  EXPECT_LE(rel_diff(back.snapshots.back(), tr.snapshots[tr.snapshots.size() / 2]), 1e-8);
}

TEST(Solve, ManufacturedSolution) {
  SpectralGrid g(32, 32, 2 * kPi, 2 * kPi);
  ManufacturedSolution ms;
  ms.u = [](double x, double, double t) { return 0.1 * std::cos(x + t); };
  ms.u_t = [](double x, double, double t) { return -0.1 * std::sin(x + t); };
  SolverConfig cfg;
  cfg.grid = g;
  cfg.dt = 0.01;
  cfg.T = 0.5;
  cfg.forcing = manufactured_forcing(ms, cfg);
  Trajectory tr = solve(cfg, sample_at(g, ms.u, 0.0));
  EXPECT_LE(rel_diff(tr.snapshots.back(), sample_at(g, ms.u, 0.5)), 1e-8);
  ManufacturedSolution zero{[](double, double, double) { return 0.0; },
                            [](double, double, double) { return 0.0; }};
  EXPECT_EQ(l2_coeffs(manufactured_forcing(zero, cfg)(0.3)), 0.0);
}

TEST(Solve, ResolutionGuardTrips) {
  SpectralGrid g(16, 16, 2 * kPi, 2 * kPi);
  Field f = sample_field(g, [](double x, double) { return std::cos(4 * x); });
  SolverConfig cfg;
  cfg.grid = g;
  cfg.dt = 0.01;
  cfg.T = 0.02;
  EXPECT_THROW(solve(cfg, f), ResolutionError);
}
