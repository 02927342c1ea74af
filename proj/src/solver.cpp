#include "kplab/solver.hpp"

#include <cmath>
#include <sstream>

#include "kplab/errors.hpp"
#include "kplab/norms.hpp"

namespace kplab {

namespace {

constexpr double kPi = 3.14159265358979323846;

void mask_output(Field& f, bool dealias) {
  if (dealias) {
    apply_dealias(f);
  } else {
    const auto& g = f.grid;
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i)
        if (g.nyquist(i, j)) f.at(i, j) = 0.0;
  }
}

bool all_finite(const Field& f) {
  for (const auto& c : f.data)
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) return false;
  return true;
}

// Contour average of an entire function of z over the unit circle centred at z.
template <class F>
cplx contour_mean(cplx z, F&& f) {
  constexpr int M = 32;
  cplx s = 0.0;
  for (int m = 0; m < M; ++m) s += f(z + std::polar(1.0, 2.0 * kPi * (m + 0.5) / M));
  return s / static_cast<double>(M);
}

Field prepare_forcing(const TimeField& v, double t, bool dealias) {
  Field f = to_fourier(v(t));
  require_zero_x_mean(f);
  sanitize(f);
  mask_output(f, dealias);
  return f;
}

Field prepare_datum(const Field& phi, bool dealias) {
  Field f = to_fourier(phi);
  require_zero_x_mean(f);
  sanitize(f);
  mask_output(f, dealias);
  return f;
}

void validate(const SolverConfig& cfg, long* steps) {
  if (!(cfg.dt > 0.0)) throw ConfigError("solver.dt must be positive");
  if (!(cfg.T > 0.0)) throw ConfigError("solver.T must be positive");
  if (cfg.dt > cfg.T) throw ConfigError("solver.dt must not exceed solver.T");
  if (cfg.snapshot_stride < 1) throw ConfigError("solver.snapshot_stride must be >= 1");
  if (cfg.sign != kKPI && cfg.sign != kKPII) throw ConfigError("solver.sign must be -1 or +1");
  long n = std::lround(cfg.T / cfg.dt);
  if (std::abs(n * cfg.dt - cfg.T) > 1e-9 * cfg.T)
    throw ConfigError("solver.dt must divide solver.T into an integer number of steps");
  *steps = n;
}

}  // namespace

Field nonlinearity(const Field& u, bool dealias) {
  Field f = to_fourier(u);
  mask_output(f, dealias);
  Field p = transform_inverse(f);
  for (auto& c : p.data) c = cplx(0.5 * c.real() * c.real(), 0.0);
  Field q = transform_forward(p);
  const auto& g = q.grid;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) q.at(i, j) *= cplx(0.0, -g.xi(i));
  mask_output(q, dealias);
  return q;
}

Etdrk4::Etdrk4(const SpectralGrid& g, double dt, int sign) : grid_(g), h_(dt) {
  size_t n = g.size();
  E_.resize(n);
  E2_.resize(n);
  Q_.resize(n);
  f1_.resize(n);
  f2_.resize(n);
  f3_.resize(n);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      size_t idx = static_cast<size_t>(j) * g.nx + i;
      double xi = g.xi(i);
      double w = (xi == 0.0) ? 0.0 : dispersion_signed(xi, g.mu(j), sign);
      cplx z(0.0, w * dt);
      E_[idx] = std::exp(z);
      E2_[idx] = std::exp(0.5 * z);
      auto q = [](cplx r) { return (std::exp(0.5 * r) - 1.0) / r; };
      auto a = [](cplx r) {
        return (-4.0 - r + std::exp(r) * (4.0 - 3.0 * r + r * r)) / (r * r * r);
      };
      auto b = [](cplx r) { return (2.0 + r + std::exp(r) * (r - 2.0)) / (r * r * r); };
      auto c = [](cplx r) {
        return (-4.0 - 3.0 * r - r * r + std::exp(r) * (4.0 - r)) / (r * r * r);
      };
      if (std::abs(z) < 1.0) {
        Q_[idx] = dt * contour_mean(z, q);
        f1_[idx] = dt * contour_mean(z, a);
        f2_[idx] = dt * contour_mean(z, b);
        f3_[idx] = dt * contour_mean(z, c);
      } else {
        Q_[idx] = dt * q(z);
        f1_[idx] = dt * a(z);
        f2_[idx] = dt * b(z);
        f3_[idx] = dt * c(z);
      }
    }
}

Field Etdrk4::step(const Field& u, double t, const Rhs& N) const {
  size_t n = u.size();
  Field Nu = N(u, t);
  Field a(grid_, Repr::Fourier), b(grid_, Repr::Fourier), c(grid_, Repr::Fourier);
  for (size_t i = 0; i < n; ++i) a.data[i] = E2_[i] * u.data[i] + Q_[i] * Nu.data[i];
  Field Na = N(a, t + 0.5 * h_);
  for (size_t i = 0; i < n; ++i) b.data[i] = E2_[i] * u.data[i] + Q_[i] * Na.data[i];
  Field Nb = N(b, t + 0.5 * h_);
  for (size_t i = 0; i < n; ++i)
    c.data[i] = E2_[i] * a.data[i] + Q_[i] * (2.0 * Nb.data[i] - Nu.data[i]);
  Field Nc = N(c, t + h_);
  Field out(grid_, Repr::Fourier);
  for (size_t i = 0; i < n; ++i)
    out.data[i] = E_[i] * u.data[i] + f1_[i] * Nu.data[i] +
                  2.0 * f2_[i] * (Na.data[i] + Nb.data[i]) + f3_[i] * Nc.data[i];
  return out;
}

namespace {

Etdrk4::Rhs make_rhs(const SolverConfig& cfg) {
  return [&cfg](const Field& u, double t) {
    Field r = cfg.nonlinear ? nonlinearity(u, cfg.dealias) : Field(u.grid, Repr::Fourier);
    if (cfg.forcing) {
      Field f = prepare_forcing(cfg.forcing, t, cfg.dealias);
      for (size_t i = 0; i < r.size(); ++i) r.data[i] += f.data[i];
    }
    return r;
  };
}

}  // namespace

Field step(const Field& state, double t, const SolverConfig& cfg) {
  Etdrk4 scheme(cfg.grid, cfg.dt, cfg.sign);
  Field u = to_fourier(state);
  require_zero_x_mean(u);
  return scheme.step(u, t, make_rhs(cfg));
}

Monitor monitor(const Field& u, double t, int sign) {
  Monitor m;
  m.t = t;
  m.E0 = energy_E0(u);
  m.E1 = energy_E1(u, sign);
  m.L2 = std::sqrt(m.E0);
  m.E1norm = norm_E_sigma(u, 1);
  m.maxabs = max_abs(u);
  return m;
}

double top_band_fraction(const Field& u, bool dealiased) {
  Field f = to_fourier(u);
  const auto& g = f.grid;
  int top = g.k_max(dealiased);
  double tot = 0.0, band = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      double a = std::norm(f.at(i, j));
      tot += a;
      double xi = g.xi(i);
      if (xi != 0.0 && in_sharp_band(top, xi)) band += a;
    }
  return tot > 0.0 ? band / tot : 0.0;
}

Trajectory solve(const SolverConfig& cfg, const Field& phi) {
  long steps = 0;
  validate(cfg, &steps);
  if (!(phi.grid == cfg.grid)) throw ConfigError("initial datum grid differs from solver grid");
  Etdrk4 scheme(cfg.grid, cfg.dt, cfg.sign);
  auto rhs = make_rhs(cfg);
  Field u = prepare_datum(phi, cfg.dealias);

  Trajectory traj;
  traj.sign = cfg.sign;
  auto record = [&](double t) {
    traj.times.push_back(t);
    traj.snapshots.push_back(u);
    traj.monitors.push_back(monitor(u, t, cfg.sign));
  };
  record(0.0);
  double xi_max = 2.0 * kPi * (cfg.grid.nx / 2) / cfg.grid.lx;
  double last_max = traj.monitors.back().maxabs;
  for (long n = 0; n < steps; ++n) {
    double t = n * cfg.dt;
    Field next = scheme.step(u, t, rhs);
    double tn = (n + 1) * cfg.dt;
    if (!all_finite(next)) {
      std::ostringstream os;
      os << "blow-up: non-finite state at t=" << tn << " (last max|u|=" << last_max << ")";
      throw BlowUpError(tn, last_max, os.str());
    }
    u = std::move(next);
    if (cfg.guard > 0.0) {
      double frac = top_band_fraction(u, cfg.dealias);
      if (frac > cfg.guard) {
        std::ostringstream os;
        os << "resolution guard: top dyadic band holds fraction " << frac << " > " << cfg.guard
           << " of the spectral mass at t=" << tn;
        throw ResolutionError(os.str());
      }
    }
    if (cfg.observer) cfg.observer(tn, u);
    if ((n + 1) % cfg.snapshot_stride == 0 || n + 1 == steps) {
      record(tn);
      last_max = traj.monitors.back().maxabs;
      if (cfg.nonlinear && cfg.dt * xi_max * last_max > 2.0) {
        std::ostringstream os;
        os << "blow-up: dt*max|xi|*max|u| exceeds the stability bound at t=" << tn
           << " (max|u|=" << last_max << ")";
        throw BlowUpError(tn, last_max, os.str());
      }
    }
  }
  return traj;
}

Trajectory solve_symmetric(const SolverConfig& cfg, const Field& phi) {
  Trajectory fwd = solve(cfg, phi);
  SolverConfig back = cfg;
  if (cfg.forcing) {
    TimeField f = cfg.forcing;
    back.forcing = [f](double t) { return (-1.0) * reflect_x(to_fourier(f(-t))); };
  }
  if (cfg.observer) {
    auto obs = cfg.observer;
    back.observer = [obs](double t, const Field& u) { obs(-t, reflect_x(u)); };
  }
  Trajectory bwd = solve(back, reflect_x(to_fourier(phi)));
  Trajectory out;
  out.sign = cfg.sign;
  for (size_t n = bwd.times.size(); n-- > 1;) {
    out.times.push_back(-bwd.times[n]);
    out.snapshots.push_back(reflect_x(bwd.snapshots[n]));
    Monitor m = bwd.monitors[n];
    m.t = -m.t;
    out.monitors.push_back(m);
  }
  for (size_t n = 0; n < fwd.times.size(); ++n) {
    out.times.push_back(fwd.times[n]);
    out.snapshots.push_back(fwd.snapshots[n]);
    out.monitors.push_back(fwd.monitors[n]);
  }
  return out;
}

Trajectory solve_linear_forced(const SolverConfig& cfg, const Field& phi, const TimeField& v) {
  SolverConfig c = cfg;
  c.nonlinear = false;
  c.forcing = v;
  return solve(c, phi);
}

Field sample_at(const SpectralGrid& g, const std::function<double(double, double, double)>& f,
                double t) {
  return sample_field(g, [&](double x, double y) { return f(x, y, t); });
}

TimeField manufactured_forcing(const ManufacturedSolution& ms, const SolverConfig& cfg) {
  SpectralGrid g = cfg.grid;
  int sign = cfg.sign;
  bool dealias = cfg.dealias;
  return [ms, g, sign, dealias](double t) {
    Field u = transform_forward(sample_at(g, ms.u, t));
    require_zero_x_mean(u);
    sanitize(u);
    Field ut = transform_forward(sample_at(g, ms.u_t, t));
    sanitize(ut);
    Field n = nonlinearity(u, dealias);
    Field f(g, Repr::Fourier);
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        double xi = g.xi(i);
        cplx lin = xi == 0.0 ? cplx(0.0) : cplx(0.0, dispersion_signed(xi, g.mu(j), sign));
        f.at(i, j) = ut.at(i, j) - lin * u.at(i, j) - n.at(i, j);
      }
    return f;
  };
}

}  // namespace kplab
