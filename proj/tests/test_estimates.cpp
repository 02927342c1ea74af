#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "kplab/dyadic.hpp"
#include "kplab/errors.hpp"
#include "kplab/estimates.hpp"
#include "kplab/norms.hpp"

using namespace kplab;

namespace {

constexpr double kPi = 3.14159265358979323846;

BoxFunction random_box(std::mt19937_64& rng, const Lattice3& lat, std::array<int, 3> n,
                       std::array<long, 3> origin) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  BoxFunction f;
  f.lat = lat;
  f.n = n;
  f.origin = origin;
  f.v.resize(static_cast<size_t>(n[0]) * n[1] * n[2]);
  for (auto& x : f.v) x = u(rng);
  return f;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST(Trilinear, MatchesDirectSummationOn8Cubed) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<long> off(-6, 6);
  Lattice3 lat{{0.3, 0.7, 1.1}};
  for (int t = 0; t < 50; ++t) {
    auto o = [&] { return std::array<long, 3>{off(rng), off(rng), off(rng)}; };
    BoxFunction f1 = random_box(rng, lat, {8, 8, 8}, o());
    BoxFunction f2 = random_box(rng, lat, {8, 8, 8}, o());
    // f3 sits where f1 * f2 lives
    std::array<long, 3> o3{f1.origin[0] + f2.origin[0] + 4, f1.origin[1] + f2.origin[1] + 3,
                           f1.origin[2] + f2.origin[2] + 5};
    BoxFunction f3 = random_box(rng, lat, {8, 8, 8}, o3);
    double fft = trilinear_form(f1, f2, f3);
    double direct = trilinear_direct(f1, f2, f3);
    EXPECT_GT(direct, 0.0);
    EXPECT_LE(rel(fft, direct), 1e-12) << "trial " << t;
  }
}

TEST(Trilinear, ReflectionSymmetry) {
  std::mt19937_64 rng(8);
  Lattice3 lat{{0.5, 0.25, 2.0}};
  for (int t = 0; t < 50; ++t) {
    BoxFunction f1 = random_box(rng, lat, {6, 9, 7}, {2, -3, 1});
    BoxFunction f2 = random_box(rng, lat, {8, 5, 6}, {-1, 4, 0});
    BoxFunction f3 = random_box(rng, lat, {9, 9, 9}, {3, 0, 2});
    double a = trilinear_form(f1, f2, f3);
    double b = trilinear_form(reflect(f1), f3, f2);
    EXPECT_LE(std::abs(a - b), 1e-10 * std::abs(a)) << "trial " << t;
  }
}

TEST(Trilinear, ZeroFactorAndScaleInvariantRatio) {
  std::mt19937_64 rng(9);
  Lattice3 lat{{0.5, 0.5, 0.5}};
  BoxFunction f1 = random_box(rng, lat, {6, 6, 6}, {0, 0, 0});
  BoxFunction f2 = random_box(rng, lat, {6, 6, 6}, {1, 1, 1});
  BoxFunction f3 = random_box(rng, lat, {8, 8, 8}, {2, 2, 2});
  BoxFunction z = f3;
  scale(z, 0.0);
  EXPECT_EQ(trilinear_form(f1, f2, z), 0.0);
  auto ratio = [](const BoxFunction& a, const BoxFunction& b, const BoxFunction& c) {
    return trilinear_form(a, b, c) / (l2_norm(a) * l2_norm(b) * l2_norm(c));
  };
  double r = ratio(f1, f2, f3);
  for (double lam : {1e-3, 0.5, 7.0, 1e4}) {
    BoxFunction g = f2;
    scale(g, lam);
    EXPECT_NEAR(ratio(f1, g, f3), r, 1e-12 * r);
  }
  DyadicRegion d{1, 2.0, 3};
  BoxFunction zz = f2;
  scale(zz, 0.0);
  EXPECT_EQ(restricted_conv_norm(f1, zz, d), 0.0);
}

TEST(Regions, SampledFunctionsAreSupportedNonnegativeAndNormalized) {
  std::vector<DyadicRegion> regions{{0, INFINITY, 2}, {2, 1.0, 4}, {-1, -2.0, 0}, {3, INFINITY, 6}};
  for (const auto& r : regions)
    for (uint64_t seed = 1; seed <= 10; ++seed) {
      BoxFunction f = sample_region_function(r, seed, 4);
      for (double x : f.v) ASSERT_GE(x, 0.0);
      EXPECT_TRUE(supported_in(f, r)) << "k=" << r.k << " seed " << seed;
      EXPECT_NEAR(l2_norm(f), 1.0, 1e-12);
      for (int a = 0; a < f.n[0]; ++a)
        for (int b = 0; b < f.n[1]; ++b)
          for (int c = 0; c < f.n[2]; ++c)
            if (f.v[f.index(a, b, c)] > 0.0)
              ASSERT_TRUE(r.contains(f.coord(0, a), f.coord(1, b), f.coord(2, c)));
    }
}

TEST(Regions, MembershipAndEmptyRegion) {
  DyadicRegion r{0, 1.0, 2};
  double xi = 1.0, mu = 0.5;
  double w = dispersion_omega(xi, mu);
  EXPECT_TRUE(r.contains(xi, mu, w + 3.9));
  EXPECT_FALSE(r.contains(xi, mu, w + 4.1));
  EXPECT_FALSE(r.contains(xi, 2.5, w));
  EXPECT_FALSE(r.contains(10.0, mu, dispersion_omega(10.0, mu)));
  EXPECT_THROW(sample_region_function(DyadicRegion{0, 1.0, -1}, 1, 4), ParameterError);
}

TEST(Lemma51, RatiosNonnegativeAndFinite) {
  TrialOptions o;
  o.trials = 12;
  auto a = check_lemma51a({2, 2, 3}, {2, 2, 2}, o);
  ASSERT_EQ(a.size(), 12u);
  for (const auto& t : a) {
    EXPECT_GE(t.lhs, 0.0);
    EXPECT_GT(t.rhs, 0.0);
    EXPECT_TRUE(std::isfinite(t.ratio));
    EXPECT_NEAR(t.ratio, t.lhs / t.rhs, 1e-15 * std::max(1.0, t.ratio));
  }
  auto b = check_lemma51b({0, 0, 1}, {-2.0, 1.0, 1.0}, {10, 12, 12}, o);
  for (const auto& t : b) {
    EXPECT_GE(t.ratio, 0.0);
    EXPECT_TRUE(std::isfinite(t.ratio));
  }
  EXPECT_GE(max_ratio(b), 0.0);
}

TEST(Lemma51, DeterministicForSeed) {
  TrialOptions o;
  o.trials = 6;
  auto a = check_lemma51a({2, 2, 3}, {2, 2, 2}, o);
  auto b = check_lemma51a({2, 2, 3}, {2, 2, 2}, o);
  EXPECT_EQ(trials_csv(a), trials_csv(b));
}

TEST(Lemma51, ThinMuSupportGivesSmallRatio) {
  TrialOptions o;
  o.trials = 8;
  auto b = check_lemma51b({0, 0, 1}, {-6.0, 4.0, 4.0}, {10, 12, 12}, o);
  EXPECT_LT(max_ratio(b), 1.0);
}

TEST(Lemma52, Cor53BranchesFinite) {
  TrialOptions o;
  o.trials = 6;
  for (auto br : {Cor53Branch::JJ1, Cor53Branch::LowK, Cor53Branch::HighK}) {
    std::array<int, 3> k = br == Cor53Branch::LowK ? std::array<int, 3>{-1, 3, 3}
                                                    : std::array<int, 3>{1, 3, 3};
    auto t = check_cor53(br, k, {2, 3, 3}, o);
    for (const auto& e : t) {
      EXPECT_GE(e.ratio, 0.0);
      EXPECT_TRUE(std::isfinite(e.ratio));
    }
  }
  auto t = check_lemma52({1, 1, 2}, {2, 3, 4}, o);
  for (const auto& e : t) EXPECT_TRUE(std::isfinite(e.ratio));
}

TEST(Strichartz, SingleModeOracle) {
  double L = 4 * kPi, T = 0.75;
  SpectralGrid g(32, 32, L, L);
  Field phi = to_fourier(sample_field(g, [](double x, double y) { return std::cos(x + 0.5 * y); }));
  // |cos|^4 averages to 3/8, |cos|^2 to 1/2
  double A = L * L;
  double expect = std::pow(3.0 * T * A / 8.0, 0.25) / std::sqrt(A / 2.0);
  EXPECT_NEAR(strichartz_ratio(phi, T), expect, 1e-10 * expect);
}

TEST(Strichartz, Homogeneous) {
  SpectralGrid g(32, 32, 4 * kPi, 4 * kPi);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  Field phi(g, Repr::Fourier);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      phi.at(i, j) = cplx(nd(rng), nd(rng)) * std::exp(-(g.xi(i) * g.xi(i) + g.mu(j) * g.mu(j)));
  sanitize(phi);
  double r = strichartz_ratio(phi, 0.5);
  EXPECT_NEAR(strichartz_ratio(3.5 * phi, 0.5), r, 1e-12 * r);
  EXPECT_NEAR(strichartz_ratio(1e-4 * phi, 0.5), r, 1e-12 * r);
}

TEST(Dyadic, ConstraintViolationsNameTheLemma) {
  EXPECT_THROW(check_dyadic_constraints(DyadicLemma::L71, 3, 4, 3), ParameterError);
  EXPECT_NO_THROW(check_dyadic_constraints(DyadicLemma::L71, 3, -2, 3));
  try {
    check_dyadic_bilinear(DyadicLemma::L71, 3, 5, 3, DyadicOptions{});
    FAIL() << "expected ParameterError";
  } catch (const ParameterError& e) {
    EXPECT_NE(std::string(e.what()).find("7.1"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_dyadic_lemma("9.9"), ConfigError);
}

TEST(Dyadic, ZeroFactorAndHomogeneity) {
  ModeSet u, v;
  u.dxi = v.dxi = 1.0 / 64;
  u.dmu = v.dmu = 1.0 / 16;
  u.add(16, 3, cplx(0.0));  // xi = 1/4, band -2
  v.add(512, 5, cplx(1.0, 0.5));
  v.add(520, -2, cplx(0.3, -0.2));
  BilinearValue z = evaluate_bilinear(DyadicLemma::L71, 3, -2, 3, u, v);
  EXPECT_EQ(z.lhs, 0.0);
  ModeSet u1 = u;
  u1.a[0] = cplx(1.0, 0.0);
  BilinearValue a = evaluate_bilinear(DyadicLemma::L71, 3, -2, 3, u1, v);
  ASSERT_GT(a.lhs, 0.0);
  ModeSet u2 = u1;
  u2.a[0] *= 5.0;
  BilinearValue b = evaluate_bilinear(DyadicLemma::L71, 3, -2, 3, u2, v);
  EXPECT_NEAR(b.lhs, 5.0 * a.lhs, 1e-12 * b.lhs);
  EXPECT_NEAR(b.lhs / (b.norm_u * b.norm_v), a.lhs / (a.norm_u * a.norm_v),
              1e-12 * a.lhs / (a.norm_u * a.norm_v));
}

TEST(Dyadic, FreeWaveProfileTracksWindowConstant) {
  // interior window constants of the fixed eta0 at k+ = 0, 1
  EXPECT_NEAR(free_wave_profile(0), 3.8965, 0.04);
  EXPECT_NEAR(free_wave_profile(1), 4.1046, 0.04);
  EXPECT_NEAR(free_wave_profile(-3), free_wave_profile(0), 1e-12);
}

TEST(Fits, Log2Slope) {
  std::vector<double> x{1, 2, 3, 4}, y;
  for (double v : x) y.push_back(3.0 * std::exp2(0.5 * v));
  EXPECT_NEAR(fit_log2_slope(x, y), 0.5, 1e-12);
}
