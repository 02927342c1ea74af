// Acceptance checks. Usage: kplab_acceptance [criterion ...]  (default: all)

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "kplab/cli_io.hpp"
#include "kplab/dyadic.hpp"
#include "kplab/errors.hpp"
#include "kplab/estimates.hpp"
#include "kplab/experiments.hpp"

using namespace kplab;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Detail {
 public:
  template <class T>
  Detail& operator()(const std::string& k, T v) {
    if (!os_.str().empty()) os_ << ' ';
    os_ << k << '=' << v;
    return *this;
  }
  std::string str() const { return os_.str(); }

 private:
  std::ostringstream os_;
};

double rel_change(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

// Resonance function: both closed forms on random tuples.
Outcome resonance() {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> lx(-6.0, 6.0), sg(0.0, 1.0), m(-50.0, 50.0);
  auto draw_xi = [&] {
    double x = std::exp2(lx(rng));
    return sg(rng) < 0.5 ? -x : x;
  };
  double worst = 0.0;
  long n = 0;
  while (n < 1000000) {
    double x1 = draw_xi(), x2 = draw_xi(), m1 = m(rng), m2 = m(rng);
    if (std::abs(x1 + x2) < 1e-3 * std::max(std::abs(x1), std::abs(x2))) continue;
    double a = resonance_Omega(x1, m1, x2, m2), b = resonance_Omega_factored(x1, m1, x2, m2);
    worst = std::max(worst, std::abs(a - b) / std::max(1.0, std::abs(b)));
    ++n;
  }
  return {worst <= 1e-10, Detail()("tuples", n)("max_rel_diff", worst).str()};
}

Outcome jacobian() {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> x(0.1, 4.0), nu(0.05, 3.0), sg(0.0, 1.0);
  double worst = 0.0;
  for (int n = 0; n < 10000; ++n) {
    double a = x(rng) * (sg(rng) < 0.5 ? -1 : 1), b = x(rng) * (sg(rng) < 0.5 ? -1 : 1);
    double v = nu(rng);
    double c = jacobian_det_closed(a, b, v), d = jacobian_det_numeric(a, b, v);
    worst = std::max(worst, std::abs(c - d) / std::max(std::abs(c), 1e-300));
  }
  return {worst <= 1e-8, Detail()("samples", 10000)("max_rel_diff", worst).str()};
}

Outcome conservation() {
  ExperimentSpec s = default_spec("conservation");
  s.solver.grid = SpectralGrid(128, 128, 16 * kPi, 16 * kPi);
  s.solver.dt = 1e-3;
  s.solver.T = 1.0;
  s.data.amplitude = 0.1;
  s.sweep.runs = 1;
  s.sweep.refine = false;
  ExperimentReport r = run_experiment(s);
  double d0 = r.summary.at("max_drift_E0"), d1 = r.summary.at("max_drift_E1");
  return {d0 <= 1e-9 && d1 <= 1e-7, Detail()("drift_E0", d0)("drift_E1", d1).str()};
}

Outcome energy_identity() {
  ExperimentSpec s = default_spec("energy_identity");
  s.sweep.runs = 10;
  ExperimentReport r = run_experiment(s);
  double res = r.summary.at("max_residual");
  return {res <= 1e-8, Detail()("runs", 10)("max_residual", res).str()};
}

Outcome convergence() {
  ExperimentSpec s = default_spec("convergence");
  ExperimentReport r = run_experiment(s);
  double o = r.summary.at("order");
  return {s.sweep.dt.size() >= 5 && o >= 3.5,
          Detail()("step_sizes", s.sweep.dt.size())("order", o)("error_finest",
                                                               r.summary.at("error_finest"))
              .str()};
}

BoxFunction random_box(std::mt19937_64& rng, const Lattice3& lat, std::array<long, 3> origin) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  BoxFunction f;
  f.lat = lat;
  f.n = {8, 8, 8};
  f.origin = origin;
  f.v.resize(512);
  for (auto& x : f.v) x = u(rng);
  return f;
}

Outcome trilinear_oracle() {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<long> off(-8, 8);
  Lattice3 lat{{0.25, 0.5, 1.5}};
  double worst = 0.0, worst_sym = 0.0;
  for (int t = 0; t < 50; ++t) {
    auto o = [&] { return std::array<long, 3>{off(rng), off(rng), off(rng)}; };
    BoxFunction f1 = random_box(rng, lat, o()), f2 = random_box(rng, lat, o());
    std::array<long, 3> o3{f1.origin[0] + f2.origin[0] + off(rng) / 2,
                           f1.origin[1] + f2.origin[1] + off(rng) / 2,
                           f1.origin[2] + f2.origin[2] + off(rng) / 2};
    BoxFunction f3 = random_box(rng, lat, o3);
    double a = trilinear_form(f1, f2, f3), d = trilinear_direct(f1, f2, f3);
    worst = std::max(worst, std::abs(a - d) / std::max(1.0, std::abs(d)));
    double b = trilinear_form(reflect(f1), f3, f2);
    worst_sym = std::max(worst_sym, std::abs(a - b) / std::max(1e-300, std::abs(a)));
  }
  return {worst <= 1e-12 && worst_sym <= 1e-10,
          Detail()("triples", 50)("max_rel_diff", worst)("max_symmetry_diff", worst_sym).str()};
}

Outcome lemma51b() {
  TrialOptions o;
  o.trials = 500;
  o.ref_ppw = 6;
  o.ppw = 3;
  double coarse = max_ratio(check_lemma51b_random(o));
  o.ppw = 6;
  double fine = max_ratio(check_lemma51b_random(o));
  double change = rel_change(coarse, fine);
  // gain against min(l) at fixed bands and modulations
  TrialOptions s;
  s.trials = 40;
  std::vector<double> x, y;
  for (int l = -4; l <= 0; ++l) {
    x.push_back(l);
    y.push_back(max_gain(check_lemma51b({0, 0, 1}, {double(l), l + 3.0, l + 3.0}, {10, 12, 12}, s)));
  }
  double slope = fit_log2_slope(x, y);
  bool ok = std::max(coarse, fine) <= 8.0 && change <= 0.25 && std::abs(slope - 0.5) <= 0.15;
  return {ok, Detail()("trials", 500)("max_ratio", fine)("coarse_max_ratio", coarse)(
                  "refinement_change", change)("min_l_slope", slope)
                  .str()};
}

Outcome lemma51a() {
  TrialOptions o;
  o.trials = 200;
  std::vector<double> x, y;
  double worst_change = 0.0, top = 0.0;
  for (int k = 2; k <= 5; ++k) {
    o.ppw = 4;
    double c = max_ratio(check_lemma51a({k, k, k + 1}, {2, 2, 2}, o));
    o.ppw = 8;
    double f = max_ratio(check_lemma51a({k, k, k + 1}, {2, 2, 2}, o));
    worst_change = std::max(worst_change, rel_change(c, f));
    top = std::max(top, std::max(c, f));
    x.push_back((3.0 * k + 1.0) / 2.0);
    y.push_back(f);
  }
  double slope = fit_log2_slope(x, y);
  bool ok = std::isfinite(top) && worst_change <= 0.25 && std::abs(slope) <= 0.3;
  return {ok, Detail()("trials", 200)("max_ratio", top)("refinement_change", worst_change)(
                  "slope", slope)
                  .str()};
}

Outcome strichartz() {
  SpectralGrid coarse(64, 64, 8 * kPi, 8 * kPi), fine(128, 128, 8 * kPi, 8 * kPi);
  double T = 0.5, mc = 0.0, mf = 0.0;
  for (uint64_t seed = 1; seed <= 50; ++seed) {
    DataRecipe d;
    d.kind = seed % 2 ? "rough" : "smooth";
    d.seed = seed;
    Field phi = make_datum(coarse, d);
    mc = std::max(mc, strichartz_ratio(phi, T, 256));
    mf = std::max(mf, strichartz_ratio(embed(phi, fine), T, 512));
  }
  double change = rel_change(mc, mf);
  return {change <= 0.2, Detail()("data", 50)("max_ratio_coarse", mc)("max_ratio_fine", mf)(
                             "change", change)
                             .str()};
}

double gain_slope(const std::vector<double>& x, const std::function<std::vector<EstimateTrial>(int)>& run,
                  std::vector<double>* gains = nullptr) {
  std::vector<double> y;
  for (double v : x) y.push_back(max_gain(run(static_cast<int>(v))));
  if (gains) *gains = y;
  return fit_log2_slope(x, y);
}

Outcome dyadic() {
  DyadicOptions o;
  o.trials = 12;
  double s71 = gain_slope({-6, -5, -4, -3, -2, -1}, [&](int k1) {
    return check_dyadic_bilinear(DyadicLemma::L71, 3, k1, 3, o);
  });
  double s61 = gain_slope({3, 4, 5, 6, 7}, [&](int m) {
    return check_trilinear_energy_a({m, 9, 9}, o);
  });
  double s83 = gain_slope({-5, -4, -3, -2, -1, 0}, [&](int k2) {
    return check_dyadic_bilinear(DyadicLemma::L83, 6, 6, k2, o);
  });
  bool ok = std::abs(s71 - 1.0) <= 0.25 && std::abs(s61 + 0.5) <= 0.2 && std::abs(s83 - 1.0) <= 0.3;
  return {ok, Detail()("slope_7.1", s71)("slope_6.1a", s61)("slope_8.3", s83).str()};
}

Outcome triplet() {
  ExperimentSpec s = default_spec("apriori_triplet");
  s.sweep.runs = 10;
  s.sweep.refine = true;
  ExperimentReport r = run_experiment(s);
  Detail d;
  bool ok = true;
  for (std::string k : {"max_F_over_B_plus_N", "max_N_over_F2", "max_B2_over_E2_plus_F3",
                        "max_supE_over_F"}) {
    double a = r.summary.at(k), b = r.summary.at("refined_" + k);
    double c = rel_change(a, b);
    ok = ok && std::isfinite(a) && std::isfinite(b) && c <= 0.25;
    d(k, a)(k + "_change", c);
  }
  return {ok, d.str()};
}

Outcome bona_smith() {
  ExperimentSpec s = default_spec("bona_smith");
  s.sweep.refine = true;
  ExperimentReport r = run_experiment(s);
  double inc = r.summary.at("max_relative_increase_D");
  double change = r.summary.at("refinement_change");
  return {inc <= 0.05 && change <= 0.25,
          Detail()("max_relative_increase_D", inc)("ratio", r.summary.at("max_ratio"))(
              "refinement_change", change)
              .str()};
}

std::vector<std::string> output_bytes(const fs::path& dir, const std::vector<std::string>& files) {
  std::vector<std::string> out;
  for (const auto& f : files) out.push_back(read_file((dir / f).string()));
  return out;
}

Outcome determinism() {
  fs::path dir = fs::temp_directory_path() / "kplab_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  json cfg = {{"experiment", {{"name", "energy_identity"}, {"sweep", {{"runs", 2}}}}}};
  write_atomic((dir / "c.json").string(), dump_json(cfg));
  CommonOptions o;
  o.config = (dir / "c.json").string();
  o.out = (dir / "run").string();
  std::vector<std::string> files{"energy_identity.csv", "energy_identity.json", "config.json"};
  bool same = true;
  std::vector<std::string> first;
  for (int threads : {1, 1, 4}) {
    o.threads = threads;
    if (cmd_experiment("energy_identity", o) != kExitOk) return {false, "experiment failed"};
    auto b = output_bytes(dir / "run", files);
    if (first.empty())
      first = b;
    else
      same = same && b == first;
  }
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<uint64_t> bits;
  bool exact = true;
  for (int n = 0; n < 20; ++n) {
    SpectralGrid g(64, 32, 2.0 + n, 3.0);
    Field u(g, Repr::Physical);
    for (auto& z : u.data) {
      double x;
      do {
        uint64_t b = bits(rng);
        std::memcpy(&x, &b, sizeof x);
      } while (!std::isfinite(x));
      z = cplx(x, 0.0);
    }
    fs::path p = dir / "s.kpi1";
    write_snapshot(p.string(), u, 0.1 * n);
    Snapshot s = read_snapshot(p.string());
    exact = exact && s.t == 0.1 * n && s.u.grid == g &&
            std::memcmp(s.u.data.data(), u.data.data(), u.data.size() * sizeof(cplx)) == 0;
  }
  fs::remove_all(dir);
  return {same && exact, Detail()("byte_identical_outputs", same)("snapshot_bit_exact", exact).str()};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<Criterion> all{
      {1, "resonance identity", resonance},
      {2, "jacobian identity", jacobian},
      {3, "conservation", conservation},
      {4, "energy-increment identity", energy_identity},
      {5, "manufactured-solution convergence", convergence},
      {6, "trilinear-form oracle", trilinear_oracle},
      {7, "l-limited bilinear bound", lemma51b},
      {8, "trilinear bound under modulation hypothesis", lemma51a},
      {9, "strichartz ratio", strichartz},
      {10, "dyadic lemma exponents", dyadic},
      {11, "embedding and a-priori triplet", triplet},
      {12, "bona-smith truncation", bona_smith},
      {13, "determinism and persistence", determinism},
  };
  std::set<int> pick;
  for (int i = 1; i < argc; ++i) pick.insert(std::atoi(argv[i]));
  int failed = 0;
  for (const auto& c : all) {
    if (!pick.empty() && !pick.count(c.id)) continue;
    auto t0 = std::chrono::steady_clock::now();
    Outcome r;
    try {
      r = c.run();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    double el = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!r.pass) ++failed;
    std::printf("criterion %2d %-4s %s: %s (%.1f s)\n", c.id, r.pass ? "PASS" : "FAIL", c.name,
                r.detail.c_str(), el);
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
