#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>
#include <random>

#include "kplab/cli_io.hpp"
#include "kplab/errors.hpp"

using namespace kplab;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = 3.14159265358979323846;

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("kplab_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_text(const fs::path& p, const std::string& s) { write_atomic(p.string(), s); }

std::string small_solve_config(const fs::path& out, double amplitude) {
  json j = {{"grid", {{"Nx", 64}, {"Ny", 64}, {"Lx", 8 * kPi}, {"Ly", 8 * kPi}}},
            {"solver", {{"dt", 0.01}, {"T", 0.1}, {"snapshot_stride", 5}, {"symmetric", true}}},
            {"data", {{"recipe", "smooth"}, {"seed", 3}, {"amplitude", amplitude}}},
            {"output", {{"dir", out.string()}}}};
  return dump_json(j);
}

}  // namespace

TEST(Snapshot, RoundTripIsBitExact) {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<uint64_t> bits;
  std::uniform_int_distribution<int> sz(4, 6);
  fs::path dir = scratch("snap");
  for (int n = 0; n < 100; ++n) {
    SpectralGrid g(1 << sz(rng), 1 << sz(rng), 0.5 + n, 3.0 + 0.25 * n);
    Field u(g, Repr::Physical);
    for (auto& z : u.data) {
      double x;
      do {
        uint64_t b = bits(rng);
        std::memcpy(&x, &b, sizeof x);
      } while (!std::isfinite(x));
      z = cplx(x, 0.0);
    }
    double t = std::ldexp(static_cast<double>(n), -3) - 1.0 / 3.0;
    fs::path p = dir / ("s" + std::to_string(n) + ".kpi1");
    write_snapshot(p.string(), u, t);
    Snapshot s = read_snapshot(p.string());
    ASSERT_TRUE(s.u.grid == g);
    EXPECT_EQ(std::memcmp(&s.t, &t, sizeof t), 0);
    ASSERT_EQ(s.u.data.size(), u.data.size());
    for (size_t i = 0; i < u.data.size(); ++i) {
      double a = u.data[i].real(), b = s.u.data[i].real();
      ASSERT_EQ(std::memcmp(&a, &b, sizeof a), 0) << "field " << n << " sample " << i;
    }
    EXPECT_EQ(encode_snapshot(s.u, s.t), encode_snapshot(u, t));
  }
  fs::remove_all(dir);
}

TEST(Snapshot, CorruptFilesRejected) {
  SpectralGrid g(16, 16, 1.0, 1.0);
  std::string b = encode_snapshot(Field(g, Repr::Physical), 0.0);
  EXPECT_EQ(b.size(), 40u + 256 * 8);
  EXPECT_THROW(decode_snapshot(b.substr(0, 39)), ConfigError);
  EXPECT_THROW(decode_snapshot(b.substr(0, b.size() - 8)), ConfigError);
  std::string bad = b;
  bad[0] = 'X';
  EXPECT_THROW(decode_snapshot(bad), ConfigError);
  bad = b;
  bad[4] = 9;
  EXPECT_THROW(decode_snapshot(bad), ConfigError);
}

TEST(Snapshot, DirectoryOrderedByTime) {
  fs::path dir = scratch("snapdir");
  SpectralGrid g(16, 16, 1.0, 1.0);
  Field u(g, Repr::Physical);
  write_snapshot((dir / "b.kpi1").string(), u, 0.5);
  write_snapshot((dir / "a.kpi1").string(), u, 1.0);
  write_snapshot((dir / "c.kpi1").string(), u, -0.5);
  write_text(dir / "notes.txt", "ignored");
  auto s = read_snapshot_dir(dir.string());
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0].t, -0.5);
  EXPECT_EQ(s[2].t, 1.0);
  fs::remove_all(dir);
}

TEST(Config, EchoIsAFixedPoint) {
  for (std::string name : {"", "conservation", "bona_smith", "convergence"}) {
    RunConfig c = default_run_config(name);
    json e = echo_config(c);
    RunConfig c2 = parse_config(e);
    EXPECT_EQ(dump_json(echo_config(c2)), dump_json(e)) << name;
    EXPECT_EQ(dump_json(echo_config(parse_config(json::parse(dump_json(e))))), dump_json(e));
  }
}

TEST(Config, UnknownKeysAndBadValuesRejected) {
  try {
    parse_config(json::parse(R"({"grid": {"Nz": 4}})"));
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("grid.Nz"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_config(json::parse(R"({"colour": 1})")), ConfigError);
  EXPECT_THROW(parse_config(json::parse(R"({"solver": {"dt": -1}})")), ConfigError);
  EXPECT_THROW(parse_config(json::parse(R"({"solver": {"dt": "fast"}})")), ConfigError);
  EXPECT_THROW(parse_config(json::parse(R"({"experiment": {"name": "nope"}})")), ConfigError);
  RunConfig c = parse_config(json::parse(R"({"grid": {"Nx": 32}, "solver": {"T": 0.5}})"));
  EXPECT_EQ(c.grid.nx, 32);
  EXPECT_EQ(c.T, 0.5);
  EXPECT_EQ(c.dt, default_run_config().dt);
}

TEST(Serialization, DoublesRoundTrip) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<uint64_t> bits;
  for (int i = 0; i < 10000; ++i) {
    double x;
    do {
      uint64_t b = bits(rng);
      std::memcpy(&x, &b, sizeof x);
    } while (!std::isfinite(x));
    std::string s = format_double(x);
    EXPECT_EQ(std::strtod(s.c_str(), nullptr), x) << s;
  }
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(1.0), "1");
}

TEST(Serialization, GitBlobHash) {
  EXPECT_EQ(git_blob_hash(""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  EXPECT_EQ(git_blob_hash("hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST(Serialization, ReportCsv) {
  ExperimentReport r;
  r.columns = {"a", "b"};
  r.rows = {{0.1, 2.0}, {-1e-300, 3.5}};
  EXPECT_EQ(report_csv(r), "a,b\n0.10000000000000001,2\n-1e-300,3.5\n");
}

TEST(Commands, ExitCodes) {
  fs::path dir = scratch("exit");
  CommonOptions o;
  o.threads = 1;
  o.out = (dir / "x").string();
  EXPECT_EQ(cmd_experiment("no_such_experiment", o), kExitConfig);

  write_text(dir / "bad.json", R"({"grid": {"Nz": 4}})");
  o.config = (dir / "bad.json").string();
  EXPECT_EQ(cmd_solve(o), kExitConfig);

  write_text(dir / "loud.json", small_solve_config(dir / "loud", 0.5));
  o.config = (dir / "loud.json").string();
  o.out.clear();
  EXPECT_EQ(cmd_solve(o), kExitConstraint);

  write_text(dir / "ok.json", small_solve_config(dir / "ok", 0.1));
  o.config = (dir / "ok.json").string();
  ASSERT_EQ(cmd_solve(o), kExitOk);
  EXPECT_TRUE(fs::exists(dir / "ok" / "monitors.csv"));
  EXPECT_EQ(read_snapshot_dir((dir / "ok" / "snapshots").string()).size(), 5u);

  NormsOptions n;
  n.snapshots = (dir / "ok" / "snapshots").string();
  n.out = (dir / "norms").string();
  n.T = 0.1;
  n.threads = 1;
  n.norms = {"E1", "B1", "L4"};
  EXPECT_EQ(cmd_norms(n), kExitOk);
  json rep = json::parse(read_file((dir / "norms" / "norms.json").string()));
  EXPECT_FALSE(rep.dump().empty());
  n.T = 5.0;  // snapshots only cover [-0.1, 0.1]
  n.norms = {"F1"};
  EXPECT_EQ(cmd_norms(n), kExitConstraint);
  n.norms = {"Q7"};
  EXPECT_EQ(cmd_norms(n), kExitConfig);
  fs::remove_all(dir);
}

TEST(Commands, VerifyWithoutTrials) {
  fs::path dir = scratch("verify0");
  VerifyOptions v;
  v.lemma = "5.1a";
  v.params = {{"k1", "2"}, {"k2", "2"}, {"k3", "3"}, {"j1", "2"}, {"j2", "2"}, {"j3", "2"}};
  v.trials = 0;
  v.out = dir.string();
  v.threads = 1;
  EXPECT_EQ(cmd_verify(v), kExitOk);
  EXPECT_EQ(read_file((dir / "trials.csv").string()), "lemma,k,k1,k2,j1,j2,j3,seed,lhs,rhs,ratio\n");
  v.lemma = "7.1";
  v.params = {{"k", "3"}, {"k1", "4"}, {"k2", "3"}};
  EXPECT_EQ(cmd_verify(v), kExitConfig);
  v.lemma = "12.1";
  EXPECT_EQ(cmd_verify(v), kExitConfig);
  fs::remove_all(dir);
}

TEST(Commands, ExperimentOutputIsDeterministic) {
  fs::path dir = scratch("det");
  json cfg = {{"experiment", {{"name", "convergence"}, {"sweep", {{"dt", {0.02, 0.01}}}}}}};
  write_text(dir / "c.json", dump_json(cfg));
  CommonOptions o;
  o.config = (dir / "c.json").string();
  o.threads = 1;
  o.out = (dir / "a").string();
  std::vector<std::string> files{"convergence.csv", "convergence.json", "config.json"};
  ASSERT_EQ(cmd_experiment("convergence", o), kExitOk);
  std::vector<std::string> first;
  for (const auto& f : files) first.push_back(read_file((dir / "a" / f).string()));
  ASSERT_EQ(cmd_experiment("convergence", o), kExitOk);
  for (size_t i = 0; i < files.size(); ++i)
    EXPECT_EQ(read_file((dir / "a" / files[i]).string()), first[i]) << files[i];
  json j = json::parse(read_file((dir / "a" / "convergence.json").string()));
  EXPECT_EQ(j["experiment"], "convergence");
  EXPECT_EQ(j["input_hash"].get<std::string>().size(), 40u);
  fs::remove_all(dir);
}
