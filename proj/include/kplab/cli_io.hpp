#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kplab/experiments.hpp"
#include "kplab/solver.hpp"

namespace kplab {

using json = nlohmann::ordered_json;

struct OutputConfig {
  std::string dir = "out";
  std::vector<std::string> formats{"csv", "json"};
};

// Effective run configuration. Omitted keys take the defaults of the named experiment
// (or the desk defaults when no experiment is named).
struct RunConfig {
  SpectralGrid grid;
  int sign = kKPI;
  double dt = 1e-3;
  double T = 1.0;
  bool dealias = true;
  int snapshot_stride = 10;
  bool symmetric = false;  // also solve backwards so snapshots cover [-T, T]
  double epsilon0 = 0.1;   // solve rejects data with ||phi||_{E^1} > epsilon0 (0 disables)
  DataRecipe data;
  std::string experiment;
  Sweep sweep;
  OutputConfig output;
};

RunConfig default_run_config(const std::string& experiment = "");
// Throws ConfigError naming the offending key.
RunConfig parse_config(const json& j);
json echo_config(const RunConfig& c);
RunConfig load_config(const std::string& path);
SolverConfig solver_config(const RunConfig& c);
ExperimentSpec experiment_spec(const RunConfig& c);

// ---------------------------------------------------------------------------
// Snapshot files: "KPI1", u32 version, u32 Nx, u32 Ny, f64 Lx, f64 Ly, f64 t,
// then Nx Ny little-endian f64 physical samples with x fastest.

constexpr uint32_t kSnapshotVersion = 1;

struct Snapshot {
  Field u;  // physical
  double t = 0.0;
};

std::string encode_snapshot(const Field& u, double t);
Snapshot decode_snapshot(const std::string& bytes);
void write_snapshot(const std::string& path, const Field& u, double t);
Snapshot read_snapshot(const std::string& path);
// All *.kpi1 files of a directory, ordered by time.
std::vector<Snapshot> read_snapshot_dir(const std::string& dir);

// ---------------------------------------------------------------------------
// Serialization

std::string format_double(double x);  // %.17g
// Writes to a temporary file in the same directory and renames it into place.
void write_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);
std::string dump_json(const json& j);
std::string monitors_csv(const std::vector<Monitor>& m);
std::string report_csv(const ExperimentReport& r);
// Hex SHA-1 of "blob <size>\0" + content, as git computes object ids.
std::string git_blob_hash(const std::string& content);

// ---------------------------------------------------------------------------
// Commands. Each returns an ExitCode and prints errors to stderr.

struct CommonOptions {
  std::string config;  // empty: defaults
  std::string out;     // overrides output.dir
  std::optional<uint64_t> seed;
  int threads = 0;
};

struct NormsOptions {
  std::string snapshots;
  std::vector<std::string> norms;  // E<s>, Ebar<s>, F<s>, N<s>, B<s>, NL<s>, Fbar0, Nbar0, Bbar0, L4
  double T = 1.0;
  int sign = kKPI;
  std::string out = "out";
  int threads = 0;
};

struct VerifyOptions {
  std::string lemma;
  // k, k1, k2, k3, j1, j2, j3, l1, l2, l3, ppw, points. One entry may be a range "a..b"
  // (integer steps); the summary then carries the slope of log2(max gain) against it.
  std::map<std::string, std::string> params;
  int trials = 24;
  uint64_t seed = 1;
  bool refine = true;
  std::string out = "out";
  int threads = 0;
};

// Flag value if positive, else KPI_LAB_THREADS, else 0 (hardware concurrency).
int resolve_threads(int flag);
std::vector<std::string> verify_lemmas();

int cmd_solve(const CommonOptions& o);
int cmd_norms(const NormsOptions& o);
int cmd_verify(const VerifyOptions& o);
int cmd_experiment(const std::string& name, const CommonOptions& o);

}  // namespace kplab
