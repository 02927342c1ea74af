#include "kplab/cli_io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "kplab/dyadic.hpp"
#include "kplab/errors.hpp"
#include "kplab/estimates.hpp"
#include "kplab/norms.hpp"
#include "kplab/parallel.hpp"

namespace fs = std::filesystem;

namespace kplab {

namespace {

std::string join_key(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

void check_keys(const json& o, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!o.is_object()) throw ConfigError("config: " + (path.empty() ? "document" : path) + " must be an object");
  for (auto it = o.begin(); it != o.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw ConfigError("config: unknown key '" + join_key(path, it.key()) + "'");
  }
}

[[noreturn]] void bad_type(const std::string& key, const char* what) {
  throw ConfigError("config: " + key + " must be " + what);
}

void read_value(const json& v, const std::string& key, int& dst) {
  if (!v.is_number_integer()) bad_type(key, "an integer");
  auto x = v.get<int64_t>();
  if (x < INT32_MIN || x > INT32_MAX) bad_type(key, "a 32-bit integer");
  dst = static_cast<int>(x);
}
void read_value(const json& v, const std::string& key, uint64_t& dst) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<int64_t>() >= 0))
    bad_type(key, "a non-negative integer");
  dst = v.get<uint64_t>();
}
void read_value(const json& v, const std::string& key, double& dst) {
  if (!v.is_number()) bad_type(key, "a number");
  dst = v.get<double>();
}
void read_value(const json& v, const std::string& key, bool& dst) {
  if (!v.is_boolean()) bad_type(key, "a boolean");
  dst = v.get<bool>();
}
void read_value(const json& v, const std::string& key, std::string& dst) {
  if (!v.is_string()) bad_type(key, "a string");
  dst = v.get<std::string>();
}
template <class T>
void read_value(const json& v, const std::string& key, std::vector<T>& dst) {
  if (!v.is_array()) bad_type(key, "an array");
  std::vector<T> out(v.size());
  for (size_t i = 0; i < v.size(); ++i) read_value(v[i], key + "[" + std::to_string(i) + "]", out[i]);
  dst = std::move(out);
}

template <class T>
void get(const json& o, const std::string& path, const char* key, T& dst) {
  auto it = o.find(key);
  if (it != o.end()) read_value(*it, join_key(path, key), dst);
}

const json* section(const json& j, const char* name) {
  auto it = j.find(name);
  return it == j.end() ? nullptr : &*it;
}

bool is_known_experiment(const std::string& name) {
  auto n = experiment_names();
  return std::find(n.begin(), n.end(), name) != n.end();
}

std::string experiment_list() {
  std::string s;
  for (const auto& n : experiment_names()) s += (s.empty() ? "" : ", ") + n;
  return s;
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError("config: " + msg);
}

void validate(const RunConfig& c) {
  require(c.sign == 1 || c.sign == -1, "solver.sign must be -1 (KP-I) or +1 (KP-II)");
  require(c.dt > 0 && std::isfinite(c.dt), "solver.dt must be positive");
  require(c.T >= 0 && std::isfinite(c.T), "solver.T must be non-negative");
  require(c.snapshot_stride >= 1, "solver.snapshot_stride must be >= 1");
  require(c.epsilon0 >= 0, "solver.epsilon0 must be >= 0");
  require(c.data.amplitude >= 0, "data.amplitude must be >= 0");
  const char* kinds[] = {"zero", "smooth", "rough", "cosine"};
  require(std::find(std::begin(kinds), std::end(kinds), c.data.kind) != std::end(kinds),
          "data.recipe must be one of zero, smooth, rough, cosine");
  require(c.data.rough_s > 0, "data.rough_s must be positive");
  require(c.sweep.runs >= 0, "experiment.sweep.runs must be >= 0");
  for (double d : c.sweep.dt) require(d > 0, "experiment.sweep.dt entries must be positive");
  for (const auto& f : c.output.formats)
    require(f == "csv" || f == "json", "output.formats entries must be \"csv\" or \"json\"");
  require(!c.output.dir.empty(), "output.dir must not be empty");
}

std::string exit_name(int code) {
  switch (code) {
    case kExitConfig: return "config error";
    case kExitBlowUp: return "blow-up";
    case kExitConstraint: return "constraint violation";
    default: return "error";
  }
}

template <class F>
int guarded(F&& fn) {
  int code = kExitOk;
  std::string msg;
  try {
    return fn();
  } catch (const BlowUpError& e) {
    code = kExitBlowUp;
    msg = e.what();
  } catch (const ConstraintError& e) {
    code = kExitConstraint;
    msg = e.what();
  } catch (const ResolutionError& e) {
    code = kExitConstraint;
    msg = e.what();
  } catch (const ConfigError& e) {
    code = kExitConfig;
    msg = e.what();
  } catch (const ParameterError& e) {
    code = kExitConfig;
    msg = e.what();
  } catch (const json::exception& e) {
    code = kExitConfig;
    msg = std::string("config: ") + e.what();
  } catch (const fs::filesystem_error& e) {
    code = kExitConfig;
    msg = e.what();
  }
  std::cerr << "kplab: " << exit_name(code) << ": " << msg << "\n";
  return code;
}

bool wants(const OutputConfig& o, const char* f) {
  return std::find(o.formats.begin(), o.formats.end(), f) != o.formats.end();
}

RunConfig load_with_overrides(const CommonOptions& o, const std::string& experiment) {
  json j = json::object();
  if (!o.config.empty()) {
    try {
      j = json::parse(read_file(o.config));
    } catch (const json::parse_error& e) {
      throw ConfigError("config: " + o.config + ": " + e.what());
    }
  }
  if (!experiment.empty()) {
    if (!j.is_object()) throw ConfigError("config: document must be an object");
    if (!j.contains("experiment")) j["experiment"] = json::object();
    if (!j["experiment"].is_object()) throw ConfigError("config: experiment must be an object");
    j["experiment"]["name"] = experiment;
  }
  RunConfig c = parse_config(j);
  if (o.seed) c.data.seed = *o.seed;
  if (!o.out.empty()) c.output.dir = o.out;
  return c;
}

std::string snapshot_name(size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "snap_%06zu.kpi1", i);
  return buf;
}

template <class T>
void put_le(std::string& s, T v) {
  static_assert(sizeof(T) == 4 || sizeof(T) == 8);
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  s.append(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T get_le(const std::string& s, size_t& pos) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, s.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  pos += sizeof(T);
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

RunConfig default_run_config(const std::string& experiment) {
  if (!experiment.empty() && !is_known_experiment(experiment))
    throw ConfigError("unknown experiment '" + experiment + "' (available: " + experiment_list() + ")");
  ExperimentSpec s = default_spec(experiment);
  RunConfig c;
  c.grid = s.solver.grid;
  c.sign = s.solver.sign;
  c.dt = s.solver.dt;
  c.T = s.solver.T;
  c.dealias = s.solver.dealias;
  c.snapshot_stride = s.solver.snapshot_stride;
  c.data = s.data;
  c.experiment = experiment;
  c.sweep = s.sweep;
  return c;
}

RunConfig parse_config(const json& j) {
  check_keys(j, "", {"grid", "solver", "data", "experiment", "output"});
  std::string name;
  if (const json* e = section(j, "experiment")) {
    check_keys(*e, "experiment", {"name", "sweep"});
    get(*e, "experiment", "name", name);
  }
  RunConfig c = default_run_config(name);
  if (const json* g = section(j, "grid")) {
    check_keys(*g, "grid", {"Nx", "Ny", "Lx", "Ly"});
    int nx = c.grid.nx, ny = c.grid.ny;
    double lx = c.grid.lx, ly = c.grid.ly;
    get(*g, "grid", "Nx", nx);
    get(*g, "grid", "Ny", ny);
    get(*g, "grid", "Lx", lx);
    get(*g, "grid", "Ly", ly);
    c.grid = SpectralGrid(nx, ny, lx, ly);
  }
  if (const json* s = section(j, "solver")) {
    check_keys(*s, "solver", {"sign", "dt", "T", "dealias", "snapshot_stride", "symmetric", "epsilon0"});
    get(*s, "solver", "sign", c.sign);
    get(*s, "solver", "dt", c.dt);
    get(*s, "solver", "T", c.T);
    get(*s, "solver", "dealias", c.dealias);
    get(*s, "solver", "snapshot_stride", c.snapshot_stride);
    get(*s, "solver", "symmetric", c.symmetric);
    get(*s, "solver", "epsilon0", c.epsilon0);
  }
  if (const json* d = section(j, "data")) {
    check_keys(*d, "data", {"recipe", "seed", "amplitude", "rough_s"});
    get(*d, "data", "recipe", c.data.kind);
    get(*d, "data", "seed", c.data.seed);
    get(*d, "data", "amplitude", c.data.amplitude);
    get(*d, "data", "rough_s", c.data.rough_s);
  }
  if (const json* e = section(j, "experiment")) {
    if (const json* w = section(*e, "sweep")) {
      const std::string p = "experiment.sweep";
      check_keys(*w, p, {"K", "dt", "lambda", "amplitudes", "sigma", "runs", "refine"});
      get(*w, p, "K", c.sweep.K);
      get(*w, p, "dt", c.sweep.dt);
      get(*w, p, "lambda", c.sweep.lambda);
      get(*w, p, "amplitudes", c.sweep.amplitudes);
      get(*w, p, "sigma", c.sweep.sigma);
      get(*w, p, "runs", c.sweep.runs);
      get(*w, p, "refine", c.sweep.refine);
    }
  }
  if (const json* o = section(j, "output")) {
    check_keys(*o, "output", {"dir", "formats"});
    get(*o, "output", "dir", c.output.dir);
    get(*o, "output", "formats", c.output.formats);
  }
  validate(c);
  return c;
}

json echo_config(const RunConfig& c) {
  json j;
  j["grid"] = {{"Nx", c.grid.nx}, {"Ny", c.grid.ny}, {"Lx", c.grid.lx}, {"Ly", c.grid.ly}};
  j["solver"] = {{"sign", c.sign},
                 {"dt", c.dt},
                 {"T", c.T},
                 {"dealias", c.dealias},
                 {"snapshot_stride", c.snapshot_stride},
                 {"symmetric", c.symmetric},
                 {"epsilon0", c.epsilon0}};
  j["data"] = {{"recipe", c.data.kind},
               {"seed", c.data.seed},
               {"amplitude", c.data.amplitude},
               {"rough_s", c.data.rough_s}};
  json sweep = {{"K", c.sweep.K},
                {"dt", c.sweep.dt},
                {"lambda", c.sweep.lambda},
                {"amplitudes", c.sweep.amplitudes},
                {"sigma", c.sweep.sigma},
                {"runs", c.sweep.runs},
                {"refine", c.sweep.refine}};
  j["experiment"] = {{"name", c.experiment}, {"sweep", sweep}};
  j["output"] = {{"dir", c.output.dir}, {"formats", c.output.formats}};
  return j;
}

RunConfig load_config(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError("config: " + path + ": " + e.what());
  }
  return parse_config(j);
}

SolverConfig solver_config(const RunConfig& c) {
  SolverConfig s;
  s.grid = c.grid;
  s.sign = c.sign;
  s.dt = c.dt;
  s.T = c.T;
  s.dealias = c.dealias;
  s.snapshot_stride = c.snapshot_stride;
  return s;
}

ExperimentSpec experiment_spec(const RunConfig& c) {
  ExperimentSpec s;
  s.name = c.experiment;
  s.solver = solver_config(c);
  s.data = c.data;
  s.sweep = c.sweep;
  return s;
}

// ---------------------------------------------------------------------------
// Snapshots

std::string encode_snapshot(const Field& u, double t) {
  Field p = to_physical(u);
  const auto& g = p.grid;
  std::string s;
  s.reserve(40 + 8 * g.size());
  s.append("KPI1", 4);
  put_le<uint32_t>(s, kSnapshotVersion);
  put_le<uint32_t>(s, static_cast<uint32_t>(g.nx));
  put_le<uint32_t>(s, static_cast<uint32_t>(g.ny));
  put_le<double>(s, g.lx);
  put_le<double>(s, g.ly);
  put_le<double>(s, t);
  for (const auto& z : p.data) put_le<double>(s, z.real());
  return s;
}

Snapshot decode_snapshot(const std::string& b) {
  if (b.size() < 40 || b.compare(0, 4, "KPI1") != 0) throw ConfigError("snapshot: bad magic or truncated header");
  size_t pos = 4;
  uint32_t ver = get_le<uint32_t>(b, pos);
  if (ver != kSnapshotVersion) throw ConfigError("snapshot: unsupported version " + std::to_string(ver));
  uint32_t nx = get_le<uint32_t>(b, pos), ny = get_le<uint32_t>(b, pos);
  double lx = get_le<double>(b, pos), ly = get_le<double>(b, pos), t = get_le<double>(b, pos);
  if (nx > (1u << 16) || ny > (1u << 16)) throw ConfigError("snapshot: grid too large");
  size_t n = static_cast<size_t>(nx) * ny;
  if (b.size() != 40 + 8 * n) throw ConfigError("snapshot: size does not match the header");
  Snapshot s;
  s.t = t;
  s.u = Field(SpectralGrid(static_cast<int>(nx), static_cast<int>(ny), lx, ly), Repr::Physical);
  for (size_t i = 0; i < n; ++i) s.u.data[i] = cplx(get_le<double>(b, pos), 0.0);
  return s;
}

void write_snapshot(const std::string& path, const Field& u, double t) {
  write_atomic(path, encode_snapshot(u, t));
}

Snapshot read_snapshot(const std::string& path) {
  try {
    return decode_snapshot(read_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::vector<Snapshot> read_snapshot_dir(const std::string& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw ConfigError("snapshots: '" + dir + "' is not a directory");
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".kpi1") files.push_back(e.path().string());
  std::sort(files.begin(), files.end());
  std::vector<Snapshot> out;
  for (const auto& f : files) out.push_back(read_snapshot(f));
  std::stable_sort(out.begin(), out.end(), [](const Snapshot& a, const Snapshot& b) { return a.t < b.t; });
  for (size_t i = 1; i < out.size(); ++i)
    if (!(out[i].u.grid == out[0].u.grid)) throw ConfigError("snapshots: files in '" + dir + "' use different grids");
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_atomic(const std::string& path, const std::string& content) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  fs::path tmp = p;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError("cannot write '" + tmp.string() + "'");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw ConfigError("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, p);
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

std::string monitors_csv(const std::vector<Monitor>& m) {
  std::string s = "t,E0,E1,L2,E1norm,maxabs\n";
  for (const auto& r : m)
    s += format_double(r.t) + ',' + format_double(r.E0) + ',' + format_double(r.E1) + ',' +
         format_double(r.L2) + ',' + format_double(r.E1norm) + ',' + format_double(r.maxabs) + '\n';
  return s;
}

std::string report_csv(const ExperimentReport& r) {
  std::string s;
  for (size_t i = 0; i < r.columns.size(); ++i) s += (i ? "," : "") + r.columns[i];
  s += '\n';
  for (const auto& row : r.rows) {
    for (size_t i = 0; i < row.size(); ++i) s += (i ? "," : "") + format_double(row[i]);
    s += '\n';
  }
  return s;
}

std::string git_blob_hash(const std::string& content) {
  std::string msg = "blob " + std::to_string(content.size()) + '\0' + content;
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(msg.data(), msg.size(), md, &len, EVP_sha1(), nullptr))
    throw std::runtime_error("SHA-1 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

int resolve_threads(int flag) {
  if (flag > 0) return flag;
  if (const char* e = std::getenv("KPI_LAB_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(e, &end, 10);
    if (end != e && *end == '\0' && v > 0 && v < 4096) return static_cast<int>(v);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// solve

int cmd_solve(const CommonOptions& o) {
  return guarded([&] {
    set_thread_count(resolve_threads(o.threads));
    RunConfig c = load_with_overrides(o, "");
    Field phi = make_datum(c.grid, c.data);
    if (c.epsilon0 > 0) {
      double e1 = norm_E_sigma(phi, 1);
      if (e1 > c.epsilon0 * (1 + 1e-12))
        throw ConstraintError("data.amplitude: ||phi||_{E^1} = " + format_double(e1) +
                              " exceeds solver.epsilon0 = " + format_double(c.epsilon0));
    }
    SolverConfig s = solver_config(c);
    Trajectory tr = c.symmetric ? solve_symmetric(s, phi) : solve(s, phi);
    fs::path out(c.output.dir), snaps = out / "snapshots";
    fs::create_directories(snaps);
    for (const auto& e : fs::directory_iterator(snaps))
      if (e.path().extension() == ".kpi1") fs::remove(e.path());
    for (size_t i = 0; i < tr.snapshots.size(); ++i)
      write_snapshot((snaps / snapshot_name(i)).string(), tr.snapshots[i], tr.times[i]);
    write_atomic((out / "monitors.csv").string(), monitors_csv(tr.monitors));
    write_atomic((out / "config.json").string(), dump_json(echo_config(c)));
    return int(kExitOk);
  });
}

// ---------------------------------------------------------------------------
// norms

namespace {

struct NormRequest {
  std::string family;  // E, Ebar, F, N, B, NL, Fbar, Nbar, Bbar, L4
  int sigma = 0;
};

NormRequest parse_norm(const std::string& s) {
  static const char* fams[] = {"Ebar", "Fbar", "Nbar", "Bbar", "NL", "E", "F", "N", "B"};
  if (s == "L4") return {"L4", 0};
  for (const char* f : fams) {
    std::string p(f);
    if (s.rfind(p, 0) != 0 || s.size() == p.size()) continue;
    std::string rest = s.substr(p.size());
    if (!std::all_of(rest.begin(), rest.end(), ::isdigit) || rest.size() > 1) break;
    int sig = rest[0] - '0';
    bool barred = p.size() == 4;
    if (barred && sig != 0) break;
    if (!barred && p != "E" && (sig < 1 || sig > 3)) break;
    return {p, sig};
  }
  throw ConfigError("norms: unknown norm '" + s +
                    "' (available: E<s>, Ebar<s>, F<s>, N<s>, B<s>, NL<s> for s in 1..3, Fbar0, Nbar0, "
                    "Bbar0, L4)");
}

}  // namespace

int cmd_norms(const NormsOptions& o) {
  return guarded([&] {
    set_thread_count(resolve_threads(o.threads));
    if (!(o.T >= 0) || !std::isfinite(o.T)) throw ConfigError("norms: T must be non-negative");
    std::vector<NormRequest> req;
    for (const auto& n : o.norms) req.push_back(parse_norm(n));
    json report;
    report["T"] = o.T;
    report["snapshot_dir"] = o.snapshots;
    report["values"] = json::object();
    report["unresolved"] = json::array();
    report["provenance"] = json::object();
    int code = kExitOk;
    if (!req.empty()) {
      std::vector<Snapshot> snaps = read_snapshot_dir(o.snapshots);
      if (snaps.empty()) throw ConfigError("snapshots: no .kpi1 files in '" + o.snapshots + "'");
      Trajectory tr;
      tr.sign = o.sign;
      for (const auto& s : snaps) {
        tr.times.push_back(s.t);
        tr.snapshots.push_back(to_fourier(s.u));
        tr.monitors.push_back(monitor(tr.snapshots.back(), s.t, o.sign));
      }
      report["snapshots"] = tr.times.size();
      size_t at = 0;
      for (size_t i = 1; i < tr.times.size(); ++i)
        if (std::abs(tr.times[i] - o.T) < std::abs(tr.times[at] - o.T)) at = i;
      std::optional<Trajectory> nl;
      for (size_t r = 0; r < req.size(); ++r) {
        const auto& q = req[r];
        std::string param = q.family == "L4" ? "-" : std::to_string(q.sigma);
        std::string key = norm_key(q.family, param, o.T);
        try {
          double v = 0.0;
          std::string prov;
          if (q.family == "E") {
            v = norm_E_sigma(tr.snapshots[at], q.sigma);
            prov = "snapshot at t = " + format_double(tr.times[at]);
          } else if (q.family == "Ebar") {
            v = norm_Ebar_sigma(tr.snapshots[at], q.sigma);
            prov = "snapshot at t = " + format_double(tr.times[at]);
          } else if (q.family == "F") {
            v = norm_F_sigma_T(tr, q.sigma, o.T);
          } else if (q.family == "N") {
            v = norm_N_sigma_T(tr, q.sigma, o.T);
          } else if (q.family == "B") {
            v = norm_B_sigma_T(tr, q.sigma, o.T);
          } else if (q.family == "NL") {
            if (!nl) nl = map_trajectory(tr, [](const Field& u) { return nonlinearity(u, true); });
            v = norm_N_sigma_T(*nl, q.sigma, o.T);
            prov = "N norm of -d_x(u^2/2)";
          } else if (q.family == "Fbar") {
            v = norm_Fbar0_T(tr, o.T);
          } else if (q.family == "Nbar") {
            v = norm_Nbar0_T(tr, o.T);
          } else if (q.family == "Bbar") {
            v = norm_Bbar0_T(tr, o.T);
          } else {
            v = norm_L4_spacetime(tr);
            prov = "all snapshots";
          }
          if (q.family != "E" && q.family != "Ebar" && q.family != "L4") {
            auto bands = resolved_bands(tr.snapshots.front().grid);
            prov = "bands " + std::to_string(bands.front()) + ".." + std::to_string(bands.back()) +
                   (prov.empty() ? "" : "; " + prov);
          }
          report["values"][key] = v;
          if (!prov.empty()) report["provenance"][key] = prov;
        } catch (const ResolutionError& e) {
          report["unresolved"].push_back(key);
          report["provenance"][key] = e.what();
          std::cerr << "kplab: resolution error: " << o.norms[r] << ": " << e.what() << "\n";
          code = kExitConstraint;
        }
      }
    }
    write_atomic((fs::path(o.out) / "norms.json").string(), dump_json(report));
    return code;
  });
}

// ---------------------------------------------------------------------------
// verify

std::vector<std::string> verify_lemmas() {
  return {"5.1a", "5.1b", "5.1b-random", "5.2", "5.3-jj1", "5.3-low", "5.3-high", "6.1a", "6.1b",
          "7.1",  "7.2",  "7.3",         "7.4", "7.5",     "8.1",     "8.2",      "8.3",  "8.4"};
}

namespace {

struct VerifyParams {
  std::map<std::string, double> v;
  int i(const std::string& k, const std::string& lemma) const {
    auto it = v.find(k);
    if (it == v.end()) throw ConfigError("verify " + lemma + ": missing parameter " + k);
    if (it->second != std::floor(it->second)) throw ConfigError("verify: parameter " + k + " must be an integer");
    return static_cast<int>(it->second);
  }
  double d(const std::string& k, const std::string& lemma) const {
    auto it = v.find(k);
    if (it == v.end()) throw ConfigError("verify " + lemma + ": missing parameter " + k);
    return it->second;
  }
  int opt(const std::string& k, int def) const {
    auto it = v.find(k);
    return it == v.end() ? def : static_cast<int>(it->second);
  }
};

double parse_number(const std::string& key, const std::string& s) {
  char* end = nullptr;
  double x = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0' || !std::isfinite(x))
    throw ConfigError("verify: parameter " + key + " = '" + s + "' is not a number");
  return x;
}

std::vector<EstimateTrial> run_lemma(const std::string& lemma, const VerifyParams& p, int trials,
                                     uint64_t seed, bool fine) {
  TrialOptions t;
  t.trials = trials;
  t.seed = seed;
  t.ppw = p.opt("ppw", t.ppw) * (fine ? 2 : 1);
  DyadicOptions d;
  d.trials = trials;
  d.seed = seed;
  d.points = p.opt("points", d.points) * (fine ? 2 : 1);
  auto k3 = [&] { return std::array<int, 3>{p.i("k1", lemma), p.i("k2", lemma), p.i("k3", lemma)}; };
  auto j3 = [&] { return std::array<int, 3>{p.i("j1", lemma), p.i("j2", lemma), p.i("j3", lemma)}; };
  if (lemma == "5.1a") return check_lemma51a(k3(), j3(), t);
  if (lemma == "5.1b")
    return check_lemma51b(k3(), {p.d("l1", lemma), p.d("l2", lemma), p.d("l3", lemma)}, j3(), t);
  if (lemma == "5.1b-random") return check_lemma51b_random(t);
  if (lemma == "5.2") return check_lemma52(k3(), j3(), t);
  if (lemma.rfind("5.3-", 0) == 0) {
    Cor53Branch b = lemma == "5.3-jj1" ? Cor53Branch::JJ1 : lemma == "5.3-low" ? Cor53Branch::LowK : Cor53Branch::HighK;
    return check_cor53(b, {p.i("k1", lemma), p.i("k2", lemma), p.i("k", lemma)}, j3(), t);
  }
  if (lemma == "6.1a") return check_trilinear_energy_a(k3(), d);
  if (lemma == "6.1b") return check_trilinear_energy_b(p.i("k", lemma), p.i("k1", lemma), d);
  return check_dyadic_bilinear(parse_dyadic_lemma(lemma), p.i("k", lemma), p.i("k1", lemma),
                               p.i("k2", lemma), d);
}

}  // namespace

int cmd_verify(const VerifyOptions& o) {
  return guarded([&] {
    set_thread_count(resolve_threads(o.threads));
    auto lemmas = verify_lemmas();
    if (std::find(lemmas.begin(), lemmas.end(), o.lemma) == lemmas.end()) {
      std::string list;
      for (const auto& l : lemmas) list += (list.empty() ? "" : ", ") + l;
      throw ConfigError("verify: unknown lemma '" + o.lemma + "' (available: " + list + ")");
    }
    if (o.trials < 0) throw ConfigError("verify: trials must be >= 0");
    static const char* known[] = {"k", "k1", "k2", "k3", "j1", "j2", "j3", "l1", "l2", "l3", "ppw", "points"};
    VerifyParams base;
    std::string sweep_key;
    std::vector<double> sweep_vals;
    for (const auto& [k, s] : o.params) {
      if (std::find(std::begin(known), std::end(known), k) == std::end(known))
        throw ConfigError("verify: unknown parameter '" + k + "'");
      auto dots = s.find("..");
      if (dots == std::string::npos) {
        base.v[k] = parse_number(k, s);
        continue;
      }
      if (!sweep_key.empty()) throw ConfigError("verify: only one parameter may be a range");
      double a = parse_number(k, s.substr(0, dots)), b = parse_number(k, s.substr(dots + 2));
      if (a != std::floor(a) || b != std::floor(b) || a > b)
        throw ConfigError("verify: range for " + k + " must be integers a..b with a <= b");
      sweep_key = k;
      for (double x = a; x <= b; x += 1) sweep_vals.push_back(x);
    }
    if (sweep_key.empty()) sweep_vals.push_back(0.0);

    std::vector<EstimateTrial> all, all_fine;
    std::vector<double> gains, ratios_fine;
    for (double x : sweep_vals) {
      VerifyParams p = base;
      if (!sweep_key.empty()) p.v[sweep_key] = x;
      auto tr = run_lemma(o.lemma, p, o.trials, o.seed, false);
      gains.push_back(max_gain(tr));
      all.insert(all.end(), tr.begin(), tr.end());
      if (o.refine && o.trials > 0) {
        auto tf = run_lemma(o.lemma, p, o.trials, o.seed, true);
        all_fine.insert(all_fine.end(), tf.begin(), tf.end());
      }
    }
    json summary;
    summary["lemma"] = o.lemma;
    json params = json::object();
    for (const auto& [k, s] : o.params) params[k] = s;
    summary["params"] = params;
    summary["trials"] = o.trials;
    summary["seed"] = o.seed;
    summary["max_ratio"] = max_ratio(all);
    summary["max_gain"] = max_gain(all);
    if (!sweep_key.empty()) {
      json fit;
      fit["variable"] = sweep_key;
      fit["values"] = sweep_vals;
      fit["max_gain"] = gains;
      bool ok = sweep_vals.size() >= 2 &&
                std::all_of(gains.begin(), gains.end(), [](double g) { return g > 0; });
      fit["log2_slope"] = ok ? json(fit_log2_slope(sweep_vals, gains)) : json(nullptr);
      summary["slope_fits"] = json::array({fit});
    } else {
      summary["slope_fits"] = json::array();
    }
    if (!all_fine.empty()) {
      double a = max_ratio(all), b = max_ratio(all_fine);
      double ch = std::abs(b - a) / std::max(std::abs(a), 1e-300);
      summary["refined_max_ratio"] = b;
      summary["refinement_change"] = ch;
      summary["refinement_stable"] = ch <= 0.25;
    } else {
      summary["refinement_stable"] = nullptr;
    }
    fs::path out(o.out);
    write_atomic((out / "trials.csv").string(), trials_csv(all));
    write_atomic((out / "summary.json").string(), dump_json(summary));
    return int(kExitOk);
  });
}

// ---------------------------------------------------------------------------
// experiment

int cmd_experiment(const std::string& name, const CommonOptions& o) {
  return guarded([&] {
    set_thread_count(resolve_threads(o.threads));
    if (!is_known_experiment(name))
      throw ConfigError("unknown experiment '" + name + "' (available: " + experiment_list() + ")");
    RunConfig c = load_with_overrides(o, name);
    json echo = echo_config(c);
    std::string hash = git_blob_hash(dump_json(echo));
    ExperimentReport r = run_experiment(experiment_spec(c));
    fs::path out(c.output.dir);
    if (wants(c.output, "csv")) write_atomic((out / (name + ".csv")).string(), report_csv(r));
    if (wants(c.output, "json")) {
      json s;
      s["experiment"] = name;
      s["input_hash"] = hash;
      s["columns"] = r.columns;
      json sum = json::object();
      for (const auto& [k, v] : r.summary) sum[k] = v;
      s["summary"] = sum;
      json notes = json::object();
      for (const auto& [k, v] : r.notes) notes[k] = v;
      s["notes"] = notes;
      s["config"] = echo;
      write_atomic((out / (name + ".json")).string(), dump_json(s));
    }
    write_atomic((out / "config.json").string(), dump_json(echo));
    return int(kExitOk);
  });
}

}  // namespace kplab
