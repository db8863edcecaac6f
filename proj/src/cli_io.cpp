#include "gpbif/cli_io.hpp"

#include <bit>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include <json.hpp>

namespace gpbif {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------- config

namespace {

void env_double(const char* name, double& v) {
  const char* s = std::getenv(name);
  if (!s) return;
  char* end = nullptr;
  double x = std::strtod(s, &end);
  if (end == s || *end != '\0')
    throw ConfigError(std::string(name) + ": not a number: " + s);
  v = x;
}

void env_int(const char* name, int& v) {
  const char* s = std::getenv(name);
  if (!s) return;
  char* end = nullptr;
  long x = std::strtol(s, &end, 10);
  if (end == s || *end != '\0')
    throw ConfigError(std::string(name) + ": not an integer: " + s);
  v = static_cast<int>(x);
}

void env_unsigned(const char* name, unsigned& v) {
  int x = static_cast<int>(v);
  env_int(name, x);
  if (x < 0) throw ConfigError(std::string(name) + ": negative");
  v = static_cast<unsigned>(x);
}

void env_string(const char* name, std::string& v) {
  if (const char* s = std::getenv(name)) v = s;
}

void env_bool(const char* name, bool& v) {
  const char* s = std::getenv(name);
  if (!s) return;
  std::string t(s);
  if (t == "1" || t == "true" || t == "on")
    v = true;
  else if (t == "0" || t == "false" || t == "off")
    v = false;
  else
    throw ConfigError(std::string(name) + ": not a boolean: " + t);
}

void apply_env_overrides(RunConfig& c) {
  env_double("GPBIF_MESH_HALF_WIDTH", c.mesh.half_width);
  env_int("GPBIF_MESH_NX", c.mesh.nx);
  env_int("GPBIF_MESH_DEGREE", c.mesh.degree);
  env_double("GPBIF_SWEEP_MU_MIN", c.sweep.mu_min);
  env_double("GPBIF_SWEEP_MU_MAX", c.sweep.mu_max);
  env_double("GPBIF_SWEEP_MU_STEP", c.sweep.mu_step);
  env_double("GPBIF_SWEEP_OFFLINE_MU_STEP", c.sweep.offline_mu_step);
  env_double("GPBIF_NEWTON_TOL", c.newton.tol);
  env_int("GPBIF_NEWTON_MAX_ITER", c.newton.max_iter);
  env_double("GPBIF_NEWTON_DAMPING", c.newton.damping);
  env_string("GPBIF_NEWTON_CRITERION", c.newton.criterion);
  env_double("GPBIF_CONTINUATION_EPS_BIF", c.continuation.eps_bif);
  env_double("GPBIF_CONTINUATION_GUESS_AMPLITUDE", c.continuation.guess_amplitude);
  env_double("GPBIF_CONTINUATION_GUESS_OFFSET", c.continuation.guess_offset);
  env_string("GPBIF_CONTINUATION_EPS_NORM", c.continuation.eps_norm);
  env_double("GPBIF_POD_TOL", c.pod.tol);
  env_int("GPBIF_POD_N_MAX", c.pod.n_max);
  env_string("GPBIF_POD_NORM", c.pod.norm);
  env_int("GPBIF_DEIM_Q", c.deim.q);
  env_double("GPBIF_DEIM_TOL", c.deim.tol);
  env_bool("GPBIF_DEIM_ENABLED", c.deim.enabled);
  env_string("GPBIF_RUN_MODE", c.run.mode);
  env_string("GPBIF_RUN_OUTPUT_DIR", c.run.output_dir);
  env_unsigned("GPBIF_RUN_SEED", c.run.seed);
  env_int("GPBIF_RUN_THREADS", c.run.threads);
}

}  // namespace

RunConfig default_config() {
  RunConfig c;
  c.branches = {
      {{0, 0, false}, {}},
      {{0, 1, true}, {}},
      {{1, 1, false}, {}},
      {{0, 2, false}, {{0, 2, 1.0, 0.0}, {2, 0, 1.0, 0.0}}},  // ring
      // the structured mesh favors diagonal stripes, so seed them that way
      {{1, 0, false}, {{1, 0, 1.0, 0.0}, {0, 1, 1.0, 0.0}}},
      {{2, 0, false}, {}, 0.55},
  };
  return c;
}

std::string config_to_json(const RunConfig& c) {
  json j;
  j["mesh"] = {{"half_width", c.mesh.half_width},
               {"nx", c.mesh.nx},
               {"degree", c.mesh.degree}};
  j["sweep"] = {{"omega", c.sweep.omega},
                {"mu_min", c.sweep.mu_min},
                {"mu_max", c.sweep.mu_max},
                {"mu_step", c.sweep.mu_step},
                {"offline_mu_step", c.sweep.offline_mu_step}};
  j["branches"] = json::array();
  for (const BranchSpec& b : c.branches) {
    json jb = {{"m", b.label.m}, {"n", b.label.n}, {"vortex", b.label.vortex}};
    if (!b.guess_terms.empty()) {
      json terms = json::array();
      for (const GuessTerm& t : b.guess_terms)
        terms.push_back({t.m, t.n, t.phi, t.psi});
      jb["guess_terms"] = terms;
    }
    if (b.amplitude > 0.0) jb["amplitude"] = b.amplitude;
    j["branches"].push_back(jb);
  }
  j["newton"] = {{"tol", c.newton.tol},
                 {"max_iter", c.newton.max_iter},
                 {"damping", c.newton.damping},
                 {"criterion", c.newton.criterion}};
  j["continuation"] = {{"eps_bif", c.continuation.eps_bif},
                       {"guess_amplitude", c.continuation.guess_amplitude},
                       {"guess_offset", c.continuation.guess_offset},
                       {"eps_norm", c.continuation.eps_norm}};
  j["pod"] = {{"tol", c.pod.tol}, {"n_max", c.pod.n_max}, {"norm", c.pod.norm}};
  j["deim"] = {{"q", c.deim.q}, {"tol", c.deim.tol}, {"enabled", c.deim.enabled}};
  j["run"] = {{"mode", c.run.mode},
              {"output_dir", c.run.output_dir},
              {"seed", c.run.seed},
              {"threads", c.run.threads}};
  return j.dump(2) + "\n";
}

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse: ") + e.what());
  }
  RunConfig c = default_config();
  try {
    if (j.contains("mesh")) {
      const json& s = j["mesh"];
      c.mesh.half_width = s.value("half_width", c.mesh.half_width);
      c.mesh.nx = s.value("nx", c.mesh.nx);
      c.mesh.degree = s.value("degree", c.mesh.degree);
    }
    if (j.contains("sweep")) {
      const json& s = j["sweep"];
      if (s.contains("omega"))
        c.sweep.omega = s["omega"].get<std::vector<double>>();
      c.sweep.mu_min = s.value("mu_min", c.sweep.mu_min);
      c.sweep.mu_max = s.value("mu_max", c.sweep.mu_max);
      c.sweep.mu_step = s.value("mu_step", c.sweep.mu_step);
      c.sweep.offline_mu_step = s.value("offline_mu_step", c.sweep.offline_mu_step);
    }
    if (j.contains("branches")) {
      c.branches.clear();
      for (const json& jb : j["branches"]) {
        BranchSpec b;
        b.label.m = jb.at("m").get<int>();
        b.label.n = jb.at("n").get<int>();
        b.label.vortex = jb.value("vortex", false);
        if (jb.contains("guess_terms")) {
          for (const json& jt : jb["guess_terms"]) {
            if (!jt.is_array() || jt.size() != 4)
              throw ConfigError("guess_terms entries are [m, n, phi, psi]");
            b.guess_terms.push_back({jt[0].get<int>(), jt[1].get<int>(),
                                     jt[2].get<double>(), jt[3].get<double>()});
          }
        }
        b.amplitude = jb.value("amplitude", 0.0);
        c.branches.push_back(std::move(b));
      }
    }
    if (j.contains("newton")) {
      const json& s = j["newton"];
      c.newton.tol = s.value("tol", c.newton.tol);
      c.newton.max_iter = s.value("max_iter", c.newton.max_iter);
      c.newton.damping = s.value("damping", c.newton.damping);
      c.newton.criterion = s.value("criterion", c.newton.criterion);
    }
    if (j.contains("continuation")) {
      const json& s = j["continuation"];
      c.continuation.eps_bif = s.value("eps_bif", c.continuation.eps_bif);
      c.continuation.guess_amplitude =
          s.value("guess_amplitude", c.continuation.guess_amplitude);
      c.continuation.guess_offset =
          s.value("guess_offset", c.continuation.guess_offset);
      c.continuation.eps_norm = s.value("eps_norm", c.continuation.eps_norm);
    }
    if (j.contains("pod")) {
      const json& s = j["pod"];
      c.pod.tol = s.value("tol", c.pod.tol);
      c.pod.n_max = s.value("n_max", c.pod.n_max);
      c.pod.norm = s.value("norm", c.pod.norm);
    }
    if (j.contains("deim")) {
      const json& s = j["deim"];
      c.deim.q = s.value("q", c.deim.q);
      c.deim.tol = s.value("tol", c.deim.tol);
      c.deim.enabled = s.value("enabled", c.deim.enabled);
    }
    if (j.contains("run")) {
      const json& s = j["run"];
      c.run.mode = s.value("mode", c.run.mode);
      c.run.output_dir = s.value("output_dir", c.run.output_dir);
      c.run.seed = s.value("seed", c.run.seed);
      c.run.threads = s.value("threads", c.run.threads);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field: ") + e.what());
  }
  apply_env_overrides(c);
  c.validate();
  return c;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FileIoError("cannot open config: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

void save_config(const RunConfig& cfg, const fs::path& path) {
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw FileIoError("cannot write config: " + path.string());
  out << config_to_json(cfg);
}

void RunConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (!(mesh.half_width > 0.0)) fail("mesh.half_width must be positive");
  if (mesh.nx < 2) fail("mesh.nx must be at least 2");
  if (mesh.degree != 1 && mesh.degree != 2) fail("mesh.degree must be 1 or 2");
  if (sweep.omega.empty()) fail("sweep.omega must be nonempty");
  for (double w : sweep.omega)
    if (!(w > 0.0)) fail("sweep.omega entries must be positive");
  if (!(sweep.mu_step > 0.0)) fail("sweep.mu_step must be positive");
  if (!(sweep.offline_mu_step > 0.0))
    fail("sweep.offline_mu_step must be positive");
  if (sweep.mu_max < sweep.mu_min) fail("sweep.mu_max below sweep.mu_min");
  if (branches.empty()) fail("branches must be nonempty");
  for (const BranchSpec& b : branches) {
    if (b.label.m < 0 || b.label.n < 0) fail("branch labels must be nonnegative");
    if (b.amplitude < 0.0) fail("branch amplitude must be nonnegative");
  }
  if (!(newton.tol > 0.0)) fail("newton.tol must be positive");
  if (newton.max_iter < 1) fail("newton.max_iter must be at least 1");
  if (!(newton.damping > 0.0 && newton.damping <= 1.0))
    fail("newton.damping must be in (0, 1]");
  if (newton.criterion != "residual" && newton.criterion != "step")
    fail("newton.criterion must be 'residual' or 'step'");
  if (!(continuation.eps_bif > 0.0)) fail("continuation.eps_bif must be positive");
  if (continuation.guess_amplitude < 0.0)
    fail("continuation.guess_amplitude must be nonnegative");
  if (continuation.guess_offset < 0.0)
    fail("continuation.guess_offset must be nonnegative");
  if (continuation.eps_norm != "l2" && continuation.eps_norm != "h1")
    fail("continuation.eps_norm must be 'l2' or 'h1'");
  if (!(pod.tol > 0.0 && pod.tol < 1.0)) fail("pod.tol must be in (0, 1)");
  if (pod.n_max < 1) fail("pod.n_max must be at least 1");
  if (pod.norm != "l2" && pod.norm != "h1") fail("pod.norm must be 'l2' or 'h1'");
  if (deim.q < 0) fail("deim.q must be nonnegative");
  if (!(deim.tol > 0.0 && deim.tol < 1.0)) fail("deim.tol must be in (0, 1)");
  if (run.mode != "fom-trace" && run.mode != "offline" &&
      run.mode != "online-trace" && run.mode != "compare" && run.mode != "plot")
    fail("run.mode must be one of fom-trace, offline, online-trace, compare, plot");
  if (run.output_dir.empty()) fail("run.output_dir must be set");
  if (run.threads < 1) fail("run.threads must be at least 1");
}

namespace {

ParameterGrid make_grid(const RunConfig::SweepSection& sweep, double step,
                        const char* step_name) {
  ParameterGrid g;
  double span = sweep.mu_max - sweep.mu_min;
  Index count = 1 + static_cast<Index>(std::llround(span / step));
  if (count < 1) count = 1;
  double reached = sweep.mu_min + static_cast<double>(count - 1) * step;
  if (std::abs(reached - sweep.mu_max) >
      1e-9 * std::max({1.0, std::abs(sweep.mu_max), std::abs(sweep.mu_min)}))
    throw ConfigError(std::string("sweep.") + step_name +
                      " does not divide the mu range");
  g.mu = uniform_grid(sweep.mu_min, sweep.mu_max, count);
  g.omega = Eigen::Map<const Vec>(sweep.omega.data(),
                                  static_cast<Index>(sweep.omega.size()));
  g.validate();
  return g;
}

}  // namespace

ParameterGrid RunConfig::parameter_grid() const {
  return make_grid(sweep, sweep.mu_step, "mu_step");
}

ParameterGrid RunConfig::offline_grid() const {
  return make_grid(sweep, sweep.offline_mu_step, "offline_mu_step");
}

ContinuationConfig RunConfig::continuation_config() const {
  ContinuationConfig cc;
  cc.eps_bif = continuation.eps_bif;
  cc.guess_amplitude = continuation.guess_amplitude;
  cc.guess_offset = continuation.guess_offset;
  cc.eps_norm = continuation.eps_norm == "h1" ? Norm::H1 : Norm::L2;
  cc.newton.tol = newton.tol;
  cc.newton.max_iter = newton.max_iter;
  cc.newton.damping = newton.damping;
  cc.newton.criterion = newton.criterion == "step"
                            ? NewtonConfig::Criterion::StepNorm
                            : NewtonConfig::Criterion::ResidualNorm;
  return cc;
}

Norm RunConfig::pod_norm() const {
  return pod.norm == "l2" ? Norm::L2 : Norm::H1;
}

std::vector<BranchRequest> RunConfig::branch_requests() const {
  std::vector<BranchRequest> reqs;
  reqs.reserve(branches.size());
  for (const BranchSpec& b : branches)
    reqs.push_back({b.label, b.guess_terms, b.amplitude});
  return reqs;
}

// ------------------------------------------------------- binary matrices

namespace {

constexpr char kMagic[9] = "GPBIFMAT";
constexpr uint32_t kFormatVersion = 1;

void put_u64(std::string& out, uint64_t v) {
  for (int k = 0; k < 8; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
}

void put_u32(std::string& out, uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
}

uint64_t get_u64(const unsigned char* p) {
  uint64_t v = 0;
  for (int k = 7; k >= 0; --k) v = (v << 8) | p[k];
  return v;
}

uint32_t get_u32(const unsigned char* p) {
  uint32_t v = 0;
  for (int k = 3; k >= 0; --k) v = (v << 8) | p[k];
  return v;
}

}  // namespace

void write_matrix_file(const fs::path& path, const Mat& m) {
  std::string out;
  out.reserve(24 + 8 * static_cast<size_t>(m.size()));
  out.append(kMagic, 8);
  put_u32(out, kFormatVersion);
  put_u64(out, static_cast<uint64_t>(m.rows()));
  put_u64(out, static_cast<uint64_t>(m.cols()));
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i)
      put_u64(out, std::bit_cast<uint64_t>(m(i, j)));
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw FileIoError("cannot open for writing: " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw FileIoError("write failed: " + path.string());
}

Mat read_matrix_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FileIoError("cannot open: " + path.string());
  std::string data((std::istreambuf_iterator<char>(f)),
                   std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(data.data());
  if (data.size() < 8) {
    if (std::memcmp(data.data(), kMagic, data.size()) != 0)
      throw FormatError("bad magic: " + path.string());
    throw TruncatedPayload("header cut short: " + path.string());
  }
  if (std::memcmp(data.data(), kMagic, 8) != 0)
    throw FormatError("bad magic: " + path.string());
  if (data.size() < 28) throw TruncatedPayload("header cut short: " + path.string());
  uint32_t version = get_u32(p + 8);
  if (version != kFormatVersion)
    throw FormatError("unsupported version " + std::to_string(version) + ": " +
                      path.string());
  uint64_t rows = get_u64(p + 12);
  uint64_t cols = get_u64(p + 20);
  if (rows > (1u << 30) || cols > (1u << 30))
    throw FormatError("implausible dimensions: " + path.string());
  uint64_t need = 8 * rows * cols;
  uint64_t have = data.size() - 28;
  if (have < need) throw TruncatedPayload("payload cut short: " + path.string());
  if (have > need) throw FormatError("trailing bytes: " + path.string());
  Mat m(static_cast<Index>(rows), static_cast<Index>(cols));
  const unsigned char* q = p + 28;
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i, q += 8)
      m(i, j) = std::bit_cast<double>(get_u64(q));
  return m;
}

// ------------------------------------------------------------- CSV files

namespace {

constexpr const char* kDiagramHeader =
    "branch_m,branch_n,omega,mu,n_bosons,rho_inf,converged,newton_iters";

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

double parse_double(const std::string& s, const fs::path& path) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw FormatError("bad number '" + s + "' in " + path.string());
  return v;
}

int parse_int(const std::string& s, const fs::path& path) {
  char* end = nullptr;
  long v = std::strtol(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0')
    throw FormatError("bad integer '" + s + "' in " + path.string());
  return static_cast<int>(v);
}

}  // namespace

std::vector<DiagramRow> diagram_rows(const std::vector<BranchCurve>& curves) {
  std::vector<DiagramRow> rows;
  for (const BranchCurve& c : curves)
    for (const BranchRecord& r : c.records)
      rows.push_back({c.label.m, c.label.n, r.omega, r.mu, r.n_bosons, r.rho_inf,
                      r.converged, r.newton_iters});
  return rows;
}

void write_diagram_csv(const fs::path& path, const std::vector<DiagramRow>& rows) {
  std::string out(kDiagramHeader);
  out.push_back('\n');
  for (const DiagramRow& r : rows) {
    out += std::to_string(r.branch_m) + ',' + std::to_string(r.branch_n) + ',' +
           fmt(r.omega) + ',' + fmt(r.mu) + ',' + fmt(r.n_bosons) + ',' +
           fmt(r.rho_inf) + ',' + (r.converged ? "1" : "0") + ',' +
           std::to_string(r.newton_iters) + '\n';
  }
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw FileIoError("cannot open for writing: " + path.string());
  f << out;
  if (!f) throw FileIoError("write failed: " + path.string());
}

std::vector<DiagramRow> read_diagram_csv(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw FileIoError("cannot open: " + path.string());
  std::string line;
  if (!std::getline(f, line) || line != kDiagramHeader)
    throw FormatError("diagram header mismatch: " + path.string());
  std::vector<DiagramRow> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<std::string> c = split_csv_line(line);
    if (c.size() != 8)
      throw FormatError("diagram row needs 8 columns: " + path.string());
    DiagramRow r;
    r.branch_m = parse_int(c[0], path);
    r.branch_n = parse_int(c[1], path);
    r.omega = parse_double(c[2], path);
    r.mu = parse_double(c[3], path);
    r.n_bosons = parse_double(c[4], path);
    r.rho_inf = parse_double(c[5], path);
    r.converged = parse_int(c[6], path) != 0;
    r.newton_iters = parse_int(c[7], path);
    rows.push_back(r);
  }
  return rows;
}

// ---------------------------------------------------------- state archive

void save_state_archive(const fs::path& dir, const SnapshotSet& snaps) {
  fs::create_directories(dir);
  write_matrix_file(dir / "states.bin", snaps.matrix());
  std::string out = "branch_m,branch_n,vortex,omega,mu\n";
  for (const SnapshotTag& t : snaps.tags)
    out += std::to_string(t.label.m) + ',' + std::to_string(t.label.n) + ',' +
           (t.label.vortex ? "1" : "0") + ',' + fmt(t.omega) + ',' + fmt(t.mu) +
           '\n';
  std::ofstream f(dir / "index.csv", std::ios::trunc);
  if (!f) throw FileIoError("cannot open for writing: " + (dir / "index.csv").string());
  f << out;
}

SnapshotSet load_state_archive(const fs::path& dir) {
  Mat states = read_matrix_file(dir / "states.bin");
  fs::path ipath = dir / "index.csv";
  std::ifstream f(ipath);
  if (!f) throw FileIoError("cannot open: " + ipath.string());
  std::string line;
  if (!std::getline(f, line) || line != "branch_m,branch_n,vortex,omega,mu")
    throw FormatError("archive index header mismatch: " + ipath.string());
  SnapshotSet snaps;
  Index col = 0;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<std::string> c = split_csv_line(line);
    if (c.size() != 5)
      throw FormatError("archive index row needs 5 columns: " + ipath.string());
    if (col >= states.cols())
      throw FormatError("archive index longer than states: " + ipath.string());
    SnapshotTag tag;
    tag.label.m = parse_int(c[0], ipath);
    tag.label.n = parse_int(c[1], ipath);
    tag.label.vortex = parse_int(c[2], ipath) != 0;
    tag.omega = parse_double(c[3], ipath);
    tag.mu = parse_double(c[4], ipath);
    snaps.add(states.col(col), tag);
    ++col;
  }
  if (col != states.cols())
    throw FormatError("archive index shorter than states: " + ipath.string());
  return snaps;
}

// ------------------------------------------------------ basis/deim stores

void save_basis(const fs::path& dir, const ReducedBasis& rb) {
  fs::create_directories(dir);
  write_matrix_file(dir / "V.bin", rb.V);
  write_matrix_file(dir / "eigenvalues.bin", rb.eigenvalues);
  write_matrix_file(dir / "A_N.bin", rb.A_N);
  write_matrix_file(dir / "B_N.bin", rb.B_N);
  write_matrix_file(dir / "M_N.bin", rb.M_N);
  json j = {{"ip", rb.ip == Norm::H1 ? "h1" : "l2"}};
  std::ofstream f(dir / "basis.json", std::ios::trunc);
  if (!f) throw FileIoError("cannot open for writing: " + (dir / "basis.json").string());
  f << j.dump(2) << "\n";
}

ReducedBasis load_basis(const fs::path& dir, const GpSystem& sys) {
  std::ifstream f(dir / "basis.json");
  if (!f) throw FileIoError("cannot open: " + (dir / "basis.json").string());
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    throw FormatError("basis.json: " + std::string(e.what()));
  }
  std::string ip = j.value("ip", "h1");
  ReducedBasis rb;
  rb.ip = ip == "l2" ? Norm::L2 : Norm::H1;
  rb.V = read_matrix_file(dir / "V.bin");
  Mat ev = read_matrix_file(dir / "eigenvalues.bin");
  if (ev.cols() != 1)
    throw FormatError("eigenvalues must be a column: " + dir.string());
  rb.eigenvalues = ev.col(0);
  rb.A_N = read_matrix_file(dir / "A_N.bin");
  rb.B_N = read_matrix_file(dir / "B_N.bin");
  rb.M_N = read_matrix_file(dir / "M_N.bin");
  if (rb.V.rows() != 2 * sys.space().n_s)
    throw FormatError("basis does not match the configured mesh: " + dir.string());
  Index N = rb.V.cols();
  if (rb.A_N.rows() != N || rb.A_N.cols() != N || rb.B_N.rows() != N ||
      rb.B_N.cols() != N || rb.M_N.rows() != N || rb.M_N.cols() != N)
    throw FormatError("reduced operator dimensions disagree: " + dir.string());
  rb.X = gram_matrix(sys.space(), rb.ip, Dirichlet::Full);
  return rb;
}

void save_deim(const fs::path& dir, const DeimModel& model) {
  fs::create_directories(dir);
  write_matrix_file(dir / "H.bin", model.H);
  write_matrix_file(dir / "eigenvalues.bin", model.eigenvalues);
  Mat magic(model.size(), 1);
  for (Index i = 0; i < model.size(); ++i)
    magic(i, 0) = static_cast<double>(model.magic[i]);
  write_matrix_file(dir / "magic.bin", magic);
}

DeimModel load_deim(const fs::path& dir, const ReducedBasis& rb,
                    const FeSpace& space) {
  DeimModel model;
  model.H = read_matrix_file(dir / "H.bin");
  Mat ev = read_matrix_file(dir / "eigenvalues.bin");
  if (ev.cols() != 1)
    throw FormatError("eigenvalues must be a column: " + dir.string());
  model.eigenvalues = ev.col(0);
  Mat magic = read_matrix_file(dir / "magic.bin");
  if (model.H.rows() != 2 * space.n_s)
    throw FormatError("interpolation basis does not match the mesh: " + dir.string());
  if (magic.cols() != 1 || magic.rows() != model.H.cols())
    throw FormatError("magic index count disagrees with basis: " + dir.string());
  model.magic.reserve(magic.rows());
  for (Index i = 0; i < magic.rows(); ++i) {
    double v = magic(i, 0);
    Index idx = static_cast<Index>(std::llround(v));
    if (static_cast<double>(idx) != v || idx < 0 || idx >= 2 * space.n_s)
      throw FormatError("magic index out of range: " + dir.string());
    model.magic.push_back(idx);
  }
  deim_finalize(model, rb, space);
  return model;
}

// ----------------------------------------------------------- comparisons

namespace {

using RowKey = std::tuple<int, int, uint64_t, uint64_t>;

RowKey row_key(int m, int n, double omega, double mu) {
  return {m, n, std::bit_cast<uint64_t>(omega), std::bit_cast<uint64_t>(mu)};
}

double read_timing_total(const fs::path& path) {
  std::ifstream f(path);
  if (!f) return 0.0;
  std::string line;
  std::getline(f, line);  // header
  double total = 0.0;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<std::string> c = split_csv_line(line);
    if (c.size() >= 5) total += std::strtod(c[4].c_str(), nullptr);
  }
  return total;
}

}  // namespace

double ComparisonReport::max_e_n() const {
  double v = 0.0;
  for (const ComparisonRow& r : rows) v = std::max(v, r.e_n);
  return v;
}

double ComparisonReport::max_e_rho() const {
  double v = 0.0;
  for (const ComparisonRow& r : rows) v = std::max(v, r.e_rho);
  return v;
}

ComparisonReport compare_runs(const fs::path& baseline_dir,
                              const fs::path& candidate_dir,
                              const RunConfig& cfg) {
  std::vector<DiagramRow> base = read_diagram_csv(baseline_dir / "diagram.csv");
  std::vector<DiagramRow> cand = read_diagram_csv(candidate_dir / "diagram.csv");
  SnapshotSet base_states = load_state_archive(baseline_dir / "states");
  SnapshotSet cand_states = load_state_archive(candidate_dir / "states");

  FeSpace space =
      build_mesh(cfg.mesh.half_width, cfg.mesh.nx, cfg.mesh.degree);
  for (const SnapshotSet* s : {&base_states, &cand_states})
    if (s->count() > 0 && s->columns[0].size() != 2 * space.n_s)
      throw FormatError("state archive does not match the configured mesh");

  std::map<RowKey, const DiagramRow*> cand_rows;
  for (const DiagramRow& r : cand)
    cand_rows[row_key(r.branch_m, r.branch_n, r.omega, r.mu)] = &r;
  std::map<RowKey, const Vec*> base_cols, cand_cols;
  for (Index k = 0; k < base_states.count(); ++k) {
    const SnapshotTag& t = base_states.tags[k];
    base_cols[row_key(t.label.m, t.label.n, t.omega, t.mu)] = &base_states.columns[k];
  }
  for (Index k = 0; k < cand_states.count(); ++k) {
    const SnapshotTag& t = cand_states.tags[k];
    cand_cols[row_key(t.label.m, t.label.n, t.omega, t.mu)] = &cand_states.columns[k];
  }

  ComparisonReport report;
  for (const DiagramRow& b : base) {
    RowKey key = row_key(b.branch_m, b.branch_n, b.omega, b.mu);
    auto it = cand_rows.find(key);
    if (it == cand_rows.end()) continue;
    const DiagramRow& c = *it->second;
    ComparisonRow row;
    row.branch_m = b.branch_m;
    row.branch_n = b.branch_n;
    row.omega = b.omega;
    row.mu = b.mu;
    row.e_n = std::abs(b.n_bosons - c.n_bosons);
    row.e_rho = std::abs(b.rho_inf - c.rho_inf);
    auto bs = base_cols.find(key);
    auto cs = cand_cols.find(key);
    if (bs != base_cols.end() && cs != cand_cols.end()) {
      Vec err = *bs->second - *cs->second;
      row.l2_err = std::sqrt(inner_product(space, err, err, Norm::L2));
      row.h1_err = std::sqrt(inner_product(space, err, err, Norm::H1));
    } else {
      row.l2_err = std::numeric_limits<double>::quiet_NaN();
      row.h1_err = std::numeric_limits<double>::quiet_NaN();
    }
    report.rows.push_back(row);
  }
  report.baseline_seconds = read_timing_total(baseline_dir / "timings.txt");
  report.candidate_seconds = read_timing_total(candidate_dir / "timings.txt");
  return report;
}

void write_comparison(const fs::path& dir, const ComparisonReport& report) {
  fs::create_directories(dir);
  std::string out = "branch_m,branch_n,omega,mu,e_n,e_rho,l2_err,h1_err\n";
  for (const ComparisonRow& r : report.rows)
    out += std::to_string(r.branch_m) + ',' + std::to_string(r.branch_n) + ',' +
           fmt(r.omega) + ',' + fmt(r.mu) + ',' + fmt(r.e_n) + ',' +
           fmt(r.e_rho) + ',' + fmt(r.l2_err) + ',' + fmt(r.h1_err) + '\n';
  std::ofstream f(dir / "report.csv", std::ios::trunc);
  if (!f) throw FileIoError("cannot open for writing: " + (dir / "report.csv").string());
  f << out;

  std::ofstream s(dir / "summary.txt", std::ios::trunc);
  if (!s) throw FileIoError("cannot open for writing: " + (dir / "summary.txt").string());
  s << "matched_points," << report.rows.size() << "\n"
    << "max_e_n," << fmt(report.max_e_n()) << "\n"
    << "max_e_rho," << fmt(report.max_e_rho()) << "\n"
    << "baseline_seconds," << fmt(report.baseline_seconds) << "\n"
    << "candidate_seconds," << fmt(report.candidate_seconds) << "\n"
    << "speedup," << fmt(report.speedup()) << "\n";
}

// ------------------------------------------------------------- SVG plots

namespace {

constexpr const char* kPalette[8] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                     "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

void write_svg_chart(const fs::path& path, const std::vector<DiagramRow>& rows,
                     double DiagramRow::* field, const std::string& y_label) {
  struct Series {
    std::string name;
    std::vector<std::pair<double, double>> pts;
  };
  std::set<double> omegas;
  for (const DiagramRow& r : rows)
    if (r.converged) omegas.insert(r.omega);
  const bool multi_omega = omegas.size() > 1;

  std::vector<Series> series;
  std::map<RowKey, size_t> index;
  for (const DiagramRow& r : rows) {
    if (!r.converged) continue;
    RowKey key = row_key(r.branch_m, r.branch_n, r.omega, 0.0);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, series.size()).first;
      std::string name = "(" + std::to_string(r.branch_m) + "," +
                         std::to_string(r.branch_n) + ")";
      if (multi_omega) name += " omega=" + fmt_tick(r.omega);
      series.push_back({name, {}});
    }
    series[it->second].pts.push_back({r.mu, r.*field});
  }

  double x0 = 0.0, x1 = 1.0, y1 = 1.0;
  bool first = true;
  for (const Series& s : series)
    for (auto [x, y] : s.pts) {
      if (first) {
        x0 = x1 = x;
        y1 = y;
        first = false;
      }
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y1 = std::max(y1, y);
    }
  if (x1 <= x0) x1 = x0 + 1.0;
  if (y1 <= 0.0) y1 = 1.0;
  y1 *= 1.05;

  const double W = 800, H = 560, ml = 80, mr = 170, mt = 30, mb = 55;
  auto X = [&](double x) { return ml + (x - x0) / (x1 - x0) * (W - ml - mr); };
  auto Y = [&](double y) { return H - mb - y / y1 * (H - mt - mb); };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"560\" "
         "viewBox=\"0 0 800 560\">\n";
  svg += "<rect width=\"800\" height=\"560\" fill=\"white\"/>\n";
  for (int t = 0; t <= 5; ++t) {
    double xv = x0 + (x1 - x0) * t / 5.0;
    double yv = y1 * t / 5.0;
    svg += "<line x1=\"" + fmt_tick(X(xv)) + "\" y1=\"" + fmt_tick(H - mb) +
           "\" x2=\"" + fmt_tick(X(xv)) + "\" y2=\"" + fmt_tick(H - mb + 5) +
           "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + fmt_tick(X(xv)) + "\" y=\"" + fmt_tick(H - mb + 20) +
           "\" font-size=\"12\" text-anchor=\"middle\">" + fmt_tick(xv) +
           "</text>\n";
    svg += "<line x1=\"" + fmt_tick(ml - 5) + "\" y1=\"" + fmt_tick(Y(yv)) +
           "\" x2=\"" + fmt_tick(ml) + "\" y2=\"" + fmt_tick(Y(yv)) +
           "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + fmt_tick(ml - 9) + "\" y=\"" + fmt_tick(Y(yv) + 4) +
           "\" font-size=\"12\" text-anchor=\"end\">" + fmt_tick(yv) + "</text>\n";
  }
  svg += "<line x1=\"" + fmt_tick(ml) + "\" y1=\"" + fmt_tick(H - mb) + "\" x2=\"" +
         fmt_tick(W - mr) + "\" y2=\"" + fmt_tick(H - mb) + "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + fmt_tick(ml) + "\" y1=\"" + fmt_tick(mt) + "\" x2=\"" +
         fmt_tick(ml) + "\" y2=\"" + fmt_tick(H - mb) + "\" stroke=\"black\"/>\n";
  svg += "<text x=\"" + fmt_tick((ml + W - mr) / 2) + "\" y=\"" + fmt_tick(H - 12) +
         "\" font-size=\"14\" text-anchor=\"middle\">mu</text>\n";
  svg += "<text x=\"18\" y=\"" + fmt_tick((mt + H - mb) / 2) +
         "\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
         fmt_tick((mt + H - mb) / 2) + ")\">" + y_label + "</text>\n";

  size_t ci = 0;
  for (const Series& s : series) {
    const char* color = kPalette[ci % 8];
    std::string pts;
    for (auto [x, y] : s.pts)
      pts += fmt_tick(X(x)) + "," + fmt_tick(Y(y)) + " ";
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
           "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
    double ly = mt + 18 + 18 * static_cast<double>(ci);
    svg += "<line x1=\"" + fmt_tick(W - mr + 12) + "\" y1=\"" + fmt_tick(ly - 4) +
           "\" x2=\"" + fmt_tick(W - mr + 36) + "\" y2=\"" + fmt_tick(ly - 4) +
           "\" stroke=\"" + color + "\" stroke-width=\"1.5\"/>\n";
    svg += "<text x=\"" + fmt_tick(W - mr + 42) + "\" y=\"" + fmt_tick(ly) +
           "\" font-size=\"12\">" + s.name + "</text>\n";
    ++ci;
  }
  svg += "</svg>\n";

  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw FileIoError("cannot open for writing: " + path.string());
  f << svg;
}

}  // namespace

void write_diagram_plots(const fs::path& dir, const std::vector<DiagramRow>& rows) {
  fs::create_directories(dir);
  write_svg_chart(dir / "n_bosons.svg", rows, &DiagramRow::n_bosons, "N");
  write_svg_chart(dir / "rho_inf.svg", rows, &DiagramRow::rho_inf, "rho_inf");
}

// ----------------------------------------------------------- run drivers

namespace {

void write_timings(const fs::path& path, const std::string& phase,
                   const std::vector<BranchCurve>& curves) {
  std::string out = "phase,branch_m,branch_n,omega,wall_seconds,total_newton_iters\n";
  for (const BranchCurve& c : curves) {
    double omega = c.records.empty() ? 0.0 : c.records.front().omega;
    out += phase + ',' + std::to_string(c.label.m) + ',' +
           std::to_string(c.label.n) + ',' + fmt(omega) + ',' +
           fmt(c.wall_seconds) + ',' + std::to_string(c.total_newton_iters) + '\n';
  }
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw FileIoError("cannot open for writing: " + path.string());
  f << out;
}

std::vector<BranchCurve> traced_sweep(const RunConfig& cfg,
                                      const ParameterGrid& grid,
                                      const GpSystem& sys,
                                      ContinuationBackend& backend,
                                      SnapshotSet* archive,
                                      std::vector<Vec>* nonlin) {
  ContinuationConfig cc = cfg.continuation_config();
  StateObserver observer;
  if (archive) {
    observer = [&sys, archive, nonlin](const BranchLabel& label,
                                       const GpParameters& p, const Vec& x) {
      archive->add(x, {label, p.mu, p.omega});
      if (nonlin) nonlin->push_back(nonlinearity_snapshot(sys, x));
    };
  }
  return trace_diagram(cfg.branch_requests(), grid, backend, cc, observer);
}

}  // namespace

int run_fom_trace(const RunConfig& cfg) {
  fs::path out = fs::path(cfg.run.output_dir) / "fom";
  fs::create_directories(out);
  FeSpace space = build_mesh(cfg.mesh.half_width, cfg.mesh.nx, cfg.mesh.degree);
  GpSystem sys(space);
  FomBackend backend(sys);
  SnapshotSet archive;
  std::vector<BranchCurve> curves =
      traced_sweep(cfg, cfg.parameter_grid(), sys, backend, &archive, nullptr);
  write_diagram_csv(out / "diagram.csv", diagram_rows(curves));
  save_state_archive(out / "states", archive);
  write_timings(out / "timings.txt", "fom-trace", curves);
  std::printf("fom-trace: %zu curves, %lld converged states -> %s\n",
              curves.size(), static_cast<long long>(archive.count()),
              out.string().c_str());
  return kExitOk;
}

int run_offline(const RunConfig& cfg) {
  fs::path out = fs::path(cfg.run.output_dir) / "offline";
  fs::create_directories(out);
  FeSpace space = build_mesh(cfg.mesh.half_width, cfg.mesh.nx, cfg.mesh.degree);
  GpSystem sys(space);
  FomBackend backend(sys);
  SnapshotSet snaps;
  std::vector<Vec> nonlin;
  std::vector<BranchCurve> curves =
      traced_sweep(cfg, cfg.offline_grid(), sys, backend, &snaps, &nonlin);
  write_diagram_csv(out / "diagram.csv", diagram_rows(curves));
  save_state_archive(out / "states", snaps);
  write_timings(out / "timings.txt", "offline", curves);

  ReducedBasis rb = pod(snaps, sys, cfg.pod_norm(), cfg.pod.tol, cfg.pod.n_max);
  save_basis(out / "basis", rb);
  std::printf("offline: %lld snapshots -> basis size %lld\n",
              static_cast<long long>(snaps.count()),
              static_cast<long long>(rb.size()));
  if (cfg.deim.enabled) {
    Mat S(2 * space.n_s, static_cast<Index>(nonlin.size()));
    for (size_t k = 0; k < nonlin.size(); ++k) S.col(static_cast<Index>(k)) = nonlin[k];
    DeimModel model = deim_build(S, {cfg.deim.q, cfg.deim.tol}, rb, space);
    save_deim(out / "deim", model);
    std::printf("offline: interpolation rank %lld, %zu sample elements\n",
                static_cast<long long>(model.size()), model.sample_elements.size());
  }
  return kExitOk;
}

int run_online_trace(const RunConfig& cfg) {
  fs::path offline_dir = fs::path(cfg.run.output_dir) / "offline";
  fs::path out = fs::path(cfg.run.output_dir) /
                 (cfg.deim.enabled ? "online-deim" : "online-exact");
  fs::create_directories(out);
  FeSpace space = build_mesh(cfg.mesh.half_width, cfg.mesh.nx, cfg.mesh.degree);
  GpSystem sys(space);
  ReducedBasis rb = load_basis(offline_dir / "basis", sys);
  DeimModel model;
  std::unique_ptr<ContinuationBackend> backend;
  if (cfg.deim.enabled) {
    model = load_deim(offline_dir / "deim", rb, space);
    backend = std::make_unique<DeimBackend>(sys, rb, model);
  } else {
    backend = std::make_unique<RomBackend>(sys, rb);
  }
  SnapshotSet archive;
  std::vector<BranchCurve> curves =
      traced_sweep(cfg, cfg.parameter_grid(), sys, *backend, &archive, nullptr);
  write_diagram_csv(out / "diagram.csv", diagram_rows(curves));
  save_state_archive(out / "states", archive);
  write_timings(out / "timings.txt", cfg.deim.enabled ? "online-deim" : "online-exact",
                curves);
  std::printf("online-trace (%s): basis size %lld -> %s\n",
              cfg.deim.enabled ? "deim" : "exact",
              static_cast<long long>(rb.size()), out.string().c_str());
  return kExitOk;
}

int run_compare(const RunConfig& cfg, const fs::path& baseline_dir,
                const fs::path& candidate_dir) {
  ComparisonReport report = compare_runs(baseline_dir, candidate_dir, cfg);
  fs::path out = fs::path(cfg.run.output_dir) / "compare";
  write_comparison(out, report);
  std::printf("compare: %zu matched points, max E_N %.6g, max E_rho %.6g, "
              "speedup %.3g\n",
              report.rows.size(), report.max_e_n(), report.max_e_rho(),
              report.speedup());
  return kExitOk;
}

int run_plot(const RunConfig& cfg, const fs::path& csv_path) {
  std::vector<DiagramRow> rows = read_diagram_csv(csv_path);
  fs::path out = fs::path(cfg.run.output_dir) / "plots";
  write_diagram_plots(out, rows);
  std::printf("plot: %zu rows -> %s\n", rows.size(), out.string().c_str());
  return kExitOk;
}

}  // namespace gpbif
