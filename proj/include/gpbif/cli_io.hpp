#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gpbif/deim.hpp"

namespace gpbif {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct FileIoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// wrong magic string, unsupported version, or inconsistent header
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// file ends before the payload announced in the header
struct TruncatedPayload : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BranchSpec {
  BranchLabel label;
  std::vector<GuessTerm> guess_terms;  // empty: label-derived Hermite guess
  double amplitude = 0.0;              // 0: inherit continuation.guess_amplitude
};

// Full run description; serializes losslessly to sectioned JSON and accepts
// GPBIF_<SECTION>_<KEY> environment overrides for scalar fields.
struct RunConfig {
  struct MeshSection {
    double half_width = 12.0;
    int nx = 24;
    int degree = 2;
  } mesh;
  struct SweepSection {
    std::vector<double> omega = {0.2};
    double mu_min = 0.0;
    double mu_max = 1.2;
    double mu_step = 1.25e-3;
    double offline_mu_step = 0.05;  // snapshot-collection spacing
  } sweep;
  std::vector<BranchSpec> branches;
  struct NewtonSection {
    double tol = 1e-10;
    int max_iter = 50;
    double damping = 1.0;
    std::string criterion = "residual";  // or "step"
  } newton;
  struct ContinuationSection {
    double eps_bif = 1e-4;
    double guess_amplitude = 1.0;
    double guess_offset = 0.005;  // standoff past mu_crit before guessing
    std::string eps_norm = "l2";  // or "h1"
  } continuation;
  struct PodSection {
    double tol = 1e-9;
    int n_max = 120;
    std::string norm = "h1";  // or "l2"
  } pod;
  struct DeimSection {
    int q = 0;  // 0: rank from the energy tolerance
    double tol = 1e-9;
    bool enabled = true;
  } deim;
  struct RunSection {
    std::string mode = "fom-trace";
    std::string output_dir = "out";
    unsigned seed = 1234;
    int threads = 1;
  } run;

  void validate() const;  // throws ConfigError
  ParameterGrid parameter_grid() const;
  ParameterGrid offline_grid() const;
  ContinuationConfig continuation_config() const;
  Norm pod_norm() const;
  std::vector<BranchRequest> branch_requests() const;
};

RunConfig default_config();
RunConfig parse_config(const std::string& json_text);  // overrides applied
std::string config_to_json(const RunConfig& cfg);
RunConfig load_config(const std::filesystem::path& path);
void save_config(const RunConfig& cfg, const std::filesystem::path& path);

// Binary container: magic "GPBIFMAT", u32 version, u64 rows, u64 cols,
// column-major little-endian f64 payload. Vectors are n x 1.
void write_matrix_file(const std::filesystem::path& path, const Mat& m);
Mat read_matrix_file(const std::filesystem::path& path);

// One diagram row per traced grid point.
struct DiagramRow {
  int branch_m = 0;
  int branch_n = 0;
  double omega = 0.0;
  double mu = 0.0;
  double n_bosons = 0.0;
  double rho_inf = 0.0;
  bool converged = false;
  int newton_iters = 0;
};

std::vector<DiagramRow> diagram_rows(const std::vector<BranchCurve>& curves);
void write_diagram_csv(const std::filesystem::path& path,
                       const std::vector<DiagramRow>& rows);
std::vector<DiagramRow> read_diagram_csv(const std::filesystem::path& path);

// Converged-state archive: states.bin (2*n_s x K) plus an index CSV with the
// branch/parameter tags, column-aligned.
void save_state_archive(const std::filesystem::path& dir,
                        const SnapshotSet& snaps);
SnapshotSet load_state_archive(const std::filesystem::path& dir);

void save_basis(const std::filesystem::path& dir, const ReducedBasis& rb);
ReducedBasis load_basis(const std::filesystem::path& dir, const GpSystem& sys);
void save_deim(const std::filesystem::path& dir, const DeimModel& model);
DeimModel load_deim(const std::filesystem::path& dir, const ReducedBasis& rb,
                    const FeSpace& space);

struct ComparisonRow {
  int branch_m = 0;
  int branch_n = 0;
  double omega = 0.0;
  double mu = 0.0;
  double e_n = 0.0;    // |N_a - N_b|
  double e_rho = 0.0;  // | |rho_a|_inf - |rho_b|_inf |
  double l2_err = 0.0;
  double h1_err = 0.0;
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;
  double baseline_seconds = 0.0;
  double candidate_seconds = 0.0;
  double speedup() const {
    return candidate_seconds > 0.0 ? baseline_seconds / candidate_seconds : 0.0;
  }
  double max_e_n() const;
  double max_e_rho() const;
};

// Pair the two runs' rows by (branch, omega, mu); field errors from the
// archived states when both archives are present.
ComparisonReport compare_runs(const std::filesystem::path& baseline_dir,
                              const std::filesystem::path& candidate_dir,
                              const RunConfig& cfg);
void write_comparison(const std::filesystem::path& dir,
                      const ComparisonReport& report);

void write_diagram_plots(const std::filesystem::path& dir,
                         const std::vector<DiagramRow>& rows);

// Mode drivers shared by the CLI; each returns a process exit code.
int run_fom_trace(const RunConfig& cfg);
int run_offline(const RunConfig& cfg);
int run_online_trace(const RunConfig& cfg);
int run_compare(const RunConfig& cfg, const std::filesystem::path& baseline_dir,
                const std::filesystem::path& candidate_dir);
int run_plot(const RunConfig& cfg, const std::filesystem::path& csv_path);

// Exit codes for distinct CLI failure classes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitBadConfig = 2;
inline constexpr int kExitMissingArtifact = 3;
inline constexpr int kExitBadFormat = 4;
inline constexpr int kExitTruncated = 5;
inline constexpr int kExitSolveFailure = 6;

}  // namespace gpbif
