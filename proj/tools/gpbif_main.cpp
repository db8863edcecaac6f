#include <cstdio>
#include <cstdlib>
#include <string>

#include <CLI11.hpp>
#include <Eigen/Core>

#include "gpbif/cli_io.hpp"

using namespace gpbif;

namespace {

struct CliOptions {
  std::string config_path;
  std::string mode;
  std::string deim_flag;    // "", "on", "off"
  std::string output_dir;   // overrides config when set
  std::string input_csv;    // plot source
  std::string baseline_dir; // compare inputs
  std::string candidate_dir;
  int threads = 0;          // 0: leave config value
};

int dispatch(const CliOptions& opt) {
  RunConfig cfg = opt.config_path.empty() ? default_config()
                                          : load_config(opt.config_path);
  if (!opt.mode.empty()) cfg.run.mode = opt.mode;
  if (opt.deim_flag == "on") cfg.deim.enabled = true;
  if (opt.deim_flag == "off") cfg.deim.enabled = false;
  if (!opt.output_dir.empty()) cfg.run.output_dir = opt.output_dir;
  if (opt.threads > 0) cfg.run.threads = opt.threads;
  cfg.validate();

  std::srand(cfg.run.seed);
  Eigen::setNbThreads(cfg.run.threads);

  if (cfg.run.mode == "fom-trace") return run_fom_trace(cfg);
  if (cfg.run.mode == "offline") return run_offline(cfg);
  if (cfg.run.mode == "online-trace") return run_online_trace(cfg);
  if (cfg.run.mode == "compare") {
    if (opt.baseline_dir.empty() || opt.candidate_dir.empty()) {
      std::fprintf(stderr, "compare needs BASELINE_DIR and CANDIDATE_DIR\n");
      return kExitUsage;
    }
    return run_compare(cfg, opt.baseline_dir, opt.candidate_dir);
  }
  if (cfg.run.mode == "plot") {
    std::string csv = opt.input_csv;
    if (csv.empty())
      csv = (std::filesystem::path(cfg.run.output_dir) / "fom" / "diagram.csv")
                .string();
    return run_plot(cfg, csv);
  }
  std::fprintf(stderr, "unknown mode: %s\n", cfg.run.mode.c_str());
  return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bifurcation diagrams of the 2D Gross-Pitaevskii equation: "
               "full-order tracing, reduced-basis online solves, and DEIM "
               "hyper-reduction"};
  app.require_subcommand(0, 1);

  CliOptions opt;
  app.add_option("--config", opt.config_path, "JSON run configuration");
  app.add_option("--mode", opt.mode,
                 "Run mode when no subcommand is given (fom-trace, offline, "
                 "online-trace, compare, plot)");
  app.add_option("--deim", opt.deim_flag, "Toggle hyper-reduction (on|off)")
      ->check(CLI::IsMember({"on", "off"}));
  app.add_option("--threads", opt.threads, "Worker thread count");
  app.add_option("--output", opt.output_dir, "Output directory override");

  CLI::App* fom = app.add_subcommand("fom-trace", "Full-order branch sweep");
  CLI::App* off = app.add_subcommand("offline", "FOM sweep plus basis and "
                                                "interpolation model build");
  CLI::App* onl = app.add_subcommand("online-trace", "Reduced online sweep");
  CLI::App* cmp = app.add_subcommand("compare", "Error and timing report "
                                                "between two completed runs");
  cmp->add_option("baseline", opt.baseline_dir, "Baseline run directory")
      ->required();
  cmp->add_option("candidate", opt.candidate_dir, "Candidate run directory")
      ->required();
  CLI::App* plt = app.add_subcommand("plot", "SVG charts from a diagram CSV");
  plt->add_option("--input", opt.input_csv, "Diagram CSV to plot");
  for (CLI::App* sub : {fom, off, onl, cmp, plt}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (fom->parsed()) opt.mode = "fom-trace";
  if (off->parsed()) opt.mode = "offline";
  if (onl->parsed()) opt.mode = "online-trace";
  if (cmp->parsed()) opt.mode = "compare";
  if (plt->parsed()) opt.mode = "plot";

  try {
    return dispatch(opt);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitBadConfig;
  } catch (const TruncatedPayload& e) {
    std::fprintf(stderr, "truncated file: %s\n", e.what());
    return kExitTruncated;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "format error: %s\n", e.what());
    return kExitBadFormat;
  } catch (const FileIoError& e) {
    std::fprintf(stderr, "missing or unreadable artifact: %s\n", e.what());
    return kExitMissingArtifact;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "solve failed: %s\n", e.what());
    return kExitSolveFailure;
  }
}
