// smat command-line entry point.
#include "smat/commands.hpp"
#include "smat/error.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <thread>

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kData = 3, kDiverged = 4 };

int worker_threads() {
  int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("SMAT_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) n = std::min(n, cap);
  }
  return n;
}

int report(const char* kind, const std::exception& e, int code) {
  std::cerr << "smat: " << kind << ": " << e.what() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Staged multi-agent training for human-exoskeleton co-adaptation"};
  app.require_subcommand(1);

  std::string config_path, preset, resume, out_dir;
  int stage = 0;
  bool all = false;
  auto* train = app.add_subcommand("train", "Run curriculum stages");
  train->add_option("-c,--config", config_path, "JSON run configuration");
  auto* stage_opt = train->add_option("--stage", stage, "Single stage to run (1-4)")->check(CLI::Range(1, 4));
  auto* all_opt = train->add_flag("--all", all, "Run every stage of the preset");
  stage_opt->excludes(all_opt);
  train->add_option("--preset", preset, "full-smat | stage3-only | stage4-only | stage4-no-rexo");
  train->add_option("--resume", resume, "Checkpoint to continue from");
  train->add_option("-o,--output-dir", out_dir, "Overrides output_dir from the config");

  std::string ckpt, csv, eval_out = "offline";
  double torque_limit = 15.0;
  auto* eval = app.add_subcommand("eval-offline", "Drive the exo actor with recorded hip kinematics");
  eval->add_option("--checkpoint", ckpt, "Checkpoint with a trained exo actor")->required();
  eval->add_option("--csv", csv, "Gait trace CSV")->required();
  eval->add_option("--torque-limit", torque_limit, "Per-hip torque limit, Nm");
  eval->add_option("-o,--out", eval_out, "Output directory");

  std::vector<std::string> traces;
  std::string analyze_out = "analysis";
  auto* analyze = app.add_subcommand("analyze", "Torque/power metrics of gait traces");
  analyze->add_option("files", traces, "Gait trace CSVs")->required();
  analyze->add_option("-o,--out", analyze_out, "Output directory");

  std::string run_dir, plots_out = "plots";
  auto* plots = app.add_subcommand("export-plots", "Plot-data CSVs from a training run");
  plots->add_option("run_dir", run_dir, "Run directory")->required();
  plots->add_option("-o,--out", plots_out, "Output directory");

  bool print_defaults = false;
  std::string check_path;
  auto* config = app.add_subcommand("config", "Inspect configuration");
  config->add_flag("--print-defaults", print_defaults, "Print the default configuration");
  config->add_option("--check", check_path, "Validate a configuration file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (train->parsed()) {
      smat::RunConfig cfg = config_path.empty() ? smat::RunConfig{} : smat::load_config(config_path);
      if (!preset.empty()) {
        cfg.preset = smat::parse_preset(preset);
        cfg.plan.preset = cfg.preset;
      }
      if (!out_dir.empty()) cfg.output_dir = out_dir;
      smat::TrainRequest req;
      if (*stage_opt) req.stage = stage;
      req.all = all;
      req.resume = resume;
      req.threads = worker_threads();
      const smat::TrainSummary s = smat::cmd_train(cfg, req, std::cout);
      std::cout << "wrote " << s.stages_run.size() << " stage checkpoint(s) to " << cfg.output_dir << '\n';
    } else if (eval->parsed()) {
      const smat::OfflineSummary s = smat::cmd_eval_offline(ckpt, csv, torque_limit, eval_out);
      std::cout << "cycles " << s.cycles_r << "/" << s.cycles_l << ", phase lag " << s.phase_lag_r << " / "
                << s.phase_lag_l << " % cycle, peak torque " << s.peak_torque_r << " Nm\n";
    } else if (analyze->parsed()) {
      smat::cmd_analyze(traces, analyze_out);
      std::cout << "wrote " << analyze_out << "/metrics.csv\n";
    } else if (plots->parsed()) {
      smat::cmd_export_plots(run_dir, plots_out, std::cerr);
      std::cout << "wrote plot data to " << plots_out << '\n';
    } else if (config->parsed()) {
      if (!check_path.empty()) {
        smat::load_config(check_path);
        std::cout << check_path << ": ok\n";
      } else if (print_defaults) {
        std::cout << smat::dump_config(smat::RunConfig{});
      } else {
        std::cerr << config->help();
        return kConfig;
      }
    }
  } catch (const smat::ConfigError& e) {
    return report("config error", e, kConfig);
  } catch (const smat::InvalidTransition& e) {
    return report("stage order error", e, kConfig);
  } catch (const smat::UpdateDiverged& e) {
    return report("update diverged", e, kDiverged);
  } catch (const smat::IntegrationDiverged& e) {
    return report("simulation diverged", e, kDiverged);
  } catch (const smat::Error& e) {
    // Data, checkpoint, segmentation and dimension problems.
    return report("data error", e, kData);
  } catch (const std::exception& e) {
    return report("error", e, kFailure);
  }
  return kOk;
}
