#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "smat/config.hpp"

namespace smat {

struct TrainRequest {
  std::optional<int> stage;  // run a single stage
  bool all = false;          // run the preset's whole sequence
  std::string resume;        // checkpoint to continue from
  int threads = 1;
};

struct TrainSummary {
  std::vector<int> stages_run;
  std::vector<StageResult> results;
};

// Writes stage{k}.ckpt, stage{k}_metrics.csv and stage{k}_eval.csv into
// cfg.output_dir. Throws InvalidTransition on a bad stage order.
TrainSummary cmd_train(const RunConfig& cfg, const TrainRequest& req, std::ostream& log);

struct OfflineSummary {
  double phase_lag_r = 0.0;  // % cycle, exo torque relative to recorded torque
  double phase_lag_l = 0.0;
  double peak_torque_r = 0.0;  // Nm
  double peak_torque_l = 0.0;
  TorquePowerMetrics metrics_r, metrics_l;
  int cycles_r = 0;
  int cycles_l = 0;
  double max_abs_torque = 0.0;
};

// Drives the exo actor with recorded hip kinematics. Writes
// offline_samples.csv, offline_normalized.csv and offline_summary.csv.
OfflineSummary cmd_eval_offline(const std::string& checkpoint, const std::string& gait_csv, double torque_limit,
                                const std::string& out_dir);

// Metrics per file and side plus MEAN/SD rows (metrics.csv) and one
// cycle-normalized waveform file per input (<stem>_waveform.csv).
std::vector<TorquePowerMetrics> cmd_analyze(const std::vector<std::string>& files, const std::string& out_dir);

// Plot-ready CSVs from a training run directory.
void cmd_export_plots(const std::string& run_dir, const std::string& out_dir, std::ostream& log);

}  // namespace smat
