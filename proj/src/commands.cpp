#include "smat/commands.hpp"

#include "smat/csv.hpp"
#include "smat/error.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>

namespace smat {

namespace fs = std::filesystem;

namespace {

std::string stage_file(const std::string& dir, int stage, const char* suffix) {
  return (fs::path(dir) / ("stage" + std::to_string(stage) + suffix)).string();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory " + dir + ": " + ec.message());
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

TrainSummary cmd_train(const RunConfig& cfg, const TrainRequest& req, std::ostream& log) {
  cfg.validate();
  if (req.all == req.stage.has_value()) throw ConfigError("train: pass exactly one of --stage N or --all");
  const std::vector<StageConfig> plan = build_plan(cfg.plan);
  const std::vector<int> seq = preset_sequence(cfg.preset);
  RunContext ctx = make_context(cfg, req.threads);
  const int nm = ctx.model.num_muscles();

  std::optional<Checkpoint> current;
  if (!req.resume.empty()) {
    current = load_checkpoint(req.resume);
    check_dimensions(*current, nm);
  }

  std::vector<int> todo;
  if (req.all) {
    auto it = seq.begin();
    if (current && current->stage > 0) {
      it = std::find(seq.begin(), seq.end(), current->stage);
      if (it == seq.end()) {
        throw InvalidTransition("resume checkpoint is from stage " + std::to_string(current->stage) +
                                ", which preset " + std::string(preset_name(cfg.preset)) + " does not run");
      }
      ++it;
    }
    todo.assign(it, seq.end());
  } else {
    const int k = *req.stage;
    if (std::find(seq.begin(), seq.end(), k) == seq.end()) {
      throw InvalidTransition("stage " + std::to_string(k) + " is not part of preset " +
                              std::string(preset_name(cfg.preset)));
    }
    todo = {k};
    const int src = plan[k - 1].source_stage;
    if (!current && src > 0) {
      const std::string path = stage_file(cfg.output_dir, src, ".ckpt");
      if (!fs::exists(path)) {
        throw InvalidTransition("stage " + std::to_string(k) + " starts from " + path +
                                "; run stage " + std::to_string(src) + " first or pass --resume");
      }
      current = load_checkpoint(path);
      check_dimensions(*current, nm);
    }
  }
  if (!current) current = initial_checkpoint(nm, cfg.seed);

  ensure_dir(cfg.output_dir);
  {
    std::ofstream f(fs::path(cfg.output_dir) / "config.json", std::ios::binary);
    f << dump_config(cfg);
  }

  TrainSummary summary;
  for (int k : todo) {
    const StageConfig& sc = plan[k - 1];
    const Checkpoint start = transition(*current, sc, cfg.seed);
    log << "stage " << k << ": budget " << sc.budget << " steps, torque limit " << sc.torque_limit << " Nm\n";
    ctx.on_update = [&log, k](const UpdateRecord& r) {
      log << "  stage " << k << " step " << r.step << " reward " << format_number(r.mean_episode_reward)
          << " len " << format_number(r.mean_episode_length) << " kl " << format_number(r.stats.approx_kl)
          << " |u| " << format_number(r.mean_abs_u) << '\n'
          << std::flush;
    };
    StageResult res = run_stage(start, sc, ctx);

    save_checkpoint(stage_file(cfg.output_dir, k, ".ckpt"), res.checkpoint);
    std::vector<std::vector<double>> rows;
    for (const UpdateRecord& r : res.log) rows.push_back(metrics_row(r));
    write_csv(stage_file(cfg.output_dir, k, "_metrics.csv"), metrics_header(), rows);
    write_eval_trace(stage_file(cfg.output_dir, k, "_eval.csv"), res.eval);

    current = res.checkpoint;
    summary.stages_run.push_back(k);
    summary.results.push_back(std::move(res));
  }
  return summary;
}

OfflineSummary cmd_eval_offline(const std::string& checkpoint, const std::string& gait_csv, double torque_limit,
                                const std::string& out_dir) {
  if (!(torque_limit > 0.0)) throw ConfigError("eval-offline: torque limit must be > 0");
  const Checkpoint ck = load_checkpoint(checkpoint);
  if (ck.exo.input_dim() != ObsHistory::kExoObsDim || ck.exo.output_dim() != 2) {
    throw DimensionMismatch("checkpoint has no usable exo actor");
  }
  GaitTrace tr = read_gait_trace(gait_csv);
  const double rate = 1.0 / kControlDt;
  if (std::abs(tr.sample_rate() - rate) > 1e-6 * rate) tr = resample(tr, rate);
  const Eigen::Index n = tr.size();

  Eigen::VectorXd u_r(n), u_l(n);
  ObsHistory hist;
  Rng unused(0);
  Eigen::Vector2d u_prev = Eigen::Vector2d::Zero();
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector4d kin(tr.angle_r[i], tr.angle_l[i], tr.vel_r[i], tr.vel_l[i]);
    if (i == 0) hist.seed(kin, u_prev);
    else hist.push(kin, u_prev);
    const Vec u = sample_action(ck.exo, observe_exo(hist), unused, true).action;
    u_r[i] = u[0];
    u_l[i] = u[1];
    u_prev = u;
  }
  const Eigen::VectorXd tau_r = u_r * torque_limit;
  const Eigen::VectorXd tau_l = u_l * torque_limit;
  const Eigen::VectorXd w_r = one_euro_filter(tr.vel_r, rate);
  const Eigen::VectorXd w_l = one_euro_filter(tr.vel_l, rate);
  const Eigen::VectorXd p_r = tau_r.cwiseProduct(w_r);
  const Eigen::VectorXd p_l = tau_l.cwiseProduct(w_l);

  ensure_dir(out_dir);
  {
    std::vector<std::vector<double>> rows(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      rows[i] = {tr.time[i], tr.angle_r[i], tr.angle_l[i], tr.vel_r[i], tr.vel_l[i], u_r[i],
                 u_l[i],     tau_r[i],      tau_l[i],      p_r[i],      p_l[i]};
    }
    write_csv((fs::path(out_dir) / "offline_samples.csv").string(),
              {"time_s", "hip_angle_r_rad", "hip_angle_l_rad", "hip_vel_r_rads", "hip_vel_l_rads", "u_r", "u_l",
               "exo_torque_r_nm", "exo_torque_l_nm", "exo_power_r_w", "exo_power_l_w"},
              rows);
  }

  OfflineSummary s;
  s.max_abs_torque = std::max(tau_r.cwiseAbs().maxCoeff(), tau_l.cwiseAbs().maxCoeff());
  std::vector<GaitCycle> cyc_r, cyc_l;
  try {
    cyc_r = segment_cycles(tr.angle_r, rate);
    cyc_l = segment_cycles(tr.angle_l, rate);
  } catch (const EmptySegmentation&) {
    cyc_r.clear();
    cyc_l.clear();
  }
  s.cycles_r = static_cast<int>(cyc_r.size());
  s.cycles_l = static_cast<int>(cyc_l.size());

  const std::vector<std::string> norm_header{
      "pct",           "exo_torque_r_mean", "exo_torque_r_sd", "exo_torque_l_mean", "exo_torque_l_sd",
      "bio_torque_r_mean", "bio_torque_r_sd", "bio_torque_l_mean", "bio_torque_l_sd", "exo_power_r_mean",
      "exo_power_r_sd", "exo_power_l_mean", "exo_power_l_sd"};
  std::vector<std::vector<double>> norm_rows;
  if (cyc_r.empty()) {
    s.phase_lag_r = s.phase_lag_l = kNaN;
  } else {
    const CycleWaveform er = normalize_to_cycle(tau_r, cyc_r), el = normalize_to_cycle(tau_l, cyc_l);
    const CycleWaveform br = normalize_to_cycle(tr.torque_r, cyc_r), bl = normalize_to_cycle(tr.torque_l, cyc_l);
    const CycleWaveform pr = normalize_to_cycle(p_r, cyc_r), pl = normalize_to_cycle(p_l, cyc_l);
    // The 100 % point repeats 0 %, so the circular lag uses the first 100.
    const Eigen::Index m = er.mean.size() - 1;
    s.phase_lag_r = phase_lag(er.mean.head(m), br.mean.head(m));
    s.phase_lag_l = phase_lag(el.mean.head(m), bl.mean.head(m));
    s.peak_torque_r = er.mean.cwiseAbs().maxCoeff();
    s.peak_torque_l = el.mean.cwiseAbs().maxCoeff();
    s.metrics_r = compute_metrics(tau_r, w_r, cyc_r);
    s.metrics_l = compute_metrics(tau_l, w_l, cyc_l);
    for (Eigen::Index k = 0; k < er.pct.size(); ++k) {
      norm_rows.push_back({er.pct[k], er.mean[k], er.sd[k], el.mean[k], el.sd[k], br.mean[k], br.sd[k], bl.mean[k],
                           bl.sd[k], pr.mean[k], pr.sd[k], pl.mean[k], pl.sd[k]});
    }
  }
  write_csv((fs::path(out_dir) / "offline_normalized.csv").string(), norm_header, norm_rows);

  const auto& a = s.metrics_r;
  const auto& b = s.metrics_l;
  write_csv((fs::path(out_dir) / "offline_summary.csv").string(),
            {"torque_limit_nm", "cycles_r", "cycles_l", "phase_lag_r_pct", "phase_lag_l_pct", "peak_torque_r_nm",
             "peak_torque_l_nm", "tau_rms_r_nm", "tau_max_r_nm", "mpp_r_w", "mnp_r_w", "neg_fraction_r",
             "tau_rms_l_nm", "tau_max_l_nm", "mpp_l_w", "mnp_l_w", "neg_fraction_l"},
            {{torque_limit, static_cast<double>(s.cycles_r), static_cast<double>(s.cycles_l), s.phase_lag_r,
              s.phase_lag_l, s.peak_torque_r, s.peak_torque_l, a.tau_rms, a.tau_max, a.mpp, a.mnp, a.neg_fraction,
              b.tau_rms, b.tau_max, b.mpp, b.mnp, b.neg_fraction}});
  return s;
}

std::vector<TorquePowerMetrics> cmd_analyze(const std::vector<std::string>& files, const std::string& out_dir) {
  if (files.empty()) throw DataError("analyze: no input files");
  ensure_dir(out_dir);
  std::vector<TorquePowerMetrics> per_side[2];
  std::vector<std::vector<std::string>> rows;
  const char* side_name[2] = {"r", "l"};
  auto fmt_row = [](const std::string& file, const std::string& side, const TorquePowerMetrics& m, double cycles,
                    double cycle_s) {
    return std::vector<std::string>{file,
                                    side,
                                    format_number(m.tau_rms),
                                    format_number(m.tau_max),
                                    format_number(m.mpp),
                                    format_number(m.mnp),
                                    format_number(m.neg_fraction),
                                    format_number(cycles),
                                    format_number(cycle_s)};
  };
  std::vector<double> n_cycles[2], cycle_len[2];

  for (const std::string& path : files) {
    const GaitTrace tr = read_gait_trace(path);
    const double rate = tr.sample_rate();
    const Eigen::VectorXd* angle[2] = {&tr.angle_r, &tr.angle_l};
    const Eigen::VectorXd* torque[2] = {&tr.torque_r, &tr.torque_l};
    const Eigen::VectorXd vel[2] = {one_euro_filter(tr.vel_r, rate), one_euro_filter(tr.vel_l, rate)};
    std::vector<std::vector<double>> wave_rows(101);
    std::vector<std::string> wave_header{"pct"};
    for (int s = 0; s < 2; ++s) {
      const std::vector<GaitCycle> cyc = segment_cycles(*angle[s], rate);
      const TorquePowerMetrics m = compute_metrics(*torque[s], vel[s], cyc);
      double mean_len = 0.0;
      for (const GaitCycle& c : cyc) mean_len += c.duration / static_cast<double>(cyc.size());
      per_side[s].push_back(m);
      n_cycles[s].push_back(static_cast<double>(cyc.size()));
      cycle_len[s].push_back(mean_len);
      rows.push_back(fmt_row(fs::path(path).filename().string(), side_name[s], m, static_cast<double>(cyc.size()),
                             mean_len));

      const Eigen::VectorXd power = torque[s]->cwiseProduct(vel[s]);
      const std::pair<const char*, const Eigen::VectorXd*> channels[] = {
          {"hip_angle", angle[s]}, {"torque", torque[s]}, {"power", &power}};
      for (const auto& [name, sig] : channels) {
        const CycleWaveform w = normalize_to_cycle(*sig, cyc);
        wave_header.push_back(std::string(name) + "_" + side_name[s] + "_mean");
        wave_header.push_back(std::string(name) + "_" + side_name[s] + "_sd");
        for (int k = 0; k < 101; ++k) {
          if (wave_rows[k].empty()) wave_rows[k].push_back(w.pct[k]);
          wave_rows[k].push_back(w.mean[k]);
          wave_rows[k].push_back(w.sd[k]);
        }
      }
    }
    write_csv((fs::path(out_dir) / (fs::path(path).stem().string() + "_waveform.csv")).string(), wave_header,
              wave_rows);
  }

  // Across-file mean and sample SD per side.
  std::vector<TorquePowerMetrics> means;
  for (int s = 0; s < 2; ++s) {
    const auto& v = per_side[s];
    const double n = static_cast<double>(v.size());
    auto stat = [&](auto field) {
      double mean = 0.0;
      for (const auto& m : v) mean += field(m) / n;
      double ss = 0.0;
      for (const auto& m : v) ss += (field(m) - mean) * (field(m) - mean);
      return std::pair{mean, v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0};
    };
    const auto rms = stat([](const TorquePowerMetrics& m) { return m.tau_rms; });
    const auto mx = stat([](const TorquePowerMetrics& m) { return m.tau_max; });
    const auto mpp = stat([](const TorquePowerMetrics& m) { return m.mpp; });
    const auto mnp = stat([](const TorquePowerMetrics& m) { return m.mnp; });
    const auto neg = stat([](const TorquePowerMetrics& m) { return m.neg_fraction; });
    double cyc_mean = 0.0, len_mean = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      cyc_mean += n_cycles[s][i] / n;
      len_mean += cycle_len[s][i] / n;
    }
    const TorquePowerMetrics mean{rms.first, mx.first, mpp.first, mnp.first, neg.first};
    const TorquePowerMetrics sd{rms.second, mx.second, mpp.second, mnp.second, neg.second};
    rows.push_back(fmt_row("MEAN", side_name[s], mean, cyc_mean, len_mean));
    rows.push_back(fmt_row("SD", side_name[s], sd, 0.0, 0.0));
    means.push_back(mean);
  }
  write_text_csv((fs::path(out_dir) / "metrics.csv").string(),
                 {"file", "side", "tau_rms_nm", "tau_max_nm", "mpp_w", "mnp_w", "neg_fraction", "cycles",
                  "mean_cycle_s"},
                 rows);
  return means;
}

void cmd_export_plots(const std::string& run_dir, const std::string& out_dir, std::ostream& log) {
  if (!fs::is_directory(run_dir)) throw DataError("export-plots: no run directory " + run_dir);
  ensure_dir(out_dir);
  std::vector<std::vector<double>> curve;
  std::optional<EvalTrace> evals[5];
  bool any = false;
  for (int k = 1; k <= 4; ++k) {
    const std::string metrics = stage_file(run_dir, k, "_metrics.csv");
    if (fs::exists(metrics)) {
      any = true;
      const CsvTable t = read_csv(metrics);
      const auto& step = t.column("step");
      const auto& rew = t.column("mean_episode_reward");
      const auto& len = t.column("mean_episode_length");
      const auto& kl = t.column("approx_kl");
      const auto& u = t.column("mean_abs_u");
      const auto& toe = t.column("toe_off_pct");
      for (std::size_t i = 0; i < t.rows(); ++i) {
        curve.push_back({static_cast<double>(k), step[i], rew[i], len[i], kl[i], u[i], toe[i]});
      }
    }
    const std::string eval = stage_file(run_dir, k, "_eval.csv");
    if (fs::exists(eval)) evals[k] = read_eval_trace(eval);
  }
  if (!any) throw DataError("export-plots: no stage metrics in " + run_dir);
  write_csv((fs::path(out_dir) / "reward_curve.csv").string(),
            {"stage", "step", "mean_episode_reward", "mean_episode_length", "approx_kl", "mean_abs_u", "toe_off_pct"},
            curve);

  for (int k = 1; k <= 4; ++k) {
    if (!evals[k]) continue;
    const EvalTrace& ev = *evals[k];
    const double rate = 1.0 / kControlDt;
    std::vector<GaitCycle> cyc;
    try {
      cyc = segment_cycles(ev.trace.angle_r, rate);
    } catch (const EmptySegmentation&) {
      log << "stage " << k << ": evaluation episode has no complete gait cycle, skipping cycle plots\n";
      continue;
    }
    const Eigen::VectorXd pw_r = ev.trace.torque_r.cwiseProduct(one_euro_filter(ev.trace.vel_r, rate));
    const Eigen::VectorXd pw_l = ev.trace.torque_l.cwiseProduct(one_euro_filter(ev.trace.vel_l, rate));
    const std::pair<std::string, Eigen::VectorXd> channels[] = {
        {"hip_angle_r", ev.trace.angle_r},      {"hip_angle_l", ev.trace.angle_l},
        {"knee_angle_r", ev.joint_angles.col(kTrackKneeR)}, {"ankle_angle_r", ev.joint_angles.col(kTrackAnkleR)},
        {"exo_torque_r", ev.trace.torque_r},    {"exo_torque_l", ev.trace.torque_l},
        {"exo_power_r", pw_r},                  {"exo_power_l", pw_l}};
    std::vector<std::string> header{"pct"};
    std::vector<std::vector<double>> rows(101);
    for (const auto& [name, sig] : channels) {
      const CycleWaveform w = normalize_to_cycle(sig, cyc);
      header.push_back(name + "_mean");
      header.push_back(name + "_sd");
      for (int i = 0; i < 101; ++i) {
        if (rows[i].empty()) rows[i].push_back(w.pct[i]);
        rows[i].push_back(w.mean[i]);
        rows[i].push_back(w.sd[i]);
      }
    }
    write_csv(stage_file(out_dir, k, "_cycle.csv"), header, rows);
  }

  if (evals[2] && evals[4]) {
    const EvalTrace& a = *evals[2];
    const EvalTrace& b = *evals[4];
    std::vector<std::vector<std::string>> rows;
    for (std::size_t m = 0; m < a.muscle_names.size(); ++m) {
      const auto it = std::find(b.muscle_names.begin(), b.muscle_names.end(), a.muscle_names[m]);
      if (it == b.muscle_names.end()) continue;
      const double s2 = a.activations.col(static_cast<Eigen::Index>(m)).mean();
      const double s4 = b.activations.col(it - b.muscle_names.begin()).mean();
      rows.push_back({a.muscle_names[m], format_number(s2), format_number(s4),
                      format_number(s2 > 0.0 ? 100.0 * (s4 - s2) / s2 : kNaN)});
    }
    write_text_csv((fs::path(out_dir) / "activation_comparison.csv").string(),
                   {"muscle", "stage2_mean_activation", "stage4_mean_activation", "change_pct"}, rows);
  } else {
    log << "activation comparison needs stage2_eval.csv and stage4_eval.csv, skipped\n";
  }
}

}  // namespace smat
