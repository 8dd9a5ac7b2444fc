#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace smat {

// Bilateral hip trace. Foot forces are present only for simulated data.
struct GaitTrace {
  Eigen::VectorXd time;  // s, uniformly sampled
  Eigen::VectorXd angle_r, angle_l;
  Eigen::VectorXd vel_r, vel_l;
  Eigen::VectorXd torque_r, torque_l;
  Eigen::VectorXd foot_force_r, foot_force_l;  // empty when absent

  Eigen::Index size() const { return time.size(); }
  double sample_rate() const;
  bool has_foot_force() const { return foot_force_r.size() == time.size() && time.size() > 0; }
  void validate() const;  // throws DataError
};

// Column names of the trace CSV, in order. The two force columns are optional.
inline const std::vector<std::string>& gait_trace_columns() {
  static const std::vector<std::string> cols{"time_s",         "hip_angle_r_rad", "hip_angle_l_rad",
                                             "hip_vel_r_rads", "hip_vel_l_rads",  "torque_r_nm",
                                             "torque_l_nm",    "foot_force_r_n",  "foot_force_l_n"};
  return cols;
}

// Reads a trace by column name; extra columns are ignored. Throws DataError.
GaitTrace read_gait_trace(const std::string& path);
void write_gait_trace(const std::string& path, const GaitTrace& trace);

// Linear resampling onto a uniform grid starting at the first sample.
GaitTrace resample(const GaitTrace& trace, double rate_hz);

struct OneEuroParams {
  double min_cutoff = 1.0;  // Hz
  double beta = 0.007;
  double d_cutoff = 1.0;    // Hz
};

Eigen::VectorXd one_euro_filter(const Eigen::VectorXd& signal, double sample_rate, const OneEuroParams& params = {});

struct GaitCycle {
  Eigen::Index start = 0;  // peak sample, inclusive
  Eigen::Index end = 0;    // next peak sample, exclusive
  double duration = 0.0;   // s
  std::optional<double> toe_off;  // % of cycle

  Eigen::Index length() const { return end - start; }
};

struct SegmentParams {
  double min_period = 0.6;            // s
  double prominence_fraction = 0.2;   // of the signal's peak-to-peak range
};

// Cycles bounded by consecutive peaks of the angle signal. Throws
// EmptySegmentation when fewer than two peaks are found.
std::vector<GaitCycle> segment_cycles(const Eigen::VectorXd& angle, double sample_rate,
                                      const SegmentParams& params = {});

struct TorquePowerMetrics {
  double tau_rms = 0.0;
  double tau_max = 0.0;
  double mpp = 0.0;  // W
  double mnp = 0.0;  // W
  double neg_fraction = 0.0;
};

// One cycle.
TorquePowerMetrics compute_metrics(const Eigen::VectorXd& torque, const Eigen::VectorXd& velocity);
// Averaged over cycles.
TorquePowerMetrics compute_metrics(const Eigen::VectorXd& torque, const Eigen::VectorXd& velocity,
                                   const std::vector<GaitCycle>& cycles);

struct CycleWaveform {
  Eigen::VectorXd pct;
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;  // population
};

CycleWaveform normalize_to_cycle(const Eigen::VectorXd& signal, const std::vector<GaitCycle>& cycles,
                                 int n_points = 101);

// Circular cross-correlation lag of a relative to b, in % cycle within [-50, 50).
// Positive when a is delayed with respect to b.
double phase_lag(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

double symmetry_pearson(const Eigen::VectorXd& right, const Eigen::VectorXd& left);

// Fills cycle.toe_off where the foot unloads (below 2 % mg) after carrying load.
void detect_toe_off(const Eigen::VectorXd& force, std::vector<GaitCycle>& cycles, double mg,
                    double threshold_fraction = 0.02);

}  // namespace smat
