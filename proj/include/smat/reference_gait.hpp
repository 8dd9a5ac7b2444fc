#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "smat/rewards.hpp"

namespace smat {

using TrackedVec = Eigen::Matrix<double, kNumTracked, 1>;

// Phase-indexed reference kinematics for the tracked joints. Stored as a table
// over phase in [0, 1] with the last row equal to the first; lookups
// interpolate linearly and wrap.
class ReferenceGait {
 public:
  struct Sample {
    TrackedVec angle;     // rad
    TrackedVec velocity;  // rad/s at the nominal cycle duration
  };

  ReferenceGait(std::vector<double> phase, std::vector<TrackedVec> angle, std::vector<TrackedVec> velocity,
                double pelvis_speed, double cycle_duration);

  // Fourier approximation of level walking at 1.25 m/s, 1.1 s cycle.
  static ReferenceGait parametric(int samples = 200);

  // Columns: phase, then <joint>_angle and <joint>_vel for every tracked joint.
  static ReferenceGait from_csv(const std::string& path, double pelvis_speed = kTargetSpeed,
                                double cycle_duration = 1.1);

  Sample at(double phase) const;
  double pelvis_speed() const { return pelvis_speed_; }
  double cycle_duration() const { return cycle_duration_; }
  // Scale applied to reference velocities: v* / pelvis reference speed.
  double speed_scale(double v_star) const { return v_star / pelvis_speed_; }

  static const char* joint_name(int j);

 private:
  std::vector<double> phase_;
  std::vector<TrackedVec> angle_;
  std::vector<TrackedVec> velocity_;
  double pelvis_speed_;
  double cycle_duration_;
};

}  // namespace smat
