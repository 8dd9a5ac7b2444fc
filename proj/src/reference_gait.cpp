#include "smat/reference_gait.hpp"

#include "smat/csv.hpp"
#include "smat/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace smat {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Harmonic term c * cos(k 2 pi (phase - shift)).
struct Harmonic {
  double k;
  double c;
  double shift;
};

struct JointSeries {
  double mean;
  std::vector<Harmonic> terms;

  double value(double phase) const {
    double v = mean;
    for (const Harmonic& h : terms) v += h.c * std::cos(h.k * kTwoPi * (phase - h.shift));
    return v;
  }
  double derivative(double phase) const {
    double d = 0.0;
    for (const Harmonic& h : terms) d -= h.c * h.k * kTwoPi * std::sin(h.k * kTwoPi * (phase - h.shift));
    return d;
  }
};

// Right-leg patterns; the left leg runs half a cycle out of phase.
JointSeries hip_series() {
  // 0.33 cos + 0.04 sin folded into amplitude/shift form.
  const double amp = std::hypot(0.33, 0.04);
  const double shift = std::atan2(0.04, 0.33) / kTwoPi;
  return {0.16, {{1.0, amp, shift}}};
}
JointSeries knee_series() {
  const double amp = std::hypot(0.20, 0.35);
  const double shift = std::atan2(-0.35, -0.20) / kTwoPi;
  return {0.45, {{1.0, amp, shift}, {2.0, 0.08, 0.12}}};
}
JointSeries ankle_series() { return {0.02, {{1.0, 0.08, 0.25}, {2.0, 0.10, 0.0}}}; }
JointSeries pelvis_series() { return {0.0, {{2.0, 0.02, 0.125}}}; }

double wrap_phase(double phase) {
  double p = phase - std::floor(phase);
  if (p >= 1.0) p = 0.0;
  return p;
}

}  // namespace

const char* ReferenceGait::joint_name(int j) {
  static const char* names[kNumTracked] = {"pelvis_pitch", "hip_r", "knee_r", "ankle_r",
                                           "hip_l",        "knee_l", "ankle_l"};
  return names[j];
}

ReferenceGait::ReferenceGait(std::vector<double> phase, std::vector<TrackedVec> angle,
                             std::vector<TrackedVec> velocity, double pelvis_speed, double cycle_duration)
    : phase_(std::move(phase)),
      angle_(std::move(angle)),
      velocity_(std::move(velocity)),
      pelvis_speed_(pelvis_speed),
      cycle_duration_(cycle_duration) {
  if (phase_.size() < 2 || angle_.size() != phase_.size() || velocity_.size() != phase_.size()) {
    throw DataError("reference gait needs at least two samples with matching columns");
  }
  if (!(pelvis_speed_ > 0.0)) throw DataError("reference pelvis speed must be > 0");
  if (!(cycle_duration_ > 0.0)) throw DataError("reference cycle duration must be > 0");
  for (std::size_t i = 1; i < phase_.size(); ++i) {
    if (!(phase_[i] > phase_[i - 1])) throw DataError("reference gait phase must be strictly increasing");
  }
  if (phase_.front() < 0.0 || phase_.back() > 1.0) throw DataError("reference gait phase must lie in [0, 1]");
  // Close the cycle so the table is periodic.
  if (phase_.front() > 0.0 || phase_.back() < 1.0) {
    // Value at the wrap point, interpolated across the gap.
    const double t = (1.0 - phase_.back()) / (1.0 + phase_.front() - phase_.back());
    const TrackedVec a0 = angle_.back() + t * (angle_.front() - angle_.back());
    const TrackedVec v0 = velocity_.back() + t * (velocity_.front() - velocity_.back());
    if (phase_.front() > 0.0) {
      phase_.insert(phase_.begin(), 0.0);
      angle_.insert(angle_.begin(), a0);
      velocity_.insert(velocity_.begin(), v0);
    }
    if (phase_.back() < 1.0) {
      phase_.push_back(1.0);
      angle_.push_back(a0);
      velocity_.push_back(v0);
    }
  } else if ((angle_.front() - angle_.back()).cwiseAbs().maxCoeff() > 1e-6) {
    throw DataError("reference gait is not periodic: rows at phase 0 and 1 differ");
  }
}

ReferenceGait ReferenceGait::parametric(int samples) {
  const double cycle = 1.1;
  const JointSeries hip = hip_series(), knee = knee_series(), ankle = ankle_series(), pelvis = pelvis_series();
  std::vector<double> phase;
  std::vector<TrackedVec> angle, velocity;
  for (int i = 0; i <= samples; ++i) {
    const double p = static_cast<double>(i) / samples;
    const double pl = wrap_phase(p + 0.5);
    TrackedVec a, v;
    a << pelvis.value(p), hip.value(p), knee.value(p), ankle.value(p), hip.value(pl), knee.value(pl),
        ankle.value(pl);
    v << pelvis.derivative(p), hip.derivative(p), knee.derivative(p), ankle.derivative(p), hip.derivative(pl),
        knee.derivative(pl), ankle.derivative(pl);
    phase.push_back(p);
    angle.push_back(a);
    velocity.push_back(v / cycle);
  }
  angle.back() = angle.front();
  velocity.back() = velocity.front();
  return ReferenceGait(std::move(phase), std::move(angle), std::move(velocity), kTargetSpeed, cycle);
}

ReferenceGait ReferenceGait::from_csv(const std::string& path, double pelvis_speed, double cycle_duration) {
  const CsvTable t = read_csv(path);
  const auto& ph = t.column("phase");
  std::vector<TrackedVec> angle(ph.size()), velocity(ph.size());
  for (int j = 0; j < kNumTracked; ++j) {
    const auto& a = t.column(std::string(joint_name(j)) + "_angle");
    const auto& v = t.column(std::string(joint_name(j)) + "_vel");
    for (std::size_t i = 0; i < ph.size(); ++i) {
      angle[i][j] = a[i];
      velocity[i][j] = v[i];
    }
  }
  return ReferenceGait(ph, std::move(angle), std::move(velocity), pelvis_speed, cycle_duration);
}

ReferenceGait::Sample ReferenceGait::at(double phase) const {
  const double p = wrap_phase(phase);
  auto it = std::upper_bound(phase_.begin(), phase_.end(), p);
  std::size_t hi = static_cast<std::size_t>(it - phase_.begin());
  if (hi >= phase_.size()) hi = phase_.size() - 1;
  const std::size_t lo = hi - 1;
  const double t = (p - phase_[lo]) / (phase_[hi] - phase_[lo]);
  return {angle_[lo] + t * (angle_[hi] - angle_[lo]), velocity_[lo] + t * (velocity_[hi] - velocity_[lo])};
}

}  // namespace smat
