#pragma once

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace smat {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Generalized coordinates of the planar walker. Joint angles are relative:
// hip flexion and ankle dorsiflexion positive, knee flexion positive.
enum Dof : int {
  kPelvisX = 0,
  kPelvisZ,
  kPelvisPitch,
  kHipR,
  kKneeR,
  kAnkleR,
  kHipL,
  kKneeL,
  kAnkleL,
  kNumDof
};

inline constexpr int kNumJoints = 6;  // actuated dofs, kHipR..kAnkleL
inline constexpr int kFirstJoint = kHipR;

template <typename Scalar>
using GenVec = Eigen::Matrix<Scalar, kNumDof, 1>;
template <typename Scalar>
using GenMat = Eigen::Matrix<Scalar, kNumDof, kNumDof>;

struct Segment {
  std::string name;
  double mass = 0.0;     // kg
  double length = 0.0;   // m
  double inertia = 0.0;  // kg m^2 about the segment COM
};

// Segment order inside WalkerModel::segments.
enum SegmentId : int { kTorso = 0, kThighR, kThighL, kShankR, kShankL, kFootR, kFootL, kNumSegments };

struct JointLimit {
  double lower = 0.0;  // rad
  double upper = 0.0;  // rad
};

struct MuscleAction {
  int dof = kHipR;
  int sign = 1;             // +1 flexor, -1 extensor about this dof
  double max_torque = 0.0;  // Nm, constant moment arm x max isometric force
};

// Activation-driven torque generator; biarticular muscles carry one action per
// spanned joint.
struct MuscleSpec {
  std::string name;
  std::vector<MuscleAction> actions;
  double tau_act = 0.01;    // s
  double tau_deact = 0.04;  // s
  bool hip_muscle = false;  // member of the hip-activation penalty set
};

struct ExoAttachment {
  double pelvis_mass = 3.94;  // kg
  double thigh_mass = 1.0;    // kg per side
  double torque_limit = 0.0;  // Nm, per hip

  double total_mass() const { return pelvis_mass + 2.0 * thigh_mass; }
};

struct ContactParams {
  double stiffness = 1e4;  // N/m
  double damping = 1e2;    // N s/m
  double friction = 0.9;
};

struct FootGeometry {
  double ankle_height = 0.07;  // ankle above sole, m
  double heel_back = 0.05;     // heel behind ankle, m
  double toe_forward = 0.20;   // toe ahead of ankle, m
  double com_forward = 0.06;   // foot COM ahead of ankle, m
};

struct WalkerModel {
  std::array<Segment, kNumSegments> segments;
  double torso_com_height = 0.33;  // above hip joint, m
  double thigh_com_fraction = 0.433;
  double shank_com_fraction = 0.433;
  FootGeometry foot;

  // Indexed by dof - kFirstJoint.
  std::array<JointLimit, kNumJoints> joint_limits;
  double limit_stiffness = 1000.0;  // Nm/rad
  double limit_damping = 10.0;      // Nm s/rad

  std::vector<MuscleSpec> muscles;
  ContactParams contact;
  double gravity = 9.81;
  double physics_dt = 0.002;

  // Held fixed at their initial value (zero acceleration). Used for suspended
  // or single-joint test rigs.
  std::array<bool, kNumDof> locked{};

  double fall_height_fraction = 0.6;
  double fall_pitch = 1.0;  // rad

  std::optional<ExoAttachment> exo;

  int num_muscles() const { return static_cast<int>(muscles.size()); }
  // Sum of segment masses; attach_exo folds the exo masses into the segments.
  double total_mass() const;
  double body_weight() const { return total_mass() * gravity; }
  double standing_height() const;
  std::vector<int> hip_muscle_indices() const;

  // Throws ConfigError when an invariant does not hold.
  void validate() const;
};

// 75 kg / 1.75 m planar walker with five muscles per leg.
WalkerModel default_walker_model();
std::vector<MuscleSpec> default_muscles();

// Adds the exo masses to the pelvis and thigh segments. Throws AlreadyAttached.
WalkerModel attach_exo(WalkerModel model, const ExoAttachment& exo);

struct SimState {
  GenVec<double> q = GenVec<double>::Zero();
  GenVec<double> qd = GenVec<double>::Zero();
  Vec activations;
  double time = 0.0;
  double foot_force_r = 0.0;  // vertical, N
  double foot_force_l = 0.0;
  std::array<double, kNumJoints> limit_torque{};  // joint-limit constraint forces
  Eigen::Vector2d exo_torque = Eigen::Vector2d::Zero();  // applied, Nm (r, l)

  // Tangential stick anchors for heel_r, toe_r, heel_l, toe_l.
  std::array<double, 4> anchor_x{};
  std::array<bool, 4> in_contact{};

  double forward_speed() const { return qd[kPelvisX]; }
};

struct StepResult {
  SimState state;
  bool fallen = false;
};

// Advances by dt in substeps of model.physics_dt (symplectic drift-kick-drift).
// Throws IntegrationDiverged on a non-finite state.
StepResult step(const SimState& state, const WalkerModel& model, const Vec& excitations,
                const Eigen::Vector2d& exo_cmd, double dt);

bool has_fallen(const SimState& state, const WalkerModel& model);

// Pose with pelvis height chosen so the lowest sole point rests on the ground.
SimState make_state(const WalkerModel& model, const GenVec<double>& q, const GenVec<double>& qd);

GenMat<double> mass_matrix(const WalkerModel& model, const GenVec<double>& q);
double kinetic_energy(const WalkerModel& model, const SimState& state);
double potential_energy(const WalkerModel& model, const SimState& state);

struct ContactPoints {
  std::array<Eigen::Vector2d, 4> position;  // heel_r, toe_r, heel_l, toe_l
};
ContactPoints contact_points(const WalkerModel& model, const GenVec<double>& q);

// Hip flexion angle and rate per side: (hip_r, hip_l, omega_r, omega_l).
Eigen::Vector4d hip_kinematics(const SimState& state);

// Three-step ring buffer feeding the exo observation; slot 0 is the oldest.
class ObsHistory {
 public:
  static constexpr int kSlots = 3;
  static constexpr int kExoObsDim = kSlots * 4 + kSlots * 2;

  ObsHistory() = default;
  ObsHistory(const Eigen::Vector4d& kinematics, const Eigen::Vector2d& command) {
    seed(kinematics, command);
  }

  void seed(const Eigen::Vector4d& kinematics, const Eigen::Vector2d& command);
  void push(const Eigen::Vector4d& kinematics, const Eigen::Vector2d& command);

  const Eigen::Vector4d& kinematics(int slot) const { return kinematics_[slot]; }
  const Eigen::Vector2d& command(int slot) const { return commands_[slot]; }
  const Eigen::Vector2d& latest_command() const { return commands_[kSlots - 1]; }
  bool initialized() const { return initialized_; }

 private:
  std::array<Eigen::Vector4d, kSlots> kinematics_{};
  std::array<Eigen::Vector2d, kSlots> commands_{};
  bool initialized_ = false;
};

// Human actor input: q without pelvis x, qd, activations, then optionally the
// latest normalized exo commands (u_r, u_l).
Vec observe_human(const SimState& state, const ObsHistory& history, bool include_exo_torque);
int human_obs_dim(int num_muscles, bool include_exo_torque);

// [3 x (hip_r, hip_l, omega_r, omega_l)] ++ [3 x (u_r, u_l)], oldest first.
Eigen::Matrix<double, ObsHistory::kExoObsDim, 1> observe_exo(const ObsHistory& history);

}  // namespace smat
