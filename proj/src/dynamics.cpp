#include "smat/dynamics.hpp"

#include "smat/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace smat {

namespace {

using Row = Eigen::Matrix<double, 1, kNumDof>;
using Jacobian = Eigen::Matrix<double, 2, kNumDof>;

// One link of a planar chain: length * (sin phi, -cos phi) with
// phi = sel . q + offset. phi = 0 points straight down.
struct Term {
  double length;
  Row sel;
  double offset;
};

struct PointDef {
  std::vector<Term> terms;
};

struct BodyDef {
  double mass;
  double inertia;
  Row sel;
  PointDef com;
};

struct Geometry {
  std::array<BodyDef, kNumSegments> bodies;
  std::array<PointDef, 4> contacts;
};

struct PointKin {
  Eigen::Vector2d pos;
  Jacobian jac;
  Eigen::Vector2d jdot_qd;
};

Row unit_row(int dof) {
  Row r = Row::Zero();
  r[dof] = 1.0;
  return r;
}

PointDef extend(const PointDef& base, std::initializer_list<Term> more) {
  PointDef p = base;
  p.terms.insert(p.terms.end(), more);
  return p;
}

Geometry build_geometry(const WalkerModel& m) {
  constexpr double kHalfPi = std::numbers::pi / 2.0;
  Geometry g;
  const Row pitch = unit_row(kPelvisPitch);
  g.bodies[kTorso] = {m.segments[kTorso].mass, m.segments[kTorso].inertia, pitch,
                      PointDef{{{m.torso_com_height, pitch, std::numbers::pi}}}};

  auto leg = [&](int hip, SegmentId thigh, SegmentId shank, SegmentId foot, int contact0) {
    const Row sel_thigh = pitch + unit_row(hip);
    const Row sel_shank = sel_thigh - unit_row(hip + 1);
    const Row sel_foot = sel_shank + unit_row(hip + 2);
    const double lt = m.segments[thigh].length;
    const double ls = m.segments[shank].length;
    const PointDef knee{{{lt, sel_thigh, 0.0}}};
    const PointDef ankle = extend(knee, {{ls, sel_shank, 0.0}});
    const FootGeometry& f = m.foot;

    g.bodies[thigh] = {m.segments[thigh].mass, m.segments[thigh].inertia, sel_thigh,
                       PointDef{{{m.thigh_com_fraction * lt, sel_thigh, 0.0}}}};
    g.bodies[shank] = {m.segments[shank].mass, m.segments[shank].inertia, sel_shank,
                       extend(knee, {{m.shank_com_fraction * ls, sel_shank, 0.0}})};
    g.bodies[foot] = {m.segments[foot].mass, m.segments[foot].inertia, sel_foot,
                      extend(ankle, {{f.com_forward, sel_foot, kHalfPi},
                                     {0.5 * f.ankle_height, sel_foot, 0.0}})};
    g.contacts[contact0] =
        extend(ankle, {{f.heel_back, sel_foot, -kHalfPi}, {f.ankle_height, sel_foot, 0.0}});
    g.contacts[contact0 + 1] =
        extend(ankle, {{f.toe_forward, sel_foot, kHalfPi}, {f.ankle_height, sel_foot, 0.0}});
  };
  leg(kHipR, kThighR, kShankR, kFootR, 0);
  leg(kHipL, kThighL, kShankL, kFootL, 2);
  return g;
}

PointKin eval_point(const PointDef& p, const GenVec<double>& q, const GenVec<double>& qd) {
  PointKin k;
  k.pos = Eigen::Vector2d(q[kPelvisX], q[kPelvisZ]);
  k.jac.setZero();
  k.jac(0, kPelvisX) = 1.0;
  k.jac(1, kPelvisZ) = 1.0;
  k.jdot_qd.setZero();
  for (const Term& t : p.terms) {
    const double phi = t.sel.dot(q) + t.offset;
    const double phid = t.sel.dot(qd);
    const double s = std::sin(phi);
    const double c = std::cos(phi);
    const Eigen::Vector2d u(s, -c);
    const Eigen::Vector2d du(c, s);
    k.pos += t.length * u;
    k.jac += t.length * du * t.sel;
    k.jdot_qd -= t.length * phid * phid * u;
  }
  return k;
}

Eigen::Vector2d eval_position(const PointDef& p, const GenVec<double>& q) {
  Eigen::Vector2d pos(q[kPelvisX], q[kPelvisZ]);
  for (const Term& t : p.terms) {
    const double phi = t.sel.dot(q) + t.offset;
    pos += t.length * Eigen::Vector2d(std::sin(phi), -std::cos(phi));
  }
  return pos;
}

bool all_finite(const SimState& s) {
  return s.q.allFinite() && s.qd.allFinite() && s.activations.allFinite();
}

}  // namespace

double WalkerModel::total_mass() const {
  double total = 0.0;
  for (const Segment& s : segments) total += s.mass;
  return total;
}

double WalkerModel::standing_height() const {
  return segments[kThighR].length + segments[kShankR].length + foot.ankle_height;
}

std::vector<int> WalkerModel::hip_muscle_indices() const {
  std::vector<int> idx;
  for (int i = 0; i < num_muscles(); ++i) {
    if (muscles[i].hip_muscle) idx.push_back(i);
  }
  return idx;
}

void WalkerModel::validate() const {
  for (const Segment& s : segments) {
    if (!(s.mass > 0.0 && s.length > 0.0 && s.inertia > 0.0)) {
      throw ConfigError("segment '" + s.name + "' needs positive mass, length and inertia");
    }
  }
  for (const JointLimit& l : joint_limits) {
    if (!(l.lower < l.upper)) throw ConfigError("joint limit lower must be < upper");
  }
  if (muscles.empty()) throw ConfigError("muscle list is empty");
  for (const MuscleSpec& m : muscles) {
    if (m.actions.empty()) throw ConfigError("muscle '" + m.name + "' has no joint action");
    if (!(m.tau_act > 0.0 && m.tau_deact > 0.0)) {
      throw ConfigError("muscle '" + m.name + "' time constants must be > 0");
    }
    for (const MuscleAction& a : m.actions) {
      if (a.sign != 1 && a.sign != -1) throw ConfigError("muscle sign must be +1 or -1");
      if (!(a.max_torque > 0.0)) throw ConfigError("muscle max torque must be > 0");
      if (a.dof < kFirstJoint || a.dof >= kNumDof) throw ConfigError("muscle targets a non-joint dof");
    }
  }
  if (!(physics_dt > 0.0)) throw ConfigError("physics_dt must be > 0");
  if (exo) {
    if (exo->torque_limit < 0.0 || exo->pelvis_mass < 0.0 || exo->thigh_mass < 0.0) {
      throw ConfigError("exo masses and torque limit must be >= 0");
    }
  }
}

std::vector<MuscleSpec> default_muscles() {
  std::vector<MuscleSpec> out;
  for (int side = 0; side < 2; ++side) {
    const int hip = side == 0 ? kHipR : kHipL;
    const std::string sfx = side == 0 ? "_r" : "_l";
    out.push_back({"iliopsoas" + sfx, {{hip, +1, 120.0}}, 0.01, 0.04, true});
    out.push_back({"gluteus_max" + sfx, {{hip, -1, 150.0}}, 0.01, 0.04, true});
    out.push_back({"rectus_femoris" + sfx, {{hip, +1, 60.0}, {hip + 1, -1, 80.0}}, 0.01, 0.04, true});
    out.push_back({"hamstrings" + sfx, {{hip, -1, 80.0}, {hip + 1, +1, 60.0}}, 0.01, 0.04, true});
    out.push_back({"plantarflexor" + sfx, {{hip + 2, -1, 150.0}}, 0.01, 0.04, false});
  }
  return out;
}

WalkerModel default_walker_model() {
  WalkerModel m;
  m.segments[kTorso] = {"torso", 50.84, 0.82, 3.2};
  m.segments[kThighR] = {"thigh_r", 7.5, 0.43, 0.145};
  m.segments[kThighL] = {"thigh_l", 7.5, 0.43, 0.145};
  m.segments[kShankR] = {"shank_r", 3.49, 0.43, 0.059};
  m.segments[kShankL] = {"shank_l", 3.49, 0.43, 0.059};
  m.segments[kFootR] = {"foot_r", 1.09, 0.26, 0.01};
  m.segments[kFootL] = {"foot_l", 1.09, 0.26, 0.01};
  const JointLimit hip{-0.5, 1.6};
  const JointLimit knee{0.0, 2.4};
  const JointLimit ankle{-0.7, 0.5};
  m.joint_limits = {hip, knee, ankle, hip, knee, ankle};
  m.muscles = default_muscles();
  return m;
}

WalkerModel attach_exo(WalkerModel model, const ExoAttachment& exo) {
  if (model.exo) throw AlreadyAttached("exoskeleton already attached to this model");
  model.segments[kTorso].mass += exo.pelvis_mass;
  model.segments[kThighR].mass += exo.thigh_mass;
  model.segments[kThighL].mass += exo.thigh_mass;
  model.exo = exo;
  return model;
}

GenMat<double> mass_matrix(const WalkerModel& model, const GenVec<double>& q) {
  const Geometry g = build_geometry(model);
  const GenVec<double> qd = GenVec<double>::Zero();
  GenMat<double> mm = GenMat<double>::Zero();
  for (const BodyDef& b : g.bodies) {
    const PointKin k = eval_point(b.com, q, qd);
    mm.noalias() += b.mass * k.jac.transpose() * k.jac;
    mm.noalias() += b.inertia * b.sel.transpose() * b.sel;
  }
  return mm;
}

double kinetic_energy(const WalkerModel& model, const SimState& state) {
  return 0.5 * state.qd.dot(mass_matrix(model, state.q) * state.qd);
}

double potential_energy(const WalkerModel& model, const SimState& state) {
  const Geometry g = build_geometry(model);
  double pe = 0.0;
  for (const BodyDef& b : g.bodies) pe += b.mass * model.gravity * eval_position(b.com, state.q).y();
  return pe;
}

ContactPoints contact_points(const WalkerModel& model, const GenVec<double>& q) {
  const Geometry g = build_geometry(model);
  ContactPoints cp;
  for (int i = 0; i < 4; ++i) cp.position[i] = eval_position(g.contacts[i], q);
  return cp;
}

bool has_fallen(const SimState& state, const WalkerModel& model) {
  return state.q[kPelvisZ] < model.fall_height_fraction * model.standing_height() ||
         std::abs(state.q[kPelvisPitch]) > model.fall_pitch;
}

SimState make_state(const WalkerModel& model, const GenVec<double>& q, const GenVec<double>& qd) {
  SimState s;
  s.q = q;
  s.q[kPelvisZ] = 0.0;
  const ContactPoints cp = contact_points(model, s.q);
  double lowest = cp.position[0].y();
  for (const auto& p : cp.position) lowest = std::min(lowest, p.y());
  s.q[kPelvisZ] = -lowest;
  s.qd = qd;
  s.activations = Vec::Zero(model.num_muscles());
  return s;
}

StepResult step(const SimState& state, const WalkerModel& model, const Vec& excitations,
                const Eigen::Vector2d& exo_cmd, double dt) {
  if (!(dt > 0.0)) throw Error("step: dt must be > 0");
  require_same_size(excitations.size(), model.num_muscles(), "step excitations");

  const Geometry g = build_geometry(model);
  const int substeps = std::max(1, static_cast<int>(std::ceil(dt / model.physics_dt - 1e-9)));
  const double h = dt / substeps;

  const double torque_limit = model.exo ? model.exo->torque_limit : 0.0;
  const Eigen::Vector2d cmd = exo_cmd.cwiseMax(-1.0).cwiseMin(1.0);
  const Eigen::Vector2d exo_torque = cmd * torque_limit;

  std::vector<int> free_dofs;
  for (int i = 0; i < kNumDof; ++i) {
    if (!model.locked[i]) free_dofs.push_back(i);
  }
  const bool any_locked = static_cast<int>(free_dofs.size()) != kNumDof;

  SimState s = state;
  if (s.activations.size() != model.num_muscles()) s.activations = Vec::Zero(model.num_muscles());
  const Vec u = excitations.cwiseMax(0.0).cwiseMin(1.0);
  const ContactParams& cp = model.contact;

  Vec a_mid(model.num_muscles());
  std::vector<GenVec<double>> bias_cols;
  std::vector<Row> bias_sels;
  for (int sub = 0; sub < substeps; ++sub) {
    // Drift-kick-drift: forces are evaluated at the half step.
    for (int j = 0; j < model.num_muscles(); ++j) {
      const MuscleSpec& ms = model.muscles[j];
      const double a = s.activations[j];
      const double tau = u[j] > a ? ms.tau_act : ms.tau_deact;
      a_mid[j] = std::clamp(u[j] + (a - u[j]) * std::exp(-0.5 * h / tau), 0.0, 1.0);
      s.activations[j] = std::clamp(u[j] + (a - u[j]) * std::exp(-h / tau), 0.0, 1.0);
    }
    s.q += 0.5 * h * s.qd;

    GenVec<double> gen_force = GenVec<double>::Zero();
    for (int j = 0; j < model.num_muscles(); ++j) {
      for (const MuscleAction& act : model.muscles[j].actions) {
        gen_force[act.dof] += act.sign * act.max_torque * a_mid[j];
      }
    }
    gen_force[kHipR] += exo_torque[0];
    gen_force[kHipL] += exo_torque[1];

    for (int i = 0; i < kNumJoints; ++i) {
      const int dof = kFirstJoint + i;
      const JointLimit& lim = model.joint_limits[i];
      double f = 0.0;
      if (s.q[dof] < lim.lower) {
        f = std::max(0.0, model.limit_stiffness * (lim.lower - s.q[dof]) - model.limit_damping * s.qd[dof]);
      } else if (s.q[dof] > lim.upper) {
        f = std::min(0.0, -model.limit_stiffness * (s.q[dof] - lim.upper) - model.limit_damping * s.qd[dof]);
      }
      s.limit_torque[i] = f;
      gen_force[dof] += f;
    }

    // Velocity-product terms are kept as sum_t c_t (sel_t . v)^2 so they can
    // be re-evaluated at the midpoint velocity below.
    GenMat<double> mm = GenMat<double>::Zero();
    bias_cols.clear();
    bias_sels.clear();
    for (const BodyDef& b : g.bodies) {
      const PointKin k = eval_point(b.com, s.q, s.qd);
      mm.noalias() += b.mass * k.jac.transpose() * k.jac;
      mm.noalias() += b.inertia * b.sel.transpose() * b.sel;
      gen_force.noalias() += k.jac.transpose() * Eigen::Vector2d(0.0, -b.mass * model.gravity);
      for (const Term& t : b.com.terms) {
        const double phi = t.sel.dot(s.q) + t.offset;
        bias_cols.push_back(b.mass * t.length * (k.jac.transpose() * Eigen::Vector2d(std::sin(phi), -std::cos(phi))));
        bias_sels.push_back(t.sel);
      }
    }

    double normal[4] = {0.0, 0.0, 0.0, 0.0};
    for (int c = 0; c < 4; ++c) {
      const PointKin k = eval_point(g.contacts[c], s.q, s.qd);
      const Eigen::Vector2d vel = k.jac * s.qd;
      if (k.pos.y() < 0.0) {
        const double fn = std::max(0.0, -cp.stiffness * k.pos.y() - cp.damping * vel.y());
        if (!s.in_contact[c]) {
          s.anchor_x[c] = k.pos.x();
          s.in_contact[c] = true;
        }
        double ft = -cp.stiffness * (k.pos.x() - s.anchor_x[c]) - cp.damping * vel.x();
        const double limit = cp.friction * fn;
        if (std::abs(ft) > limit) {
          ft = std::copysign(limit, ft);
          s.anchor_x[c] = k.pos.x() + (ft + cp.damping * vel.x()) / cp.stiffness;
        }
        normal[c] = fn;
        gen_force.noalias() += k.jac.transpose() * Eigen::Vector2d(ft, fn);
      } else {
        s.in_contact[c] = false;
      }
    }
    s.foot_force_r = normal[0] + normal[1];
    s.foot_force_l = normal[2] + normal[3];

    auto velocity_force = [&](const GenVec<double>& v) {
      GenVec<double> f = GenVec<double>::Zero();
      for (std::size_t i = 0; i < bias_cols.size(); ++i) {
        const double w = bias_sels[i].dot(v);
        f.noalias() += (w * w) * bias_cols[i];
      }
      return f;
    };

    GenVec<double> qdd = GenVec<double>::Zero();
    if (!free_dofs.empty()) {
      Eigen::LDLT<Mat> ldlt;
      if (any_locked) {
        ldlt.compute(mm(free_dofs, free_dofs));
      } else {
        ldlt.compute(mm);
      }
      auto solve = [&](const GenVec<double>& rhs) {
        GenVec<double> out = GenVec<double>::Zero();
        if (any_locked) {
          const Vec r = rhs(free_dofs);
          const Vec sol = ldlt.solve(r);
          out(free_dofs) = sol;
        } else {
          out = ldlt.solve(Vec(rhs));
        }
        return out;
      };
      // Two fixed-point passes on the midpoint velocity.
      qdd = solve(gen_force + velocity_force(s.qd));
      for (int it = 0; it < 2; ++it) {
        const GenVec<double> v_mid = s.qd + 0.5 * h * qdd;
        qdd = solve(gen_force + velocity_force(v_mid));
      }
    }

    s.qd += h * qdd;
    s.q += 0.5 * h * s.qd;
    s.time += h;
    if (!all_finite(s)) {
      throw IntegrationDiverged("non-finite walker state at t=" + std::to_string(s.time));
    }
  }
  s.exo_torque = exo_torque;

  StepResult r;
  r.fallen = has_fallen(s, model);
  r.state = std::move(s);
  return r;
}

Eigen::Vector4d hip_kinematics(const SimState& state) {
  return {state.q[kHipR], state.q[kHipL], state.qd[kHipR], state.qd[kHipL]};
}

void ObsHistory::seed(const Eigen::Vector4d& kinematics, const Eigen::Vector2d& command) {
  kinematics_.fill(kinematics);
  commands_.fill(command);
  initialized_ = true;
}

void ObsHistory::push(const Eigen::Vector4d& kinematics, const Eigen::Vector2d& command) {
  if (!initialized_) {
    seed(kinematics, command);
    return;
  }
  for (int i = 0; i + 1 < kSlots; ++i) {
    kinematics_[i] = kinematics_[i + 1];
    commands_[i] = commands_[i + 1];
  }
  kinematics_[kSlots - 1] = kinematics;
  commands_[kSlots - 1] = command;
}

int human_obs_dim(int num_muscles, bool include_exo_torque) {
  return (kNumDof - 1) + kNumDof + num_muscles + (include_exo_torque ? 2 : 0);
}

Vec observe_human(const SimState& state, const ObsHistory& history, bool include_exo_torque) {
  const int nm = static_cast<int>(state.activations.size());
  Vec obs(human_obs_dim(nm, include_exo_torque));
  obs.head<kNumDof - 1>() = state.q.tail<kNumDof - 1>();
  obs.segment<kNumDof>(kNumDof - 1) = state.qd;
  obs.segment(2 * kNumDof - 1, nm) = state.activations;
  if (include_exo_torque) obs.tail<2>() = history.latest_command();
  return obs;
}

Eigen::Matrix<double, ObsHistory::kExoObsDim, 1> observe_exo(const ObsHistory& history) {
  Eigen::Matrix<double, ObsHistory::kExoObsDim, 1> obs;
  for (int i = 0; i < ObsHistory::kSlots; ++i) {
    obs.segment<4>(4 * i) = history.kinematics(i);
    obs.segment<2>(4 * ObsHistory::kSlots + 2 * i) = history.command(i);
  }
  return obs;
}

}  // namespace smat
