#include "smat/gait_analysis.hpp"

#include "smat/csv.hpp"
#include "smat/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <limits>
#include <numeric>

namespace smat {

using Eigen::Index;
using Eigen::VectorXd;

double GaitTrace::sample_rate() const {
  if (time.size() < 2) return 0.0;
  return static_cast<double>(time.size() - 1) / (time[time.size() - 1] - time[0]);
}

void GaitTrace::validate() const {
  const Index n = time.size();
  if (n < 2) throw DataError("gait trace needs at least 2 samples");
  for (const VectorXd* ch : {&angle_r, &angle_l, &vel_r, &vel_l, &torque_r, &torque_l}) {
    if (ch->size() != n) throw DataError("gait trace channels differ in length");
    if (!ch->allFinite()) throw DataError("gait trace contains non-finite values");
  }
  if (foot_force_r.size() != foot_force_l.size() || (foot_force_r.size() != 0 && foot_force_r.size() != n)) {
    throw DataError("gait trace foot-force channels differ in length");
  }
  for (Index i = 1; i < n; ++i) {
    if (!(time[i] > time[i - 1])) throw DataError("gait trace time is not strictly increasing");
  }
}

namespace {

VectorXd to_vec(const std::vector<double>& v) { return Eigen::Map<const VectorXd>(v.data(), v.size()); }

}  // namespace

GaitTrace read_gait_trace(const std::string& path) {
  const CsvTable t = read_csv(path);
  const auto& cols = gait_trace_columns();
  GaitTrace tr;
  tr.time = to_vec(t.column(cols[0]));
  tr.angle_r = to_vec(t.column(cols[1]));
  tr.angle_l = to_vec(t.column(cols[2]));
  tr.vel_r = to_vec(t.column(cols[3]));
  tr.vel_l = to_vec(t.column(cols[4]));
  tr.torque_r = to_vec(t.column(cols[5]));
  tr.torque_l = to_vec(t.column(cols[6]));
  const bool fr = t.index_of(cols[7]) >= 0;
  const bool fl = t.index_of(cols[8]) >= 0;
  if (fr != fl) throw DataError(path + ": foot force columns must come in pairs");
  if (fr) {
    tr.foot_force_r = to_vec(t.column(cols[7]));
    tr.foot_force_l = to_vec(t.column(cols[8]));
  }
  tr.validate();
  return tr;
}

void write_gait_trace(const std::string& path, const GaitTrace& trace) {
  const auto& all = gait_trace_columns();
  const bool forces = trace.has_foot_force();
  std::vector<std::string> header(all.begin(), all.begin() + (forces ? 9 : 7));
  std::vector<std::vector<double>> rows(trace.size());
  for (Index i = 0; i < trace.size(); ++i) {
    rows[i] = {trace.time[i],  trace.angle_r[i],  trace.angle_l[i], trace.vel_r[i],
               trace.vel_l[i], trace.torque_r[i], trace.torque_l[i]};
    if (forces) {
      rows[i].push_back(trace.foot_force_r[i]);
      rows[i].push_back(trace.foot_force_l[i]);
    }
  }
  write_csv(path, header, rows);
}

GaitTrace resample(const GaitTrace& trace, double rate_hz) {
  trace.validate();
  if (!(rate_hz > 0.0)) throw DataError("resample rate must be > 0");
  const double t0 = trace.time[0];
  const double span = trace.time[trace.size() - 1] - t0;
  const Index n = static_cast<Index>(std::floor(span * rate_hz + 1e-9)) + 1;
  VectorXd grid(n);
  for (Index k = 0; k < n; ++k) grid[k] = t0 + static_cast<double>(k) / rate_hz;

  const double* tb = trace.time.data();
  const double* te = tb + trace.size();
  auto interp = [&](const VectorXd& x) {
    if (x.size() == 0) return VectorXd();
    VectorXd y(n);
    for (Index k = 0; k < n; ++k) {
      Index j = std::upper_bound(tb, te, grid[k]) - tb;
      j = std::clamp<Index>(j, 1, trace.size() - 1);
      const double w = (grid[k] - tb[j - 1]) / (tb[j] - tb[j - 1]);
      y[k] = x[j - 1] + std::min(w, 1.0) * (x[j] - x[j - 1]);
    }
    return y;
  };
  GaitTrace out;
  out.time = grid;
  out.angle_r = interp(trace.angle_r);
  out.angle_l = interp(trace.angle_l);
  out.vel_r = interp(trace.vel_r);
  out.vel_l = interp(trace.vel_l);
  out.torque_r = interp(trace.torque_r);
  out.torque_l = interp(trace.torque_l);
  out.foot_force_r = interp(trace.foot_force_r);
  out.foot_force_l = interp(trace.foot_force_l);
  return out;
}

VectorXd one_euro_filter(const VectorXd& signal, double sample_rate, const OneEuroParams& p) {
  if (signal.size() < 1) throw DataError("one_euro_filter: empty signal");
  if (!(sample_rate > 0.0) || !(p.min_cutoff > 0.0) || !(p.d_cutoff > 0.0)) {
    throw ConfigError("one_euro_filter: rate and cutoffs must be > 0");
  }
  const double te = 1.0 / sample_rate;
  auto alpha = [te](double cutoff) {
    const double tau = 1.0 / (2.0 * std::numbers::pi * cutoff);
    return 1.0 / (1.0 + tau / te);
  };
  const double a_d = alpha(p.d_cutoff);
  VectorXd out(signal.size());
  out[0] = signal[0];
  double dx_hat = 0.0;
  for (Index i = 1; i < signal.size(); ++i) {
    const double dx = (signal[i] - out[i - 1]) * sample_rate;
    dx_hat = a_d * dx + (1.0 - a_d) * dx_hat;
    const double a = alpha(p.min_cutoff + p.beta * std::abs(dx_hat));
    out[i] = a * signal[i] + (1.0 - a) * out[i - 1];
  }
  return out;
}

std::vector<GaitCycle> segment_cycles(const VectorXd& x, double sample_rate, const SegmentParams& params) {
  const Index n = x.size();
  if (n < 3) throw EmptySegmentation("segment_cycles: signal too short");
  const double range = x.maxCoeff() - x.minCoeff();
  const double min_prominence = params.prominence_fraction * range;

  // Local maxima; a flat top counts once, at its first sample.
  std::vector<Index> candidates;
  for (Index i = 1; i + 1 < n; ++i) {
    if (!(x[i] > x[i - 1])) continue;
    Index j = i;
    while (j + 1 < n && x[j + 1] == x[i]) ++j;
    if (j + 1 < n && x[j + 1] < x[i]) candidates.push_back(i);
    i = j;
  }

  std::vector<Index> peaks;
  for (Index pk : candidates) {
    double left_min = x[pk];
    for (Index i = pk - 1; i >= 0 && x[i] <= x[pk]; --i) left_min = std::min(left_min, x[i]);
    double right_min = x[pk];
    for (Index i = pk + 1; i < n && x[i] <= x[pk]; ++i) right_min = std::min(right_min, x[i]);
    if (range > 0.0 && x[pk] - std::max(left_min, right_min) >= min_prominence) peaks.push_back(pk);
  }

  // Spacing: keep the tallest peaks first, drop neighbours closer than min_period.
  const Index min_gap = static_cast<Index>(std::ceil(params.min_period * sample_rate - 1e-9));
  std::vector<Index> by_height = peaks;
  std::stable_sort(by_height.begin(), by_height.end(), [&](Index a, Index b) { return x[a] > x[b]; });
  std::vector<Index> kept;
  for (Index pk : by_height) {
    const bool clear = std::none_of(kept.begin(), kept.end(), [&](Index k) { return std::abs(k - pk) < min_gap; });
    if (clear) kept.push_back(pk);
  }
  std::sort(kept.begin(), kept.end());
  if (kept.size() < 2) throw EmptySegmentation("segment_cycles: fewer than two hip-flexion peaks");

  std::vector<GaitCycle> cycles;
  for (std::size_t k = 0; k + 1 < kept.size(); ++k) {
    GaitCycle c;
    c.start = kept[k];
    c.end = kept[k + 1];
    c.duration = static_cast<double>(c.end - c.start) / sample_rate;
    cycles.push_back(c);
  }
  return cycles;
}

TorquePowerMetrics compute_metrics(const VectorXd& torque, const VectorXd& velocity) {
  require_same_size(torque.size(), velocity.size(), "compute_metrics");
  const Index n = torque.size();
  if (n < 1) throw DataError("compute_metrics: empty cycle");
  TorquePowerMetrics m;
  double pos = 0.0, neg = 0.0;
  Index neg_count = 0;
  for (Index i = 0; i < n; ++i) {
    const double p = torque[i] * velocity[i];
    if (p > 0.0) pos += p;
    if (p < 0.0) {
      neg += p;
      ++neg_count;
    }
  }
  const double dn = static_cast<double>(n);
  m.tau_rms = std::sqrt(torque.squaredNorm() / dn);
  m.tau_max = torque.cwiseAbs().maxCoeff();
  m.mpp = pos / dn;
  m.mnp = neg / dn;
  m.neg_fraction = static_cast<double>(neg_count) / dn;
  return m;
}

TorquePowerMetrics compute_metrics(const VectorXd& torque, const VectorXd& velocity,
                                   const std::vector<GaitCycle>& cycles) {
  require_same_size(torque.size(), velocity.size(), "compute_metrics");
  if (cycles.empty()) throw EmptySegmentation("compute_metrics: no cycles");
  TorquePowerMetrics avg;
  for (const GaitCycle& c : cycles) {
    if (c.start < 0 || c.end > torque.size() || c.end <= c.start) throw DataError("compute_metrics: bad cycle");
    const TorquePowerMetrics m = compute_metrics(torque.segment(c.start, c.length()),
                                                 velocity.segment(c.start, c.length()));
    avg.tau_rms += m.tau_rms;
    avg.tau_max += m.tau_max;
    avg.mpp += m.mpp;
    avg.mnp += m.mnp;
    avg.neg_fraction += m.neg_fraction;
  }
  const double k = static_cast<double>(cycles.size());
  avg.tau_rms /= k;
  avg.tau_max /= k;
  avg.mpp /= k;
  avg.mnp /= k;
  avg.neg_fraction /= k;
  return avg;
}

CycleWaveform normalize_to_cycle(const VectorXd& signal, const std::vector<GaitCycle>& cycles, int n_points) {
  if (cycles.empty()) throw EmptySegmentation("normalize_to_cycle: no cycles");
  if (n_points < 2) throw ConfigError("normalize_to_cycle: n_points must be >= 2");
  const Index last = signal.size() - 1;
  Eigen::MatrixXd table(n_points, static_cast<Index>(cycles.size()));
  for (std::size_t c = 0; c < cycles.size(); ++c) {
    const GaitCycle& cy = cycles[c];
    if (cy.start < 0 || cy.end > last + 1 || cy.end <= cy.start) throw DataError("normalize_to_cycle: bad cycle");
    for (int k = 0; k < n_points; ++k) {
      const double pos = static_cast<double>(cy.start) +
                         static_cast<double>(k) / (n_points - 1) * static_cast<double>(cy.length());
      const Index i0 = std::min<Index>(static_cast<Index>(std::floor(pos)), last);
      const Index i1 = std::min<Index>(i0 + 1, last);
      const double w = pos - static_cast<double>(i0);
      table(k, static_cast<Index>(c)) = signal[i0] + w * (signal[i1] - signal[i0]);
    }
  }
  CycleWaveform out;
  out.pct = VectorXd::LinSpaced(n_points, 0.0, 100.0);
  out.mean = table.rowwise().mean();
  out.sd = ((table.colwise() - out.mean).array().square().rowwise().sum() / static_cast<double>(table.cols()))
               .sqrt()
               .matrix();
  return out;
}

double phase_lag(const VectorXd& a, const VectorXd& b) {
  require_same_size(a.size(), b.size(), "phase_lag");
  const Index n = a.size();
  if (n < 2) throw DataError("phase_lag: waveforms need at least 2 points");
  const VectorXd ac = a.array() - a.mean();
  const VectorXd bc = b.array() - b.mean();
  Index best = 0;
  double best_c = -std::numeric_limits<double>::infinity();
  for (Index k = 0; k < n; ++k) {
    double c = 0.0;
    for (Index i = 0; i < n; ++i) c += ac[i] * bc[((i - k) % n + n) % n];
    if (c > best_c) {
      best_c = c;
      best = k;
    }
  }
  const Index shift = 2 * best >= n ? best - n : best;
  return 100.0 * static_cast<double>(shift) / static_cast<double>(n);
}

double symmetry_pearson(const VectorXd& right, const VectorXd& left) {
  require_same_size(right.size(), left.size(), "symmetry_pearson");
  if (right.size() < 2) throw DataError("symmetry_pearson: need at least 2 points");
  const VectorXd r = right.array() - right.mean();
  const VectorXd l = left.array() - left.mean();
  const double denom = std::sqrt(r.squaredNorm() * l.squaredNorm());
  if (!(denom > 0.0)) throw DataError("symmetry_pearson: zero variance");
  return r.dot(l) / denom;
}

void detect_toe_off(const VectorXd& force, std::vector<GaitCycle>& cycles, double mg, double threshold_fraction) {
  const double thr = threshold_fraction * mg;
  for (GaitCycle& c : cycles) {
    c.toe_off.reset();
    if (c.start < 0 || c.end > force.size() || c.end <= c.start) throw DataError("detect_toe_off: bad cycle");
    bool loaded = false;
    for (Index i = c.start; i < c.end; ++i) {
      if (force[i] >= thr) {
        loaded = true;
      } else if (loaded) {
        c.toe_off = 100.0 * static_cast<double>(i - c.start) / static_cast<double>(c.length());
        break;
      }
    }
  }
}

}  // namespace smat
