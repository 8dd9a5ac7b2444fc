#include "smat/policy.hpp"

#include "smat/error.hpp"

#include <cmath>
#include <numbers>

namespace smat {

namespace {

// tanh through the vectorized exp; saturates cleanly to +-1 for large |x|.
void apply_hidden(Activation act, Mat& x) {
  if (act == Activation::kTanh) x = (1.0 - 2.0 / ((2.0 * x.array()).exp() + 1.0)).matrix();
}

}  // namespace

std::vector<int> PolicyNet::layer_sizes() const {
  std::vector<int> sizes;
  if (weights.empty()) return sizes;
  sizes.push_back(input_dim());
  for (const Mat& w : weights) sizes.push_back(static_cast<int>(w.rows()));
  return sizes;
}

Eigen::Index PolicyNet::num_params() const {
  Eigen::Index n = log_std.size();
  for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
  return n;
}

bool PolicyNet::operator==(const PolicyNet& other) const {
  if (weights.size() != other.weights.size() || hidden != other.hidden || squash != other.squash) return false;
  if (log_std.size() != other.log_std.size() || log_std != other.log_std) return false;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rows() != other.weights[l].rows() || weights[l].cols() != other.weights[l].cols()) return false;
    if (weights[l] != other.weights[l] || biases[l] != other.biases[l]) return false;
  }
  return true;
}

PolicyNet make_policy(const NetSpec& spec, Rng& rng) {
  PolicyNet net;
  net.squash = spec.squash;
  std::vector<int> sizes{spec.input};
  sizes.insert(sizes.end(), spec.hidden.begin(), spec.hidden.end());
  sizes.push_back(spec.output);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int fan_in = sizes[l];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Mat w(sizes[l + 1], fan_in);
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = dist(rng);
    }
    if (l + 2 == sizes.size()) w *= spec.output_scale;
    net.weights.push_back(std::move(w));
    net.biases.push_back(Vec::Zero(sizes[l + 1]));
  }
  if (spec.with_log_std) net.log_std = Vec::Constant(spec.output, spec.log_std_init);
  return net;
}

Mat forward_batch(const PolicyNet& net, const Mat& obs, ForwardCache* cache) {
  if (obs.rows() != net.input_dim()) {
    throw DimensionMismatch("policy input: got " + std::to_string(obs.rows()) + ", expected " +
                            std::to_string(net.input_dim()));
  }
  if (cache) {
    cache->layer_out.resize(net.weights.size() + 1);
    cache->layer_out[0] = obs;
  }
  Mat x = obs;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    Mat y(net.weights[l].rows(), x.cols());
    y.colwise() = net.biases[l];
    if (l == 0) {
      // Input columns are accumulated strictly in order, so appending inputs
      // that are zero leaves the result bit-identical.
      for (Eigen::Index j = 0; j < x.rows(); ++j) y.noalias() += net.weights[0].col(j) * x.row(j);
    } else {
      y.noalias() += net.weights[l] * x;
    }
    if (l + 1 < net.weights.size()) apply_hidden(net.hidden, y);
    x = std::move(y);
    if (cache) cache->layer_out[l + 1] = x;
  }
  return x;
}

ForwardResult forward(const PolicyNet& net, const Vec& obs) {
  ForwardResult r;
  r.mean = forward_batch(net, obs);
  r.log_std = net.log_std;
  if (net.log_std.size() == 0 && r.mean.size() > 0) r.value = r.mean[0];
  return r;
}

Vec backward_batch(const PolicyNet& net, const ForwardCache& cache, const Mat& grad_out) {
  Vec grad = Vec::Zero(net.num_params());
  // Offsets of each layer's block in the flat layout.
  std::vector<Eigen::Index> offset(net.weights.size());
  Eigen::Index pos = 0;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    offset[l] = pos;
    pos += net.weights[l].size() + net.biases[l].size();
  }
  Mat delta = grad_out;
  for (std::size_t k = net.weights.size(); k-- > 0;) {
    if (k + 1 < net.weights.size() && net.hidden == Activation::kTanh) {
      delta.array() *= 1.0 - cache.layer_out[k + 1].array().square();
    }
    const Mat& w = net.weights[k];
    Eigen::Map<Mat> dw(grad.data() + offset[k], w.rows(), w.cols());
    dw.noalias() = delta * cache.layer_out[k].transpose();
    grad.segment(offset[k] + w.size(), w.rows()) = delta.rowwise().sum();
    if (k > 0) delta = w.transpose() * delta;
  }
  return grad;
}

Vec flatten_params(const PolicyNet& net) {
  Vec flat(net.num_params());
  Eigen::Index pos = 0;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    const Mat& w = net.weights[l];
    flat.segment(pos, w.size()) = Eigen::Map<const Vec>(w.data(), w.size());
    pos += w.size();
    flat.segment(pos, net.biases[l].size()) = net.biases[l];
    pos += net.biases[l].size();
  }
  flat.tail(net.log_std.size()) = net.log_std;
  return flat;
}

void assign_params(PolicyNet& net, const Eigen::Ref<const Vec>& flat) {
  if (flat.size() != net.num_params()) {
    throw DimensionMismatch("assign_params: got " + std::to_string(flat.size()) + " values, expected " +
                            std::to_string(net.num_params()));
  }
  Eigen::Index pos = 0;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    Mat& w = net.weights[l];
    Eigen::Map<Vec>(w.data(), w.size()) = flat.segment(pos, w.size());
    pos += w.size();
    net.biases[l] = flat.segment(pos, net.biases[l].size());
    pos += net.biases[l].size();
  }
  net.log_std = flat.tail(net.log_std.size());
}

PolicyNet augment_input(const PolicyNet& net, int n_new, double init_scale, Rng& rng) {
  if (n_new < 1) throw DimensionMismatch("augment_input: n_new must be >= 1");
  PolicyNet out = net;
  Mat& w = out.weights.front();
  const Eigen::Index old_cols = w.cols();
  w.conservativeResize(Eigen::NoChange, old_cols + n_new);
  std::uniform_real_distribution<double> dist(-init_scale, init_scale);
  for (Eigen::Index j = old_cols; j < w.cols(); ++j) {
    for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = init_scale > 0.0 ? dist(rng) : 0.0;
  }
  return out;
}

Vec squash_action(Squash squash, const Vec& raw) {
  switch (squash) {
    case Squash::kUnit: return raw.cwiseMax(0.0).cwiseMin(1.0);
    case Squash::kSymmetric: return raw.cwiseMax(-1.0).cwiseMin(1.0);
    default: return raw;
  }
}

Vec gaussian_log_prob(const Mat& mean, const Vec& log_std, const Mat& raw) {
  const double log_2pi = std::log(2.0 * std::numbers::pi);
  const Vec inv_var = (-2.0 * log_std).array().exp();
  const double norm = -log_std.sum() - 0.5 * static_cast<double>(log_std.size()) * log_2pi;
  const Mat diff = raw - mean;
  Vec lp(raw.cols());
  for (Eigen::Index c = 0; c < raw.cols(); ++c) {
    lp[c] = -0.5 * diff.col(c).array().square().matrix().dot(inv_var) + norm;
  }
  return lp;
}

double gaussian_entropy(const Vec& log_std) {
  const double per_dim = 0.5 * (1.0 + std::log(2.0 * std::numbers::pi));
  return log_std.sum() + per_dim * static_cast<double>(log_std.size());
}

BatchSample sample_actions(const PolicyNet& net, const Mat& obs, Rng& rng, bool deterministic) {
  BatchSample s;
  const Mat mean = forward_batch(net, obs);
  s.raw = mean;
  if (!deterministic) {
    const Vec std_dev = net.log_std.array().exp();
    for (Eigen::Index c = 0; c < mean.cols(); ++c) {
      for (Eigen::Index i = 0; i < mean.rows(); ++i) {
        std::normal_distribution<double> normal(0.0, 1.0);
        s.raw(i, c) += std_dev[i] * normal(rng);
      }
    }
  }
  s.log_prob = gaussian_log_prob(mean, net.log_std, s.raw);
  s.action.resize(s.raw.rows(), s.raw.cols());
  for (Eigen::Index c = 0; c < s.raw.cols(); ++c) s.action.col(c) = squash_action(net.squash, s.raw.col(c));
  return s;
}

ActionSample sample_action(const PolicyNet& net, const Vec& obs, Rng& rng, bool deterministic) {
  const BatchSample b = sample_actions(net, obs, rng, deterministic);
  return {b.action.col(0), b.raw.col(0), b.log_prob[0]};
}

}  // namespace smat
