#pragma once

#include <Eigen/Dense>

#include <random>
#include <vector>

namespace smat {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Rng = std::mt19937_64;

enum class Activation { kTanh, kIdentity };

// Range the sampled action is clipped to.
enum class Squash { kNone, kUnit, kSymmetric };

// Fully connected network. weights[l] is (out x in). Actors carry a
// state-independent log-std per action dimension; the critic has none.
struct PolicyNet {
  std::vector<Mat> weights;
  std::vector<Vec> biases;
  Vec log_std;
  Activation hidden = Activation::kTanh;
  Squash squash = Squash::kNone;

  int input_dim() const { return weights.empty() ? 0 : static_cast<int>(weights.front().cols()); }
  int output_dim() const { return weights.empty() ? 0 : static_cast<int>(weights.back().rows()); }
  int num_layers() const { return static_cast<int>(weights.size()); }
  std::vector<int> layer_sizes() const;  // input, hidden..., output
  Eigen::Index num_params() const;

  bool operator==(const PolicyNet& other) const;
};

struct NetSpec {
  int input = 0;
  std::vector<int> hidden;
  int output = 0;
  Squash squash = Squash::kNone;
  bool with_log_std = true;
  double log_std_init = -0.5;
  // Multiplier on the last layer's initial weights.
  double output_scale = 0.01;
};

inline NetSpec human_actor_spec(int obs_dim, int num_muscles) {
  return {obs_dim, {256, 128}, num_muscles, Squash::kUnit, true, -0.5, 0.01};
}
inline NetSpec exo_actor_spec() { return {18, {128, 64}, 2, Squash::kSymmetric, true, -0.5, 0.01}; }
inline NetSpec critic_spec(int obs_dim) { return {obs_dim, {256, 128}, 1, Squash::kNone, false, 0.0, 1.0}; }

// Weights uniform in +-1/sqrt(fan_in), biases zero.
PolicyNet make_policy(const NetSpec& spec, Rng& rng);

// Layer-wise intermediate values of a batched forward pass.
struct ForwardCache {
  std::vector<Mat> layer_out;  // layer_out[0] = input, layer_out[l+1] = output of layer l
};

// obs is (input_dim x batch). Returns (output_dim x batch), the linear output
// of the last layer (action mean or value).
Mat forward_batch(const PolicyNet& net, const Mat& obs, ForwardCache* cache = nullptr);

struct ForwardResult {
  Vec mean;     // action mean, or a 1-vector holding the value for a critic
  Vec log_std;  // empty for a critic
  double value = 0.0;
};
ForwardResult forward(const PolicyNet& net, const Vec& obs);  // throws DimensionMismatch

// Gradient of a scalar loss given dL/d(output) for every column of the batch.
// Returned in flatten_params order; log-std entries are left at zero.
Vec backward_batch(const PolicyNet& net, const ForwardCache& cache, const Mat& grad_out);

// Parameter order: per layer W (column-major) then b, then log_std.
Vec flatten_params(const PolicyNet& net);
void assign_params(PolicyNet& net, const Eigen::Ref<const Vec>& flat);

// Widens the first layer by n_new inputs. Existing weights are kept; the new
// columns are drawn uniform(-init_scale, init_scale).
PolicyNet augment_input(const PolicyNet& net, int n_new, double init_scale, Rng& rng);

Vec squash_action(Squash squash, const Vec& raw);

// Diagonal Gaussian log density of raw (pre-clip) actions, one per column.
Vec gaussian_log_prob(const Mat& mean, const Vec& log_std, const Mat& raw);
double gaussian_entropy(const Vec& log_std);

struct ActionSample {
  Vec action;  // clipped to the actor's range
  Vec raw;     // pre-clip sample
  double log_prob = 0.0;
};

// Deterministic: raw = mean. Otherwise raw ~ N(mean, exp(log_std)^2).
ActionSample sample_action(const PolicyNet& net, const Vec& obs, Rng& rng, bool deterministic);

// Batched variant; columns are consumed from rng in order.
struct BatchSample {
  Mat action;
  Mat raw;
  Vec log_prob;
};
BatchSample sample_actions(const PolicyNet& net, const Mat& obs, Rng& rng, bool deterministic);

}  // namespace smat
