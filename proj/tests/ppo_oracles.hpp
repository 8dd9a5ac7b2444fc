// Reference implementations for the PPO math, kept deliberately naive.
#pragma once

#include "smat/policy.hpp"
#include "smat/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace oracle {

// Triple-loop MLP forward pass with std::tanh on hidden layers.
inline std::vector<double> mlp(const smat::PolicyNet& net, const std::vector<double>& input) {
  std::vector<double> x = input;
  for (size_t l = 0; l < net.weights.size(); ++l) {
    const auto& w = net.weights[l];
    std::vector<double> y(w.rows());
    for (int i = 0; i < w.rows(); ++i) {
      double s = net.biases[l][i];
      for (int j = 0; j < w.cols(); ++j) s += w(i, j) * x[j];
      y[i] = (l + 1 < net.weights.size() && net.hidden == smat::Activation::kTanh) ? std::tanh(s) : s;
    }
    x = y;
  }
  return x;
}

// lambda = 1, no terminations: discounted reward sum plus bootstrap minus baseline.
inline std::vector<double> discounted_advantage(const std::vector<double>& r, const std::vector<double>& v,
                                                double gamma) {
  const size_t n = r.size();
  std::vector<double> adv(n);
  for (size_t t = 0; t < n; ++t) {
    double s = 0.0, g = 1.0;
    for (size_t k = t; k < n; ++k) {
      s += g * r[k];
      g *= gamma;
    }
    adv[t] = s + g * v[n] - v[t];
  }
  return adv;
}

// Plain GAE recursion written out term by term.
inline std::vector<double> gae(const std::vector<double>& r, const std::vector<double>& v,
                               const std::vector<double>& done, double gamma, double lambda) {
  const size_t n = r.size();
  std::vector<double> adv(n);
  double next = 0.0;
  for (size_t i = n; i-- > 0;) {
    const double nonterminal = done[i] > 0.5 ? 0.0 : 1.0;
    const double delta = r[i] + gamma * nonterminal * v[i + 1] - v[i];
    next = delta + gamma * lambda * nonterminal * next;
    adv[i] = next;
  }
  return adv;
}

// Clipped surrogate objective (to be maximized) from per-sample log-probs.
inline double clipped_objective(const std::vector<double>& logp, const std::vector<double>& old_logp,
                                const std::vector<double>& adv, double clip) {
  double s = 0.0;
  for (size_t i = 0; i < logp.size(); ++i) {
    const double ratio = std::exp(logp[i] - old_logp[i]);
    const double c = std::min(std::max(ratio, 1.0 - clip), 1.0 + clip);
    s += std::min(ratio * adv[i], c * adv[i]);
  }
  return s / logp.size();
}

}  // namespace oracle
