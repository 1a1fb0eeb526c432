#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>

#include "sclb/network.hpp"

namespace sclb {

enum class Algorithm { Sgd, BetaLasso };

inline const char* algorithm_name(Algorithm a) {
  return a == Algorithm::Sgd ? "sgd" : "beta-lasso";
}

inline Algorithm algorithm_from_name(const std::string& s) {
  if (s == "sgd") return Algorithm::Sgd;
  if (s == "beta-lasso") return Algorithm::BetaLasso;
  throw ConfigError("unknown optimizer '" + s + "'");
}

struct OptimizerConfig {
  Algorithm algorithm = Algorithm::Sgd;
  double eta0 = 0.1;        // initial learning rate
  double lambda_conv = 0.0; // l1 coefficient, conv_like group
  double lambda_fc = 0.0;   // l1 coefficient, fc_like group
  double beta = 0.0;        // threshold coefficient
  double momentum = 0.0;
  double weight_decay = 0.0;
  std::uint64_t total_steps = 1;

  double lambda_for(ParamGroup g) const {
    switch (g) {
      case ParamGroup::ConvLike: return lambda_conv;
      case ParamGroup::FcLike: return lambda_fc;
      case ParamGroup::NormBias: return 0.0;  // norms and biases are never l1-penalized
    }
    return 0.0;
  }

  void validate() const {
    if (eta0 <= 0.0) throw ConfigError("optimizer: lr must be positive");
    if (lambda_conv < 0.0 || lambda_fc < 0.0) throw ConfigError("optimizer: lambda must be >= 0");
    if (beta < 0.0) throw ConfigError("optimizer: beta must be >= 0");
    if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("optimizer: momentum must be in [0,1)");
    if (weight_decay < 0.0) throw ConfigError("optimizer: weight_decay must be >= 0");
    if (total_steps < 1) throw ConfigError("optimizer: total_steps must be positive");
    if (algorithm == Algorithm::BetaLasso && (momentum != 0.0 || weight_decay != 0.0))
      throw ConfigError("optimizer: beta-lasso runs without momentum and weight decay");
  }
};

template <typename T>
struct OptimizerState {
  std::uint64_t step = 0;
  std::map<std::string, Tensor<T>> velocity;  // SGD only
};

/// Cosine annealing: eta(t) = eta0 * (1 + cos(pi*t/tau)) / 2.
inline double cosine_lr(std::uint64_t t, std::uint64_t tau, double eta0) {
  if (tau == 0) throw ConfigError("cosine_lr: tau must be positive");
  if (t > tau) throw ConfigError("cosine_lr: step " + std::to_string(t) + " beyond horizon " + std::to_string(tau));
  const double arg = 3.14159265358979323846 * (static_cast<double>(t) / static_cast<double>(tau));
  return eta0 * (1.0 + std::cos(arg)) / 2.0;
}

template <typename T>
inline T sign_of(T v) {
  if (v > T(0)) return T(1);
  if (v < T(0)) return T(-1);
  return T(0);
}

/// One beta-lasso update on a flat parameter array:
///   theta <- theta - eta * (g + lambda * sign(theta)), then
///   theta <- 0 wherever |theta| < beta * lambda.
/// Zeroed elements are exactly 0; survivors are untouched by the threshold.
template <typename T>
void beta_lasso_update(T* theta, const T* grad, std::size_t n, double eta, double lambda, double beta) {
  const T e = static_cast<T>(eta);
  const T lam = static_cast<T>(lambda);
  const T thresh = static_cast<T>(beta * lambda);
  for (std::size_t i = 0; i < n; ++i) {
    T v = theta[i] - e * (grad[i] + lam * sign_of(theta[i]));
    theta[i] = (std::abs(v) >= thresh) ? v : T(0);
  }
}

/// Plain SGD update: v <- momentum*v + g + weight_decay*theta; theta -= eta*v.
template <typename T>
void sgd_update(T* theta, const T* grad, T* velocity, std::size_t n, double eta, double momentum,
                double weight_decay) {
  const T e = static_cast<T>(eta);
  const T m = static_cast<T>(momentum);
  const T wd = static_cast<T>(weight_decay);
  for (std::size_t i = 0; i < n; ++i) {
    const T v = m * velocity[i] + grad[i] + wd * theta[i];
    velocity[i] = v;
    theta[i] = theta[i] - e * v;
  }
}

namespace detail {

template <typename T>
void check_finite_grad(const Parameter<T>& p) {
  if (!p.grad.all_finite())
    throw NumericError("optimizer: non-finite gradient in parameter '" + p.name + "'");
}

}  // namespace detail

/// Applies Algorithm-1 semantics to every parameter of the network at the
/// schedule position state.step, then advances the step counter.
template <typename T>
void beta_lasso_step(Network<T>& net, const OptimizerConfig& cfg, OptimizerState<T>& state) {
  const double eta = cosine_lr(state.step, cfg.total_steps, cfg.eta0);
  for (Parameter<T>* p : net.parameters()) {
    detail::check_finite_grad(*p);
    beta_lasso_update(p->value.data(), p->grad.data(), p->value.size(), eta,
                      cfg.lambda_for(p->group), cfg.beta);
  }
  ++state.step;
}

template <typename T>
void sgd_step(Network<T>& net, const OptimizerConfig& cfg, OptimizerState<T>& state) {
  const double eta = cosine_lr(state.step, cfg.total_steps, cfg.eta0);
  for (Parameter<T>* p : net.parameters()) {
    detail::check_finite_grad(*p);
    auto it = state.velocity.find(p->name);
    if (it == state.velocity.end())
      it = state.velocity.emplace(p->name, Tensor<T>(p->value.shape())).first;
    sgd_update(p->value.data(), p->grad.data(), it->second.data(), p->value.size(), eta,
               cfg.momentum, cfg.weight_decay);
  }
  ++state.step;
}

template <typename T>
void optimizer_step(Network<T>& net, const OptimizerConfig& cfg, OptimizerState<T>& state) {
  if (cfg.algorithm == Algorithm::BetaLasso)
    beta_lasso_step(net, cfg, state);
  else
    sgd_step(net, cfg, state);
}

}  // namespace sclb
