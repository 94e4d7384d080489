// Copyright 2026 The robust_rl Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <utility>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "robust_rl/detail/random.hpp"
#include "robust_rl/mdp.hpp"
#include "robust_rl/trace.hpp"
#include "robust_rl/uncertainty.hpp"

namespace robust_rl {

/// Linear value features: row s of the |S| x N matrix is phi_s, and
/// V_theta = Phi theta. Rows have Euclidean norm at most 1 and the columns
/// are linearly independent.
class FeatureMap {
 public:
  explicit FeatureMap(Eigen::MatrixXd phi) : phi_(std::move(phi)) {
    if (phi_.rows() < 1 || phi_.cols() < 1) throw std::invalid_argument("FeatureMap: empty matrix");
    if (!phi_.allFinite()) throw std::invalid_argument("FeatureMap: non-finite entry");
    for (Index s = 0; s < phi_.rows(); ++s)
      if (phi_.row(s).norm() > 1.0 + 1e-12)
        throw std::invalid_argument("FeatureMap: feature row " + std::to_string(s) +
                                    " has norm above 1");
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(phi_);
    if (qr.rank() < phi_.cols())
      throw std::invalid_argument("FeatureMap: features are not linearly independent");
  }

  Index n_states() const { return phi_.rows(); }
  Index dim() const { return phi_.cols(); }
  const Eigen::MatrixXd& matrix() const { return phi_; }
  Eigen::VectorXd row(Index s) const { return phi_.row(s).transpose(); }
  Eigen::VectorXd values(const Eigen::VectorXd& theta) const { return phi_ * theta; }

 private:
  Eigen::MatrixXd phi_;
};

/// Entries uniform on (0, 1), then the whole matrix is scaled so the largest
/// row norm is 1.
inline FeatureMap random_features(Index n_states, Index dim, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd phi(n_states, dim);
  for (Index s = 0; s < n_states; ++s)
    for (Index i = 0; i < dim; ++i) phi(s, i) = 1.0 - detail::uniform01(rng);
  phi /= phi.rowwise().norm().maxCoeff();
  return FeatureMap(std::move(phi));
}

/// Euclidean projection onto the ball of radius k.
inline Eigen::VectorXd project_to_ball(Eigen::VectorXd x, double k) {
  const double n = x.norm();
  if (n > k) x *= k / n;
  return x;
}

struct TdcState {
  Eigen::VectorXd theta;
  Eigen::VectorXd omega;
};

enum class OutputRule { random_iterate, final_iterate, full_trace };

struct TdcConfig {
  double alpha = 0.1;  // slow (theta) step
  double beta = 0.5;   // fast (omega) step
  double rho = 1.0;
  double radius = 0.0;
  double projection_radius = 50.0;
  std::int64_t total_steps = 1;
  std::uint64_t seed = 0;
  OutputRule output_rule = OutputRule::random_iterate;
  /// Defaults to the all-ones vector; omega always starts at zero.
  std::optional<Eigen::VectorXd> theta0;
  Index start_state = 0;

  ContaminationSpec contamination() const { return {radius, rho}; }

  void validate() const {
    if (!(alpha >= 0.0) || !(beta >= 0.0))
      throw std::invalid_argument("TdcConfig: step sizes must be non-negative");
    if (!(projection_radius > 0.0))
      throw std::invalid_argument("TdcConfig: projection radius must be positive");
    if (total_steps < 1) throw std::invalid_argument("TdcConfig: total_steps must be >= 1");
    contamination().validate();
  }
};

/// Smoothed robust TD error
/// c + gamma (1-R) V(s') + gamma R LSE(V) - V(s), V = Phi theta.
inline double tdc_delta(const Eigen::VectorXd& theta, const Transition& tr,
                        const FeatureMap& features, const ContaminationSpec& spec, double gamma) {
  const Eigen::VectorXd v = features.values(theta);
  return tr.cost + gamma * (1.0 - spec.radius) * v(tr.next_state) +
         gamma * spec.radius * lse(v, spec.rho) - v(tr.state);
}

/**
 * One two time-scale update. Both iterates read the pre-update state:
 *
 *   theta <- Pi_K(theta + alpha (delta phi_t
 *                   - gamma ((1-R) phi_{t+1} + R Phi^T softmax(rho V)) phi_t^T omega))
 *   omega <- Pi_K(omega + beta (delta - phi_t^T omega) phi_t)
 */
inline TdcState tdc_step(const TdcState& state, const Transition& tr, const FeatureMap& features,
                         const TdcConfig& cfg, double gamma) {
  const double r = cfg.radius;
  const Eigen::VectorXd v = features.values(state.theta);
  const double delta = tr.cost + gamma * (1.0 - r) * v(tr.next_state) +
                       gamma * r * lse(v, cfg.rho) - v(tr.state);
  const Eigen::VectorXd soft_features = features.matrix().transpose() * lse_gradient(v, cfg.rho);
  const Eigen::VectorXd phi_t = features.row(tr.state);
  const Eigen::VectorXd phi_next = features.row(tr.next_state);
  const double phi_omega = phi_t.dot(state.omega);

  TdcState next;
  next.theta = project_to_ball(
      state.theta +
          cfg.alpha * (delta * phi_t - gamma * ((1.0 - r) * phi_next + r * soft_features) * phi_omega),
      cfg.projection_radius);
  next.omega = project_to_ball(state.omega + cfg.beta * (delta - phi_omega) * phi_t,
                               cfg.projection_radius);
  return next;
}

struct TdcResult {
  /// theta selected by the output rule.
  Eigen::VectorXd theta;
  /// Number of updates preceding the selected iterate.
  std::int64_t selected_step = 0;
  TdcState final_state;
  TrainingTrace trace;
};

/**
 * Robust TDC along one on-policy trajectory. All total_steps updates run; under
 * the random-iterate rule the output is theta_W with W uniform on
 * {0, ..., T-1}, drawn from a stream independent of the trajectory.
 */
inline TdcResult train_robust_tdc(const TabularMdp& mdp, const Policy& policy,
                                  const FeatureMap& features, const TdcConfig& cfg,
                                  TraceOptions<Eigen::VectorXd> trace_opts = {}) {
  cfg.validate();
  if (features.n_states() != mdp.n_states())
    throw std::invalid_argument("train_robust_tdc: feature rows must match the state count");
  const Index n = features.dim();
  TdcState state{cfg.theta0.value_or(Eigen::VectorXd::Ones(n)), Eigen::VectorXd::Zero(n)};
  if (state.theta.size() != n) throw std::invalid_argument("train_robust_tdc: theta0 size mismatch");

  if (cfg.output_rule == OutputRule::full_trace) {
    trace_opts.stride = 1;
    trace_opts.keep_iterates = true;
  }

  Rng selector(detail::derive_seed(cfg.seed, 1));
  const std::int64_t w =
      std::uniform_int_distribution<std::int64_t>(0, cfg.total_steps - 1)(selector);

  TdcResult out;
  out.trace.stride = trace_opts.stride;
  out.selected_step = cfg.output_rule == OutputRule::random_iterate ? w : cfg.total_steps;
  if (out.selected_step == 0) out.theta = state.theta;

  TrajectorySampler sampler(mdp, policy, cfg.start_state, cfg.seed);
  for (std::int64_t t = 0; t < cfg.total_steps; ++t) {
    state = tdc_step(state, sampler.next(), features, cfg, mdp.gamma());
    if (t + 1 == out.selected_step) out.theta = state.theta;
    if (trace_opts.wants(t + 1, cfg.total_steps)) trace_opts.record(out.trace, t + 1, state.theta);
  }
  out.final_state = std::move(state);
  return out;
}

/// Largest |S||A| for which the exact objective is assembled densely.
inline constexpr Index kMaxExactStateActions = 10000;

/**
 * Exact smoothed MSPRBE J(theta) = b^T C^{-1} b and its gradient, with
 * b = E_mu[delta phi_S] and C = E_mu[phi_S phi_S^T] under the stationary
 * distribution of the evaluated policy. The distribution and C are computed
 * once at construction.
 */
class MsprbeEvaluator {
 public:
  MsprbeEvaluator(const TabularMdp& mdp, const Policy& policy, const FeatureMap& features,
                  const ContaminationSpec& spec, double gamma)
      : spec_(spec), gamma_(gamma), phi_(features.matrix()) {
    spec.validate();
    if (mdp.n_states() * mdp.n_actions() > kMaxExactStateActions)
      throw std::invalid_argument("MsprbeEvaluator: |S||A| exceeds the exact-evaluation limit");
    if (features.n_states() != mdp.n_states())
      throw std::invalid_argument("MsprbeEvaluator: feature rows must match the state count");
    mu_ = stationary_distribution(mdp, policy).state;
    cost_pi_ = expected_cost(mdp, policy);
    p_pi_ = state_transition_matrix(mdp, policy);
    phi_t_d_ = phi_.transpose() * mu_.asDiagonal();
    const Eigen::MatrixXd c = phi_t_d_ * phi_;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() <= 1e-14 * std::max(1.0, eig.eigenvalues().maxCoeff()))
      throw std::domain_error("MsprbeEvaluator: feature covariance C is singular");
    c_llt_.compute(c);
    next_feature_cov_ = phi_t_d_ * p_pi_ * phi_;  // E[phi_S phi_S'^T]
    mean_feature_ = phi_.transpose() * mu_;
  }

  /// E_mu[delta_{S,A,S'}(theta) phi_S].
  Eigen::VectorXd expected_delta_feature(const Eigen::VectorXd& theta) const {
    const Eigen::VectorXd v = phi_ * theta;
    const double smooth_max = lse(v, spec_.rho);
    const Eigen::VectorXd err = cost_pi_ + gamma_ * (1.0 - spec_.radius) * (p_pi_ * v) +
                                Eigen::VectorXd::Constant(v.size(), gamma_ * spec_.radius * smooth_max) - v;
    return phi_t_d_ * err;
  }

  /// omega(theta) = C^{-1} E_mu[delta phi_S], the target of the fast iterate.
  Eigen::VectorXd omega(const Eigen::VectorXd& theta) const {
    return c_llt_.solve(expected_delta_feature(theta));
  }

  double value(const Eigen::VectorXd& theta) const {
    const Eigen::VectorXd b = expected_delta_feature(theta);
    return b.dot(c_llt_.solve(b));
  }

  /// grad J = -2 (b - gamma E[((1-R) phi_S' + R grad LSE(V_theta)) phi_S^T] omega(theta)).
  Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const {
    const Eigen::VectorXd v = phi_ * theta;
    const Eigen::VectorXd b = expected_delta_feature(theta);
    const Eigen::VectorXd w = c_llt_.solve(b);
    const Eigen::VectorXd soft_features = phi_.transpose() * lse_gradient(v, spec_.rho);
    const Eigen::MatrixXd m = (1.0 - spec_.radius) * next_feature_cov_.transpose() +
                              spec_.radius * soft_features * mean_feature_.transpose();
    return -2.0 * (b - gamma_ * m * w);
  }

  const Eigen::VectorXd& state_distribution() const { return mu_; }

 private:
  ContaminationSpec spec_;
  double gamma_;
  Eigen::MatrixXd phi_;
  Eigen::VectorXd mu_;
  Eigen::VectorXd cost_pi_;
  Eigen::MatrixXd p_pi_;
  Eigen::MatrixXd phi_t_d_;
  Eigen::LLT<Eigen::MatrixXd> c_llt_;
  Eigen::MatrixXd next_feature_cov_;
  Eigen::VectorXd mean_feature_;
};

inline double exact_msprbe(const Eigen::VectorXd& theta, const TabularMdp& mdp,
                           const Policy& policy, const FeatureMap& features,
                           const ContaminationSpec& spec, double gamma) {
  return MsprbeEvaluator(mdp, policy, features, spec, gamma).value(theta);
}

inline Eigen::VectorXd exact_grad_msprbe(const Eigen::VectorXd& theta, const TabularMdp& mdp,
                                         const Policy& policy, const FeatureMap& features,
                                         const ContaminationSpec& spec, double gamma) {
  return MsprbeEvaluator(mdp, policy, features, spec, gamma).gradient(theta);
}

}  // namespace robust_rl
