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

// Independent reference computations for the test suite. Nothing here calls
// the library's solvers; only the MDP container and samplers are shared.

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "robust_rl/robust_rl.hpp"

namespace oracle {

using robust_rl::Index;
using robust_rl::Policy;
using robust_rl::TabularMdp;

inline Eigen::MatrixXd policy_kernel(const TabularMdp& mdp, const Policy& pi) {
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(mdp.n_states(), mdp.n_states());
  for (Index s = 0; s < mdp.n_states(); ++s)
    for (Index a = 0; a < mdp.n_actions(); ++a)
      p.row(s) += pi.probability(s, a) * mdp.kernel().row(s * mdp.n_actions() + a);
  return p;
}

inline Eigen::VectorXd policy_cost(const TabularMdp& mdp, const Policy& pi) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(mdp.n_states());
  for (Index s = 0; s < mdp.n_states(); ++s)
    for (Index a = 0; a < mdp.n_actions(); ++a) c(s) += pi.probability(s, a) * mdp.cost()(s, a);
  return c;
}

/// Nominal policy value from (I - gamma P_pi) V = c_pi.
inline Eigen::VectorXd policy_value(const TabularMdp& mdp, const Policy& pi) {
  const Index n = mdp.n_states();
  const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - mdp.gamma() * policy_kernel(mdp, pi);
  return a.fullPivLu().solve(policy_cost(mdp, pi));
}

/// Robust value of a fixed policy under R-contamination (cost convention):
/// V = c + gamma (1-R) P V + gamma R max V. Guesses the maximizing state k,
/// solves the resulting linear system and keeps the consistent guess.
inline Eigen::VectorXd robust_policy_value(const TabularMdp& mdp, const Policy& pi, double r) {
  const Index n = mdp.n_states();
  const double g = mdp.gamma();
  const Eigen::MatrixXd p = policy_kernel(mdp, pi);
  const Eigen::VectorXd c = policy_cost(mdp, pi);
  Eigen::VectorXd best;
  double best_violation = std::numeric_limits<double>::infinity();
  for (Index k = 0; k < n; ++k) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - g * (1.0 - r) * p;
    a.col(k).array() -= g * r;
    const Eigen::VectorXd v = a.fullPivLu().solve(c);
    const double violation = v.maxCoeff() - v(k);
    if (violation < best_violation) {
      best_violation = violation;
      best = v;
    }
  }
  return best;
}

/// Optimal robust values by enumerating every deterministic policy.
inline Eigen::VectorXd brute_force_robust_optimum(const TabularMdp& mdp, double r) {
  const Index n = mdp.n_states();
  const Index m = mdp.n_actions();
  Eigen::VectorXd best = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  std::vector<Index> actions(static_cast<std::size_t>(n), 0);
  while (true) {
    const Eigen::VectorXd v = robust_policy_value(mdp, Policy::deterministic(actions, m), r);
    best = best.cwiseMin(v);
    Index i = 0;
    while (i < n && ++actions[static_cast<std::size_t>(i)] == m) actions[static_cast<std::size_t>(i++)] = 0;
    if (i == n) break;
  }
  return best;
}

/// max over q in a grid of the simplex of ((1-R) p + R q)^T v.
inline double grid_support(const Eigen::VectorXd& p, const Eigen::VectorXd& v, double r, int steps) {
  if (p.size() != 2 && p.size() != 3) throw std::invalid_argument("grid_support: 2 or 3 states");
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= steps; ++i)
    for (int j = 0; j <= (p.size() == 3 ? steps - i : 0); ++j) {
      Eigen::VectorXd q(p.size());
      if (p.size() == 2) {
        q << double(i) / steps, 1.0 - double(i) / steps;
      } else {
        q << double(i) / steps, double(j) / steps, double(steps - i - j) / steps;
      }
      best = std::max(best, ((1.0 - r) * p + r * q).dot(v));
    }
  return best;
}

/// Central finite-difference gradient.
inline Eigen::VectorXd finite_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                         const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd g(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd up = x, down = x;
    up(i) += h;
    down(i) -= h;
    g(i) = (f(up) - f(down)) / (2.0 * h);
  }
  return g;
}

/// Stationary state distribution by solving mu^T (P - I) = 0, sum mu = 1.
inline Eigen::VectorXd stationary_state(const Eigen::MatrixXd& p) {
  const Index n = p.rows();
  Eigen::MatrixXd a(n + 1, n);
  a.topRows(n) = (p - Eigen::MatrixXd::Identity(n, n)).transpose();
  a.row(n).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
  rhs(n) = 1.0;
  return a.colPivHouseholderQr().solve(rhs);
}

/// Classical MSPBE gradient 2 A^T C^-1 (A theta + b) with
/// A = Phi^T D (gamma P - I) Phi, b = Phi^T D c, C = Phi^T D Phi.
inline Eigen::VectorXd mspbe_gradient(const TabularMdp& mdp, const Policy& pi,
                                      const Eigen::MatrixXd& phi, const Eigen::VectorXd& theta) {
  const Eigen::MatrixXd p = policy_kernel(mdp, pi);
  const Eigen::VectorXd mu = stationary_state(p);
  const Eigen::MatrixXd d = mu.asDiagonal();
  const Index n = mdp.n_states();
  const Eigen::MatrixXd a =
      phi.transpose() * d * (mdp.gamma() * p - Eigen::MatrixXd::Identity(n, n)) * phi;
  const Eigen::VectorXd b = phi.transpose() * d * policy_cost(mdp, pi);
  const Eigen::MatrixXd c = phi.transpose() * d * phi;
  return 2.0 * a.transpose() * c.ldlt().solve(a * theta + b);
}

/// Smoothed robust evaluation operator written out from its definition.
inline Eigen::VectorXd smoothed_operator(const TabularMdp& mdp, const Policy& pi, double r,
                                         double rho, const Eigen::VectorXd& v) {
  const double top = v.maxCoeff();
  double sum = 0.0;
  for (Index i = 0; i < v.size(); ++i) sum += std::exp(rho * (v(i) - top));
  const double smooth_max = top + std::log(sum) / rho;
  return policy_cost(mdp, pi) +
         mdp.gamma() * ((1.0 - r) * policy_kernel(mdp, pi) * v +
                        Eigen::VectorXd::Constant(v.size(), r * smooth_max));
}

/// Projected fixed point Phi theta = Pi T_hat(Phi theta) by damped iteration
/// of theta <- argmin_x ||Phi x - T_hat(Phi theta)||_mu.
inline Eigen::VectorXd projected_fixed_point(const TabularMdp& mdp, const Policy& pi,
                                             const Eigen::MatrixXd& phi, double r, double rho,
                                             int iterations = 20000, double damping = 0.5) {
  const Eigen::VectorXd mu = stationary_state(policy_kernel(mdp, pi));
  const Eigen::MatrixXd d = mu.asDiagonal();
  const Eigen::LDLT<Eigen::MatrixXd> c(phi.transpose() * d * phi);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(phi.cols());
  for (int k = 0; k < iterations; ++k) {
    const Eigen::VectorXd target =
        c.solve(phi.transpose() * d * smoothed_operator(mdp, pi, r, rho, phi * theta));
    theta = (1.0 - damping) * theta + damping * target;
  }
  return theta;
}

/// Vanilla Q-learning over a recorded trajectory, written as
/// Q <- (1 - alpha) Q + alpha (c + gamma min_b Q(s', b)).
inline std::vector<Eigen::MatrixXd> vanilla_q_sequence(const robust_rl::Trajectory& traj,
                                                       Index n_states, Index n_actions,
                                                       double alpha, double gamma) {
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n_states, n_actions);
  std::vector<Eigen::MatrixXd> out;
  for (const auto& tr : traj.steps) {
    double next_min = q(tr.next_state, 0);
    for (Index b = 1; b < n_actions; ++b) next_min = std::min(next_min, q(tr.next_state, b));
    q(tr.state, tr.action) = (1.0 - alpha) * q(tr.state, tr.action) + alpha * (tr.cost + gamma * next_min);
    out.push_back(q);
  }
  return out;
}

/// Vanilla TDC (linear TD with gradient correction) over a recorded trajectory.
inline std::vector<Eigen::VectorXd> vanilla_tdc_sequence(const robust_rl::Trajectory& traj,
                                                         const Eigen::MatrixXd& phi,
                                                         Eigen::VectorXd theta, double alpha,
                                                         double beta, double gamma, double k) {
  Eigen::VectorXd omega = Eigen::VectorXd::Zero(theta.size());
  auto project = [k](Eigen::VectorXd x) {
    const double nx = x.norm();
    if (nx > k) x *= k / nx;
    return x;
  };
  std::vector<Eigen::VectorXd> out;
  for (const auto& tr : traj.steps) {
    const Eigen::VectorXd f = phi.row(tr.state).transpose();
    const Eigen::VectorXd f_next = phi.row(tr.next_state).transpose();
    const double delta = tr.cost + gamma * f_next.dot(theta) - f.dot(theta);
    const double f_omega = f.dot(omega);
    Eigen::VectorXd theta_next = project(theta + alpha * (delta * f - gamma * f_next * f_omega));
    omega = project(omega + beta * (delta - f_omega) * f);
    theta = std::move(theta_next);
    out.push_back(theta);
  }
  return out;
}

/// Total-variation distance between two distributions.
inline double tv(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return 0.5 * (a - b).cwiseAbs().sum();
}

}  // namespace oracle
