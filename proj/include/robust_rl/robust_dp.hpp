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

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Core>

#include "robust_rl/mdp.hpp"
#include "robust_rl/uncertainty.hpp"

// Model-based robust dynamic programming. Everything here needs the full
// kernel and serves as ground truth for the sample-based learners.

namespace robust_rl {

struct FixedPointReport {
  int iterations = 0;
  /// Sup-norm of (op(x) - x) at the returned iterate.
  double residual = 0.0;
  bool converged = false;
};

template <class T>
struct FixedPoint {
  T value;
  FixedPointReport report;
};

/**
 * Iterates a gamma-contraction from `init` until successive iterates differ
 * by at most tol (1 - gamma) / (2 gamma), which bounds the distance to the
 * fixed point by tol / 2. The iteration cap follows from the contraction rate;
 * hitting it raises ConvergenceError.
 */
template <class Operator, class T>
FixedPoint<T> iterate_to_fixed_point(Operator&& op, T init, double gamma, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("fixed point: tol must be positive");
  const double threshold = gamma > 0.0 ? tol * (1.0 - gamma) / (2.0 * gamma)
                                       : std::numeric_limits<double>::infinity();
  T x = std::move(init);
  T next = op(x);
  double step = (next - x).cwiseAbs().maxCoeff();
  int cap = 10;
  if (gamma > 0.0 && step > threshold)
    cap += static_cast<int>(std::ceil(std::log(threshold / step) / std::log(gamma)));
  int iterations = 1;
  while (step > threshold) {
    if (iterations >= cap)
      throw ConvergenceError("fixed point: iteration cap " + std::to_string(cap) +
                             " exceeded; tolerance below rounding level?");
    x = std::move(next);
    next = op(x);
    step = (next - x).cwiseAbs().maxCoeff();
    ++iterations;
  }
  FixedPoint<T> out{std::move(next), {}};
  out.report.iterations = iterations;
  out.report.residual = (op(out.value) - out.value).cwiseAbs().maxCoeff();
  out.report.converged = out.report.residual <= tol;
  return out;
}

/// V(s) = min_a Q(s, a).
inline ValueVector greedy_values(const QTable& q) { return q.rowwise().minCoeff(); }

/// Robust Bellman optimality operator:
/// (TQ)(s,a) = c(s,a) + gamma * sigma_{P_s^a}(min_a Q).
inline QTable robust_bellman(const TabularMdp& mdp, double radius, const QTable& q) {
  if (q.rows() != mdp.n_states() || q.cols() != mdp.n_actions())
    throw std::invalid_argument("robust_bellman: QTable shape does not match the MDP");
  const ValueVector v = greedy_values(q);
  QTable out(mdp.n_states(), mdp.n_actions());
  for (Index s = 0; s < mdp.n_states(); ++s)
    for (Index a = 0; a < mdp.n_actions(); ++a)
      out(s, a) = mdp.cost(s, a) + mdp.gamma() * support_function(mdp.transition(s, a), v, radius);
  return out;
}

struct RobustSolution {
  QTable q;
  ValueVector v;
  FixedPointReport report;
};

/// Optimal robust action values Q* by value iteration from Q = 0.
inline RobustSolution robust_value_iteration(const TabularMdp& mdp, double radius, double tol) {
  if (!(radius >= 0.0 && radius <= 1.0))
    throw std::invalid_argument("robust_value_iteration: radius must lie in [0, 1]");
  auto fp = iterate_to_fixed_point([&](const QTable& q) { return robust_bellman(mdp, radius, q); },
                                   QTable(QTable::Zero(mdp.n_states(), mdp.n_actions())),
                                   mdp.gamma(), tol);
  ValueVector v = greedy_values(fp.value);
  return {std::move(fp.value), std::move(v), fp.report};
}

/// Robust policy-evaluation operator with the exact max:
/// (T_pi V)(s) = sum_a pi(a|s) [c(s,a) + gamma ((1-R) p^T V + R max V)].
inline ValueVector robust_policy_operator(const TabularMdp& mdp, const Policy& policy,
                                          double radius, const ValueVector& v) {
  ValueVector out = ValueVector::Zero(mdp.n_states());
  for (Index s = 0; s < mdp.n_states(); ++s)
    for (Index a = 0; a < mdp.n_actions(); ++a) {
      const double pi = policy.probability(s, a);
      if (pi == 0.0) continue;
      out(s) += pi * (mdp.cost(s, a) +
                      mdp.gamma() * support_function(mdp.transition(s, a), v, radius));
    }
  return out;
}

/// Smoothed robust policy-evaluation operator; the max over next states is
/// replaced by LSE with smoothness spec.rho.
inline ValueVector smoothed_eval_operator(const TabularMdp& mdp, const Policy& policy,
                                          const ContaminationSpec& spec, const ValueVector& v) {
  spec.validate();
  if (v.size() != mdp.n_states())
    throw std::invalid_argument("smoothed_eval_operator: value size mismatch");
  const double smooth_max = lse(v, spec.rho);
  const Eigen::VectorXd pv = mdp.kernel() * v;
  const double g = mdp.gamma();
  ValueVector out = ValueVector::Zero(mdp.n_states());
  for (Index s = 0; s < mdp.n_states(); ++s)
    for (Index a = 0; a < mdp.n_actions(); ++a) {
      const double pi = policy.probability(s, a);
      if (pi == 0.0) continue;
      out(s) += pi * (mdp.cost(s, a) + g * (1.0 - spec.radius) * pv(mdp.sa_index(s, a)) +
                      g * spec.radius * smooth_max);
    }
  return out;
}

inline FixedPoint<ValueVector> smoothed_fixed_point(const TabularMdp& mdp, const Policy& policy,
                                                    const ContaminationSpec& spec, double tol) {
  spec.validate();
  return iterate_to_fixed_point(
      [&](const ValueVector& v) { return smoothed_eval_operator(mdp, policy, spec, v); },
      ValueVector(ValueVector::Zero(mdp.n_states())), mdp.gamma(), tol);
}

/// Fixed point of the unsmoothed robust policy operator (the rho -> infinity limit).
inline FixedPoint<ValueVector> robust_policy_fixed_point(const TabularMdp& mdp,
                                                         const Policy& policy, double radius,
                                                         double tol) {
  return iterate_to_fixed_point(
      [&](const ValueVector& v) { return robust_policy_operator(mdp, policy, radius, v); },
      ValueVector(ValueVector::Zero(mdp.n_states())), mdp.gamma(), tol);
}

/// Worst-case gap between the smoothed and exact robust evaluation fixed
/// points: gamma R log|S| / ((1 - gamma) rho).
inline double smoothing_gap_bound(double gamma, double radius, Index n_states, double rho) {
  return gamma * radius * std::log(static_cast<double>(n_states)) / ((1.0 - gamma) * rho);
}

/**
 * Order-of-magnitude sample size for robust Q-learning to reach accuracy
 * epsilon, with the unknown universal constants set to 1. Diagnostic only:
 * the absolute value is not meaningful, its scaling in each argument is.
 */
struct SampleComplexityBound {
  /// 1 / (mu_min (1-gamma)^5 eps^2)
  double accuracy_term = 0.0;
  /// t_mix / (mu_min (1-gamma))
  double mixing_term = 0.0;
  /// log(1 / (eps (1-gamma)^2))
  double accuracy_log = 0.0;
  /// Smallest T beyond which T >= (accuracy + mixing) log(T|S||A|/delta) accuracy_log holds.
  double samples = 0.0;
};

inline SampleComplexityBound sample_complexity_bound(double mu_min, int t_mix, double gamma,
                                                     double epsilon, double delta,
                                                     Index n_states, Index n_actions) {
  if (!(mu_min > 0.0 && mu_min <= 1.0))
    throw std::invalid_argument("sample_complexity_bound: mu_min must lie in (0, 1]");
  if (t_mix < 1) throw std::invalid_argument("sample_complexity_bound: t_mix must be >= 1");
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw std::invalid_argument("sample_complexity_bound: gamma must lie in [0, 1)");
  if (!(epsilon > 0.0 && epsilon < 1.0 / (1.0 - gamma)))
    throw std::invalid_argument("sample_complexity_bound: need 0 < epsilon < 1/(1-gamma)");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("sample_complexity_bound: delta must lie in (0, 1)");
  if (n_states < 1 || n_actions < 1)
    throw std::invalid_argument("sample_complexity_bound: empty state or action space");

  SampleComplexityBound b;
  const double h = 1.0 - gamma;
  b.accuracy_term = 1.0 / (mu_min * std::pow(h, 5) * epsilon * epsilon);
  b.mixing_term = static_cast<double>(t_mix) / (mu_min * h);
  b.accuracy_log = std::log(1.0 / (epsilon * h * h));
  const double k = (b.accuracy_term + b.mixing_term) * b.accuracy_log;
  const double sa = static_cast<double>(n_states * n_actions);
  // T <- k log(T sa / delta) climbs monotonically to the larger root from T = k.
  double t = k;
  if (std::log(k * sa / delta) <= 1.0) {
    b.samples = k;
    return b;
  }
  for (int i = 0; i < 200; ++i) {
    const double next = k * std::log(t * sa / delta);
    if (std::abs(next - t) <= 1e-12 * std::abs(t)) {
      t = next;
      break;
    }
    t = next;
  }
  b.samples = t;
  return b;
}

}  // namespace robust_rl
