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
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "robust_rl/detail/random.hpp"
#include "robust_rl/detail/stats.hpp"
#include "robust_rl/mdp.hpp"
#include "robust_rl/robust_dp.hpp"
#include "robust_rl/trace.hpp"
#include "robust_rl/uncertainty.hpp"

namespace robust_rl {

/// Step-size schedule: constant alpha, or alpha / (1 + decay t) which
/// satisfies the Robbins-Monro conditions for decay > 0.
struct StepSchedule {
  enum class Kind { constant, decaying };
  Kind kind = Kind::constant;
  double alpha = 0.1;
  double decay = 0.0;

  static StepSchedule constant(double alpha) { return {Kind::constant, alpha, 0.0}; }
  static StepSchedule robbins_monro(double alpha0, double decay) {
    return {Kind::decaying, alpha0, decay};
  }

  double operator()(std::int64_t t) const {
    if (kind == Kind::constant) return alpha;
    return alpha / (1.0 + decay * static_cast<double>(t));
  }

  void validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0))
      throw std::invalid_argument("StepSchedule: alpha must lie in (0, 1]");
    if (kind == Kind::decaying && !(decay > 0.0))
      throw std::invalid_argument("StepSchedule: decay must be positive");
  }
};

struct QLearningConfig {
  /// Contamination radius R; 0 gives vanilla Q-learning.
  double radius = 0.0;
  StepSchedule step_size = StepSchedule::constant(0.1);
  std::int64_t total_steps = 1;
  double q_init = 0.0;
  std::uint64_t seed = 0;
  Index start_state = 0;

  void validate() const {
    if (!(radius >= 0.0 && radius <= 1.0))
      throw std::invalid_argument("QLearningConfig: radius must lie in [0, 1]");
    if (total_steps < 1) throw std::invalid_argument("QLearningConfig: total_steps must be >= 1");
    step_size.validate();
  }
};

/**
 * One asynchronous robust Q-learning update on entry (s_t, a_t):
 *
 *   Q(s,a) <- (1 - alpha) Q(s,a) + alpha (c + gamma [R max_s V(s) + (1 - R) V(s')])
 *
 * with V = min_a Q taken from the table before the update. No other entry
 * changes.
 */
inline void robust_q_step(QTable& q, const Transition& tr, double alpha, double radius,
                          double gamma) {
  const ValueVector v = greedy_values(q);
  const double target = tr.cost + gamma * sampled_support(tr.next_state, v, radius);
  double& entry = q(tr.state, tr.action);
  entry = (1.0 - alpha) * entry + alpha * target;
}

struct QLearningResult {
  QTable q;
  TrainingTrace trace;
};

/// Robust Q-learning along one trajectory sampled under `behavior`, starting
/// from the supplied table.
inline QLearningResult train_robust_q(const TabularMdp& mdp, const Policy& behavior,
                                      const QLearningConfig& cfg, QTable initial,
                                      const TraceOptions<QTable>& trace_opts = {}) {
  cfg.validate();
  if (initial.rows() != mdp.n_states() || initial.cols() != mdp.n_actions())
    throw std::invalid_argument("train_robust_q: initial table shape mismatch");
  if (behavior.table().minCoeff() <= 0.0)
    throw std::invalid_argument("train_robust_q: behavior policy must cover every action");

  QLearningResult out{std::move(initial), {trace_opts.stride, {}}};
  TrajectorySampler sampler(mdp, behavior, cfg.start_state, cfg.seed);
  for (std::int64_t t = 0; t < cfg.total_steps; ++t) {
    robust_q_step(out.q, sampler.next(), cfg.step_size(t), cfg.radius, mdp.gamma());
    if (trace_opts.wants(t + 1, cfg.total_steps)) trace_opts.record(out.trace, t + 1, out.q);
  }
  return out;
}

inline QLearningResult train_robust_q(const TabularMdp& mdp, const Policy& behavior,
                                      const QLearningConfig& cfg,
                                      const TraceOptions<QTable>& trace_opts = {}) {
  return train_robust_q(mdp, behavior, cfg,
                        QTable::Constant(mdp.n_states(), mdp.n_actions(), cfg.q_init),
                        trace_opts);
}

/// Sign convention of a table or a return: costs to minimize or rewards to
/// maximize.
enum class Convention { min_cost, max_reward };

/// Deterministic greedy policy, lowest action index on ties.
inline Policy greedy_policy(const QTable& q, Convention convention = Convention::min_cost) {
  std::vector<Index> actions(static_cast<std::size_t>(q.rows()));
  for (Index s = 0; s < q.rows(); ++s) {
    Index best = 0;
    for (Index a = 1; a < q.cols(); ++a) {
      const bool better =
          convention == Convention::min_cost ? q(s, a) < q(s, best) : q(s, a) > q(s, best);
      if (better) best = a;
    }
    actions[static_cast<std::size_t>(s)] = best;
  }
  return Policy::deterministic(std::move(actions), q.cols());
}

struct ReturnStats {
  double mean = 0.0;
  double p5 = 0.0;
  double p95 = 0.0;
  double std_error = 0.0;
};

/// Discounted return over independent truncated rollouts from `start`.
/// With Convention::max_reward the returns are negated costs.
inline ReturnStats monte_carlo_return(const TabularMdp& mdp, const Policy& policy,
                                      std::int64_t horizon, std::int64_t n_rollouts, double gamma,
                                      std::uint64_t seed,
                                      Convention convention = Convention::min_cost,
                                      Index start = 0) {
  if (horizon < 1) throw std::invalid_argument("monte_carlo_return: horizon must be >= 1");
  if (n_rollouts < 1) throw std::invalid_argument("monte_carlo_return: n_rollouts must be >= 1");
  Rng rng(seed);
  std::vector<double> returns;
  returns.reserve(static_cast<std::size_t>(n_rollouts));
  const double sign = convention == Convention::min_cost ? 1.0 : -1.0;
  for (std::int64_t i = 0; i < n_rollouts; ++i) {
    Index s = start;
    double g = 0.0;
    double discount = 1.0;
    for (std::int64_t h = 0; h < horizon; ++h) {
      const Index a = policy.sample(s, rng);
      g += discount * mdp.cost(s, a);
      s = detail::sample_categorical(mdp.transition(s, a), rng);
      discount *= gamma;
    }
    returns.push_back(sign * g);
  }
  ReturnStats stats;
  stats.mean = detail::mean(returns);
  stats.std_error = detail::standard_error(returns);
  stats.p5 = detail::percentile(returns, 5.0);
  stats.p95 = detail::percentile(returns, 95.0);
  return stats;
}

}  // namespace robust_rl
