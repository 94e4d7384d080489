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
#include <vector>

#include <Eigen/Core>

#include "robust_rl/detail/random.hpp"
#include "robust_rl/mdp.hpp"
#include "robust_rl/robust_q.hpp"
#include "robust_rl/trace.hpp"

// Adversarial training baseline: nature is a second Q-learner whose actions
// are target states. With probability R the environment jumps to the state the
// adversary picked, otherwise it follows the nominal kernel.

namespace robust_rl {

struct RarlConfig {
  /// Adversary jump probability.
  double radius = 0.1;
  /// Alternation rounds; each round trains the agent, then the adversary.
  std::int64_t iterations = 10;
  std::int64_t inner_steps = 10000;
  double alpha = 0.2;
  double gamma = 0.9;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(radius >= 0.0 && radius <= 1.0))
      throw std::invalid_argument("RarlConfig: radius must lie in [0, 1]");
    if (iterations < 0) throw std::invalid_argument("RarlConfig: iterations must be >= 0");
    if (inner_steps < 1) throw std::invalid_argument("RarlConfig: inner_steps must be >= 1");
    if (!(alpha > 0.0 && alpha <= 1.0))
      throw std::invalid_argument("RarlConfig: alpha must lie in (0, 1]");
    if (!(gamma >= 0.0 && gamma < 1.0))
      throw std::invalid_argument("RarlConfig: gamma must lie in [0, 1)");
  }
};

/// Agent-side environment with the adversary frozen: row (s,a) is
/// (1 - R) p(.|s,a) + R 1{adversary(s)}.
inline TabularMdp agent_side_mdp(const TabularMdp& mdp, const Policy& adversary, double radius,
                                 double gamma) {
  Eigen::MatrixXd kernel = mdp.kernel() * (1.0 - radius);
  for (Index s = 0; s < mdp.n_states(); ++s)
    for (Index a = 0; a < mdp.n_actions(); ++a)
      kernel(mdp.sa_index(s, a), adversary.action(s)) += radius;
  return TabularMdp(mdp.n_states(), mdp.n_actions(), std::move(kernel), mdp.cost(), gamma);
}

/// Adversary-side environment with the agent frozen: actions are target
/// states, row (s, j) is (1 - R) p(.|s, agent(s)) + R 1{j}, and the cost is the
/// negated agent cost so that minimizing it maximizes the agent's cost.
inline TabularMdp adversary_side_mdp(const TabularMdp& mdp, const Policy& agent, double radius,
                                     double gamma) {
  const Index n = mdp.n_states();
  Eigen::MatrixXd kernel(n * n, n);
  Eigen::MatrixXd cost(n, n);
  for (Index s = 0; s < n; ++s) {
    const Index a = agent.action(s);
    for (Index j = 0; j < n; ++j) {
      kernel.row(s * n + j) = (1.0 - radius) * mdp.transition(s, a);
      kernel(s * n + j, j) += radius;
      cost(s, j) = -mdp.cost(s, a);
    }
  }
  return TabularMdp(n, n, std::move(kernel), std::move(cost), gamma);
}

struct RarlResult {
  QTable agent;
  QTable adversary;
  TrainingTrace trace;
};

/**
 * Alternating training. Per round: (1) vanilla Q-learning of the agent for
 * inner_steps on the agent-side MDP with the adversary's greedy policy frozen,
 * (2) vanilla Q-learning of the adversary on the adversary-side MDP with the
 * agent's greedy policy frozen. Both sides explore uniformly. Trace snapshots
 * are indexed by cumulative agent samples (round * inner_steps) and taken
 * every `stride` rounds.
 */
inline RarlResult train_rarl(const TabularMdp& mdp, const RarlConfig& cfg,
                             const TraceOptions<QTable>& trace_opts = {}) {
  cfg.validate();
  const Index n = mdp.n_states();
  RarlResult out{QTable::Zero(n, mdp.n_actions()), QTable::Zero(n, n), {trace_opts.stride, {}}};
  const Policy agent_behavior = Policy::uniform(n, mdp.n_actions());
  const Policy adversary_behavior = Policy::uniform(n, n);

  for (std::int64_t round = 0; round < cfg.iterations; ++round) {
    QLearningConfig qcfg;
    qcfg.radius = 0.0;
    qcfg.step_size = StepSchedule::constant(cfg.alpha);
    qcfg.total_steps = cfg.inner_steps;

    const TabularMdp agent_env =
        agent_side_mdp(mdp, greedy_policy(out.adversary, Convention::min_cost), cfg.radius, cfg.gamma);
    qcfg.seed = detail::derive_seed(cfg.seed, static_cast<std::uint64_t>(2 * round));
    out.agent = train_robust_q(agent_env, agent_behavior, qcfg, std::move(out.agent)).q;

    const TabularMdp adversary_env =
        adversary_side_mdp(mdp, greedy_policy(out.agent, Convention::min_cost), cfg.radius, cfg.gamma);
    qcfg.seed = detail::derive_seed(cfg.seed, static_cast<std::uint64_t>(2 * round + 1));
    out.adversary = train_robust_q(adversary_env, adversary_behavior, qcfg, std::move(out.adversary)).q;

    if (trace_opts.wants(round + 1, cfg.iterations))
      trace_opts.record(out.trace, (round + 1) * cfg.inner_steps, out.agent);
  }
  return out;
}

}  // namespace robust_rl
