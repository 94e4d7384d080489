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

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "robust_rl/rarl.hpp"
#include "robust_rl/robust_dp.hpp"

namespace {

using namespace robust_rl;

TEST(RarlEnvironments, AgentSide) {
  const TabularMdp mdp = build_random_mdp(3, 2, 4);
  const Policy adversary = Policy::deterministic({2, 0, 1}, 3);
  const TabularMdp env = agent_side_mdp(mdp, adversary, 0.25, 0.8);
  EXPECT_DOUBLE_EQ(env.gamma(), 0.8);
  EXPECT_TRUE(env.cost() == mdp.cost());
  for (Index s = 0; s < 3; ++s)
    for (Index a = 0; a < 2; ++a) {
      Eigen::RowVectorXd expected = 0.75 * mdp.transition(s, a);
      expected(adversary.action(s)) += 0.25;
      EXPECT_LT((env.transition(s, a) - expected).cwiseAbs().maxCoeff(), 1e-15);
    }
}

TEST(RarlEnvironments, AdversarySide) {
  const TabularMdp mdp = build_random_mdp(3, 2, 4);
  const Policy agent = Policy::deterministic({1, 0, 1}, 2);
  const TabularMdp env = adversary_side_mdp(mdp, agent, 0.25, 0.9);
  EXPECT_EQ(env.n_actions(), 3);
  for (Index s = 0; s < 3; ++s)
    for (Index j = 0; j < 3; ++j) {
      EXPECT_DOUBLE_EQ(env.cost(s, j), -mdp.cost(s, agent.action(s)));
      Eigen::RowVectorXd expected = 0.75 * mdp.transition(s, agent.action(s));
      expected(j) += 0.25;
      EXPECT_LT((env.transition(s, j) - expected).cwiseAbs().maxCoeff(), 1e-15);
    }
}

TEST(Rarl, ZeroIterationsReturnsInitialTables) {
  const TabularMdp mdp = build_random_mdp(3, 2, 1);
  RarlConfig cfg;
  cfg.iterations = 0;
  const auto r = train_rarl(mdp, cfg);
  EXPECT_TRUE(r.agent == QTable::Zero(3, 2));
  EXPECT_TRUE(r.adversary == QTable::Zero(3, 3));
  EXPECT_TRUE(r.trace.snapshots.empty());
}

TEST(Rarl, ZeroRadiusRecoversNominalOptimum) {
  const TabularMdp mdp = build_random_mdp(3, 2, 19);
  const QTable q_star = robust_value_iteration(mdp, 0.0, 1e-12).q;
  RarlConfig cfg;
  cfg.radius = 0.0;
  cfg.iterations = 3;
  cfg.inner_steps = 60000;
  cfg.alpha = 0.02;
  cfg.gamma = mdp.gamma();
  cfg.seed = 3;
  const auto r = train_rarl(mdp, cfg);
  EXPECT_LT((r.agent - q_star).cwiseAbs().maxCoeff(), 0.05 * (1.0 + q_star.cwiseAbs().maxCoeff()));
}

TEST(Rarl, DeterministicWithTraceInRounds) {
  const TabularMdp mdp = build_random_mdp(3, 2, 1);
  RarlConfig cfg;
  cfg.iterations = 4;
  cfg.inner_steps = 200;
  cfg.seed = 9;
  TraceOptions<QTable> opts;
  opts.stride = 2;
  opts.keep_iterates = true;
  const auto a = train_rarl(mdp, cfg, opts);
  const auto b = train_rarl(mdp, cfg, opts);
  EXPECT_TRUE(a.agent == b.agent);
  EXPECT_TRUE(a.adversary == b.adversary);
  ASSERT_EQ(a.trace.snapshots.size(), 2u);
  EXPECT_EQ(a.trace.snapshots[0].step, 400);
  EXPECT_EQ(a.trace.snapshots[1].step, 800);
  EXPECT_TRUE(a.trace.snapshots[1].iterate == a.agent);
}

TEST(Rarl, ConfigValidation) {
  const TabularMdp mdp = build_random_mdp(3, 2, 1);
  RarlConfig cfg;
  cfg.radius = 1.5;
  EXPECT_THROW(train_rarl(mdp, cfg), std::invalid_argument);
  cfg = RarlConfig{};
  cfg.inner_steps = 0;
  EXPECT_THROW(train_rarl(mdp, cfg), std::invalid_argument);
  cfg = RarlConfig{};
  cfg.alpha = 0.0;
  EXPECT_THROW(train_rarl(mdp, cfg), std::invalid_argument);
}

TEST(Rarl, RobustQAtLeastAsGoodUnderWorstCaseTest) {
  const TabularMdp mdp = build_random_mdp(3, 2, 29);
  const double r = 0.2, p = 0.2;
  std::vector<double> robust, rarl;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto score = [&](const QTable& q) {
      const TabularMdp test =
          apply_perturbation(mdp, {p, PerturbationMode::worst_case_vs_value}, ValueVector(-greedy_values(q)));
      return monte_carlo_return(test, greedy_policy(q), 100, 30, mdp.gamma(), seed, Convention::max_reward).mean;
    };
    RarlConfig rc;
    rc.radius = r;
    rc.iterations = 5;
    rc.inner_steps = 10000;
    rc.gamma = mdp.gamma();
    rc.seed = seed;
    rarl.push_back(score(train_rarl(mdp, rc).agent));
    QLearningConfig qc;
    qc.radius = r;
    qc.step_size = StepSchedule::constant(rc.alpha);
    qc.total_steps = rc.iterations * rc.inner_steps;
    qc.seed = seed;
    robust.push_back(score(train_robust_q(mdp, Policy::uniform(3, 2), qc).q));
  }
  EXPECT_GE(detail::median(robust), detail::median(rarl));
}

}  // namespace
