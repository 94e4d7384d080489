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

#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "robust_rl/uncertainty.hpp"

namespace {

using namespace robust_rl;

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

TEST(ContaminationSpec, Validation) {
  EXPECT_NO_THROW((ContaminationSpec{0.0, 1.0}.validate()));
  EXPECT_NO_THROW((ContaminationSpec{1.0, 1.0}.validate()));
  EXPECT_THROW((ContaminationSpec{-0.1, 1.0}.validate()), std::invalid_argument);
  EXPECT_THROW((ContaminationSpec{1.1, 1.0}.validate()), std::invalid_argument);
  EXPECT_THROW((ContaminationSpec{0.5, 0.0}.validate()), std::invalid_argument);
}

TEST(SupportFunction, Examples) {
  const Eigen::VectorXd p = vec({0.5, 0.5});
  const Eigen::VectorXd v = vec({1.0, 3.0});
  EXPECT_DOUBLE_EQ(support_function(p, v, 0.0), 2.0);
  EXPECT_DOUBLE_EQ(support_function(vec({0.9, 0.1}), v, 1.0), 3.0);
  EXPECT_NEAR(support_function(p, v, 0.2), 2.2, 1e-15);
  EXPECT_NEAR(support_function(p, v, 0.2, Direction::min), 1.8, 1e-15);
  EXPECT_NEAR(oracle::grid_support(p, v, 0.2, 1000), 2.2, 1e-12);
  EXPECT_THROW(support_function(p, vec({1.0}), 0.2), std::invalid_argument);
}

TEST(SupportFunction, MatchesSimplexGridOracle) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd p(3), v(3);
    for (Index i = 0; i < 3; ++i) {
      p(i) = detail::uniform01(rng);
      v(i) = 4.0 * detail::uniform01(rng) - 2.0;
    }
    p /= p.sum();
    const double r = detail::uniform01(rng);
    // Maximum of a linear function is attained at a vertex, which the grid contains.
    EXPECT_NEAR(support_function(p, v, r), oracle::grid_support(p, v, r, 60), 1e-12);
  }
}

TEST(SupportFunction, MonotoneInRadius) {
  const Eigen::VectorXd p = vec({0.2, 0.3, 0.5});
  const Eigen::VectorXd v = vec({1.0, -2.0, 0.5});
  double prev = support_function(p, v, 0.0);
  for (int i = 1; i <= 10; ++i) {
    const double cur = support_function(p, v, i / 10.0);
    EXPECT_GE(cur, prev - 1e-15);
    prev = cur;
  }
}

TEST(SampledSupport, Examples) {
  const Eigen::VectorXd v = vec({1.0, 3.0, -1.0});
  EXPECT_DOUBLE_EQ(sampled_support(2, v, 0.0), -1.0);
  const Eigen::VectorXd k = Eigen::VectorXd::Constant(4, 2.5);
  for (double r : {0.0, 0.3, 1.0})
    for (Index s = 0; s < 4; ++s) EXPECT_DOUBLE_EQ(sampled_support(s, k, r), 2.5);
}

TEST(SampledSupport, UnbiasedForSupportFunction) {
  const Eigen::VectorXd p = vec({0.1, 0.6, 0.3});
  const Eigen::VectorXd v = vec({2.0, -1.0, 0.5});
  const double r = 0.3;
  Rng rng(77);
  const int n = 100000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = sampled_support(detail::sample_categorical(p, rng), v, r);
    sum += x;
    sum_sq += x * x;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sum_sq / n - mean * mean) / n);
  EXPECT_LT(std::abs(mean - support_function(p, v, r)), 3.0 * se);
}

TEST(Lse, Examples) {
  EXPECT_NEAR(lse(vec({0.0, 0.0}), 1.0), std::log(2.0), 1e-15);
  EXPECT_NEAR(lse(vec({1.0, 3.0}), 100.0), 3.0, 1e-2);
  EXPECT_NEAR(lse(vec({1.0, 3.0}), 1.0), std::log(std::exp(1.0) + std::exp(3.0)), 1e-14);
  EXPECT_NEAR(lse(vec({1.0, 3.0}), 1.0), 3.126928, 1e-6);
  EXPECT_THROW(lse(vec({1.0}), 0.0), std::invalid_argument);
}

TEST(Lse, StableForLargeInputsAndBracketsMax) {
  const Eigen::VectorXd big = vec({1000.0, 999.0, -1000.0});
  EXPECT_TRUE(std::isfinite(lse(big, 5.0)));
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    Eigen::VectorXd v(6);
    for (Index i = 0; i < 6; ++i) v(i) = 20.0 * detail::uniform01(rng) - 10.0;
    for (double rho : {0.1, 1.0, 10.0}) {
      const double l = lse(v, rho);
      EXPECT_GE(l, v.maxCoeff() - 1e-12);
      EXPECT_LE(l, v.maxCoeff() + std::log(6.0) / rho + 1e-12);
    }
  }
}

TEST(LseGradient, Examples) {
  const Eigen::VectorXd u = lse_gradient(Eigen::VectorXd::Constant(4, 7.0), 2.0);
  for (Index i = 0; i < 4; ++i) EXPECT_NEAR(u(i), 0.25, 1e-15);
  const Eigen::VectorXd sat = lse_gradient(vec({0.0, 800.0}), 1.0);
  EXPECT_NEAR(sat(0), 0.0, 1e-300);
  EXPECT_NEAR(sat(1), 1.0, 1e-15);
  EXPECT_THROW(lse_gradient(vec({1.0}), -1.0), std::invalid_argument);
}

TEST(LseGradient, ProbabilityVectorMatchingFiniteDifferences) {
  Rng rng(11);
  for (int t = 0; t < 20; ++t) {
    Eigen::VectorXd v(5);
    for (Index i = 0; i < 5; ++i) v(i) = 6.0 * detail::uniform01(rng) - 3.0;
    const double rho = 0.5 + 4.0 * detail::uniform01(rng);
    const Eigen::VectorXd g = lse_gradient(v, rho);
    EXPECT_NEAR(g.sum(), 1.0, 1e-12);
    EXPECT_GE(g.minCoeff(), 0.0);
    const Eigen::VectorXd fd =
        oracle::finite_difference([rho](const Eigen::VectorXd& x) { return lse(x, rho); }, v, 1e-5);
    EXPECT_LT((g - fd).cwiseAbs().maxCoeff(), 1e-6);
  }
}

}  // namespace
