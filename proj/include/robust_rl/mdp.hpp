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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "robust_rl/detail/random.hpp"

namespace robust_rl {

using Index = Eigen::Index;
/// Dense state-value vector, one entry per state.
using ValueVector = Eigen::VectorXd;
/// Dense action-value table, states by actions.
using QTable = Eigen::MatrixXd;

/// Raised when an iterative procedure hits its iteration cap. For the
/// contractions in this library that indicates a bug or a chain that violates
/// the ergodicity precondition of the caller.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tolerance on the row sums of every probability vector in the library.
inline constexpr double kStochasticTolerance = 1e-12;

/**
 * Finite MDP (S, A, P, c, gamma) under the cost-minimization convention.
 *
 * The kernel is stored as a (|S||A|) x |S| matrix whose row s*|A| + a is the
 * next-state distribution p(.|s,a). Instances are immutable and validated on
 * construction.
 */
class TabularMdp {
 public:
  TabularMdp(Index n_states, Index n_actions, Eigen::MatrixXd kernel, Eigen::MatrixXd cost,
             double gamma)
      : n_states_(n_states),
        n_actions_(n_actions),
        kernel_(std::move(kernel)),
        cost_(std::move(cost)),
        gamma_(gamma) {
    if (n_states_ < 1 || n_actions_ < 1)
      throw std::invalid_argument("TabularMdp: need at least one state and one action");
    if (kernel_.rows() != n_states_ * n_actions_ || kernel_.cols() != n_states_)
      throw std::invalid_argument("TabularMdp: kernel must be (|S||A|) x |S|");
    if (cost_.rows() != n_states_ || cost_.cols() != n_actions_)
      throw std::invalid_argument("TabularMdp: cost must be |S| x |A|");
    if (!(gamma_ >= 0.0 && gamma_ < 1.0))
      throw std::invalid_argument("TabularMdp: gamma must lie in [0, 1)");
    if (!cost_.allFinite()) throw std::invalid_argument("TabularMdp: costs must be finite");
    for (Index r = 0; r < kernel_.rows(); ++r) {
      if (!kernel_.row(r).allFinite() || kernel_.row(r).minCoeff() < 0.0)
        throw std::invalid_argument("TabularMdp: kernel row " + std::to_string(r) +
                                    " has a negative or non-finite entry");
      if (std::abs(kernel_.row(r).sum() - 1.0) > kStochasticTolerance)
        throw std::invalid_argument("TabularMdp: kernel row " + std::to_string(r) +
                                    " does not sum to 1");
    }
  }

  Index n_states() const { return n_states_; }
  Index n_actions() const { return n_actions_; }
  double gamma() const { return gamma_; }

  Index sa_index(Index s, Index a) const { return s * n_actions_ + a; }

  const Eigen::MatrixXd& kernel() const { return kernel_; }
  const Eigen::MatrixXd& cost() const { return cost_; }
  double cost(Index s, Index a) const { return cost_(s, a); }

  /// Next-state distribution p(.|s,a) as a row expression.
  auto transition(Index s, Index a) const { return kernel_.row(sa_index(s, a)); }

  double c_max() const { return cost_.cwiseAbs().maxCoeff(); }

  /// Same states, actions and costs with a different kernel (validated).
  TabularMdp with_kernel(Eigen::MatrixXd kernel) const {
    return TabularMdp(n_states_, n_actions_, std::move(kernel), cost_, gamma_);
  }

  bool operator==(const TabularMdp& other) const {
    return n_states_ == other.n_states_ && n_actions_ == other.n_actions_ &&
           gamma_ == other.gamma_ && kernel_ == other.kernel_ && cost_ == other.cost_;
  }

 private:
  Index n_states_;
  Index n_actions_;
  Eigen::MatrixXd kernel_;
  Eigen::MatrixXd cost_;
  double gamma_;
};

/// Stationary policy: either a stochastic table pi(a|s) or a deterministic
/// action per state (as produced by greedy extraction from a QTable).
class Policy {
 public:
  static Policy stochastic(Eigen::MatrixXd table) {
    for (Index s = 0; s < table.rows(); ++s) {
      if (table.row(s).minCoeff() < 0.0 ||
          std::abs(table.row(s).sum() - 1.0) > kStochasticTolerance)
        throw std::invalid_argument("Policy: row " + std::to_string(s) +
                                    " is not a probability vector");
    }
    Policy p;
    p.table_ = std::move(table);
    return p;
  }

  static Policy uniform(Index n_states, Index n_actions) {
    return stochastic(Eigen::MatrixXd::Constant(n_states, n_actions, 1.0 / n_actions));
  }

  static Policy deterministic(std::vector<Index> actions, Index n_actions) {
    Policy p;
    p.table_ = Eigen::MatrixXd::Zero(static_cast<Index>(actions.size()), n_actions);
    for (std::size_t s = 0; s < actions.size(); ++s) {
      if (actions[s] < 0 || actions[s] >= n_actions)
        throw std::invalid_argument("Policy: action index out of range");
      p.table_(static_cast<Index>(s), actions[s]) = 1.0;
    }
    p.actions_ = std::move(actions);
    return p;
  }

  bool is_deterministic() const { return actions_.has_value(); }
  Index n_states() const { return table_.rows(); }
  Index n_actions() const { return table_.cols(); }

  double probability(Index s, Index a) const { return table_(s, a); }
  /// Action table; one-hot rows for deterministic policies.
  const Eigen::MatrixXd& table() const { return table_; }

  /// Deterministic action at s; only valid for deterministic policies.
  Index action(Index s) const {
    if (!actions_) throw std::logic_error("Policy::action on a stochastic policy");
    return (*actions_)[static_cast<std::size_t>(s)];
  }

  /// Draws an action. Deterministic policies consume no randomness.
  Index sample(Index s, Rng& rng) const {
    if (actions_) return (*actions_)[static_cast<std::size_t>(s)];
    return detail::sample_categorical(table_.row(s), rng);
  }

 private:
  Policy() = default;
  Eigen::MatrixXd table_;
  std::optional<std::vector<Index>> actions_;
};

enum class PerturbationMode { uniform, worst_case_vs_value };

/// Training-time model mismatch: with probability p_uniform the transition is
/// replaced by a uniform draw (or a jump to the worst state).
struct PerturbationSpec {
  double p_uniform = 0.0;
  PerturbationMode mode = PerturbationMode::uniform;

  void validate() const {
    if (!(p_uniform >= 0.0 && p_uniform <= 1.0))
      throw std::invalid_argument("PerturbationSpec: p_uniform must lie in [0, 1]");
  }
};

/// One observed sample O_t = (s_t, a_t, c_t, s_{t+1}).
struct Transition {
  Index state = 0;
  Index action = 0;
  double cost = 0.0;
  Index next_state = 0;

  bool operator==(const Transition&) const = default;
};

struct Trajectory {
  std::vector<Transition> steps;
  std::uint64_t seed = 0;
};

/// Streams a single trajectory under a policy. Holds references to the MDP
/// and policy, which must outlive the sampler.
class TrajectorySampler {
 public:
  TrajectorySampler(const TabularMdp& mdp, const Policy& policy, Index start_state,
                    std::uint64_t seed)
      : mdp_(&mdp), policy_(&policy), state_(start_state), rng_(seed) {
    if (start_state < 0 || start_state >= mdp.n_states())
      throw std::invalid_argument("TrajectorySampler: start state out of range");
    if (policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions())
      throw std::invalid_argument("TrajectorySampler: policy shape does not match the MDP");
  }

  Transition next() {
    const Index a = policy_->sample(state_, rng_);
    const Index s_next = detail::sample_categorical(mdp_->transition(state_, a), rng_);
    Transition tr{state_, a, mdp_->cost(state_, a), s_next};
    state_ = s_next;
    return tr;
  }

  Index state() const { return state_; }

 private:
  const TabularMdp* mdp_;
  const Policy* policy_;
  Index state_;
  Rng rng_;
};

inline Trajectory sample_trajectory(const TabularMdp& mdp, const Policy& policy, Index s0,
                                    std::int64_t steps, std::uint64_t seed) {
  if (steps < 1) throw std::invalid_argument("sample_trajectory: steps must be >= 1");
  TrajectorySampler sampler(mdp, policy, s0, seed);
  Trajectory out;
  out.seed = seed;
  out.steps.reserve(static_cast<std::size_t>(steps));
  for (std::int64_t t = 0; t < steps; ++t) out.steps.push_back(sampler.next());
  return out;
}

// ---------------------------------------------------------------------------
// Environment construction

/// FrozenLake action order.
enum GridAction : Index { kLeft = 0, kDown = 1, kRight = 2, kUp = 3 };

struct GridworldSpec {
  Index rows = 4;
  Index cols = 4;
  std::vector<Index> holes;
  Index goal = 15;
  /// Probability of slipping; the slip mass is split evenly between the two
  /// perpendicular moves. FrozenLake's slippery ice corresponds to 2/3.
  double slip = 0.0;
  double gamma = 0.9;
  Index start = 0;
};

/// Standard 4x4 FrozenLake map: holes at 5, 7, 11, 12, goal at 15.
inline GridworldSpec frozen_lake_4x4(double slip = 2.0 / 3.0, double gamma = 0.9) {
  return GridworldSpec{4, 4, {5, 7, 11, 12}, 15, slip, gamma, 0};
}

/**
 * Gridworld with absorbing-reset terminals.
 *
 * Cells are numbered row-major. Moves into a wall leave the agent in place.
 * Goal and hole cells transition to the start cell with probability 1 under
 * every action, which folds episodic resets into a single ergodic chain. The
 * terminal cost (-1 for the goal, +1 for a hole) is charged on that reset
 * step, so every way of entering a terminal cell pays it, including jumps
 * introduced by kernel perturbations. All other costs are zero.
 */
inline TabularMdp build_gridworld(const GridworldSpec& spec) {
  const Index n = spec.rows * spec.cols;
  if (spec.rows < 1 || spec.cols < 1) throw std::invalid_argument("gridworld: empty grid");
  auto in_bounds = [n](Index c) { return c >= 0 && c < n; };
  if (!in_bounds(spec.goal)) throw std::invalid_argument("gridworld: goal cell out of bounds");
  if (!in_bounds(spec.start)) throw std::invalid_argument("gridworld: start cell out of bounds");
  for (Index h : spec.holes) {
    if (!in_bounds(h)) throw std::invalid_argument("gridworld: hole cell out of bounds");
    if (h == spec.goal) throw std::invalid_argument("gridworld: goal coincides with a hole");
    if (h == spec.start) throw std::invalid_argument("gridworld: start coincides with a hole");
  }
  if (spec.start == spec.goal) throw std::invalid_argument("gridworld: start coincides with goal");
  if (!(spec.slip >= 0.0 && spec.slip <= 1.0))
    throw std::invalid_argument("gridworld: slip must lie in [0, 1]");

  constexpr Index kActions = 4;
  Eigen::MatrixXd kernel = Eigen::MatrixXd::Zero(n * kActions, n);
  Eigen::MatrixXd cost = Eigen::MatrixXd::Zero(n, kActions);
  auto is_hole = [&](Index c) {
    return std::find(spec.holes.begin(), spec.holes.end(), c) != spec.holes.end();
  };
  auto move = [&](Index cell, Index action) {
    Index r = cell / spec.cols;
    Index c = cell % spec.cols;
    switch (action) {
      case kLeft: c = std::max<Index>(c - 1, 0); break;
      case kDown: r = std::min<Index>(r + 1, spec.rows - 1); break;
      case kRight: c = std::min<Index>(c + 1, spec.cols - 1); break;
      default: r = std::max<Index>(r - 1, 0); break;
    }
    return r * spec.cols + c;
  };

  for (Index s = 0; s < n; ++s) {
    const bool terminal = s == spec.goal || is_hole(s);
    for (Index a = 0; a < kActions; ++a) {
      const Index row = s * kActions + a;
      if (terminal) {
        kernel(row, spec.start) = 1.0;
        cost(s, a) = s == spec.goal ? -1.0 : 1.0;
        continue;
      }
      kernel(row, move(s, a)) += 1.0 - spec.slip;
      // perpendicular moves of a are (a+1)%4 and (a+3)%4
      kernel(row, move(s, (a + 1) % kActions)) += spec.slip / 2.0;
      kernel(row, move(s, (a + 3) % kActions)) += spec.slip / 2.0;
    }
  }
  return TabularMdp(n, kActions, std::move(kernel), std::move(cost), spec.gamma);
}

/// Random MDP: kernel rows are normalized i.i.d. uniform positives, costs are
/// i.i.d. uniform on [cost_lo, cost_hi]. Deterministic in the seed.
inline TabularMdp build_random_mdp(Index n_states, Index n_actions, std::uint64_t seed,
                                   double cost_lo = 0.0, double cost_hi = 1.0,
                                   double gamma = 0.9) {
  if (n_states < 1 || n_actions < 1)
    throw std::invalid_argument("build_random_mdp: need at least one state and one action");
  if (!(cost_lo <= cost_hi)) throw std::invalid_argument("build_random_mdp: empty cost range");
  Rng rng(seed);
  Eigen::MatrixXd kernel(n_states * n_actions, n_states);
  for (Index r = 0; r < kernel.rows(); ++r) {
    for (Index c = 0; c < n_states; ++c) kernel(r, c) = 1.0 - detail::uniform01(rng);
    kernel.row(r) /= kernel.row(r).sum();
  }
  Eigen::MatrixXd cost(n_states, n_actions);
  for (Index s = 0; s < n_states; ++s)
    for (Index a = 0; a < n_actions; ++a)
      cost(s, a) = cost_lo + (cost_hi - cost_lo) * detail::uniform01(rng);
  return TabularMdp(n_states, n_actions, std::move(kernel), std::move(cost), gamma);
}

/**
 * Mixes every kernel row with a jump distribution:
 * (1 - p) * p(.|s,a) + p * q, where q is uniform over states or, in
 * worst-case mode, a point mass on argmin_s value(s) (lowest index on ties).
 * Pass reward-convention values (negated cost-to-go) in worst-case mode so the
 * jump target is the least valuable state.
 */
inline TabularMdp apply_perturbation(const TabularMdp& mdp, const PerturbationSpec& spec,
                                     const std::optional<ValueVector>& value = std::nullopt) {
  spec.validate();
  const Index n = mdp.n_states();
  Eigen::RowVectorXd jump;
  if (spec.mode == PerturbationMode::uniform) {
    jump = Eigen::RowVectorXd::Constant(n, 1.0 / static_cast<double>(n));
  } else {
    if (!value) throw std::invalid_argument("apply_perturbation: worst-case mode needs a value vector");
    if (value->size() != n) throw std::invalid_argument("apply_perturbation: value size mismatch");
    Index target = 0;
    value->minCoeff(&target);
    jump = Eigen::RowVectorXd::Zero(n);
    jump(target) = 1.0;
  }
  Eigen::MatrixXd kernel = mdp.kernel();
  for (Index r = 0; r < kernel.rows(); ++r)
    kernel.row(r) = (1.0 - spec.p_uniform) * kernel.row(r) + spec.p_uniform * jump;
  return mdp.with_kernel(std::move(kernel));
}

// ---------------------------------------------------------------------------
// Markov-chain diagnostics

/// State transition matrix P_pi(s, s') = sum_a pi(a|s) p(s'|s,a).
inline Eigen::MatrixXd state_transition_matrix(const TabularMdp& mdp, const Policy& policy) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(mdp.n_states(), mdp.n_states());
  for (Index s = 0; s < mdp.n_states(); ++s)
    for (Index a = 0; a < mdp.n_actions(); ++a)
      m.row(s) += policy.probability(s, a) * mdp.transition(s, a);
  return m;
}

/// Expected one-step cost c_pi(s) = sum_a pi(a|s) c(s,a).
inline ValueVector expected_cost(const TabularMdp& mdp, const Policy& policy) {
  return mdp.cost().cwiseProduct(policy.table()).rowwise().sum();
}

struct StationaryDistribution {
  /// mu(s,a), indexed by TabularMdp::sa_index.
  Eigen::VectorXd state_action;
  /// Marginal over states.
  Eigen::VectorXd state;
  double mu_min = 0.0;
  double residual = 0.0;
  int iterations = 0;
};

/**
 * Stationary distribution of the state-action chain
 * M((s,a),(s',a')) = p(s'|s,a) pi(a'|s') by power iteration.
 *
 * Starts from a non-uniform distribution so that periodic chains oscillate and
 * are reported through ConvergenceError instead of passing silently.
 */
inline StationaryDistribution stationary_distribution(const TabularMdp& mdp,
                                                      const Policy& policy,
                                                      double tol = 1e-12,
                                                      int max_iterations = 200000) {
  const Index ns = mdp.n_states();
  const Index na = mdp.n_actions();
  Eigen::VectorXd mu = Eigen::VectorXd::LinSpaced(ns * na, 1.0, static_cast<double>(ns * na));
  mu /= mu.sum();

  auto step = [&](const Eigen::VectorXd& m) {
    const Eigen::VectorXd next_state = mdp.kernel().transpose() * m;
    Eigen::VectorXd out(ns * na);
    for (Index s = 0; s < ns; ++s)
      for (Index a = 0; a < na; ++a) out(s * na + a) = next_state(s) * policy.probability(s, a);
    return out;
  };

  StationaryDistribution result;
  for (int it = 1; it <= max_iterations; ++it) {
    Eigen::VectorXd next = step(mu);
    next /= next.sum();
    const double residual = (next - mu).cwiseAbs().maxCoeff();
    mu = std::move(next);
    if (residual <= tol) {
      result.iterations = it;
      result.state_action = mu;
      result.residual = (step(mu) - mu).cwiseAbs().maxCoeff();
      result.state = Eigen::VectorXd::Zero(ns);
      for (Index s = 0; s < ns; ++s) result.state(s) = mu.segment(s * na, na).sum();
      result.mu_min = mu.minCoeff();
      return result;
    }
  }
  throw ConvergenceError("stationary_distribution: no convergence after " +
                         std::to_string(max_iterations) +
                         " iterations (reducible or periodic chain?)");
}

/// Smallest t with max_s d_TV(P_pi^t(s, .), mu) <= 1/4.
inline int mixing_time(const TabularMdp& mdp, const Policy& policy, int max_t = 10000) {
  const Eigen::VectorXd mu = stationary_distribution(mdp, policy).state;
  const Eigen::MatrixXd p = state_transition_matrix(mdp, policy);
  Eigen::MatrixXd pt = p;
  for (int t = 1; t <= max_t; ++t) {
    double worst = 0.0;
    for (Index s = 0; s < pt.rows(); ++s)
      worst = std::max(worst, 0.5 * (pt.row(s).transpose() - mu).cwiseAbs().sum());
    if (worst <= 0.25) return t;
    pt = pt * p;
  }
  throw ConvergenceError("mixing_time: total variation still above 1/4 after " +
                         std::to_string(max_t) + " steps");
}

}  // namespace robust_rl
