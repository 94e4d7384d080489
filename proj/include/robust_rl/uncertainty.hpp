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
#include <stdexcept>

#include <Eigen/Core>

#include "robust_rl/mdp.hpp"

namespace robust_rl {

/**
 * R-contamination uncertainty set around a nominal distribution p:
 * { (1 - R) p + R q : q in the simplex }.
 *
 * `rho` is the LogSumExp smoothness used by the smoothed operators; larger
 * values track the hard max more closely.
 */
struct ContaminationSpec {
  double radius = 0.0;
  double rho = 1.0;

  void validate() const {
    if (!(radius >= 0.0 && radius <= 1.0))
      throw std::invalid_argument("ContaminationSpec: radius must lie in [0, 1]");
    if (!(rho > 0.0)) throw std::invalid_argument("ContaminationSpec: rho must be positive");
  }
};

/// Which extremum nature picks. `max` is the worst case under costs.
enum class Direction { max, min };

/// Support function of the contamination set:
/// (1 - R) p^T v + R * extremum(v).
template <class Dist, class Values>
double support_function(const Eigen::MatrixBase<Dist>& p, const Eigen::MatrixBase<Values>& v,
                        double radius, Direction direction = Direction::max) {
  if (p.size() != v.size()) throw std::invalid_argument("support_function: size mismatch");
  double expectation = 0.0;
  for (Index i = 0; i < v.size(); ++i) expectation += p(i) * v(i);
  const double extremum = direction == Direction::max ? v.maxCoeff() : v.minCoeff();
  return (1.0 - radius) * expectation + radius * extremum;
}

/// One-sample plug-in of the support function with the empirical kernel
/// estimate 1{next_state}: R max_s v(s) + (1 - R) v(next_state).
template <class Values>
double sampled_support(Index next_state, const Eigen::MatrixBase<Values>& v, double radius) {
  return radius * v.maxCoeff() + (1.0 - radius) * v(next_state);
}

/// LogSumExp log(sum_s exp(rho v(s))) / rho, evaluated with a max shift.
template <class Values>
double lse(const Eigen::MatrixBase<Values>& v, double rho) {
  if (!(rho > 0.0)) throw std::invalid_argument("lse: rho must be positive");
  const double m = v.maxCoeff();
  double sum = 0.0;
  for (Index i = 0; i < v.size(); ++i) sum += std::exp(rho * (v(i) - m));
  return m + std::log(sum) / rho;
}

/// Gradient of lse: softmax(rho v).
template <class Values>
Eigen::VectorXd lse_gradient(const Eigen::MatrixBase<Values>& v, double rho) {
  if (!(rho > 0.0)) throw std::invalid_argument("lse_gradient: rho must be positive");
  const double m = v.maxCoeff();
  Eigen::VectorXd w(v.size());
  for (Index i = 0; i < v.size(); ++i) w(i) = std::exp(rho * (v(i) - m));
  return w / w.sum();
}

}  // namespace robust_rl
