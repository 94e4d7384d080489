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
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace robust_rl {

struct Metric {
  std::string name;
  double value = 0.0;
};

struct Snapshot {
  std::int64_t step = 0;
  /// Iterate at `step` (QTable, or theta as a column); empty unless requested.
  Eigen::MatrixXd iterate;
  std::vector<Metric> metrics;
};

/// Checkpoints of a training run, strictly increasing in step.
struct TrainingTrace {
  std::int64_t stride = 0;
  std::vector<Snapshot> snapshots;
};

/**
 * Checkpointing for a training loop over iterates of type `Iterate`.
 * Snapshots are taken after step t for t = stride, 2 stride, ... and after the
 * final step; stride 0 disables them.
 */
template <class Iterate>
struct TraceOptions {
  std::int64_t stride = 0;
  bool keep_iterates = false;
  std::function<std::vector<Metric>(std::int64_t step, const Iterate& iterate)> evaluate;

  bool wants(std::int64_t step, std::int64_t total) const {
    return stride > 0 && (step % stride == 0 || step == total);
  }

  void record(TrainingTrace& trace, std::int64_t step, const Iterate& iterate) const {
    Snapshot snap;
    snap.step = step;
    if (keep_iterates) snap.iterate = iterate;
    if (evaluate) snap.metrics = evaluate(step, iterate);
    trace.snapshots.push_back(std::move(snap));
  }
};

}  // namespace robust_rl
