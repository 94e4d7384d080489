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
#include <atomic>
#include <cstdio>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "robust_rl/detail/random.hpp"
#include "robust_rl/detail/stats.hpp"
#include "robust_rl/io.hpp"
#include "robust_rl/mdp.hpp"
#include "robust_rl/rarl.hpp"
#include "robust_rl/robust_q.hpp"
#include "robust_rl/robust_tdc.hpp"

// Train-on-perturbed / test-on-nominal experiment runner.
//
// Every experiment pits a robust learner against a baseline over n_seeds
// independent runs. Seed i drives both algorithms (common random numbers), so
// at p = 0, R = 0 the two curves coincide exactly.

namespace robust_rl::bench {

enum class ExperimentKind { robust_q_vs_vanilla, robust_tdc_vs_vanilla, robust_q_vs_rarl };

inline std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::robust_q_vs_vanilla: return "robust-q-vs-vanilla";
    case ExperimentKind::robust_tdc_vs_vanilla: return "robust-tdc-vs-vanilla";
    case ExperimentKind::robust_q_vs_rarl: return "robust-q-vs-rarl";
  }
  return "?";
}

inline ExperimentKind experiment_kind_from_string(const std::string& s) {
  if (s == "robust-q-vs-vanilla") return ExperimentKind::robust_q_vs_vanilla;
  if (s == "robust-tdc-vs-vanilla") return ExperimentKind::robust_tdc_vs_vanilla;
  if (s == "robust-q-vs-rarl") return ExperimentKind::robust_q_vs_rarl;
  throw std::invalid_argument("unknown experiment '" + s + "'");
}

struct EnvironmentConfig {
  /// "gridworld", "random" or "file".
  std::string type = "gridworld";
  GridworldSpec grid = frozen_lake_4x4();
  Index n_states = 3;
  Index n_actions = 2;
  std::uint64_t seed = 0;
  double cost_lo = 0.0;
  double cost_hi = 1.0;
  double gamma = 0.9;
  std::string path;

  TabularMdp build() const {
    if (type == "gridworld") {
      GridworldSpec g = grid;
      g.gamma = gamma;
      return build_gridworld(g);
    }
    if (type == "random") return build_random_mdp(n_states, n_actions, seed, cost_lo, cost_hi, gamma);
    if (type == "file") return io::load_mdp(path);
    throw std::invalid_argument("unknown environment type '" + type + "'");
  }
};

struct QSettings {
  double alpha = 0.8;
  /// "constant" or "robbins-monro" (alpha / (1 + decay t)).
  std::string schedule = "constant";
  double decay = 0.0;
  std::int64_t steps = 50000;

  StepSchedule step_schedule() const {
    if (schedule == "constant") return StepSchedule::constant(alpha);
    if (schedule == "robbins-monro") return StepSchedule::robbins_monro(alpha, decay);
    throw std::invalid_argument("unknown step schedule '" + schedule + "'");
  }
};

struct TdcSettings {
  double alpha = 0.1;
  double beta = 0.5;
  double rho = 1.0;
  double projection_radius = 50.0;
  std::int64_t steps = 20000;
  Index n_features = 5;
  std::uint64_t feature_seed = 0;
};

struct RarlSettings {
  std::int64_t iterations = 10;
  std::int64_t inner_steps = 10000;
  double alpha = 0.2;
};

struct EvalSettings {
  std::int64_t horizon = 100;
  std::int64_t n_rollouts = 30;
  /// Checkpoint spacing in training steps (RARL: in alternation rounds).
  std::int64_t stride = 5000;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::robust_q_vs_vanilla;
  EnvironmentConfig environment;
  /// Training perturbation probability; for robust-q-vs-rarl, the test-time
  /// worst-case jump probability.
  double p_uniform = 0.1;
  /// Contamination radius of the robust learner (and RARL's jump probability).
  double radius = 0.2;
  QSettings q;
  TdcSettings tdc;
  RarlSettings rarl;
  std::int64_t n_seeds = 30;
  std::uint64_t seed = 0;
  EvalSettings eval;
  std::string output_dir;
  /// 0 picks the hardware concurrency.
  int workers = 0;

  void validate() const {
    PerturbationSpec{p_uniform, PerturbationMode::uniform}.validate();
    if (!(radius >= 0.0 && radius <= 1.0))
      throw std::invalid_argument("config: R must lie in [0, 1]");
    if (n_seeds < 1) throw std::invalid_argument("config: n_seeds must be >= 1");
    if (eval.horizon < 1 || eval.n_rollouts < 1 || eval.stride < 1)
      throw std::invalid_argument("config: eval horizon, n_rollouts and stride must be >= 1");
    if (workers < 0) throw std::invalid_argument("config: workers must be >= 0");
    switch (experiment) {
      case ExperimentKind::robust_q_vs_vanilla: {
        QLearningConfig c;
        c.radius = radius;
        c.step_size = q.step_schedule();
        c.total_steps = q.steps;
        c.validate();
        break;
      }
      case ExperimentKind::robust_tdc_vs_vanilla: {
        TdcConfig c;
        c.alpha = tdc.alpha;
        c.beta = tdc.beta;
        c.rho = tdc.rho;
        c.radius = radius;
        c.projection_radius = tdc.projection_radius;
        c.total_steps = tdc.steps;
        c.validate();
        if (tdc.n_features < 1) throw std::invalid_argument("config: tdc.n_features must be >= 1");
        break;
      }
      case ExperimentKind::robust_q_vs_rarl: {
        RarlConfig c;
        c.radius = radius;
        c.iterations = rarl.iterations;
        c.inner_steps = rarl.inner_steps;
        c.alpha = rarl.alpha;
        c.validate();
        if (rarl.iterations < 1) throw std::invalid_argument("config: rarl.iterations must be >= 1");
        break;
      }
    }
  }

  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

namespace detail {
template <class T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}
}  // namespace detail

inline ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  try {
    c.experiment = experiment_kind_from_string(j.at("experiment").get<std::string>());
    if (j.contains("environment")) {
      const auto& e = j.at("environment");
      auto& env = c.environment;
      detail::read_opt(e, "type", env.type);
      detail::read_opt(e, "gamma", env.gamma);
      if (env.type == "gridworld") {
        detail::read_opt(e, "rows", env.grid.rows);
        detail::read_opt(e, "cols", env.grid.cols);
        detail::read_opt(e, "holes", env.grid.holes);
        detail::read_opt(e, "goal", env.grid.goal);
        detail::read_opt(e, "slip", env.grid.slip);
        detail::read_opt(e, "start", env.grid.start);
      }
      detail::read_opt(e, "n_states", env.n_states);
      detail::read_opt(e, "n_actions", env.n_actions);
      detail::read_opt(e, "seed", env.seed);
      if (e.contains("cost_range")) {
        const auto& r = e.at("cost_range");
        if (!r.is_array() || r.size() != 2)
          throw std::invalid_argument("config: cost_range must be [lo, hi]");
        env.cost_lo = r[0].get<double>();
        env.cost_hi = r[1].get<double>();
      }
      detail::read_opt(e, "path", env.path);
    }
    detail::read_opt(j, "p", c.p_uniform);
    detail::read_opt(j, "R", c.radius);
    detail::read_opt(j, "n_seeds", c.n_seeds);
    detail::read_opt(j, "seed", c.seed);
    detail::read_opt(j, "output_dir", c.output_dir);
    detail::read_opt(j, "workers", c.workers);
    if (j.contains("q_learning")) {
      const auto& q = j.at("q_learning");
      detail::read_opt(q, "alpha", c.q.alpha);
      detail::read_opt(q, "schedule", c.q.schedule);
      detail::read_opt(q, "decay", c.q.decay);
      detail::read_opt(q, "steps", c.q.steps);
    }
    if (j.contains("tdc")) {
      const auto& t = j.at("tdc");
      detail::read_opt(t, "alpha", c.tdc.alpha);
      detail::read_opt(t, "beta", c.tdc.beta);
      detail::read_opt(t, "rho", c.tdc.rho);
      detail::read_opt(t, "K", c.tdc.projection_radius);
      detail::read_opt(t, "steps", c.tdc.steps);
      detail::read_opt(t, "n_features", c.tdc.n_features);
      detail::read_opt(t, "feature_seed", c.tdc.feature_seed);
    }
    if (j.contains("rarl")) {
      const auto& r = j.at("rarl");
      detail::read_opt(r, "iterations", c.rarl.iterations);
      detail::read_opt(r, "inner_steps", c.rarl.inner_steps);
      detail::read_opt(r, "alpha", c.rarl.alpha);
    }
    if (j.contains("eval")) {
      const auto& e = j.at("eval");
      detail::read_opt(e, "horizon", c.eval.horizon);
      detail::read_opt(e, "n_rollouts", c.eval.n_rollouts);
      detail::read_opt(e, "stride", c.eval.stride);
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  return c;
}

inline nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::ordered_json env;
  env["type"] = environment.type;
  env["gamma"] = environment.gamma;
  if (environment.type == "gridworld") {
    env["rows"] = environment.grid.rows;
    env["cols"] = environment.grid.cols;
    env["holes"] = environment.grid.holes;
    env["goal"] = environment.grid.goal;
    env["slip"] = environment.grid.slip;
    env["start"] = environment.grid.start;
  } else if (environment.type == "random") {
    env["n_states"] = environment.n_states;
    env["n_actions"] = environment.n_actions;
    env["seed"] = environment.seed;
    env["cost_range"] = {environment.cost_lo, environment.cost_hi};
  } else {
    env["path"] = environment.path;
  }
  nlohmann::ordered_json j;
  j["experiment"] = to_string(experiment);
  j["environment"] = env;
  j["p"] = p_uniform;
  j["R"] = radius;
  j["n_seeds"] = n_seeds;
  j["seed"] = seed;
  j["q_learning"] = {{"alpha", q.alpha}, {"schedule", q.schedule}, {"decay", q.decay}, {"steps", q.steps}};
  j["tdc"] = {{"alpha", tdc.alpha}, {"beta", tdc.beta}, {"rho", tdc.rho}, {"K", tdc.projection_radius},
              {"steps", tdc.steps}, {"n_features", tdc.n_features}, {"feature_seed", tdc.feature_seed}};
  j["rarl"] = {{"iterations", rarl.iterations}, {"inner_steps", rarl.inner_steps}, {"alpha", rarl.alpha}};
  j["eval"] = {{"horizon", eval.horizon}, {"n_rollouts", eval.n_rollouts}, {"stride", eval.stride}};
  j["output_dir"] = output_dir;
  j["workers"] = workers;
  return j;
}

/// One measurement of one run.
struct ResultRow {
  std::string experiment;
  std::string algo;
  std::int64_t seed = 0;  // seed index within the experiment
  std::int64_t step = 0;
  std::string metric;
  double value = 0.0;
};

/// Across-seed summary at one (algo, metric, step); stat is median, p5 or p95.
struct AggregateRow {
  std::string experiment;
  std::string algo;
  std::string stat;
  std::int64_t step = 0;
  std::string metric;
  double value = 0.0;
};

struct ResultTable {
  std::vector<ResultRow> rows;

  /// Median, 5th and 95th percentile over seeds, ordered by (algo, metric, step).
  std::vector<AggregateRow> aggregates() const {
    std::map<std::tuple<std::string, std::string, std::int64_t>, std::vector<double>> groups;
    std::map<std::tuple<std::string, std::string, std::int64_t>, std::string> experiment_of;
    for (const auto& r : rows) {
      const auto key = std::make_tuple(r.algo, r.metric, r.step);
      groups[key].push_back(r.value);
      experiment_of[key] = r.experiment;
    }
    std::vector<AggregateRow> out;
    for (const auto& [key, values] : groups) {
      const auto& [algo, metric, step] = key;
      const std::string& exp = experiment_of[key];
      out.push_back({exp, algo, "median", step, metric, robust_rl::detail::median(values)});
      out.push_back({exp, algo, "p5", step, metric, robust_rl::detail::percentile(values, 5.0)});
      out.push_back({exp, algo, "p95", step, metric, robust_rl::detail::percentile(values, 95.0)});
    }
    return out;
  }

  std::vector<std::string> metrics() const {
    std::set<std::string> names;
    for (const auto& r : rows) names.insert(r.metric);
    return {names.begin(), names.end()};
  }

  /// Looks up one aggregate value; throws if absent.
  double aggregate(const std::string& algo, const std::string& metric, std::int64_t step,
                   const std::string& stat) const {
    for (const auto& a : aggregates())
      if (a.algo == algo && a.metric == metric && a.step == step && a.stat == stat) return a.value;
    throw std::out_of_range("no aggregate for " + algo + "/" + metric);
  }

  std::int64_t final_step() const {
    std::int64_t s = 0;
    for (const auto& r : rows) s = std::max(s, r.step);
    return s;
  }
};

/// Nominal (evaluation) and perturbed (training) environments of a config.
struct ExperimentSetup {
  TabularMdp evaluation;
  TabularMdp training;
};

inline ExperimentSetup prepare(const ExperimentConfig& cfg) {
  TabularMdp nominal = cfg.environment.build();
  if (cfg.experiment == ExperimentKind::robust_q_vs_rarl) {
    // RARL learns on the nominal model; p only shapes the worst-case test.
    return {nominal, nominal};
  }
  TabularMdp training = apply_perturbation(nominal, {cfg.p_uniform, PerturbationMode::uniform});
  return {std::move(nominal), std::move(training)};
}

namespace detail {

inline std::uint64_t run_seed(const ExperimentConfig& cfg, std::int64_t seed_index) {
  return robust_rl::detail::derive_seed(cfg.seed, static_cast<std::uint64_t>(seed_index));
}

inline std::uint64_t eval_seed(std::uint64_t run, std::int64_t step) {
  return robust_rl::detail::derive_seed(run ^ 0x5eedULL, static_cast<std::uint64_t>(step));
}

struct Task {
  std::string algo;
  std::int64_t seed_index;
};

/// Greedy policy return on the nominal MDP, reported as reward (negated cost).
inline std::vector<Metric> nominal_return(const TabularMdp& nominal, const EvalSettings& eval,
                                          std::uint64_t run, std::int64_t step, const QTable& q) {
  const auto stats = monte_carlo_return(nominal, greedy_policy(q), eval.horizon, eval.n_rollouts,
                                        nominal.gamma(), eval_seed(run, step), Convention::max_reward);
  return {{"return", stats.mean}};
}

/// Return under the test protocol that jumps, with probability p, to the
/// state the learner itself values least.
inline std::vector<Metric> worst_case_return(const TabularMdp& nominal, const EvalSettings& eval,
                                             double p, std::uint64_t run, std::int64_t step,
                                             const QTable& q) {
  const ValueVector reward_value = -greedy_values(q);
  const TabularMdp test =
      apply_perturbation(nominal, {p, PerturbationMode::worst_case_vs_value}, reward_value);
  const auto stats = monte_carlo_return(test, greedy_policy(q), eval.horizon, eval.n_rollouts,
                                        nominal.gamma(), eval_seed(run, step), Convention::max_reward);
  return {{"worst_case_return", stats.mean}};
}

inline std::vector<ResultRow> run_task(const ExperimentConfig& cfg, const ExperimentSetup& setup,
                                       const FeatureMap* features, const Task& task) {
  const std::uint64_t run = run_seed(cfg, task.seed_index);
  const TabularMdp& nominal = setup.evaluation;
  const Policy uniform = Policy::uniform(nominal.n_states(), nominal.n_actions());
  TrainingTrace trace;

  switch (cfg.experiment) {
    case ExperimentKind::robust_q_vs_vanilla: {
      QLearningConfig qc;
      qc.radius = task.algo == "robust" ? cfg.radius : 0.0;
      qc.step_size = cfg.q.step_schedule();
      qc.total_steps = cfg.q.steps;
      qc.seed = run;
      TraceOptions<QTable> opts;
      opts.stride = cfg.eval.stride;
      opts.evaluate = [&](std::int64_t step, const QTable& q) {
        return nominal_return(nominal, cfg.eval, run, step, q);
      };
      trace = train_robust_q(setup.training, uniform, qc, opts).trace;
      break;
    }
    case ExperimentKind::robust_tdc_vs_vanilla: {
      TdcConfig tc;
      tc.alpha = cfg.tdc.alpha;
      tc.beta = cfg.tdc.beta;
      tc.rho = cfg.tdc.rho;
      tc.radius = task.algo == "robust" ? cfg.radius : 0.0;
      tc.projection_radius = cfg.tdc.projection_radius;
      tc.total_steps = cfg.tdc.steps;
      tc.seed = run;
      tc.output_rule = OutputRule::final_iterate;
      // Both learners are scored on the same smoothed robust objective J
      // (radius R), assembled on the nominal model.
      const MsprbeEvaluator objective(nominal, uniform, *features, {cfg.radius, cfg.tdc.rho},
                                      nominal.gamma());
      TraceOptions<Eigen::VectorXd> opts;
      opts.stride = cfg.eval.stride;
      opts.evaluate = [&](std::int64_t, const Eigen::VectorXd& theta) {
        return std::vector<Metric>{{"grad_norm_sq", objective.gradient(theta).squaredNorm()}};
      };
      trace = train_robust_tdc(setup.training, uniform, *features, tc, opts).trace;
      break;
    }
    case ExperimentKind::robust_q_vs_rarl: {
      auto evaluate = [&](std::int64_t step, const QTable& q) {
        return worst_case_return(nominal, cfg.eval, cfg.p_uniform, run, step, q);
      };
      if (task.algo == "rarl") {
        RarlConfig rc;
        rc.radius = cfg.radius;
        rc.iterations = cfg.rarl.iterations;
        rc.inner_steps = cfg.rarl.inner_steps;
        rc.alpha = cfg.rarl.alpha;
        rc.gamma = nominal.gamma();
        rc.seed = run;
        TraceOptions<QTable> opts;
        opts.stride = cfg.eval.stride;
        opts.evaluate = evaluate;
        trace = train_rarl(nominal, rc, opts).trace;
      } else {
        QLearningConfig qc;
        qc.radius = cfg.radius;
        qc.step_size = StepSchedule::constant(cfg.rarl.alpha);
        qc.total_steps = cfg.rarl.iterations * cfg.rarl.inner_steps;
        qc.seed = run;
        TraceOptions<QTable> opts;
        opts.stride = cfg.eval.stride * cfg.rarl.inner_steps;
        opts.evaluate = evaluate;
        trace = train_robust_q(nominal, uniform, qc, opts).trace;
      }
      break;
    }
  }

  std::vector<ResultRow> rows;
  for (const auto& snap : trace.snapshots)
    for (const auto& m : snap.metrics)
      rows.push_back({to_string(cfg.experiment), task.algo, task.seed_index, snap.step, m.name, m.value});
  return rows;
}

}  // namespace detail

/// Algorithms compared by an experiment, robust learner first.
inline std::vector<std::string> algorithms(ExperimentKind k) {
  if (k == ExperimentKind::robust_q_vs_rarl) return {"robust", "rarl"};
  return {"robust", "vanilla"};
}

/**
 * Runs every (algorithm, seed) pair on a bounded worker pool. Raw rows are
 * merged in (algorithm, seed) order, so output is independent of scheduling.
 */
inline ResultTable run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const ExperimentSetup setup = prepare(cfg);
  std::optional<FeatureMap> features;
  if (cfg.experiment == ExperimentKind::robust_tdc_vs_vanilla) {
    const Index sa = setup.evaluation.n_states() * setup.evaluation.n_actions();
    if (sa > kMaxExactStateActions)
      throw std::invalid_argument("config: |S||A| too large for exact gradient evaluation");
    features = random_features(setup.evaluation.n_states(), cfg.tdc.n_features, cfg.tdc.feature_seed);
  }

  std::vector<detail::Task> tasks;
  for (const auto& algo : algorithms(cfg.experiment))
    for (std::int64_t i = 0; i < cfg.n_seeds; ++i) tasks.push_back({algo, i});

  std::vector<std::vector<ResultRow>> results(tasks.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        results[i] = detail::run_task(cfg, setup, features ? &*features : nullptr, tasks[i]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  unsigned n_workers = cfg.workers > 0 ? static_cast<unsigned>(cfg.workers)
                                       : std::max(1u, std::thread::hardware_concurrency());
  n_workers = std::min<unsigned>(n_workers, static_cast<unsigned>(tasks.size()));
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 1; w < n_workers; ++w) pool.emplace_back(worker);
    worker();
  }
  if (failure) std::rethrow_exception(failure);

  ResultTable table;
  for (auto& r : results) table.rows.insert(table.rows.end(), r.begin(), r.end());
  return table;
}

// ---------------------------------------------------------------------------
// Output

inline constexpr const char* kCsvHeader = "experiment,algo,seed,step,metric,value";

/// Raw rows as CSV; refuses to create a file for an empty table.
inline void emit_csv(const ResultTable& table, const std::filesystem::path& path) {
  if (table.rows.empty()) throw std::invalid_argument("emit_csv: empty result table");
  std::ostringstream os;
  os << kCsvHeader << '\n';
  for (const auto& r : table.rows)
    os << r.experiment << ',' << r.algo << ',' << r.seed << ',' << r.step << ',' << r.metric << ','
       << io::format_real(r.value, 12) << '\n';
  io::write_text_file(path, os.str());
}

/// Aggregate rows in the raw schema; the seed column holds median, p5 or p95.
inline void emit_aggregate_csv(const ResultTable& table, const std::filesystem::path& path) {
  if (table.rows.empty()) throw std::invalid_argument("emit_aggregate_csv: empty result table");
  std::ostringstream os;
  os << kCsvHeader << '\n';
  for (const auto& a : table.aggregates())
    os << a.experiment << ',' << a.algo << ',' << a.stat << ',' << a.step << ',' << a.metric << ','
       << io::format_real(a.value, 12) << '\n';
  io::write_text_file(path, os.str());
}

namespace detail {
inline std::string fixed(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}
}  // namespace detail

/// Static plot of one metric: a median polyline and a shaded p5-p95 band per
/// algorithm, against training step.
inline void emit_svg(const ResultTable& table, const std::string& metric,
                     const std::filesystem::path& path) {
  struct Series {
    std::vector<std::int64_t> steps;
    std::vector<double> median, p5, p95;
  };
  std::map<std::string, Series> series;
  for (const auto& a : table.aggregates()) {
    if (a.metric != metric) continue;
    auto& s = series[a.algo];
    if (s.steps.empty() || s.steps.back() != a.step) s.steps.push_back(a.step);
    if (a.stat == "median") s.median.push_back(a.value);
    if (a.stat == "p5") s.p5.push_back(a.value);
    if (a.stat == "p95") s.p95.push_back(a.value);
  }
  if (series.empty()) throw std::invalid_argument("emit_svg: no rows for metric '" + metric + "'");

  double x_lo = 1e300, x_hi = -1e300, y_lo = 1e300, y_hi = -1e300;
  for (const auto& [_, s] : series) {
    x_lo = std::min(x_lo, static_cast<double>(s.steps.front()));
    x_hi = std::max(x_hi, static_cast<double>(s.steps.back()));
    y_lo = std::min(y_lo, *std::min_element(s.p5.begin(), s.p5.end()));
    y_hi = std::max(y_hi, *std::max_element(s.p95.begin(), s.p95.end()));
  }
  if (x_hi <= x_lo) x_hi = x_lo + 1.0;
  if (y_hi <= y_lo) {
    y_lo -= 1.0;
    y_hi += 1.0;
  }
  const double pad = 0.05 * (y_hi - y_lo);
  y_lo -= pad;
  y_hi += pad;

  constexpr double kW = 720, kH = 440, kLeft = 80, kRight = 20, kTop = 40, kBottom = 50;
  auto px = [&](double x) { return kLeft + (x - x_lo) / (x_hi - x_lo) * (kW - kLeft - kRight); };
  auto py = [&](double y) { return kTop + (y_hi - y) / (y_hi - y_lo) * (kH - kTop - kBottom); };
  const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e"};

  using detail::fixed;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << fixed(kW / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
     << metric << "</text>\n";
  os << "<line x1=\"" << fixed(kLeft) << "\" y1=\"" << fixed(kH - kBottom) << "\" x2=\""
     << fixed(kW - kRight) << "\" y2=\"" << fixed(kH - kBottom) << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << fixed(kLeft) << "\" y1=\"" << fixed(kTop) << "\" x2=\"" << fixed(kLeft)
     << "\" y2=\"" << fixed(kH - kBottom) << "\" stroke=\"black\"/>\n";
  for (double y : {y_lo, (y_lo + y_hi) / 2, y_hi})
    os << "<text x=\"" << fixed(kLeft - 6) << "\" y=\"" << fixed(py(y) + 4)
       << "\" text-anchor=\"end\">" << io::format_real(y, 4) << "</text>\n";
  for (double x : {x_lo, x_hi})
    os << "<text x=\"" << fixed(px(x)) << "\" y=\"" << fixed(kH - kBottom + 18)
       << "\" text-anchor=\"middle\">" << io::format_real(x, 6) << "</text>\n";
  os << "<text x=\"" << fixed(kW / 2) << "\" y=\"" << fixed(kH - 8)
     << "\" text-anchor=\"middle\">step</text>\n";

  std::size_t k = 0;
  for (const auto& [algo, s] : series) {
    const char* color = palette[k % 4];
    os << "<polygon fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
    for (std::size_t i = 0; i < s.steps.size(); ++i)
      os << fixed(px(static_cast<double>(s.steps[i]))) << ',' << fixed(py(s.p95[i])) << ' ';
    for (std::size_t i = s.steps.size(); i-- > 0;)
      os << fixed(px(static_cast<double>(s.steps[i]))) << ',' << fixed(py(s.p5[i])) << ' ';
    os << "\"/>\n";
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < s.steps.size(); ++i)
      os << fixed(px(static_cast<double>(s.steps[i]))) << ',' << fixed(py(s.median[i])) << ' ';
    os << "\"/>\n";
    os << "<text x=\"" << fixed(kW - kRight - 100) << "\" y=\"" << fixed(kTop + 16 * (k + 1))
       << "\" fill=\"" << color << "\">" << algo << "</text>\n";
    ++k;
  }
  os << "</svg>\n";
  io::write_text_file(path, os.str());
}

/// Writes results.csv, aggregate.csv and one SVG per metric into `dir`.
inline void write_outputs(const ResultTable& table, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
  emit_csv(table, dir / "results.csv");
  emit_aggregate_csv(table, dir / "aggregate.csv");
  for (const auto& m : table.metrics()) emit_svg(table, m, dir / (m + ".svg"));
}

}  // namespace robust_rl::bench
