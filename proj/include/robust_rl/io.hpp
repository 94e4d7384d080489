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
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "robust_rl/mdp.hpp"
#include "robust_rl/trace.hpp"

// JSON documents:
//   MDP:    {"n_states", "n_actions", "gamma", "cost": [[..]], "kernel": [[[..]]]}
//           with kernel[s][a] the next-state distribution, in that field order.
//   Matrix: {"rows", "cols", "data": [[..]]} for QTables, value vectors (1 x n),
//           feature maps and policy tables.
// Reals are written with 17 significant digits so files round-trip exactly.

namespace robust_rl::io {

/// printf-style %.{digits}g; throws on non-finite input.
inline std::string format_real(double x, int digits) {
  if (!std::isfinite(x)) throw std::invalid_argument("format_real: non-finite value");
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

namespace detail {

inline void write_row(std::ostream& os, const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  os << '[';
  for (Index i = 0; i < row.size(); ++i) {
    if (i) os << ", ";
    os << format_real(row(i), 17);
  }
  os << ']';
}

inline Eigen::MatrixXd parse_matrix_rows(const nlohmann::json& data, const char* what) {
  if (!data.is_array() || data.empty() || !data[0].is_array())
    throw std::invalid_argument(std::string(what) + ": expected a non-empty array of rows");
  const auto rows = static_cast<Index>(data.size());
  const auto cols = static_cast<Index>(data[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const auto& row = data[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols)
      throw std::invalid_argument(std::string(what) + ": ragged rows");
    for (Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

}  // namespace detail

inline std::string mdp_to_json(const TabularMdp& mdp) {
  std::ostringstream os;
  os << "{\n  \"n_states\": " << mdp.n_states() << ",\n  \"n_actions\": " << mdp.n_actions()
     << ",\n  \"gamma\": " << format_real(mdp.gamma(), 17) << ",\n  \"cost\": [";
  for (Index s = 0; s < mdp.n_states(); ++s) {
    os << (s ? ",\n    " : "\n    ");
    detail::write_row(os, mdp.cost().row(s));
  }
  os << "\n  ],\n  \"kernel\": [";
  for (Index s = 0; s < mdp.n_states(); ++s) {
    os << (s ? ",\n    [" : "\n    [");
    for (Index a = 0; a < mdp.n_actions(); ++a) {
      if (a) os << ",\n     ";
      detail::write_row(os, mdp.transition(s, a));
    }
    os << ']';
  }
  os << "\n  ]\n}\n";
  return os.str();
}

inline TabularMdp mdp_from_json(const nlohmann::json& j) {
  try {
    const auto ns = j.at("n_states").get<Index>();
    const auto na = j.at("n_actions").get<Index>();
    const double gamma = j.at("gamma").get<double>();
    Eigen::MatrixXd cost = detail::parse_matrix_rows(j.at("cost"), "mdp cost");
    const auto& kj = j.at("kernel");
    if (!kj.is_array() || static_cast<Index>(kj.size()) != ns)
      throw std::invalid_argument("mdp kernel: expected n_states entries");
    Eigen::MatrixXd kernel(ns * na, ns);
    for (Index s = 0; s < ns; ++s) {
      Eigen::MatrixXd rows = detail::parse_matrix_rows(kj[static_cast<std::size_t>(s)], "mdp kernel");
      if (rows.rows() != na || rows.cols() != ns)
        throw std::invalid_argument("mdp kernel: expected n_actions rows of length n_states");
      kernel.middleRows(s * na, na) = rows;
    }
    return TabularMdp(ns, na, std::move(kernel), std::move(cost), gamma);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("mdp json: ") + e.what());
  }
}

inline TabularMdp mdp_from_json(const std::string& text) {
  return mdp_from_json(nlohmann::json::parse(text));
}

inline std::string matrix_to_json(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  std::ostringstream os;
  os << "{\n  \"rows\": " << m.rows() << ",\n  \"cols\": " << m.cols() << ",\n  \"data\": [";
  for (Index r = 0; r < m.rows(); ++r) {
    os << (r ? ",\n    " : "\n    ");
    detail::write_row(os, m.row(r));
  }
  os << "\n  ]\n}\n";
  return os.str();
}

inline std::string vector_to_json(const Eigen::VectorXd& v) { return matrix_to_json(v.transpose()); }

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  try {
    Eigen::MatrixXd m = detail::parse_matrix_rows(j.at("data"), "matrix");
    if (j.contains("rows") && j.at("rows").get<Index>() != m.rows())
      throw std::invalid_argument("matrix: 'rows' disagrees with data");
    if (j.contains("cols") && j.at("cols").get<Index>() != m.cols())
      throw std::invalid_argument("matrix: 'cols' disagrees with data");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("matrix json: ") + e.what());
  }
}

/// Accepts a 1 x n or n x 1 matrix container, or a bare JSON array.
inline Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  if (j.is_array()) {
    Eigen::VectorXd v(static_cast<Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = j[i].get<double>();
    return v;
  }
  const Eigen::MatrixXd m = matrix_from_json(j);
  if (m.rows() == 1) return m.row(0).transpose();
  if (m.cols() == 1) return m.col(0);
  throw std::invalid_argument("vector json: expected a single row or column");
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  try {
    return nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

inline TabularMdp load_mdp(const std::filesystem::path& path) {
  return mdp_from_json(read_json_file(path));
}

inline void save_mdp(const TabularMdp& mdp, const std::filesystem::path& path) {
  write_text_file(path, mdp_to_json(mdp));
}

/// Trace as CSV with columns step,seed,metric_name,value (12 significant digits).
inline void write_trace_csv(std::ostream& os, const TrainingTrace& trace, std::uint64_t seed,
                            bool header = true) {
  if (header) os << "step,seed,metric_name,value\n";
  for (const auto& snap : trace.snapshots)
    for (const auto& m : snap.metrics)
      os << snap.step << ',' << seed << ',' << m.name << ',' << format_real(m.value, 12) << '\n';
}

}  // namespace robust_rl::io
