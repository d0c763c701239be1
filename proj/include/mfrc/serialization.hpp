/*
 * Copyright 2026 The MFRC Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mfrc/error.hpp"
#include "mfrc/model.hpp"

namespace mfrc {

inline constexpr int kModelFormatVersion = 1;

namespace detail {

/// Row-major flattening of a k x cols matrix.
inline std::vector<double> row_major(const Eigen::MatrixXd& m) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
  return out;
}

inline Eigen::MatrixXd from_row_major(const std::vector<double>& v, Eigen::Index rows,
                                      Eigen::Index cols, const char* name) {
  if (v.size() != static_cast<std::size_t>(rows * cols))
    throw FormatError(std::string("model field ") + name + " has " + std::to_string(v.size()) +
                      " entries, expected " + std::to_string(rows * cols));
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = v[static_cast<std::size_t>(r * cols + c)];
  return m;
}

inline Eigen::VectorXd to_vector(const std::vector<double>& v, Eigen::Index n, const char* name) {
  if (v.size() != static_cast<std::size_t>(n))
    throw FormatError(std::string("model field ") + name + " has " + std::to_string(v.size()) +
                      " entries, expected " + std::to_string(n));
  return Eigen::Map<const Eigen::VectorXd>(v.data(), n);
}

}  // namespace detail

/// JSON snapshot. nlohmann/json prints doubles in shortest round-trip form,
/// so every value reloads bit-exactly.
inline nlohmann::json to_json(const FactorModel& model) {
  nlohmann::json j;
  j["format_version"] = kModelFormatVersion;
  j["kind"] = to_string(model.kind);
  j["k"] = model.k;
  j["m"] = model.num_users();
  j["n"] = model.num_items();
  j["scale"] = {{"min", model.scale.min}, {"max", model.scale.max}};
  j["fallback"] = model.fallback;
  j["seed"] = model.seed;
  j["P"] = detail::row_major(model.P);
  j["Q"] = detail::row_major(model.Q);
  j["b_u"] = std::vector<double>(model.user_bias.begin(), model.user_bias.end());
  j["b_i"] = std::vector<double>(model.item_bias.begin(), model.item_bias.end());
  j["user_seen"] = model.user_seen;
  j["item_seen"] = model.item_seen;
  return j;
}

inline FactorModel model_from_json(const nlohmann::json& j) {
  try {
    const int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion)
      throw VersionError("unsupported model format_version " + std::to_string(version) +
                         " (expected " + std::to_string(kModelFormatVersion) + ")");
    FactorModel model;
    model.kind = parse_model_kind(j.at("kind").get<std::string>());
    model.k = j.at("k").get<int>();
    const auto m = j.at("m").get<Eigen::Index>();
    const auto n = j.at("n").get<Eigen::Index>();
    if (model.k < 1 || m < 0 || n < 0) throw FormatError("model dimensions are invalid");
    model.scale = {j.at("scale").at("min").get<double>(), j.at("scale").at("max").get<double>()};
    model.fallback = j.at("fallback").get<double>();
    model.seed = j.at("seed").get<std::uint64_t>();
    model.P = detail::from_row_major(j.at("P").get<std::vector<double>>(), model.k, m, "P");
    model.Q = detail::from_row_major(j.at("Q").get<std::vector<double>>(), model.k, n, "Q");
    model.user_bias = detail::to_vector(j.at("b_u").get<std::vector<double>>(), m, "b_u");
    model.item_bias = detail::to_vector(j.at("b_i").get<std::vector<double>>(), n, "b_i");
    model.user_seen = j.at("user_seen").get<std::vector<std::uint8_t>>();
    model.item_seen = j.at("item_seen").get<std::vector<std::uint8_t>>();
    if (model.user_seen.size() != static_cast<std::size_t>(m) ||
        model.item_seen.size() != static_cast<std::size_t>(n))
      throw FormatError("model seen masks do not match dimensions");
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("corrupt model snapshot: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("corrupt model snapshot: ") + e.what());
  }
}

inline void save_model(const FactorModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write model to '" + path + "'");
  out << to_json(model).dump() << '\n';
  if (!out) throw IoError("write to '" + path + "' failed");
}

inline FactorModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model '" + path + "'");
  const std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("corrupt model snapshot '" + path + "': " + e.what());
  }
  return model_from_json(j);
}

}  // namespace mfrc
