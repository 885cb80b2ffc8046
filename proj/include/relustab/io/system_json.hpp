#pragma once

#include <string>

#include <Eigen/Dense>

#include "relustab/system/relu_system.hpp"
#include "json.hpp"

namespace relustab {

using Json = nlohmann::ordered_json;

class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

Eigen::MatrixXd matrix_from_json(const Json& j, const std::string& name);
Eigen::VectorXd vector_from_json(const Json& j, const std::string& name);
Json to_json(const Eigen::MatrixXd& m);
Json to_json(const Eigen::VectorXd& v);

/// {"A": [[...]], "B": ..., "C": ..., "D": ...}. Throws InputError on
/// malformed input, InvalidSystem on inconsistent matrices.
ReluSystem system_from_json(const Json& j);
ReluSystem load_system(const std::string& path);
Json system_to_json(const ReluSystem& sys);

Json witness_to_json(const RayWitness& w);
Json report_to_json(const ValidationReport& r);

/// Serializes with 17 significant digits.
std::string dump_json(const Json& j);

}  // namespace relustab
