#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "relustab/io/system_json.hpp"
#include "relustab/system/relu_system.hpp"

namespace relustab {

inline constexpr int kDefaultMCap = 16;
inline constexpr double kOracleTol = 1e-9;

class EnumerationCapExceeded : public std::runtime_error {
 public:
  explicit EnumerationCapExceeded(const std::string& what) : std::runtime_error(what) {}
};

/// Indices (0-based, ascending) where w may be nonzero.
struct ActivationPattern {
  std::vector<int> J;
  bool contains(int i) const;
};

struct CandidateRay {
  ActivationPattern pattern;
  double lambda = 0.0;
  Eigen::VectorXd x;  // ‖(x, w)‖ = 1
  Eigen::VectorXd w;
  int sign = 1;       // which of ±(x, w) this entry is
  bool sign_feasible = false;
  bool lambda_nonneg = false;
  double eig_residual = 0.0;  // ‖(A + B F_J C)x − λx‖

  bool feasible() const { return sign_feasible && lambda_nonneg; }
};

struct PatternDiagnostics {
  ActivationPattern pattern;
  int real_eigenvalues = 0;
  int complex_eigenvalues = 0;
  bool distinct = true;            // no repeated eigenvalues
  bool zero_eigenvalue = false;
  bool near_zero_first_coord = false;
  bool degenerate() const { return !distinct || zero_eigenvalue || near_zero_first_coord; }
};

struct OracleResult {
  std::vector<CandidateRay> candidates;  // canonical order: |J|, J, λ, sign
  std::vector<PatternDiagnostics> diagnostics;
  std::vector<CandidateRay> feasible() const;
};

Eigen::MatrixXd build_FJ(const ReluSystem& sys, const ActivationPattern& pattern);

OracleResult enumerate_rays(const ReluSystem& sys, double tol = kOracleTol, int m_cap = kDefaultMCap);

struct MinLambda {
  double lambda = 0.0;
  RayWitness witness;  // ‖x‖ = 1
};

std::optional<MinLambda> min_unstable_lambda(const ReluSystem& sys, double tol = kOracleTol,
                                             int m_cap = kDefaultMCap);
std::optional<MinLambda> min_unstable_lambda(const OracleResult& result);

struct RayMatch {
  bool found = false;
  double xw_distance = 0.0;   // after renormalizing both to ‖(x, w)‖ = 1, best sign
  double lambda_distance = 0.0;
  int candidate = -1;         // index into OracleResult::candidates
};

/// Closest feasible oracle ray to `wit`. `found` holds when the tolerances
/// are met.
RayMatch match_oracle_ray(const RayWitness& wit, const OracleResult& result, double xw_tol = 1e-4,
                          double lambda_tol = 1e-5);

RayWitness to_witness(const CandidateRay& c);

Json oracle_report_json(const OracleResult& result);

}  // namespace relustab
