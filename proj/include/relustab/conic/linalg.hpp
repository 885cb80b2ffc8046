#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "relustab/conic/sym_matrix.hpp"

namespace relustab {

/// Relative threshold used for every rank decision unless overridden.
inline constexpr double kDefaultRankTol = 1e-5;

class RankError : public std::runtime_error {
 public:
  explicit RankError(const std::string& what) : std::runtime_error(what) {}
};

/// Largest singular value.
double spectral_norm(const Eigen::MatrixXd& m);

/// Number of eigenvalues with |λ_i| > rel_tol · max_j |λ_j|. Zero for the
/// zero matrix.
int numerical_rank(const SymMatrix& m, double rel_tol = kDefaultRankTol);

/// Returns v = sqrt(λ_1) u_1 for the top eigenpair, so that M ≈ v vᵀ.
/// Throws RankError unless M has numerical rank one and is PSD within
/// rel_tol (relative to λ_1). The sign of v is not normalized.
Eigen::VectorXd rank_one_factor(const SymMatrix& m, double rel_tol = kDefaultRankTol);

/// Eigenvalues sorted by decreasing magnitude, truncated to `count`.
Eigen::VectorXd eigenvalue_profile(const SymMatrix& m, int count);

}  // namespace relustab
