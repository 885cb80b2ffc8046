#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "relustab/conic/sdp_problem.hpp"
#include "relustab/conic/sym_matrix.hpp"
#include "relustab/io/system_json.hpp"
#include "relustab/system/relu_system.hpp"

namespace relustab {

inline constexpr double kHankelTol = 1e-5;
inline constexpr int kDefaultMaxOrder = 4;

/// Order-N block-Hankel relaxation. Block (i, j) of the assembled matrix is
/// the shared variable ℋ_{i+j}.
struct HankelRelaxation {
  int order = 1;
  int block_dim = 0;
  SdpProblem problem;
  std::vector<int> blocks;  // PSD block index of ℋ_0 … ℋ_{2(N−1)}
  ExprMatrix assembled;     // N(n+m) square, built from `blocks`
};

HankelRelaxation build_relaxation(const ReluSystem& sys, int order);

/// Solved values of a relaxation.
struct HankelSolution {
  int order = 1;
  int block_dim = 0;
  std::vector<SymMatrix> blocks;
  SymMatrix assembled;
};

HankelSolution hankel_values(const HankelRelaxation& rel, const SdpSolution& sol);

/// (x, w, λ) from a rank-1 assembled matrix, or none.
std::optional<RayWitness> extract_witness_from_hankel(const ReluSystem& sys, const HankelSolution& h,
                                                      double rank_tol);

enum class OrderStatus { kFeasible, kInfeasible, kNumericalFailure };
const char* to_string(OrderStatus s);

struct OrderResult {
  int order = 1;
  OrderStatus status = OrderStatus::kNumericalFailure;
  int rank_estimate = -1;
  Eigen::VectorXd eigenvalue_profile;
  std::optional<RayWitness> witness;
  double shift_residual = 0.0;  // max |[A B]ℋ_i − I_u ℋ_{i+1}|
  double objective = 0.0;
  double seconds = 0.0;
  bool anomaly = false;  // Feasible although a lower order was Infeasible
};

struct HierarchyOptions {
  int max_order = kDefaultMaxOrder;
  double rank_tol = 1e-5;
  bool stop_early = true;  // at first witness or first Infeasible
  SolverSettings settings;
};

OrderResult solve_order(const ReluSystem& sys, int order, double rank_tol, const SolverSettings& settings = {});

std::vector<OrderResult> run_hierarchy(const ReluSystem& sys, const HierarchyOptions& opts = {});

Json hierarchy_to_json(const std::vector<OrderResult>& results);

}  // namespace relustab
