#pragma once

#include <optional>

#include <Eigen/Dense>

#include "relustab/conic/sdp_problem.hpp"
#include "relustab/conic/sym_matrix.hpp"
#include "relustab/io/system_json.hpp"
#include "relustab/system/relu_system.hpp"

namespace relustab {

class SolverFailure : public std::runtime_error {
 public:
  explicit SolverFailure(const std::string& what) : std::runtime_error(what) {}
};

/// Π = Eᵀ(Q + 𝒥(J))E with Q ∈ NN^{2m} and J a free diagonal.
struct NNMultiplier {
  Eigen::MatrixXd Q;  // 2m × 2m, symmetric, entrywise ≥ 0
  Eigen::VectorXd J;  // m
};

/// E = [−I, I; 0, I] (2m × 2m).
Eigen::MatrixXd structure_E(int m);
SymMatrix assemble_multiplier(const NNMultiplier& mult);

/// Quadratic form of Π at (q, p): [q; p]ᵀ Π [q; p].
double multiplier_form(const SymMatrix& pi, const Eigen::VectorXd& q, const Eigen::VectorXd& p);

/// Left side of the stability LMI:
/// [PA + AᵀP, PB; BᵀP, 0] + Mᵀ Π M with M = [C, D; 0, I].
Eigen::MatrixXd primal_lmi_lhs(const ReluSystem& sys, const Eigen::MatrixXd& P, const SymMatrix& pi);

double default_eps_margin(const ReluSystem& sys);

struct PrimalLmi {
  SdpProblem problem;
  ExprMatrix P;        // eps·I + P̃
  ExprMatrix Q;        // entries are nonneg scalars
  std::vector<LinearExpr> J;
  LinearExpr t;
  double eps_margin = 0.0;
};

/// min t  s.t.  LHS ⪯ t·I,  P ⪰ eps·I,  trace(P) = 1,  Q ≥ 0.
PrimalLmi build_primal_lmi(const ReluSystem& sys, double eps_margin);

struct PrimalCertificate {
  Eigen::MatrixXd P;
  NNMultiplier multiplier;
  double margin = 0.0;     // −λ_max(LHS)
  double margin_P = 0.0;   // λ_min(P)
  double min_Q = 0.0;
};

struct PrimalOutcome {
  SolveStatus status = SolveStatus::kNumericalFailure;
  double t = 0.0;
  bool strictly_feasible = false;  // t < −10 feas_tol
  bool inconclusive = false;       // |t| ≤ 10 feas_tol
  std::optional<PrimalCertificate> certificate;  // re-verified
  double seconds = 0.0;
};

PrimalOutcome solve_primal(const ReluSystem& sys, double eps_margin, const SolverSettings& settings = {});

/// Certificate re-verified by dense eigendecomposition, or none.
std::optional<PrimalCertificate> check_stability(const ReluSystem& sys);

/// Independent re-check of a candidate certificate.
bool verify_certificate(const ReluSystem& sys, PrimalCertificate& cert);

struct DualLmi {
  SdpProblem problem;
  int h_block = 0;
};

/// H ⪰ 0, He{A H11 + B H12ᵀ} ⪰ 0, [−C, I − D; 0, I] H [·]ᵀ ≥ 0 entrywise,
/// diag(−C H12 + (I − D) H22) = 0, trace(H11) = 1, min trace(H).
DualLmi build_dual_lmi(const ReluSystem& sys);

struct DualSolutionH {
  SymMatrix H;
  int rank_estimate = 0;
  int n = 0;
  Eigen::MatrixXd H11() const { return H.matrix().topLeftCorner(n, n); }
  Eigen::MatrixXd H12() const { return H.matrix().topRightCorner(n, H.dim() - n); }
  Eigen::MatrixXd H22() const { return H.matrix().bottomRightCorner(H.dim() - n, H.dim() - n); }
};

struct DualOutcome {
  SolveStatus status = SolveStatus::kNumericalFailure;
  std::optional<DualSolutionH> solution;
  Eigen::VectorXd eigenvalue_profile;  // top 5 by magnitude
  std::optional<RayWitness> witness;
  double seconds = 0.0;
};

DualOutcome solve_dual(const ReluSystem& sys, double rank_tol = 1e-5, const SolverSettings& settings = {});

/// Chooses the sign of (x, w) maximizing min(w − (Cx + Dw); w) and sets
/// λ = xᵀ(Ax + Bw)/xᵀx. Result scaled to ‖x‖ = 1.
RayWitness orient_witness(const ReluSystem& sys, const Eigen::VectorXd& x, const Eigen::VectorXd& w);

/// Clamps λ ∈ [−τ_sign, τ_sign] to 0, rejects λ < −τ_sign and anything that
/// fails validate_witness at 1e-6.
std::optional<RayWitness> accept_witness(const ReluSystem& sys, RayWitness wit);

inline constexpr double kPolishSupport = 1e-4;  // w_i above this (relative) defines J
inline constexpr double kPolishRadius = 1e-3;

/// Refines an approximate ray on the activation pattern read off w, by
/// inverse iteration on A + B F_J C. None if the result drifts more than
/// kPolishRadius from the input (after ‖(x, w)‖ = 1 normalization) or in λ.
std::optional<RayWitness> polish_witness(const ReluSystem& sys, const RayWitness& wit);

/// Rank-1 factor, orientation, λ by least squares; if that misses the 1e-6
/// validation, one polish on the pattern of w and validate again.
std::optional<RayWitness> extract_witness(const ReluSystem& sys, const DualSolutionH& H, double rank_tol);

Json certificate_to_json(const PrimalCertificate& cert);
Json primal_to_json(const PrimalOutcome& out);
Json dual_to_json(const DualOutcome& out);

}  // namespace relustab
