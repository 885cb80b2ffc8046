#include <gtest/gtest.h>

#include "relustab/conic/linalg.hpp"
#include "relustab/conic/sdp_problem.hpp"
#include "relustab/conic/sym_matrix.hpp"

using namespace relustab;

TEST(Sdp, ScalarEquality) {
  SdpProblem p;
  const int b = p.add_psd_block("x", 1);
  const LinearExpr x = p.psd_matrix(b)(0, 0);
  p.add_equality(x, 2.0);
  p.set_objective(x);
  const SdpSolution s = solve_sdp(p);
  ASSERT_EQ(s.status, SolveStatus::kOptimal);
  EXPECT_NEAR(s.objective_value, 2.0, 1e-7);
}

TEST(Sdp, ScalarInfeasible) {
  SdpProblem p;
  const int b = p.add_psd_block("x", 1);
  const LinearExpr x = p.psd_matrix(b)(0, 0);
  p.add_equality(x, -1.0);
  p.set_objective(x);
  EXPECT_EQ(solve_sdp(p).status, SolveStatus::kInfeasible);
}

TEST(Sdp, FixedTwoByTwo) {
  SdpProblem p;
  const int b = p.add_psd_block("X", 2);
  const ExprMatrix X = p.psd_matrix(b);
  p.add_equality(X(0, 0), 1.0);
  p.add_equality(X(1, 1), 1.0);
  p.add_equality(X(1, 0), 0.9);
  p.set_objective(X(0, 0) + X(1, 1));
  const SdpSolution s = solve_sdp(p);
  ASSERT_EQ(s.status, SolveStatus::kOptimal);
  EXPECT_NEAR(s.objective_value, 2.0, 1e-7);
  EXPECT_NEAR(s.psd_values[0](0, 1), 0.9, 1e-7);
}

TEST(Sdp, MinEigenvalueOverSpectraplex) {
  Eigen::MatrixXd c(3, 3);
  c << 2, -1, 0.5, -1, 3, 0.2, 0.5, 0.2, 1;
  SdpProblem p;
  const int b = p.add_psd_block("X", 3);
  const ExprMatrix X = p.psd_matrix(b);
  LinearExpr tr, obj;
  for (int i = 0; i < 3; ++i) {
    tr += X(i, i);
    for (int j = 0; j < 3; ++j) obj += c(i, j) * X(i, j);
  }
  p.add_equality(tr, 1.0);
  p.set_objective(obj);
  const SdpSolution s = solve_sdp(p);
  ASSERT_EQ(s.status, SolveStatus::kOptimal);
  EXPECT_NEAR(s.objective_value, SymMatrix(c).min_eigenvalue(), 1e-8);
}

TEST(Sdp, LinearProgramWithFreeVariable) {
  // min x0 + 2 x1 - t  s.t. x0 + x1 = 1 + t, t = 0.5, x >= 0
  SdpProblem p;
  const int x = p.add_nonneg(2);
  const int t = p.add_free(1);
  p.add_equality(p.nonneg(x) + p.nonneg(x + 1) - p.free(t), 1.0);
  p.add_equality(p.free(t), 0.5);
  p.set_objective(p.nonneg(x) + 2.0 * p.nonneg(x + 1) - p.free(t));
  const SdpSolution s = solve_sdp(p);
  ASSERT_EQ(s.status, SolveStatus::kOptimal);
  EXPECT_NEAR(s.objective_value, 1.0, 1e-7);
  EXPECT_NEAR(s.nonneg_values(0), 1.5, 1e-6);
}

TEST(Sdp, UnboundedFreeDirection) {
  SdpProblem p;
  const int x = p.add_nonneg(1);
  const int t = p.add_free(1);
  p.add_equality(p.nonneg(x) - p.free(t), 1.0);
  p.set_objective(-1.0 * p.free(t));
  EXPECT_EQ(solve_sdp(p).status, SolveStatus::kUnbounded);
}

TEST(Sdp, RedundantRowsAreTolerated) {
  SdpProblem p;
  const int b = p.add_psd_block("X", 2);
  const ExprMatrix X = p.psd_matrix(b);
  p.add_equality(X(0, 0) + X(1, 1), 2.0);
  p.add_equality(2.0 * X(0, 0) + 2.0 * X(1, 1), 4.0);
  p.set_objective(X(0, 0) - X(1, 0));
  const SdpSolution s = solve_sdp(p);
  ASSERT_EQ(s.status, SolveStatus::kOptimal);
  // min X00 - X10 over trace 2: eigen-min of [[1,-0.5],[-0.5,0]] times 2.
  Eigen::MatrixXd c(2, 2);
  c << 1, -0.5, -0.5, 0;
  EXPECT_NEAR(s.objective_value, 2.0 * SymMatrix(c).min_eigenvalue(), 1e-7);
}

TEST(Sdp, InconsistentRedundantRows) {
  SdpProblem p;
  const int b = p.add_psd_block("X", 2);
  const ExprMatrix X = p.psd_matrix(b);
  p.add_equality(X(0, 0) + X(1, 1), 2.0);
  p.add_equality(2.0 * X(0, 0) + 2.0 * X(1, 1), 5.0);
  EXPECT_EQ(solve_sdp(p).status, SolveStatus::kInfeasible);
}

TEST(Sdp, FeasibilityProblemReportsFeasible) {
  SdpProblem p;
  const int b = p.add_psd_block("X", 2);
  const ExprMatrix X = p.psd_matrix(b);
  p.add_equality(X(0, 0), 1.0);
  const SdpSolution s = solve_sdp(p);
  EXPECT_EQ(s.status, SolveStatus::kFeasible);
  EXPECT_GE(SymMatrix(s.psd_values[0]).min_eigenvalue(), -1e-8);
}

TEST(Sdp, LyapunovInfeasibleForUnstableMatrix) {
  // P ⪰ 0.1 I, trace P = 1, -(AᵀP + PA) ⪰ 0 has no solution when A has a positive eigenvalue.
  Eigen::MatrixXd a(2, 2);
  a << 0.1, 1, 0, -1;
  SdpProblem p;
  const int b = p.add_psd_block("P", 2);
  const ExprMatrix P = p.psd_matrix(b);
  p.add_equality(P(0, 0) + P(1, 1), 1.0);
  p.constrain_psd("floor", P - ExprMatrix::Constant(0.1 * Eigen::MatrixXd::Identity(2, 2)));
  p.constrain_psd("lyap", ExprMatrix::Constant(Eigen::MatrixXd::Zero(2, 2)) -
                              (a.transpose() * P + P * a));
  EXPECT_EQ(solve_sdp(p).status, SolveStatus::kInfeasible);
}

TEST(Sdp, BadReferenceRejected) {
  SdpProblem p;
  p.add_psd_block("X", 2);
  EXPECT_THROW(p.add_equality(LinearExpr::Of(VarRef::Psd(3, 0, 0)), 1.0), std::invalid_argument);
  EXPECT_THROW(p.add_equality(LinearExpr::Of(VarRef::Nonneg(0)), 1.0), std::invalid_argument);
}

TEST(Linalg, SpectralNormAndRank) {
  Eigen::MatrixXd m(2, 2);
  m << 3, 0, 0, -4;
  EXPECT_NEAR(spectral_norm(m), 4.0, 1e-12);
  EXPECT_THROW(spectral_norm(Eigen::MatrixXd()), std::invalid_argument);
  Eigen::VectorXd v(3);
  v << 1, -2, 0.5;
  const SymMatrix o = SymMatrix::Outer(v);
  EXPECT_EQ(numerical_rank(o), 1);
  const Eigen::VectorXd f = rank_one_factor(o);
  EXPECT_NEAR(std::abs(f.dot(v)), v.squaredNorm(), 1e-10);
  EXPECT_THROW(rank_one_factor(SymMatrix::Identity(2)), RankError);
}

TEST(Linalg, SymMatrixRejectsNonSquare) {
  EXPECT_THROW(SymMatrix(Eigen::MatrixXd(2, 3)), std::invalid_argument);
}
