#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "relustab/certificates/lmi.hpp"
#include "relustab/conic/linalg.hpp"
#include "relustab/oracle/enumeration.hpp"

using namespace relustab;

namespace {

ReluSystem stable_linear() {
  return ReluSystem(-Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Zero(2, 1), Eigen::MatrixXd::Zero(1, 2),
                    Eigen::MatrixXd::Zero(1, 1));
}

ReluSystem unstable_linear() {
  Eigen::MatrixXd a(2, 2);
  a << 1, 0, 0, -1;
  return ReluSystem(a, Eigen::MatrixXd::Zero(2, 1), Eigen::MatrixXd::Zero(1, 2), Eigen::MatrixXd::Zero(1, 1));
}

// Written out from the block definitions, no shared helpers.
Eigen::MatrixXd lhs_by_hand(const ReluSystem& s, const Eigen::MatrixXd& p, const Eigen::MatrixXd& q,
                            const Eigen::VectorXd& j) {
  const int n = s.n(), m = s.m();
  Eigen::MatrixXd e(2 * m, 2 * m);
  e << -Eigen::MatrixXd::Identity(m, m), Eigen::MatrixXd::Identity(m, m), Eigen::MatrixXd::Zero(m, m),
      Eigen::MatrixXd::Identity(m, m);
  Eigen::MatrixXd jj = Eigen::MatrixXd::Zero(2 * m, 2 * m);
  jj.topRightCorner(m, m) = j.asDiagonal();
  jj.bottomLeftCorner(m, m) = j.asDiagonal();
  const Eigen::MatrixXd pi = e.transpose() * (q + jj) * e;
  Eigen::MatrixXd mm(2 * m, n + m);
  mm << s.C(), s.D(), Eigen::MatrixXd::Zero(m, n), Eigen::MatrixXd::Identity(m, m);
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n + m, n + m);
  l.topLeftCorner(n, n) = p * s.A() + s.A().transpose() * p;
  l.topRightCorner(n, m) = p * s.B();
  l.bottomLeftCorner(m, n) = s.B().transpose() * p;
  return l + mm.transpose() * pi * mm;
}

double lambda_max(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  return es.eigenvalues().maxCoeff();
}

ReluSystem random_system(std::mt19937& rng, int n, int m) {
  std::normal_distribution<double> g(0.0, 1.0);
  auto rnd = [&](int r, int c) {
    Eigen::MatrixXd x(r, c);
    for (int i = 0; i < r; ++i)
      for (int k = 0; k < c; ++k) x(i, k) = g(rng);
    return x;
  };
  Eigen::MatrixXd d = rnd(m, m);
  d *= 0.8 / std::max(spectral_norm(d), 1e-12) * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  const Eigen::MatrixXd a = rnd(n, n) - 0.5 * Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd b = rnd(n, m);
  const Eigen::MatrixXd c = rnd(m, n);
  return ReluSystem(a, b, c, d);
}

}  // namespace

TEST(Multiplier, ZeroGivesZero) {
  const SymMatrix pi = assemble_multiplier({Eigen::MatrixXd::Zero(4, 4), Eigen::VectorXd::Zero(2)});
  EXPECT_EQ(pi.matrix(), Eigen::MatrixXd::Zero(4, 4));
}

TEST(Multiplier, ScalarFreeDiagonal) {
  const double eps = 0.25;
  const SymMatrix pi = assemble_multiplier({Eigen::MatrixXd::Zero(2, 2), Eigen::VectorXd::Constant(1, -eps)});
  Eigen::Matrix2d want;
  want << 0, eps, eps, -2 * eps;
  EXPECT_EQ(pi.matrix(), Eigen::MatrixXd(want));
}

TEST(Multiplier, ScalarNonnegPart) {
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(2, 2);
  q(0, 0) = 1;
  const SymMatrix pi = assemble_multiplier({q, Eigen::VectorXd::Zero(1)});
  Eigen::Matrix2d want;
  want << 1, -1, -1, 1;
  EXPECT_EQ(pi.matrix(), Eigen::MatrixXd(want));
}

TEST(Multiplier, RejectsWrongShape) {
  EXPECT_THROW(assemble_multiplier({Eigen::MatrixXd::Zero(3, 3), Eigen::VectorXd::Zero(2)}), std::invalid_argument);
}

TEST(Multiplier, LinearOnIntegerData) {
  // Integer entries keep every sum exact, so equality is bitwise.
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> u(-9, 9);
  for (int trial = 0; trial < 50; ++trial) {
    const int m = 1 + trial % 4;
    auto sym = [&] {
      Eigen::MatrixXd q(2 * m, 2 * m);
      for (int i = 0; i < 2 * m; ++i)
        for (int k = 0; k <= i; ++k) q(i, k) = q(k, i) = std::abs(u(rng));
      return q;
    };
    auto vec = [&] {
      Eigen::VectorXd j(m);
      for (int i = 0; i < m; ++i) j(i) = u(rng);
      return j;
    };
    const NNMultiplier a{sym(), vec()}, b{sym(), vec()};
    const SymMatrix sum = assemble_multiplier({a.Q + b.Q, a.J + b.J});
    EXPECT_EQ(sum.matrix(), assemble_multiplier(a).matrix() + assemble_multiplier(b).matrix());
  }
}

TEST(Multiplier, NonnegativeOnReluGraph) {
  std::mt19937 rng(11);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int m = 1 + trial % 5;
    Eigen::MatrixXd q(2 * m, 2 * m);
    for (int i = 0; i < 2 * m; ++i)
      for (int k = 0; k <= i; ++k) q(i, k) = q(k, i) = u(rng);
    Eigen::VectorXd j(m), zeta(m);
    for (int i = 0; i < m; ++i) {
      j(i) = 10 * g(rng);
      zeta(i) = g(rng);
    }
    const SymMatrix pi = assemble_multiplier({q, j});
    EXPECT_GE(multiplier_form(pi, zeta, relu(zeta)), -kSignTol);
  }
}

TEST(PrimalLmi, HandAssemblyAgrees) {
  const ReluSystem s = fixture("stable_feedthrough");
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd q(10, 10);
  for (int i = 0; i < 10; ++i)
    for (int k = 0; k <= i; ++k) q(i, k) = q(k, i) = u(rng);
  Eigen::VectorXd j = Eigen::VectorXd::LinSpaced(5, -1, 1);
  Eigen::MatrixXd p(2, 2);
  p << 2, 0.3, 0.3, 1;
  const Eigen::MatrixXd got = primal_lmi_lhs(s, p, assemble_multiplier({q, j}));
  EXPECT_LT((got - lhs_by_hand(s, p, q, j)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(PrimalLmi, KnownFeasiblePointForStableLinear) {
  const ReluSystem s = stable_linear();
  const double eps = 0.1;
  const Eigen::MatrixXd lhs = lhs_by_hand(s, Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Zero(2, 2),
                                          Eigen::VectorXd::Constant(1, -eps));
  Eigen::Vector3d want(-2, -2, -2 * eps);
  EXPECT_LT((lhs - Eigen::MatrixXd(want.asDiagonal())).norm(), 1e-15);
}

TEST(PrimalLmi, StableLinearCertified) {
  const ReluSystem s = stable_linear();
  const PrimalOutcome out = solve_primal(s, default_eps_margin(s));
  EXPECT_EQ(out.status, SolveStatus::kOptimal);
  EXPECT_LT(out.t, 0);
  EXPECT_TRUE(out.strictly_feasible);
  ASSERT_TRUE(out.certificate);
  EXPECT_NEAR(out.certificate->P.trace(), 1.0, 1e-7);
  EXPECT_TRUE(check_stability(s).has_value());
}

TEST(PrimalLmi, StableFixtureCertificateReverified) {
  const ReluSystem s = fixture("stable_feedthrough");
  const auto cert = check_stability(s);
  ASSERT_TRUE(cert);
  const Eigen::MatrixXd lhs = lhs_by_hand(s, cert->P, cert->multiplier.Q, cert->multiplier.J);
  EXPECT_LT(lambda_max(lhs), 0);
  EXPECT_GT(-lambda_max(-cert->P), 0);
  EXPECT_GE(cert->multiplier.Q.minCoeff(), -kSignTol);
  EXPECT_GT(cert->margin, 0);
  EXPECT_GE(cert->margin_P, default_eps_margin(s) * (1 - 1e-6));
}

TEST(PrimalLmi, UnstableFixturesNotCertified) {
  for (const char* name : {"unstable_no_feedthrough", "unstable_feedthrough", "unstable_third_order"}) {
    const ReluSystem s = fixture(name);
    const PrimalOutcome out = solve_primal(s, default_eps_margin(s));
    EXPECT_FALSE(out.strictly_feasible) << name;
    EXPECT_FALSE(out.certificate) << name;
    EXPECT_FALSE(check_stability(s)) << name;
  }
}

TEST(PrimalLmi, VerifyRejectsBadCertificate) {
  const ReluSystem s = unstable_linear();
  PrimalCertificate c;
  c.P = Eigen::MatrixXd::Identity(2, 2);
  c.multiplier = {Eigen::MatrixXd::Zero(2, 2), Eigen::VectorXd::Constant(1, -1)};
  EXPECT_FALSE(verify_certificate(s, c));
  EXPECT_LT(c.margin, 0);
}

TEST(PrimalLmi, RejectsNonpositiveMargin) {
  EXPECT_THROW(build_primal_lmi(stable_linear(), 0.0), std::invalid_argument);
}

TEST(DualLmi, StableFixtureInfeasible) {
  const DualOutcome out = solve_dual(fixture("stable_feedthrough"));
  EXPECT_EQ(out.status, SolveStatus::kInfeasible);
  EXPECT_FALSE(out.witness);
}

TEST(DualLmi, UnstableLinearWitness) {
  const ReluSystem s = unstable_linear();
  const DualOutcome out = solve_dual(s);
  ASSERT_EQ(out.status, SolveStatus::kOptimal);
  ASSERT_TRUE(out.solution);
  EXPECT_EQ(out.solution->rank_estimate, 1);
  EXPECT_NEAR(out.solution->H11().trace(), 1.0, 1e-7);
  ASSERT_TRUE(out.witness);
  EXPECT_NEAR(out.witness->lambda, 1.0, 1e-6);
  EXPECT_NEAR(std::abs(out.witness->x(0)), 1.0, 1e-6);
  EXPECT_NEAR(out.witness->x(1), 0.0, 1e-6);
  EXPECT_NEAR(out.witness->w(0), 0.0, 1e-6);
}

TEST(DualLmi, ExactRankOneFactorExtracted) {
  const ReluSystem s = unstable_linear();
  Eigen::Vector3d v(1, 0, 0);
  const DualSolutionH h{SymMatrix(Eigen::MatrixXd(v * v.transpose())), 1, 2};
  const auto wit = extract_witness(s, h, 1e-5);
  ASSERT_TRUE(wit);
  EXPECT_NEAR(wit->lambda, 1.0, 1e-12);
  EXPECT_NEAR(std::abs(wit->x(0)), 1.0, 1e-12);
  EXPECT_NEAR(wit->w(0), 0.0, 1e-12);
}

TEST(DualLmi, RankTwoGivesNoWitness) {
  const ReluSystem s = unstable_linear();
  const DualSolutionH h{SymMatrix(Eigen::MatrixXd(Eigen::Vector3d(1, 1, 0).asDiagonal())), 2, 2};
  EXPECT_FALSE(extract_witness(s, h, 1e-5));
}

TEST(DualLmi, ThirdOrderFixtureNeedsHierarchy) {
  const DualOutcome out = solve_dual(fixture("unstable_third_order"));
  EXPECT_EQ(out.status, SolveStatus::kOptimal);
  ASSERT_TRUE(out.solution);
  EXPECT_GT(out.solution->rank_estimate, 1);
  EXPECT_FALSE(out.witness);
}

struct PaperWitness {
  const char* fixture;
  double lambda;
  std::vector<double> x, w;
  int support;
};

void PrintTo(const PaperWitness& pw, std::ostream* os) { *os << pw.fixture; }

class FirstOrderWitness : public ::testing::TestWithParam<PaperWitness> {};

TEST_P(FirstOrderWitness, MatchesPublishedValues) {
  const PaperWitness& pw = GetParam();
  const ReluSystem s = fixture(pw.fixture);
  const DualOutcome out = solve_dual(s);
  ASSERT_EQ(out.status, SolveStatus::kOptimal);
  ASSERT_TRUE(out.solution);
  EXPECT_EQ(out.solution->rank_estimate, 1);
  ASSERT_TRUE(out.witness);
  const RayWitness& w = *out.witness;
  EXPECT_NEAR(w.lambda, pw.lambda, 1e-3);
  const double sgn = w.x.dot(Eigen::Vector2d(pw.x[0], pw.x[1])) >= 0 ? 1.0 : -1.0;
  for (int i = 0; i < 2; ++i) EXPECT_NEAR(sgn * w.x(i), pw.x[i], 5e-3);
  for (int i = 0; i < 5; ++i) {
    if (i == pw.support) {
      EXPECT_NEAR(w.w(i), pw.w[i], 5e-3);
    } else {
      EXPECT_LE(std::abs(w.w(i)), kSignTol) << i;
    }
  }
  EXPECT_TRUE(validate_witness(s, w, 1e-6).pass);

  const OracleResult oracle = enumerate_rays(s);
  const RayMatch match = match_oracle_ray(w, oracle);
  EXPECT_TRUE(match.found) << match.xw_distance << " " << match.lambda_distance;
}

INSTANTIATE_TEST_SUITE_P(
    Fixtures, FirstOrderWitness,
    ::testing::Values(PaperWitness{"unstable_no_feedthrough", 0.1037, {-0.6282, -0.7780}, {0, 0.3414, 0, 0, 0}, 1},
                      PaperWitness{"unstable_feedthrough", 0.0807, {0.6119, 0.7909}, {0, 0, 0, 0, 0.2932}, 4}),
    [](const auto& info) { return std::string(info.param.fixture); });

TEST(Witness, OrientationFlipsNegatedFactor) {
  const ReluSystem s = fixture("unstable_no_feedthrough");
  const auto best = min_unstable_lambda(s);
  ASSERT_TRUE(best);
  const RayWitness flipped = orient_witness(s, -best->witness.x, -best->witness.w);
  EXPECT_LT((flipped.x - best->witness.x).norm(), 1e-12);
  EXPECT_NEAR(flipped.lambda, best->lambda, 1e-12);
  const Eigen::VectorXd gap = flipped.w - (s.C() * flipped.x + s.D() * flipped.w);
  EXPECT_GE(std::min(gap.minCoeff(), flipped.w.minCoeff()), -kSignTol);
}

TEST(Witness, AcceptClampsSmallNegativeLambda) {
  // A = diag(0, −1): x = e₁ is a λ = 0 ray.
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 2);
  a(1, 1) = -1;
  const ReluSystem s(a, Eigen::MatrixXd::Zero(2, 1), Eigen::MatrixXd::Zero(1, 2), Eigen::MatrixXd::Zero(1, 1));
  RayWitness w{Eigen::Vector2d(1, 0), Eigen::VectorXd::Zero(1), -0.5 * kSignTol};
  const auto acc = accept_witness(s, w);
  ASSERT_TRUE(acc);
  EXPECT_EQ(acc->lambda, 0.0);
  w.lambda = -10 * kSignTol;
  EXPECT_FALSE(accept_witness(s, w));
}

TEST(Witness, PolishRecoversOracleRay) {
  const ReluSystem s = fixture("unstable_feedthrough");
  const auto best = min_unstable_lambda(s);
  ASSERT_TRUE(best);
  std::mt19937 rng(5);
  std::normal_distribution<double> g(0.0, 1e-5);
  RayWitness noisy = best->witness;
  for (int i = 0; i < noisy.x.size(); ++i) noisy.x(i) += g(rng);
  for (int i = 0; i < noisy.w.size(); ++i) noisy.w(i) += g(rng);
  noisy.lambda += 1e-5;
  EXPECT_FALSE(validate_witness(s, noisy, 1e-6).pass);
  const auto pol = polish_witness(s, noisy);
  ASSERT_TRUE(pol);
  const RayWitness p = normalize_witness(*pol);
  EXPECT_TRUE(validate_witness(s, p, 1e-9).pass);
  EXPECT_NEAR(p.lambda, best->lambda, 1e-9);
  EXPECT_LT((p.x - best->witness.x).norm(), 1e-8);
}

TEST(Witness, PolishRefusesLargeMoves) {
  const ReluSystem s = fixture("unstable_feedthrough");
  RayWitness far{Eigen::Vector2d(1, 0).normalized(), Eigen::VectorXd::Zero(5), 0.5};
  EXPECT_FALSE(polish_witness(s, far));
}

TEST(Alternative, NeverBothOnRandomSystems) {
  std::mt19937 rng(20240601);
  int stable = 0, unstable = 0;
  for (int trial = 0; trial < 24; ++trial) {
    const int n = 2 + trial % 2, m = 2 + trial % 3;
    const ReluSystem s = random_system(rng, n, m);
    const PrimalOutcome p = solve_primal(s, default_eps_margin(s));
    const DualOutcome d = solve_dual(s);
    EXPECT_FALSE(p.certificate && d.witness) << trial;
    EXPECT_FALSE(p.strictly_feasible && d.status == SolveStatus::kOptimal) << trial;
    if (d.witness) EXPECT_TRUE(validate_witness(s, *d.witness, 1e-6).pass);
    stable += p.certificate.has_value();
    unstable += d.witness.has_value();
  }
  EXPECT_GT(stable + unstable, 0);
}

TEST(Json, DualReportShape) {
  const DualOutcome out = solve_dual(unstable_linear());
  const Json j = dual_to_json(out);
  EXPECT_EQ(j["status"], "Optimal");
  EXPECT_EQ(j["rank"], 1);
  EXPECT_TRUE(j.contains("witness"));
  const Json p = primal_to_json(solve_primal(stable_linear(), 1e-6));
  EXPECT_TRUE(p["strictly_feasible"].get<bool>());
  EXPECT_TRUE(p["certificate"].is_object());
}
