#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "relustab/oracle/enumeration.hpp"

using namespace relustab;

namespace {

ReluSystem toy_unstable() {
  Eigen::MatrixXd a(2, 2);
  a << 1, 0, 0, -1;
  return ReluSystem(a, Eigen::MatrixXd::Zero(2, 1), Eigen::MatrixXd::Zero(1, 2), Eigen::MatrixXd::Zero(1, 1));
}

// Values frozen from an independent numpy enumeration (numpy.linalg.eig per
// pattern, explicit sign checks), witnesses scaled to ‖x‖ = 1.
struct FrozenRay {
  const char* fixture;
  std::vector<int> support;
  double lambda;
  std::vector<double> x, w;
};

const FrozenRay kFrozen[] = {
    {"unstable_no_feedthrough", {1}, 0.10372288099735227, {-0.6281900642414059, -0.7780599226206028},
     {0, 0.34142187998376566, 0, 0, 0}},
    {"unstable_feedthrough", {4}, 0.08070826089917155, {0.6118544482357325, 0.7909703750293985},
     {0, 0, 0, 0, 0.29316169086569793}},
    {"unstable_third_order", {1, 4}, 0.48581682484539646, {-0.1831282630892535, 0.9830890291616081},
     {0, 0.2798644913543364, 0, 0, 0.5462316604108061}},
};

}  // namespace

TEST(Oracle, BuildFJ) {
  const ReluSystem s = fixture("unstable_feedthrough");
  EXPECT_EQ(build_FJ(s, {}), Eigen::MatrixXd::Zero(5, 5));
  const ReluSystem z = fixture("unstable_no_feedthrough");
  EXPECT_EQ(build_FJ(z, {{0, 1, 2, 3, 4}}), Eigen::MatrixXd::Identity(5, 5));
  const Eigen::MatrixXd f = build_FJ(s, {{1, 2, 3, 4}});
  EXPECT_EQ(f.row(0).norm(), 0.0);
  EXPECT_EQ(f.col(0).norm(), 0.0);
  const Eigen::MatrixXd blk = (Eigen::MatrixXd::Identity(4, 4) - s.D().bottomRightCorner(4, 4)).inverse();
  EXPECT_LE((f.bottomRightCorner(4, 4) - blk).norm(), 1e-14);
}

TEST(Oracle, ToyHasSingleUnstableRay) {
  const OracleResult r = enumerate_rays(toy_unstable());
  const auto feas = r.feasible();
  ASSERT_EQ(feas.size(), 2u);  // ±e₁ from J = ∅
  for (const auto& c : feas) {
    EXPECT_TRUE(c.pattern.J.empty());
    EXPECT_NEAR(c.lambda, 1.0, 1e-14);
    EXPECT_NEAR(std::abs(c.x(0)), 1.0, 1e-14);
  }
  const auto mn = min_unstable_lambda(toy_unstable());
  ASSERT_TRUE(mn);
  EXPECT_NEAR(mn->lambda, 1.0, 1e-14);
}

TEST(Oracle, StableFixtureHasNoRay) {
  const ReluSystem s = fixture("stable_feedthrough");
  EXPECT_TRUE(enumerate_rays(s).feasible().empty());
  EXPECT_FALSE(min_unstable_lambda(s));
}

TEST(Oracle, FixtureRaysMatchFrozenValues) {
  for (const auto& f : kFrozen) {
    const ReluSystem s = fixture(f.fixture);
    const OracleResult r = enumerate_rays(s);
    const auto feas = r.feasible();
    ASSERT_EQ(feas.size(), 1u) << f.fixture;
    const CandidateRay& c = feas.front();
    EXPECT_EQ(c.pattern.J, f.support);
    EXPECT_NEAR(c.lambda, f.lambda, 1e-12);
    const RayWitness w = to_witness(c);
    for (int i = 0; i < 2; ++i) EXPECT_NEAR(w.x(i), f.x[i], 1e-10) << f.fixture;
    for (int i = 0; i < 5; ++i) EXPECT_NEAR(w.w(i), f.w[i], 1e-10) << f.fixture;
    EXPECT_TRUE(validate_witness(s, w, 1e-9).pass);
  }
}

TEST(Oracle, MinLambdaFeedthroughFixture) {
  const auto mn = min_unstable_lambda(fixture("unstable_feedthrough"));
  ASSERT_TRUE(mn);
  EXPECT_LE(mn->lambda, 0.0807 + 1e-9 + 1e-4);
  EXPECT_GE(mn->lambda, 0.0);
}

TEST(Oracle, CapExceeded) {
  const int m = 17;
  const ReluSystem s(-Eigen::MatrixXd::Identity(1, 1), Eigen::MatrixXd::Zero(1, m), Eigen::MatrixXd::Zero(m, 1),
                     Eigen::MatrixXd::Zero(m, m));
  EXPECT_THROW(enumerate_rays(s), EnumerationCapExceeded);
  EXPECT_NO_THROW(enumerate_rays(toy_unstable(), 1e-9, 1));
  EXPECT_THROW(enumerate_rays(fixture("unstable_feedthrough"), 1e-9, 4), EnumerationCapExceeded);
}

TEST(Oracle, SoundnessAndConsistencyOnRandomSystems) {
  std::mt19937 rng(99);
  std::normal_distribution<double> g;
  int feasible_seen = 0;
  for (int t = 0; t < 100; ++t) {
    const int n = 2 + t % 2, m = 2 + t % 3;
    auto rnd = [&](int r, int c) {
      Eigen::MatrixXd x(r, c);
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) x(i, j) = g(rng);
      return x;
    };
    Eigen::MatrixXd d = rnd(m, m);
    d *= 0.8 / d.jacobiSvd().singularValues()(0);
    const ReluSystem s(rnd(n, n) - 0.5 * Eigen::MatrixXd::Identity(n, n), rnd(n, m), rnd(m, n), d);
    const OracleResult r = enumerate_rays(s);
    for (const auto& c : r.candidates) {
      EXPECT_LE(c.eig_residual, 1e-10 * c.x.norm() + 1e-13);
      EXPECT_NEAR(c.x.squaredNorm() + c.w.squaredNorm(), 1.0, 1e-12);
      if (c.feasible()) {
        ++feasible_seen;
        RayWitness w{c.x, c.w, std::max(c.lambda, 0.0)};
        EXPECT_TRUE(validate_witness(s, w, 1e-9).pass);
      }
    }
    // Determinism.
    const OracleResult again = enumerate_rays(s);
    ASSERT_EQ(again.candidates.size(), r.candidates.size());
    for (std::size_t i = 0; i < r.candidates.size(); ++i) {
      EXPECT_EQ(again.candidates[i].x, r.candidates[i].x);
      EXPECT_EQ(again.candidates[i].lambda, r.candidates[i].lambda);
    }
  }
  EXPECT_GT(feasible_seen, 0);
}

TEST(Oracle, RepeatedEigenvaluesSampledAndFlagged) {
  const ReluSystem s(Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Zero(2, 1), Eigen::MatrixXd::Zero(1, 2),
                     Eigen::MatrixXd::Zero(1, 1));
  const OracleResult r = enumerate_rays(s);
  EXPECT_FALSE(r.diagnostics.front().distinct);
  EXPECT_TRUE(r.diagnostics.front().degenerate());
  int from_empty = 0;
  for (const auto& c : r.candidates)
    if (c.pattern.J.empty()) ++from_empty;
  EXPECT_EQ(from_empty, 4);  // two basis vectors, two signs
}

TEST(Oracle, MatchUpToSign) {
  const ReluSystem s = fixture("unstable_no_feedthrough");
  const OracleResult r = enumerate_rays(s);
  RayWitness w = to_witness(r.feasible().front());
  w.x = -3.0 * w.x;
  w.w = -3.0 * w.w;
  EXPECT_TRUE(match_oracle_ray(w, r).found);
  w.lambda += 1e-3;
  EXPECT_FALSE(match_oracle_ray(w, r).found);
}
