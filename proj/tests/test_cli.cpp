#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "relustab/cli/analysis.hpp"

using namespace relustab;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(RELUSTAB_CLI) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string temp_path(const std::string& name) { return ::testing::TempDir() + "/" + name; }

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

std::vector<std::vector<double>> read_csv(const std::string& path) {
  std::ifstream f(path);
  std::string line;
  std::getline(f, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(f, line)) {
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST(Analyze, StableFixture) {
  const AnalysisReport r = run_analyze(fixture("stable_feedthrough"), {});
  EXPECT_EQ(r.verdict, Verdict::kStable);
  EXPECT_EQ(r.exit_code, kExitStable);
  EXPECT_FALSE(r.witness);
  EXPECT_TRUE(r.oracle.ran);
  EXPECT_EQ(r.oracle.feasible_rays, 0);
  EXPECT_TRUE(r.anomalies.empty());
}

TEST(Analyze, FirstOrderFixture) {
  const AnalysisReport r = run_analyze(fixture("unstable_no_feedthrough"), {});
  EXPECT_EQ(r.exit_code, kExitUnstable);
  ASSERT_TRUE(r.witness);
  EXPECT_NEAR(r.witness->lambda, 0.1037, 1e-3);
  ASSERT_TRUE(r.oracle.agreement);
  EXPECT_TRUE(*r.oracle.agreement);
  EXPECT_EQ(r.resolved_order, 1);
}

TEST(Analyze, ThirdOrderFixture) {
  AnalyzeOptions o;
  o.max_order = 3;
  const AnalysisReport r = run_analyze(fixture("unstable_third_order"), o);
  EXPECT_EQ(r.exit_code, kExitUnstable);
  ASSERT_TRUE(r.witness);
  EXPECT_NEAR(r.witness->lambda, 0.4858, 1e-3);
  ASSERT_TRUE(r.resolved_order);
  EXPECT_LE(*r.resolved_order, 3);
  EXPECT_TRUE(*r.oracle.agreement);
}

TEST(Analyze, NoOracleSkips) {
  AnalyzeOptions o;
  o.run_oracle = false;
  const AnalysisReport r = run_analyze(fixture("unstable_feedthrough"), o);
  EXPECT_FALSE(r.oracle.ran);
  EXPECT_EQ(r.oracle.skipped_reason, "disabled");
  EXPECT_EQ(r.verdict, Verdict::kUnstable);
}

TEST(Analyze, VerdictInvariantsOnRandomSystems) {
  std::mt19937 rng(77);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 12; ++trial) {
    Eigen::MatrixXd a(2, 2), b(2, 2), c(2, 2), d(2, 2);
    for (auto* mtx : {&d, &a, &b, &c})
      for (int i = 0; i < 2; ++i)
        for (int k = 0; k < 2; ++k) (*mtx)(i, k) = g(rng);
    d *= 0.5 / d.operatorNorm();
    AnalyzeOptions o;
    o.max_order = 2;
    const AnalysisReport r = run_analyze(ReluSystem(a, b, c, d), o);
    switch (r.verdict) {
      case Verdict::kStable:
        EXPECT_FALSE(r.witness);
        EXPECT_FALSE(r.primal["certificate"].is_null());
        break;
      case Verdict::kUnstable:
        ASSERT_TRUE(r.witness);
        EXPECT_GT(r.witness->lambda, kSignTol);
        EXPECT_TRUE(r.validation->pass);
        EXPECT_TRUE(*r.oracle.agreement);
        break;
      case Verdict::kNonConvergentRay:
        ASSERT_TRUE(r.witness);
        EXPECT_LE(r.witness->lambda, kSignTol);
        break;
      case Verdict::kInconclusive: break;
    }
    EXPECT_NE(r.exit_code, kExitSolverFailure) << trial;
  }
}

TEST(Report, RoundTrip) {
  for (const char* name : {"stable_feedthrough", "unstable_feedthrough"}) {
    const Json j = report_to_json(run_analyze(fixture(name), {}));
    const Json back = report_to_json(report_from_json(j));
    EXPECT_EQ(j, back) << name;
    EXPECT_EQ(Json::parse(dump_json(j)), j) << name;
    EXPECT_EQ(dump_json(Json::parse(dump_json(j))), dump_json(j)) << name;
  }
}

TEST(Report, FingerprintDistinguishesSystems) {
  const Fingerprint a = fingerprint(fixture("unstable_no_feedthrough"));
  const Fingerprint b = fingerprint(fixture("unstable_feedthrough"));
  EXPECT_EQ(a.hashes.at("A"), fingerprint(fixture("unstable_no_feedthrough")).hashes.at("A"));
  EXPECT_NE(a.hashes.at("D"), b.hashes.at("D"));
  EXPECT_EQ(a.d_norm, 0.0);
  EXPECT_GT(b.d_norm, 0.0);
}

TEST(Oracle, ExitCodes) {
  EXPECT_EQ(oracle_exit_code(enumerate_rays(fixture("stable_feedthrough"))), kExitStable);
  EXPECT_EQ(oracle_exit_code(enumerate_rays(fixture("unstable_feedthrough"))), kExitUnstable);
}

TEST(FieldGrid, ShapeAndValues) {
  const ReluSystem s = fixture("unstable_feedthrough");
  std::stringstream ss(field_grid_csv(s, -1, 1, -2, 2, 3));
  std::string line;
  std::getline(ss, line);
  EXPECT_EQ(line, "x1,x2,dx1,dx2");
  int rows = 0;
  while (std::getline(ss, line)) ++rows;
  EXPECT_EQ(rows, 9);
  const ReluSystem three(-Eigen::MatrixXd::Identity(3, 3), Eigen::MatrixXd::Zero(3, 1), Eigen::MatrixXd::Zero(1, 3),
                         Eigen::MatrixXd::Zero(1, 1));
  EXPECT_THROW(field_grid_csv(three, -1, 1, -1, 1, 3), InputError);
}

TEST(Binary, AnalyzeExitCodes) {
  EXPECT_EQ(run_cli("analyze " + fixture_path("stable_feedthrough")), 0);
  const std::string out = temp_path("report.json");
  EXPECT_EQ(run_cli("analyze " + fixture_path("unstable_no_feedthrough") + " --output " + out), 10);
  const Json j = Json::parse(slurp(out));
  EXPECT_EQ(j["verdict"], "Unstable");
  EXPECT_NEAR(j["witness"]["lambda"].get<double>(), 0.1037, 1e-3);
  EXPECT_EQ(j["oracle"]["agreement"], true);
  EXPECT_EQ(run_cli("analyze " + fixture_path("unstable_third_order") + " --max-order 3"), 10);
}

TEST(Binary, InputErrors) {
  EXPECT_EQ(run_cli("analyze /nonexistent/system.json"), 2);
  const std::string bad = temp_path("bad.json");
  std::ofstream(bad) << "{\"A\": [[1, 0]]}";
  EXPECT_EQ(run_cli("analyze " + bad), 2);
  EXPECT_EQ(run_cli("analyze " + fixture_path("stable_feedthrough") + " --format xml"), 2);
  EXPECT_EQ(run_cli("frobnicate"), 2);
}

TEST(Binary, OracleExitCodes) {
  EXPECT_EQ(run_cli("oracle " + fixture_path("stable_feedthrough")), 0);
  const std::string out = temp_path("oracle.json");
  EXPECT_EQ(run_cli("oracle " + fixture_path("unstable_feedthrough") + " -o " + out), 10);
  const Json j = Json::parse(slurp(out));
  ASSERT_EQ(j["feasible_rays"].size(), 1u);
  // Zero-based index 4 is w₅.
  EXPECT_EQ(j["feasible_rays"][0]["J"], Json::array({4}));
  const std::string toy = temp_path("toy.json");
  std::ofstream(toy) << R"({"A": [[1, 0], [0, -1]], "B": [[0], [0]], "C": [[0, 0]], "D": [[0]]})";
  EXPECT_EQ(run_cli("oracle " + toy + " -o " + out), 10);
  EXPECT_NEAR(Json::parse(slurp(out))["feasible_rays"][0]["lambda"].get<double>(), 1.0, 1e-12);
  EXPECT_EQ(run_cli("oracle " + fixture_path("unstable_feedthrough") + " --m-cap 3"), 4);
}

TEST(Binary, SimulateWitnessGrowth) {
  const AnalysisReport r = run_analyze(fixture("unstable_no_feedthrough"), {});
  ASSERT_TRUE(r.witness);
  const std::string out = temp_path("ray.csv");
  std::ostringstream x0;
  x0.precision(17);
  x0 << r.witness->x(0) << " " << r.witness->x(1);
  ASSERT_EQ(run_cli("simulate " + fixture_path("unstable_no_feedthrough") + " --x0 " + x0.str() +
                    " --t-end 5 --dt 1e-4 -o " + out),
            0);
  const auto rows = read_csv(out);
  ASSERT_EQ(rows.size(), 50001u);
  EXPECT_NEAR(rows.back()[0], 5.0, 1e-12);
  const double fin = std::hypot(rows.back()[1], rows.back()[2]);
  EXPECT_NEAR(fin / std::exp(5 * r.witness->lambda), 1.0, 1e-4);
}

TEST(Binary, SimulateConvergesFromMinusOnes) {
  const std::string out = temp_path("conv.csv");
  ASSERT_EQ(run_cli("simulate " + fixture_path("unstable_feedthrough") + " --x0 -1 -1 --t-end 20 -o " + out), 0);
  const auto rows = read_csv(out);
  const double fin = std::hypot(rows.back()[1], rows.back()[2]);
  // Reference from an adaptive Runge–Kutta integrator at rtol 1e-11.
  EXPECT_NEAR(fin, 0.043489810908, 1e-8);
  for (std::size_t k = 1000; k < rows.size(); k += 1000)
    EXPECT_LT(std::hypot(rows[k][1], rows[k][2]), std::hypot(rows[k - 1000][1], rows[k - 1000][2]));
}

TEST(Binary, SimulateZeroAndFieldGrid) {
  const std::string out = temp_path("zero.csv"), field = temp_path("field.csv");
  ASSERT_EQ(run_cli("simulate " + fixture_path("unstable_feedthrough") + " --x0 0 0 --t-end 1 -o " + out +
                    " --field-grid -2 2 -2 2 4 --field-output " + field),
            0);
  for (const auto& row : read_csv(out)) {
    EXPECT_EQ(row[1], 0.0);
    EXPECT_EQ(row[2], 0.0);
  }
  EXPECT_EQ(read_csv(field).size(), 16u);
  EXPECT_EQ(run_cli("simulate " + fixture_path("unstable_feedthrough") + " --x0 1 -o " + out), 2);
}

TEST(Binary, SimulateOverflowStillWritesCsv) {
  const std::string sys = temp_path("fast.json"), out = temp_path("fast.csv");
  std::ofstream(sys) << R"({"A": [[50]], "B": [[0]], "C": [[0]], "D": [[0]]})";
  EXPECT_EQ(run_cli("simulate " + sys + " --x0 1 --t-end 10 -o " + out), 3);
  EXPECT_GT(read_csv(out).size(), 1u);
}

TEST(Binary, MomentReport) {
  const std::string toy = temp_path("toy_m.json"), out = temp_path("moment.json");
  std::ofstream(toy) << R"({"A": [[1, 0], [0, -1]], "B": [[0], [0]], "C": [[0, 0]], "D": [[0]]})";
  EXPECT_EQ(run_cli("moment " + toy + " --max-order 2 -o " + out), 0);
  const Json j = Json::parse(slurp(out));
  ASSERT_EQ(j.size(), 2u);
  EXPECT_NEAR(j[1]["bound"].get<double>(), 1.0, 1e-6);
}
