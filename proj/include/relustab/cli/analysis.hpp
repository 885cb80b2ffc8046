#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "relustab/certificates/lmi.hpp"
#include "relustab/hierarchy/hankel.hpp"
#include "relustab/io/system_json.hpp"
#include "relustab/oracle/enumeration.hpp"

namespace relustab {

inline constexpr const char* kToolVersion = "relustab 0.1.0";

inline constexpr int kExitStable = 0;
inline constexpr int kExitUnstable = 10;
inline constexpr int kExitNonConvergentRay = 11;
inline constexpr int kExitInconclusive = 20;
inline constexpr int kExitInputError = 2;
inline constexpr int kExitSolverFailure = 3;
inline constexpr int kExitCapExceeded = 4;

enum class Verdict { kStable, kUnstable, kNonConvergentRay, kInconclusive };
const char* to_string(Verdict v);
Verdict verdict_from_string(const std::string& s);

struct AnalyzeOptions {
  int max_order = kDefaultMaxOrder;
  double eps = 1e-6;
  double rank_tol = 1e-5;
  bool run_oracle = true;
  int m_cap = kDefaultMCap;
  unsigned seed = 0;
  SolverSettings settings;
};

struct Fingerprint {
  int n = 0;
  int m = 0;
  std::map<std::string, std::string> hashes;  // FNV-1a of each matrix, hex
  double d_norm = 0.0;
};

Fingerprint fingerprint(const ReluSystem& sys);

struct OracleSummary {
  bool ran = false;
  std::string skipped_reason;             // set when ran is false
  int feasible_rays = 0;
  std::optional<double> min_lambda;
  std::optional<bool> agreement;          // only with a witness
  std::optional<double> xw_distance;
};

struct AnalysisReport {
  Fingerprint system;
  Verdict verdict = Verdict::kInconclusive;
  int exit_code = kExitInconclusive;
  Json primal;      // primal_to_json
  Json hierarchy;   // hierarchy_to_json
  std::optional<int> resolved_order;
  std::optional<RayWitness> witness;
  std::optional<ValidationReport> validation;
  OracleSummary oracle;
  std::vector<std::string> anomalies;
  std::map<std::string, double> timings;
  std::string version = kToolVersion;
  AnalyzeOptions config;
};

/// Primal check, then the hierarchy if the primal fails, then the oracle.
AnalysisReport run_analyze(const ReluSystem& sys, const AnalyzeOptions& options);

Json report_to_json(const AnalysisReport& r);
AnalysisReport report_from_json(const Json& j);

/// 0 none, 10 a feasible ray with λ > τ_sign, 11 only λ ≈ 0 rays.
int oracle_exit_code(const OracleResult& result);

/// Rows (x1, x2, dx1, dx2) on a steps × steps grid, 2-D systems only.
std::string field_grid_csv(const ReluSystem& sys, double xmin, double xmax, double ymin, double ymax, int steps);

}  // namespace relustab
