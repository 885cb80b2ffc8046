#include "relustab/cli/analysis.hpp"

#include <chrono>
#include <cstdio>
#include <sstream>

namespace relustab {
namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

template <class T>
Json opt(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

template <class T>
std::optional<T> opt_get(const Json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<T>();
}

ValidationReport validation_from_json(const Json& j) {
  ValidationReport r;
  r.residual_eig = j.at("residual_eig").get<double>();
  r.min_sign = j.at("min_sign").get<double>();
  r.max_compl = j.at("max_compl").get<double>();
  r.lambda = j.at("lambda").get<double>();
  r.pass = j.at("pass").get<bool>();
  return r;
}

Json options_to_json(const AnalyzeOptions& o) {
  Json j;
  j["max_order"] = o.max_order;
  j["eps"] = o.eps;
  j["rank_tol"] = o.rank_tol;
  j["run_oracle"] = o.run_oracle;
  j["m_cap"] = o.m_cap;
  j["seed"] = o.seed;
  Json s;
  s["feas_tol"] = o.settings.feas_tol;
  s["gap_tol"] = o.settings.gap_tol;
  s["infeas_tol"] = o.settings.infeas_tol;
  s["max_iter"] = o.settings.max_iter;
  j["solver"] = s;
  return j;
}

AnalyzeOptions options_from_json(const Json& j) {
  AnalyzeOptions o;
  o.max_order = j.at("max_order").get<int>();
  o.eps = j.at("eps").get<double>();
  o.rank_tol = j.at("rank_tol").get<double>();
  o.run_oracle = j.at("run_oracle").get<bool>();
  o.m_cap = j.at("m_cap").get<int>();
  o.seed = j.at("seed").get<unsigned>();
  const Json& s = j.at("solver");
  o.settings.feas_tol = s.at("feas_tol").get<double>();
  o.settings.gap_tol = s.at("gap_tol").get<double>();
  o.settings.infeas_tol = s.at("infeas_tol").get<double>();
  o.settings.max_iter = s.at("max_iter").get<int>();
  return o;
}

}  // namespace

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::kStable: return "Stable";
    case Verdict::kUnstable: return "Unstable";
    case Verdict::kNonConvergentRay: return "NonConvergentRay";
    case Verdict::kInconclusive: return "Inconclusive";
  }
  return "Inconclusive";
}

Verdict verdict_from_string(const std::string& s) {
  for (Verdict v : {Verdict::kStable, Verdict::kUnstable, Verdict::kNonConvergentRay, Verdict::kInconclusive})
    if (s == to_string(v)) return v;
  throw InputError("unknown verdict '" + s + "'");
}

Fingerprint fingerprint(const ReluSystem& sys) {
  Fingerprint f;
  f.n = sys.n();
  f.m = sys.m();
  f.hashes["A"] = fnv1a(dump_json(to_json(sys.A())));
  f.hashes["B"] = fnv1a(dump_json(to_json(sys.B())));
  f.hashes["C"] = fnv1a(dump_json(to_json(sys.C())));
  f.hashes["D"] = fnv1a(dump_json(to_json(sys.D())));
  f.d_norm = sys.d_norm();
  return f;
}

AnalysisReport run_analyze(const ReluSystem& sys, const AnalyzeOptions& options) {
  const auto t0 = Clock::now();
  AnalysisReport r;
  r.system = fingerprint(sys);
  r.config = options;

  const PrimalOutcome primal = solve_primal(sys, options.eps, options.settings);
  r.primal = primal_to_json(primal);
  r.timings["primal"] = primal.seconds;
  bool stable = primal.certificate.has_value();
  bool all_failed = primal.status == SolveStatus::kNumericalFailure;

  if (!stable) {
    HierarchyOptions ho;
    ho.max_order = options.max_order;
    ho.rank_tol = options.rank_tol;
    ho.settings = options.settings;
    const auto t1 = Clock::now();
    const std::vector<OrderResult> orders = run_hierarchy(sys, ho);
    r.timings["hierarchy"] = since(t1);
    r.hierarchy = hierarchy_to_json(orders);
    for (const auto& o : orders) {
      if (o.status != OrderStatus::kNumericalFailure) all_failed = false;
      if (o.anomaly) r.anomalies.push_back("hierarchy order " + std::to_string(o.order) + " feasible after an infeasible order");
      if (o.witness && !r.witness) {
        r.witness = o.witness;
        r.resolved_order = o.order;
      }
    }
  } else {
    r.hierarchy = Json::array();
  }

  if (r.witness) {
    r.validation = validate_witness(sys, *r.witness, 1e-6);
    if (!r.validation->pass) {
      r.anomalies.push_back("extracted witness failed revalidation");
      r.witness.reset();
      r.resolved_order.reset();
    }
  }

  if (stable) {
    r.verdict = Verdict::kStable;
  } else if (r.witness) {
    r.verdict = r.witness->lambda > kSignTol ? Verdict::kUnstable : Verdict::kNonConvergentRay;
  }

  if (!options.run_oracle) {
    r.oracle.skipped_reason = "disabled";
  } else if (sys.m() > options.m_cap) {
    r.oracle.skipped_reason = "m exceeds cap";
  } else {
    const auto t2 = Clock::now();
    const OracleResult oracle = enumerate_rays(sys, kOracleTol, options.m_cap);
    r.timings["oracle"] = since(t2);
    r.oracle.ran = true;
    r.oracle.feasible_rays = static_cast<int>(oracle.feasible().size());
    if (const auto best = min_unstable_lambda(oracle)) r.oracle.min_lambda = best->lambda;
    if (r.witness) {
      const RayMatch match = match_oracle_ray(*r.witness, oracle);
      r.oracle.agreement = match.found;
      r.oracle.xw_distance = match.xw_distance;
      if (!match.found) {
        r.anomalies.push_back("witness does not match any oracle ray");
        r.verdict = Verdict::kInconclusive;
      }
    }
    if (stable && r.oracle.feasible_rays > 0) r.anomalies.push_back("contradiction: certified stable but the oracle found a ray");
  }

  switch (r.verdict) {
    case Verdict::kStable: r.exit_code = kExitStable; break;
    case Verdict::kUnstable: r.exit_code = kExitUnstable; break;
    case Verdict::kNonConvergentRay: r.exit_code = kExitNonConvergentRay; break;
    case Verdict::kInconclusive: r.exit_code = all_failed ? kExitSolverFailure : kExitInconclusive; break;
  }
  const bool contradiction = (stable && r.witness) || (stable && r.oracle.feasible_rays > 0);
  if (contradiction) {
    r.verdict = Verdict::kInconclusive;
    r.exit_code = kExitSolverFailure;
  }
  r.timings["total"] = since(t0);
  return r;
}

Json report_to_json(const AnalysisReport& r) {
  Json j;
  Json sys;
  sys["n"] = r.system.n;
  sys["m"] = r.system.m;
  sys["hashes"] = r.system.hashes;
  sys["d_norm"] = r.system.d_norm;
  j["system"] = sys;
  j["verdict"] = to_string(r.verdict);
  j["exit_code"] = r.exit_code;
  j["primal"] = r.primal;
  j["hierarchy"] = r.hierarchy;
  j["resolved_order"] = opt(r.resolved_order);
  j["witness"] = r.witness ? witness_to_json(*r.witness) : Json(nullptr);
  j["validation"] = r.validation ? report_to_json(*r.validation) : Json(nullptr);
  Json o;
  o["ran"] = r.oracle.ran;
  o["skipped_reason"] = r.oracle.skipped_reason;
  o["feasible_rays"] = r.oracle.feasible_rays;
  o["min_lambda"] = opt(r.oracle.min_lambda);
  o["agreement"] = opt(r.oracle.agreement);
  o["xw_distance"] = opt(r.oracle.xw_distance);
  j["oracle"] = o;
  j["anomalies"] = r.anomalies;
  j["timings"] = r.timings;
  j["version"] = r.version;
  j["config"] = options_to_json(r.config);
  return j;
}

AnalysisReport report_from_json(const Json& j) {
  AnalysisReport r;
  const Json& sys = j.at("system");
  r.system.n = sys.at("n").get<int>();
  r.system.m = sys.at("m").get<int>();
  r.system.hashes = sys.at("hashes").get<std::map<std::string, std::string>>();
  r.system.d_norm = sys.at("d_norm").get<double>();
  r.verdict = verdict_from_string(j.at("verdict").get<std::string>());
  r.exit_code = j.at("exit_code").get<int>();
  r.primal = j.at("primal");
  r.hierarchy = j.at("hierarchy");
  r.resolved_order = opt_get<int>(j.at("resolved_order"));
  if (!j.at("witness").is_null()) {
    const Json& w = j.at("witness");
    r.witness = RayWitness{vector_from_json(w.at("x"), "x"), vector_from_json(w.at("w"), "w"),
                           w.at("lambda").get<double>()};
  }
  if (!j.at("validation").is_null()) r.validation = validation_from_json(j.at("validation"));
  const Json& o = j.at("oracle");
  r.oracle.ran = o.at("ran").get<bool>();
  r.oracle.skipped_reason = o.at("skipped_reason").get<std::string>();
  r.oracle.feasible_rays = o.at("feasible_rays").get<int>();
  r.oracle.min_lambda = opt_get<double>(o.at("min_lambda"));
  r.oracle.agreement = opt_get<bool>(o.at("agreement"));
  r.oracle.xw_distance = opt_get<double>(o.at("xw_distance"));
  r.anomalies = j.at("anomalies").get<std::vector<std::string>>();
  r.timings = j.at("timings").get<std::map<std::string, double>>();
  r.version = j.at("version").get<std::string>();
  r.config = options_from_json(j.at("config"));
  return r;
}

int oracle_exit_code(const OracleResult& result) {
  bool zero = false;
  for (const auto& c : result.feasible()) {
    if (c.lambda > kSignTol) return kExitUnstable;
    zero = true;
  }
  return zero ? kExitNonConvergentRay : kExitStable;
}

std::string field_grid_csv(const ReluSystem& sys, double xmin, double xmax, double ymin, double ymax, int steps) {
  if (sys.n() != 2) throw InputError("--field-grid needs a 2-D system");
  if (steps < 2) throw InputError("--field-grid needs at least 2 steps");
  std::ostringstream out;
  out << "x1,x2,dx1,dx2\n";
  char buf[128];
  for (int i = 0; i < steps; ++i)
    for (int k = 0; k < steps; ++k) {
      Eigen::VectorXd x(2);
      x << xmin + (xmax - xmin) * i / (steps - 1), ymin + (ymax - ymin) * k / (steps - 1);
      const Eigen::VectorXd f = vector_field(sys, x);
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", x(0), x(1), f(0), f(1));
      out << buf;
    }
  return out.str();
}

}  // namespace relustab
