#include "relustab/certificates/lmi.hpp"

#include <chrono>
#include <cmath>

#include "relustab/conic/linalg.hpp"
#include "relustab/oracle/enumeration.hpp"

namespace relustab {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// M = [C, D; 0, I]
Eigen::MatrixXd loop_map(const ReluSystem& sys) {
  const int n = sys.n(), m = sys.m();
  Eigen::MatrixXd mm = Eigen::MatrixXd::Zero(2 * m, n + m);
  mm.topLeftCorner(m, n) = sys.C();
  mm.topRightCorner(m, m) = sys.D();
  mm.bottomRightCorner(m, m).setIdentity();
  return mm;
}

// [−C, I − D; 0, I]
Eigen::MatrixXd sign_map(const ReluSystem& sys) { return structure_E(sys.m()) * loop_map(sys); }

ExprMatrix expr_identity(int d, const LinearExpr& scale) {
  ExprMatrix e(d, d);
  for (int i = 0; i < d; ++i) e(i, i) = scale;
  return e;
}

}  // namespace

Eigen::MatrixXd structure_E(int m) {
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(2 * m, 2 * m);
  e.topLeftCorner(m, m) = -Eigen::MatrixXd::Identity(m, m);
  e.topRightCorner(m, m).setIdentity();
  e.bottomRightCorner(m, m).setIdentity();
  return e;
}

SymMatrix assemble_multiplier(const NNMultiplier& mult) {
  const int m = static_cast<int>(mult.J.size());
  if (mult.Q.rows() != 2 * m || mult.Q.cols() != 2 * m) {
    throw std::invalid_argument("assemble_multiplier: Q must be 2m x 2m");
  }
  Eigen::MatrixXd inner = mult.Q;
  for (int i = 0; i < m; ++i) {
    inner(i, m + i) += mult.J(i);
    inner(m + i, i) += mult.J(i);
  }
  const Eigen::MatrixXd e = structure_E(m);
  return SymMatrix(Eigen::MatrixXd(e.transpose() * inner * e));
}

double multiplier_form(const SymMatrix& pi, const Eigen::VectorXd& q, const Eigen::VectorXd& p) {
  Eigen::VectorXd v(q.size() + p.size());
  v << q, p;
  return v.dot(pi.matrix() * v);
}

Eigen::MatrixXd primal_lmi_lhs(const ReluSystem& sys, const Eigen::MatrixXd& P, const SymMatrix& pi) {
  const int n = sys.n(), m = sys.m();
  Eigen::MatrixXd lhs = Eigen::MatrixXd::Zero(n + m, n + m);
  lhs.topLeftCorner(n, n) = P * sys.A() + sys.A().transpose() * P;
  lhs.topRightCorner(n, m) = P * sys.B();
  lhs.bottomLeftCorner(m, n) = sys.B().transpose() * P;
  const Eigen::MatrixXd mm = loop_map(sys);
  lhs += mm.transpose() * pi.matrix() * mm;
  return 0.5 * (lhs + lhs.transpose());
}

double default_eps_margin(const ReluSystem& sys) { return 1e-6 * (1.0 + spectral_norm(sys.A())); }

PrimalLmi build_primal_lmi(const ReluSystem& sys, double eps_margin) {
  if (!(eps_margin > 0)) throw std::invalid_argument("build_primal_lmi: eps_margin must be positive");
  const int n = sys.n(), m = sys.m();
  PrimalLmi lmi;
  lmi.eps_margin = eps_margin;
  SdpProblem& p = lmi.problem;

  const int pb = p.add_psd_block("P_shift", n);
  lmi.P = p.psd_matrix(pb);
  for (int i = 0; i < n; ++i) lmi.P(i, i) += LinearExpr(eps_margin);
  LinearExpr trace;
  for (int i = 0; i < n; ++i) trace += lmi.P(i, i);
  p.add_equality(trace, 1.0);

  lmi.Q = ExprMatrix(2 * m, 2 * m);
  for (int j = 0; j < 2 * m; ++j)
    for (int i = j; i < 2 * m; ++i) {
      const int k = p.add_nonneg(1);
      lmi.Q(i, j) = p.nonneg(k);
      lmi.Q(j, i) = p.nonneg(k);
    }
  const int jf = p.add_free(m);
  ExprMatrix inner = lmi.Q;
  for (int i = 0; i < m; ++i) {
    lmi.J.push_back(p.free(jf + i));
    inner(i, m + i) += lmi.J.back();
    inner(m + i, i) += lmi.J.back();
  }
  lmi.t = p.free(p.add_free(1));

  const Eigen::MatrixXd e = structure_E(m);
  const ExprMatrix pi = e.transpose() * inner * e;
  const Eigen::MatrixXd mm = loop_map(sys);
  ExprMatrix lhs = mm.transpose() * pi * mm;
  const ExprMatrix pa = lmi.P * sys.A();
  lhs = lhs + [&] {
    ExprMatrix lyap(n + m, n + m);
    lyap.set_block(0, 0, pa.hermitian_part());
    const ExprMatrix pbm = lmi.P * sys.B();
    lyap.set_block(0, n, pbm);
    lyap.set_block(n, 0, pbm.transpose());
    return lyap;
  }();
  p.constrain_psd("margin", expr_identity(n + m, lmi.t) - lhs);
  p.set_objective(lmi.t);
  return lmi;
}

bool verify_certificate(const ReluSystem& sys, PrimalCertificate& cert) {
  const SymMatrix pi = assemble_multiplier(cert.multiplier);
  const Eigen::MatrixXd lhs = primal_lmi_lhs(sys, cert.P, pi);
  cert.margin = -SymMatrix(lhs).max_eigenvalue();
  cert.margin_P = SymMatrix(cert.P).min_eigenvalue();
  cert.min_Q = cert.multiplier.Q.minCoeff();
  return cert.margin > 0 && cert.margin_P > 0 && cert.min_Q >= -kSignTol;
}

PrimalOutcome solve_primal(const ReluSystem& sys, double eps_margin, const SolverSettings& settings) {
  const auto t0 = Clock::now();
  const PrimalLmi lmi = build_primal_lmi(sys, eps_margin);
  const SdpSolution sol = solve_sdp(lmi.problem, settings);
  PrimalOutcome out;
  out.status = sol.status;
  if (sol.ok()) {
    out.t = sol.value(lmi.t);
    out.strictly_feasible = out.t < -10 * settings.feas_tol;
    out.inconclusive = std::abs(out.t) <= 10 * settings.feas_tol;
    if (out.strictly_feasible) {
      PrimalCertificate cert;
      cert.P = sol.value(lmi.P);
      cert.P = 0.5 * (cert.P + cert.P.transpose());
      cert.multiplier.Q = sol.value(lmi.Q);
      cert.multiplier.J.resize(sys.m());
      for (int i = 0; i < sys.m(); ++i) cert.multiplier.J(i) = sol.value(lmi.J[i]);
      if (verify_certificate(sys, cert)) out.certificate = cert;
    }
  }
  out.seconds = seconds_since(t0);
  return out;
}

std::optional<PrimalCertificate> check_stability(const ReluSystem& sys) {
  const PrimalOutcome out = solve_primal(sys, default_eps_margin(sys));
  if (out.status == SolveStatus::kNumericalFailure) throw SolverFailure("primal LMI: numerical failure");
  return out.certificate;
}

DualLmi build_dual_lmi(const ReluSystem& sys) {
  const int n = sys.n(), m = sys.m();
  DualLmi lmi;
  SdpProblem& p = lmi.problem;
  lmi.h_block = p.add_psd_block("H", n + m);
  const ExprMatrix h = p.psd_matrix(lmi.h_block);
  const ExprMatrix h11 = h.block(0, 0, n, n);
  const ExprMatrix h12 = h.block(0, n, n, m);
  const ExprMatrix h22 = h.block(n, n, m, m);

  p.constrain_psd("growth", (sys.A() * h11 + sys.B() * h12.transpose()).hermitian_part());

  const Eigen::MatrixXd s = sign_map(sys);
  const ExprMatrix sh = s * h * s.transpose();
  for (int j = 0; j < 2 * m; ++j)
    for (int i = j; i < 2 * m; ++i) p.constrain_nonneg(sh(i, j));

  const Eigen::MatrixXd imd = Eigen::MatrixXd::Identity(m, m) - sys.D();
  const ExprMatrix compl_expr = (-sys.C()) * h12 + imd * h22;
  for (int i = 0; i < m; ++i) p.constrain_zero(compl_expr(i, i));

  LinearExpr tr11, tr;
  for (int i = 0; i < n; ++i) tr11 += h(i, i);
  for (int i = 0; i < n + m; ++i) tr += h(i, i);
  p.add_equality(tr11, 1.0);
  p.set_objective(tr);
  return lmi;
}

RayWitness orient_witness(const ReluSystem& sys, const Eigen::VectorXd& x, const Eigen::VectorXd& w) {
  auto score = [&](const Eigen::VectorXd& xs, const Eigen::VectorXd& ws) {
    const Eigen::VectorXd gap = ws - (sys.C() * xs + sys.D() * ws);
    return std::min(gap.minCoeff(), ws.minCoeff());
  };
  const bool flip = score(-x, -w) > score(x, w);
  RayWitness r{flip ? Eigen::VectorXd(-x) : x, flip ? Eigen::VectorXd(-w) : w, 0.0};
  const double xx = r.x.squaredNorm();
  if (xx > 0) {
    r.lambda = r.x.dot(sys.A() * r.x + sys.B() * r.w) / xx;
    r = normalize_witness(r);
  }
  return r;
}

std::optional<RayWitness> accept_witness(const ReluSystem& sys, RayWitness wit) {
  if (!(wit.x.norm() > 0)) return std::nullopt;
  if (wit.lambda < -kSignTol) return std::nullopt;
  if (wit.lambda <= kSignTol) wit.lambda = 0.0;
  if (!validate_witness(sys, wit, 1e-6).pass) return std::nullopt;
  return wit;
}

std::optional<RayWitness> polish_witness(const ReluSystem& sys, const RayWitness& wit) {
  const int n = sys.n(), m = sys.m();
  const double wmax = wit.w.size() ? wit.w.cwiseAbs().maxCoeff() : 0.0;
  ActivationPattern pat;
  for (int i = 0; i < m; ++i)
    if (wit.w(i) > kPolishSupport * std::max(wmax, 1.0)) pat.J.push_back(i);
  const Eigen::MatrixXd f = build_FJ(sys, pat);
  const Eigen::MatrixXd k = sys.A() + sys.B() * f * sys.C();

  // Inverse iteration from the SDP factor; the shift is nudged off λ so the
  // solve stays well-defined.
  Eigen::VectorXd x = wit.x.normalized();
  double lambda = wit.lambda;
  for (int it = 0; it < 8; ++it) {
    const double shift = lambda + 1e-10 * (1.0 + std::abs(lambda));
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(k - shift * Eigen::MatrixXd::Identity(n, n));
    Eigen::VectorXd y = lu.solve(x);
    if (!y.allFinite() || !(y.norm() > 0)) return std::nullopt;
    y.normalize();
    if (y.dot(x) < 0) y = -y;
    x = y;
    lambda = x.dot(k * x);
  }
  RayWitness out{x, f * sys.C() * x, lambda};
  const double nw = std::sqrt(wit.x.squaredNorm() + wit.w.squaredNorm());
  const double no = std::sqrt(out.x.squaredNorm() + out.w.squaredNorm());
  Eigen::VectorXd a(n + m), b(n + m);
  a << wit.x / nw, wit.w / nw;
  b << out.x / no, out.w / no;
  if ((a - b).norm() > kPolishRadius || std::abs(lambda - wit.lambda) > kPolishRadius) return std::nullopt;
  return out;
}

std::optional<RayWitness> extract_witness(const ReluSystem& sys, const DualSolutionH& h, double rank_tol) {
  if (numerical_rank(h.H, rank_tol) != 1) return std::nullopt;
  Eigen::VectorXd v;
  try {
    v = rank_one_factor(h.H, rank_tol);
  } catch (const RankError&) {
    return std::nullopt;
  }
  const int n = sys.n();
  const RayWitness raw = orient_witness(sys, v.head(n), v.tail(sys.m()));
  if (auto w = accept_witness(sys, raw)) return w;
  if (auto p = polish_witness(sys, raw)) return accept_witness(sys, *p);
  return std::nullopt;
}

DualOutcome solve_dual(const ReluSystem& sys, double rank_tol, const SolverSettings& settings) {
  const auto t0 = Clock::now();
  const DualLmi lmi = build_dual_lmi(sys);
  const SdpSolution sol = solve_sdp(lmi.problem, settings);
  DualOutcome out;
  out.status = sol.status;
  if (sol.ok()) {
    DualSolutionH h{SymMatrix(sol.psd_values[lmi.h_block]), 0, sys.n()};
    h.rank_estimate = numerical_rank(h.H, rank_tol);
    out.eigenvalue_profile = eigenvalue_profile(h.H, 5);
    out.witness = extract_witness(sys, h, rank_tol);
    out.solution = h;
  }
  out.seconds = seconds_since(t0);
  return out;
}

Json certificate_to_json(const PrimalCertificate& cert) {
  Json j;
  j["P"] = to_json(cert.P);
  j["Q"] = to_json(cert.multiplier.Q);
  j["J"] = to_json(cert.multiplier.J);
  j["margin"] = cert.margin;
  j["margin_P"] = cert.margin_P;
  j["min_Q"] = cert.min_Q;
  return j;
}

Json primal_to_json(const PrimalOutcome& out) {
  Json j;
  j["status"] = to_string(out.status);
  j["t"] = out.t;
  j["strictly_feasible"] = out.strictly_feasible;
  j["inconclusive"] = out.inconclusive;
  j["certificate"] = out.certificate ? certificate_to_json(*out.certificate) : Json(nullptr);
  j["seconds"] = out.seconds;
  return j;
}

Json dual_to_json(const DualOutcome& out) {
  Json j;
  j["status"] = to_string(out.status);
  if (out.solution) {
    j["H"] = to_json(out.solution->H.matrix());
    j["rank"] = out.solution->rank_estimate;
    j["eigenvalue_profile"] = to_json(out.eigenvalue_profile);
  } else {
    j["H"] = nullptr;
    j["rank"] = nullptr;
    j["eigenvalue_profile"] = nullptr;
  }
  j["witness"] = out.witness ? witness_to_json(*out.witness) : Json(nullptr);
  j["seconds"] = out.seconds;
  return j;
}

}  // namespace relustab
