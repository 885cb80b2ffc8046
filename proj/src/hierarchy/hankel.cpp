#include "relustab/hierarchy/hankel.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "relustab/certificates/lmi.hpp"
#include "relustab/conic/linalg.hpp"

namespace relustab {
namespace {

using Clock = std::chrono::steady_clock;

Eigen::MatrixXd sign_map(const ReluSystem& sys) {
  const int n = sys.n(), m = sys.m();
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(2 * m, n + m);
  s.topLeftCorner(m, n) = -sys.C();
  s.topRightCorner(m, m) = Eigen::MatrixXd::Identity(m, m) - sys.D();
  s.bottomRightCorner(m, m).setIdentity();
  return s;
}

Eigen::MatrixXd ab(const ReluSystem& sys) {
  Eigen::MatrixXd r(sys.n(), sys.n() + sys.m());
  r << sys.A(), sys.B();
  return r;
}

}  // namespace

HankelRelaxation build_relaxation(const ReluSystem& sys, int order) {
  if (order < 1) throw std::invalid_argument("build_relaxation: order must be >= 1");
  const int n = sys.n(), m = sys.m(), d = n + m;
  HankelRelaxation rel;
  rel.order = order;
  rel.block_dim = d;
  SdpProblem& p = rel.problem;
  const int nb = 2 * order - 1;
  std::vector<ExprMatrix> h;
  for (int i = 0; i < nb; ++i) {
    rel.blocks.push_back(p.add_psd_block("H" + std::to_string(i), d));
    h.push_back(p.psd_matrix(rel.blocks.back()));
  }
  rel.assembled = ExprMatrix(order * d, order * d);
  for (int i = 0; i < order; ++i)
    for (int j = 0; j < order; ++j) rel.assembled.set_block(i * d, j * d, h[i + j]);
  // At N = 1 the assembled matrix is ℋ_0 itself.
  if (order > 1) p.constrain_psd("assembled", rel.assembled);

  const Eigen::MatrixXd abm = ab(sys);
  for (int i = 0; i + 1 < nb; ++i) {
    const ExprMatrix lhs = abm * h[i];
    const ExprMatrix rhs = h[i + 1].block(0, 0, n, d);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < d; ++c) p.constrain_zero(lhs(r, c) - rhs(r, c));
  }
  const ExprMatrix top = abm * h[nb - 1].block(0, 0, d, n);
  p.constrain_psd("growth", top.hermitian_part());

  const Eigen::MatrixXd s = sign_map(sys);
  const Eigen::MatrixXd su = s.topRows(m);
  for (int i = 0; i < nb; ++i) {
    const ExprMatrix sh = s * h[i] * s.transpose();
    for (int c = 0; c < 2 * m; ++c)
      for (int r = c; r < 2 * m; ++r) p.constrain_nonneg(sh(r, c));
    const ExprMatrix cross = su * h[i].block(0, n, d, m);
    for (int k = 0; k < m; ++k) p.constrain_zero(cross(k, k));
  }

  LinearExpr norm, tr;
  for (int k = 0; k < n; ++k) norm += h[0](k, k);
  for (int k = 0; k < order * d; ++k) tr += rel.assembled(k, k);
  p.add_equality(norm, 1.0);
  p.set_objective(tr);
  return rel;
}

HankelSolution hankel_values(const HankelRelaxation& rel, const SdpSolution& sol) {
  HankelSolution out;
  out.order = rel.order;
  out.block_dim = rel.block_dim;
  for (int b : rel.blocks) out.blocks.emplace_back(sol.psd_values.at(b));
  const int d = rel.block_dim;
  Eigen::MatrixXd a(rel.order * d, rel.order * d);
  for (int i = 0; i < rel.order; ++i)
    for (int j = 0; j < rel.order; ++j) a.block(i * d, j * d, d, d) = out.blocks[i + j].matrix();
  out.assembled = SymMatrix(a);
  return out;
}

std::optional<RayWitness> extract_witness_from_hankel(const ReluSystem& sys, const HankelSolution& h,
                                                      double rank_tol) {
  if (h.assembled.dim() == 0 || numerical_rank(h.assembled, rank_tol) != 1) return std::nullopt;
  Eigen::VectorXd v;
  try {
    v = rank_one_factor(h.assembled, rank_tol);
  } catch (const RankError&) {
    return std::nullopt;
  }
  const int n = sys.n(), d = h.block_dim;
  const Eigen::VectorXd b0 = v.head(d);
  const double b0n = b0.squaredNorm();
  if (!(b0n > 0)) return std::nullopt;

  RayWitness raw = orient_witness(sys, b0.head(n), b0.tail(sys.m()));
  if (h.order >= 2) {
    const double lambda = v.segment(d, d).dot(b0) / b0n;
    for (int k = 1; k < h.order; ++k) {
      const double dev = (v.segment(k * d, d) - std::pow(lambda, k) * b0).norm();
      if (dev > kHankelTol * std::sqrt(b0n)) return std::nullopt;
    }
    raw.lambda = lambda;
  }
  if (auto w = accept_witness(sys, raw)) return w;
  if (auto p = polish_witness(sys, raw)) return accept_witness(sys, *p);
  return std::nullopt;
}

const char* to_string(OrderStatus s) {
  switch (s) {
    case OrderStatus::kFeasible: return "Feasible";
    case OrderStatus::kInfeasible: return "Infeasible";
    case OrderStatus::kNumericalFailure: return "NumericalFailure";
  }
  return "Unknown";
}

OrderResult solve_order(const ReluSystem& sys, int order, double rank_tol, const SolverSettings& settings) {
  const auto t0 = Clock::now();
  const HankelRelaxation rel = build_relaxation(sys, order);
  const SdpSolution sol = solve_sdp(rel.problem, settings);
  OrderResult r;
  r.order = order;
  if (sol.ok()) {
    r.status = OrderStatus::kFeasible;
    const HankelSolution h = hankel_values(rel, sol);
    r.rank_estimate = numerical_rank(h.assembled, rank_tol);
    r.eigenvalue_profile = eigenvalue_profile(h.assembled, 5);
    r.objective = sol.objective_value;
    const Eigen::MatrixXd abm = ab(sys);
    for (std::size_t i = 0; i + 1 < h.blocks.size(); ++i) {
      const Eigen::MatrixXd res = abm * h.blocks[i].matrix() - h.blocks[i + 1].matrix().topRows(sys.n());
      r.shift_residual = std::max(r.shift_residual, res.cwiseAbs().maxCoeff());
    }
    r.witness = extract_witness_from_hankel(sys, h, rank_tol);
  } else if (sol.status == SolveStatus::kInfeasible) {
    r.status = OrderStatus::kInfeasible;
  }
  r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return r;
}

std::vector<OrderResult> run_hierarchy(const ReluSystem& sys, const HierarchyOptions& opts) {
  if (opts.max_order < 1) throw std::invalid_argument("run_hierarchy: max_order must be >= 1");
  std::vector<OrderResult> out;
  bool seen_infeasible = false;
  for (int order = 1; order <= opts.max_order; ++order) {
    OrderResult r = solve_order(sys, order, opts.rank_tol, opts.settings);
    // Feasibility at order N implies feasibility at every lower order.
    if (r.status == OrderStatus::kFeasible && seen_infeasible) r.anomaly = true;
    seen_infeasible = seen_infeasible || r.status == OrderStatus::kInfeasible;
    const bool stop = r.witness.has_value() || r.status == OrderStatus::kInfeasible;
    out.push_back(std::move(r));
    if (opts.stop_early && stop) break;
  }
  return out;
}

Json hierarchy_to_json(const std::vector<OrderResult>& results) {
  Json arr = Json::array();
  for (const auto& r : results) {
    Json j;
    j["order"] = r.order;
    j["status"] = to_string(r.status);
    j["rank"] = r.rank_estimate >= 0 ? Json(r.rank_estimate) : Json(nullptr);
    j["eigenvalue_profile"] = r.eigenvalue_profile.size() ? to_json(r.eigenvalue_profile) : Json(nullptr);
    j["witness"] = r.witness ? witness_to_json(*r.witness) : Json(nullptr);
    j["shift_residual"] = r.shift_residual;
    j["objective"] = r.objective;
    j["anomaly"] = r.anomaly;
    j["seconds"] = r.seconds;
    arr.push_back(j);
  }
  return arr;
}

}  // namespace relustab
