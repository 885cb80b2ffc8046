#include "relustab/system/relu_system.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

#include "relustab/conic/linalg.hpp"

namespace relustab {
namespace {

constexpr int kMaxPatternBits = 16;

Eigen::MatrixXd sub(const Eigen::MatrixXd& m, const std::vector<int>& r, const std::vector<int>& c) {
  Eigen::MatrixXd s(r.size(), c.size());
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t j = 0; j < c.size(); ++j) s(i, j) = m(r[i], c[j]);
  return s;
}

std::vector<int> members(unsigned mask, int m) {
  std::vector<int> out;
  for (int i = 0; i < m; ++i)
    if (mask & (1u << i)) out.push_back(i);
  return out;
}

bool all_principal_minors_positive(const Eigen::MatrixXd& d) {
  const int m = static_cast<int>(d.rows());
  const Eigen::MatrixXd imd = Eigen::MatrixXd::Identity(m, m) - d;
  for (unsigned mask = 1; mask < (1u << m); ++mask) {
    const std::vector<int> j = members(mask, m);
    if (!(sub(imd, j, j).determinant() > 0.0)) return false;
  }
  return true;
}

// Candidate solution for the activation set J: z_J = (I − D_JJ)⁻¹ (Cx)_J,
// z_rest = (Cx)_rest + D_rest,J z_J. Valid when z_J ≥ 0 and z_rest ≤ 0.
bool pattern_candidate(const Eigen::MatrixXd& d, const Eigen::VectorXd& cx, const std::vector<char>& on,
                       Eigen::VectorXd& z) {
  const int m = static_cast<int>(d.rows());
  std::vector<int> j, rest;
  for (int i = 0; i < m; ++i) (on[i] ? j : rest).push_back(i);
  Eigen::VectorXd zj;
  if (!j.empty()) {
    const Eigen::MatrixXd k = Eigen::MatrixXd::Identity(j.size(), j.size()) - sub(d, j, j);
    Eigen::VectorXd rhs(j.size());
    for (std::size_t a = 0; a < j.size(); ++a) rhs(a) = cx(j[a]);
    zj = k.partialPivLu().solve(rhs);
  }
  z = cx;
  for (std::size_t a = 0; a < j.size(); ++a) z(j[a]) = zj(a);
  for (int r : rest) {
    double v = cx(r);
    for (std::size_t a = 0; a < j.size(); ++a) v += d(r, j[a]) * zj(a);
    z(r) = v;
  }
  const double scale = 1.0 + cx.cwiseAbs().maxCoeff();
  for (int i : j)
    if (z(i) < -1e-12 * scale) return false;
  for (int r : rest)
    if (z(r) > 1e-12 * scale) return false;
  return true;
}

}  // namespace

double spectral_abscissa(const Eigen::MatrixXd& A) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
  return es.eigenvalues().real().maxCoeff();
}

ReluSystem::ReluSystem(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::MatrixXd C, Eigen::MatrixXd D,
                       bool require_hurwitz)
    : A_(std::move(A)), B_(std::move(B)), C_(std::move(C)), D_(std::move(D)) {
  const auto n = A_.rows();
  const auto m = D_.rows();
  if (n < 1 || A_.cols() != n) throw InvalidSystem("A must be square and nonempty");
  if (m < 1 || D_.cols() != m) throw InvalidSystem("D must be square and nonempty");
  if (B_.rows() != n || B_.cols() != m) throw InvalidSystem("B must be n x m");
  if (C_.rows() != m || C_.cols() != n) throw InvalidSystem("C must be m x n");
  for (const auto* mat : {&A_, &B_, &C_, &D_})
    if (!mat->allFinite()) throw InvalidSystem("system matrices must be finite");
  d_norm_ = spectral_norm(D_);
  if (d_norm_ >= 1.0) {
    if (m > kMaxPatternBits || !all_principal_minors_positive(D_)) {
      throw InvalidSystem("loop not well-posed: ‖D‖ >= 1 and I − D has a nonpositive principal minor");
    }
  }
  hurwitz_warning_ = !(spectral_abscissa(A_) < 0.0);
  if (require_hurwitz && hurwitz_warning_) throw InvalidSystem("A is not Hurwitz");
}

Eigen::VectorXd relu(const Eigen::VectorXd& q) { return q.cwiseMax(0.0); }

bool EncodingResiduals::holds(double tol) const {
  return (diff.array() >= -tol).all() && (value.array() >= -tol).all() &&
         (product.array().abs() <= tol).all();
}

EncodingResiduals relu_encoding_residuals(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  if (p.size() != q.size()) throw std::invalid_argument("relu_encoding_residuals: size mismatch");
  EncodingResiduals r;
  r.diff = p - q;
  r.value = p;
  r.product = r.diff.cwiseProduct(p);
  return r;
}

LoopSolution resolve_loop(const ReluSystem& sys, const Eigen::VectorXd& x, double tol, int max_iter) {
  if (!(tol > 0)) throw std::invalid_argument("resolve_loop: tol must be positive");
  if (x.size() != sys.n()) throw std::invalid_argument("resolve_loop: state dimension mismatch");
  const Eigen::VectorXd cx = sys.C() * x;
  LoopSolution out;
  if (sys.contraction()) {
    Eigen::VectorXd z = cx;
    double best = std::numeric_limits<double>::infinity();
    int flat = 0;
    for (int k = 0; k < max_iter; ++k) {
      const Eigen::VectorXd next = cx + sys.D() * relu(z);
      const double res = (z - next).norm();
      out.residuals.push_back(res);
      out.iterations = k + 1;
      if (res <= tol) {
        // z is the last iterate whose residual was measured.
        out.z = z;
        out.w = relu(z);
        return out;
      }
      // For large |Cx| the rounding floor sits above tol; the pattern solve below is exact.
      if (res < best) {
        best = res;
        flat = 0;
      } else if (++flat > 50) {
        break;
      }
      z = next;
    }
    if (best > 1e3 * std::numeric_limits<double>::epsilon() * (1.0 + z.norm()))
      throw NonConvergence("resolve_loop: Picard iteration did not reach tolerance");
  }

  // No contraction, or Picard stalled: piecewise-linear solve over activation patterns.
  const int m = sys.m();
  out.pattern_solve = true;
  out.residuals.clear();
  std::vector<char> on(m);
  for (int i = 0; i < m; ++i) on[i] = cx(i) > 0;
  std::set<std::vector<char>> seen;
  Eigen::VectorXd z;
  for (int k = 0; k < 4 * m + 4 && seen.insert(on).second; ++k) {
    ++out.iterations;
    if (pattern_candidate(sys.D(), cx, on, z)) {
      out.z = z;
      out.w = relu(z);
      return out;
    }
    for (int i = 0; i < m; ++i) on[i] = z(i) > 0;
  }
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    ++out.iterations;
    for (int i = 0; i < m; ++i) on[i] = (mask >> i) & 1u;
    if (pattern_candidate(sys.D(), cx, on, z)) {
      out.z = z;
      out.w = relu(z);
      return out;
    }
  }
  throw NonConvergence("resolve_loop: no activation pattern solves the loop equation");
}

Eigen::VectorXd vector_field(const ReluSystem& sys, const Eigen::VectorXd& x) {
  const LoopSolution loop = resolve_loop(sys, x);
  return sys.A() * x + sys.B() * loop.w;
}

Trajectory simulate(const ReluSystem& sys, const Eigen::VectorXd& x0, double t_end, double h) {
  if (!(t_end > 0) || !(h > 0) || h > t_end) {
    throw std::invalid_argument("simulate: need t_end > 0 and 0 < h <= t_end");
  }
  if (x0.size() != sys.n()) throw std::invalid_argument("simulate: state dimension mismatch");
  const long steps = static_cast<long>(std::ceil(t_end / h - 1e-9));
  Trajectory traj;
  traj.times.reserve(steps + 1);
  traj.states.reserve(steps + 1);
  traj.times.push_back(0.0);
  traj.states.push_back(x0);
  Eigen::VectorXd x = x0;
  for (long k = 1; k <= steps; ++k) {
    const Eigen::VectorXd k1 = vector_field(sys, x);
    const Eigen::VectorXd k2 = vector_field(sys, x + 0.5 * h * k1);
    const Eigen::VectorXd k3 = vector_field(sys, x + 0.5 * h * k2);
    const Eigen::VectorXd k4 = vector_field(sys, x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!x.allFinite() || x.norm() > kOverflowNorm) {
      traj.divergent = true;
      throw SimulationOverflow(std::move(traj));
    }
    traj.times.push_back(static_cast<double>(k) * h);
    traj.states.push_back(x);
  }
  return traj;
}

std::string trajectory_csv(const Trajectory& traj) {
  std::string out = "t";
  const int n = traj.states.empty() ? 0 : static_cast<int>(traj.states.front().size());
  for (int i = 1; i <= n; ++i) out += ",x" + std::to_string(i);
  out += '\n';
  char buf[64];
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g", traj.times[k]);
    out += buf;
    for (int i = 0; i < n; ++i) {
      std::snprintf(buf, sizeof buf, ",%.17g", traj.states[k](i));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

ValidationReport validate_witness(const ReluSystem& sys, const RayWitness& wit, double tol) {
  if (wit.x.size() != sys.n() || wit.w.size() != sys.m()) {
    throw std::invalid_argument("validate_witness: dimension mismatch");
  }
  ValidationReport r;
  r.lambda = wit.lambda;
  r.residual_eig = (sys.A() * wit.x + sys.B() * wit.w - wit.lambda * wit.x).norm();
  const Eigen::VectorXd gap = wit.w - (sys.C() * wit.x + sys.D() * wit.w);
  r.min_sign = std::min(gap.minCoeff(), wit.w.minCoeff());
  r.max_compl = gap.cwiseProduct(wit.w).cwiseAbs().maxCoeff();
  r.pass = wit.x.norm() > 0 && r.residual_eig <= tol && r.min_sign >= -tol && r.max_compl <= tol &&
           wit.lambda >= -tol;
  return r;
}

RayWitness normalize_witness(const RayWitness& wit) {
  const double nx = wit.x.norm();
  if (!(nx > 0)) throw std::invalid_argument("normalize_witness: zero state");
  return {wit.x / nx, wit.w / nx, wit.lambda};
}

}  // namespace relustab
