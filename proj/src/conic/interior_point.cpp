// Dense homogeneous self-dual interior-point method for the SdpProblem
// standard form. Nesterov-Todd scaling, Mehrotra predictor-corrector.
//
// Internally the problem is
//   min cᵀx  s.t.  A x = b,  x_c ∈ K (PSD blocks in svec form × R₊ᵖ), x_f free,
// with dual  max bᵀy  s.t.  s = c − Aᵀy,  s_c ∈ K,  s_f = 0.
// The embedding variables (x, y, s, τ, κ) start at (e, 0, e, 1, 1).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Sparse>

#include "relustab/conic/sdp_problem.hpp"

namespace relustab {
namespace {

constexpr double kSqrt2 = 1.41421356237309504880;

int svec_len(int d) { return d * (d + 1) / 2; }

// Column-major lower triangle, off-diagonals scaled by sqrt(2).
int svec_index(int d, int i, int j) {
  if (i < j) std::swap(i, j);
  return j * d - j * (j - 1) / 2 + (i - j);
}

Eigen::MatrixXd smat(const Eigen::Ref<const Eigen::VectorXd>& v, int d) {
  Eigen::MatrixXd m(d, d);
  int k = 0;
  for (int j = 0; j < d; ++j) {
    m(j, j) = v(k++);
    for (int i = j + 1; i < d; ++i) {
      m(i, j) = m(j, i) = v(k++) / kSqrt2;
    }
  }
  return m;
}

void svec_into(const Eigen::MatrixXd& m, Eigen::Ref<Eigen::VectorXd> out) {
  const int d = static_cast<int>(m.rows());
  int k = 0;
  for (int j = 0; j < d; ++j) {
    out(k++) = m(j, j);
    for (int i = j + 1; i < d; ++i) out(k++) = 0.5 * (m(i, j) + m(j, i)) * kSqrt2;
  }
}

struct Block {
  int dim = 0;
  int offset = 0;  // into the cone part of x
  int len = 0;
  std::vector<int> rows;     // equality rows touching the block
  Eigen::MatrixXd a;         // rows × len slice of A
  // NT scaling data for the current iterate.
  Eigen::MatrixXd r;         // X = R Λ Rᵀ, S = R⁻ᵀ Λ R⁻¹
  Eigen::MatrixXd r_inv;
  Eigen::MatrixXd w;         // R Rᵀ
  Eigen::VectorXd lambda;
};

class HsdSolver {
 public:
  HsdSolver(const SdpProblem& p, const SolverSettings& s);
  SdpSolution run();

 private:
  void assemble();
  bool presolve(SdpSolution& out);
  bool compute_scaling();
  void factor_kkt();
  Eigen::VectorXd solve_kkt(const Eigen::VectorXd& rhs) const;
  // 𝒲 applied to the cone part of v (in place on a copy).
  Eigen::VectorXd apply_w(const Eigen::VectorXd& vc) const;
  struct Direction {
    Eigen::VectorXd dx, dy, ds;
    double dtau = 0, dkappa = 0;
  };
  Direction newton_solve(const Eigen::VectorXd& rp, const Eigen::VectorXd& rd, double rg,
                         const Eigen::VectorXd& ry, double r_tk) const;
  Direction direction(double eta, const std::vector<Eigen::MatrixXd>& y_psd,
                      const Eigen::VectorXd& y_nn, double r_tk);
  double max_step(const Direction& d) const;
  void fill_solution(SdpSolution& out, SolveStatus status) const;
  void initialize();
  SolveStatus iterate(SdpSolution& out);
  bool project_primal();

  const SdpProblem& prob_;
  SolverSettings set_;

  // Original data in svec coordinates.
  int n_cone_ = 0, n_nn_ = 0, n_free_ = 0, n_ = 0;
  int nn_offset_ = 0;  // offset of the nonneg part within the cone part
  Eigen::SparseMatrix<double, Eigen::RowMajor> a_full_;
  Eigen::VectorXd b_full_, c_;
  std::vector<int> psd_dims_, psd_offsets_;

  // Reduced problem.
  std::vector<int> kept_rows_;
  Eigen::VectorXd row_scale_;  // original row = scale · reduced row
  Eigen::SparseMatrix<double, Eigen::RowMajor> a_;
  Eigen::SparseMatrix<double, Eigen::RowMajor> a_c_;  // cone columns of a_
  Eigen::SparseMatrix<double, Eigen::ColMajor> a_nn_, a_free_;
  Eigen::VectorXd b_;
  std::vector<Block> blocks_;
  std::vector<int> free_cols_;  // free columns kept (others pinned at 0)
  int m_ = 0;

  // Iterate.
  Eigen::VectorXd x_, y_, s_;  // s_ lives on the cone part only
  double tau_ = 1, kappa_ = 1;
  bool fixed_tau_ = false;  // infeasible-start mode: τ ≡ 1, no κ
  Eigen::VectorXd nn_w2_, nn_lambda_;  // nonneg scaling

  // KKT factorization.
  Eigen::MatrixXd kkt_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  bool use_llt_ = false;
  Eigen::VectorXd equil_;
  Eigen::VectorXd v_y_, v_f_;  // KKT solution for the τ column
  std::optional<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> aat_;
  double nu_ = 0;
  int iter_ = 0;
};

HsdSolver::HsdSolver(const SdpProblem& p, const SolverSettings& s) : prob_(p), set_(s) {
  assemble();
}

void HsdSolver::assemble() {
  int off = 0;
  for (const auto& blk : prob_.psd_blocks()) {
    psd_dims_.push_back(blk.dim);
    psd_offsets_.push_back(off);
    off += svec_len(blk.dim);
  }
  nn_offset_ = off;
  n_nn_ = prob_.nonneg_count();
  n_cone_ = off + n_nn_;
  n_free_ = prob_.free_count();
  n_ = n_cone_ + n_free_;

  auto column = [&](const VarRef& r, double coeff, double* scaled) -> int {
    switch (r.kind) {
      case VarKind::kPsd: {
        const int d = psd_dims_[r.block];
        *scaled = (r.row == r.col) ? coeff : coeff / kSqrt2;
        return psd_offsets_[r.block] + svec_index(d, r.row, r.col);
      }
      case VarKind::kNonneg: *scaled = coeff; return nn_offset_ + r.row;
      case VarKind::kFree: *scaled = coeff; return n_cone_ + r.row;
    }
    return -1;
  };

  const auto& eqs = prob_.equalities();
  std::vector<Eigen::Triplet<double>> trip;
  b_full_.resize(static_cast<int>(eqs.size()));
  for (int i = 0; i < static_cast<int>(eqs.size()); ++i) {
    for (const auto& [ref, coeff] : eqs[i].lhs.terms()) {
      double v = 0;
      const int col = column(ref, coeff, &v);
      trip.emplace_back(i, col, v);
    }
    b_full_(i) = eqs[i].rhs;
  }
  a_full_.resize(static_cast<int>(eqs.size()), n_);
  a_full_.setFromTriplets(trip.begin(), trip.end());
  c_ = Eigen::VectorXd::Zero(n_);
  for (const auto& [ref, coeff] : prob_.objective().terms()) {
    double v = 0;
    const int col = column(ref, coeff, &v);
    c_(col) += v;
  }
  nu_ = n_nn_;
  for (int d : psd_dims_) nu_ += d;
}

// Row normalization, removal of dependent rows, unreferenced free columns.
// Returns false when the outcome is already decided (written into out).
bool HsdSolver::presolve(SdpSolution& out) {
  const int m_all = static_cast<int>(a_full_.rows());
  Eigen::VectorXd norms = Eigen::VectorXd::Zero(m_all);
  for (int i = 0; i < m_all; ++i) norms(i) = a_full_.row(i).norm();

  // Rows that cancel to roundoff would be blown up to noise by the normalization.
  const double tiny = 1e-13 * (m_all ? norms.maxCoeff() : 0.0);
  std::vector<int> nonzero_rows;
  for (int i = 0; i < m_all; ++i) {
    if (norms(i) > tiny) {
      nonzero_rows.push_back(i);
    } else if (std::abs(b_full_(i)) > set_.feas_tol) {
      fill_solution(out, SolveStatus::kInfeasible);
      return false;
    }
  }

  // Dense normalized copy of the nonzero rows, transposed (columns = rows).
  const int mz = static_cast<int>(nonzero_rows.size());
  Eigen::MatrixXd at(n_, mz);
  Eigen::VectorXd bz(mz);
  for (int k = 0; k < mz; ++k) {
    const int i = nonzero_rows[k];
    at.col(k) = Eigen::VectorXd(a_full_.row(i).transpose()) / norms(i);
    bz(k) = b_full_(i) / norms(i);
  }
  std::vector<int> keep_local;
  if (mz > 0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(at);
    qr.setThreshold(1e-11);
    const int rank = static_cast<int>(qr.rank());
    const auto& perm = qr.colsPermutation().indices();
    for (int k = 0; k < rank; ++k) keep_local.push_back(perm(k));
    std::sort(keep_local.begin(), keep_local.end());
    if (rank < mz) {
      Eigen::MatrixXd ak(n_, rank);
      Eigen::VectorXd bk(rank);
      for (int k = 0; k < rank; ++k) {
        ak.col(k) = at.col(keep_local[k]);
        bk(k) = bz(keep_local[k]);
      }
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qk(ak);
      std::vector<char> kept(mz, 0);
      for (int k : keep_local) kept[k] = 1;
      for (int k = 0; k < mz; ++k) {
        if (kept[k]) continue;
        const Eigen::VectorXd coef = qk.solve(at.col(k));
        if (std::abs(bz(k) - coef.dot(bk)) > 1e-9 * (1.0 + bz.cwiseAbs().maxCoeff())) {
          fill_solution(out, SolveStatus::kInfeasible);
          return false;
        }
      }
    }
  }
  m_ = static_cast<int>(keep_local.size());
  row_scale_.resize(m_);
  b_.resize(m_);
  std::vector<Eigen::Triplet<double>> trip;
  for (int k = 0; k < m_; ++k) {
    const int i = nonzero_rows[keep_local[k]];
    kept_rows_.push_back(i);
    row_scale_(k) = norms(i);
    b_(k) = b_full_(i) / norms(i);
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(a_full_, i); it; ++it)
      trip.emplace_back(k, static_cast<int>(it.col()), it.value() / norms(i));
  }
  a_.resize(m_, n_);
  a_.setFromTriplets(trip.begin(), trip.end());

  Eigen::SparseMatrix<double, Eigen::ColMajor> acol = a_;
  for (int j = 0; j < n_free_; ++j) {
    const int col = n_cone_ + j;
    if (acol.col(col).nonZeros() == 0) {
      if (c_(col) != 0.0) {
        fill_solution(out, SolveStatus::kUnbounded);
        return false;
      }
      continue;
    }
    free_cols_.push_back(col);
  }
  a_nn_ = acol.middleCols(nn_offset_, n_nn_);
  a_free_.resize(m_, static_cast<int>(free_cols_.size()));
  {
    std::vector<Eigen::Triplet<double>> ft;
    for (int k = 0; k < static_cast<int>(free_cols_.size()); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(acol, free_cols_[k]); it; ++it)
        ft.emplace_back(static_cast<int>(it.row()), k, it.value());
    a_free_.setFromTriplets(ft.begin(), ft.end());
  }

  for (std::size_t k = 0; k < psd_dims_.size(); ++k) {
    Block blk;
    blk.dim = psd_dims_[k];
    blk.offset = psd_offsets_[k];
    blk.len = svec_len(blk.dim);
    Eigen::SparseMatrix<double, Eigen::ColMajor> slice = acol.middleCols(blk.offset, blk.len);
    std::vector<char> touch(m_, 0);
    for (int j = 0; j < blk.len; ++j)
      for (Eigen::SparseMatrix<double>::InnerIterator it(slice, j); it; ++it) touch[it.row()] = 1;
    for (int i = 0; i < m_; ++i)
      if (touch[i]) blk.rows.push_back(i);
    blk.a = Eigen::MatrixXd::Zero(static_cast<int>(blk.rows.size()), blk.len);
    std::vector<int> local(m_, -1);
    for (int t = 0; t < static_cast<int>(blk.rows.size()); ++t) local[blk.rows[t]] = t;
    for (int j = 0; j < blk.len; ++j)
      for (Eigen::SparseMatrix<double>::InnerIterator it(slice, j); it; ++it)
        blk.a(local[it.row()], j) = it.value();
    blocks_.push_back(std::move(blk));
  }
  return true;
}

bool HsdSolver::compute_scaling() {
  for (auto& blk : blocks_) {
    const Eigen::MatrixXd x = smat(x_.segment(blk.offset, blk.len), blk.dim);
    const Eigen::MatrixXd s = smat(s_.segment(blk.offset, blk.len), blk.dim);
    Eigen::LLT<Eigen::MatrixXd> lx(x), ls(s);
    if (lx.info() != Eigen::Success || ls.info() != Eigen::Success) return false;
    const Eigen::MatrixXd l_x = lx.matrixL();
    const Eigen::MatrixXd l_s = ls.matrixL();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(l_s.transpose() * l_x,
                                          Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::VectorXd sig = svd.singularValues();
    if (sig.minCoeff() <= 0) return false;
    const Eigen::VectorXd isq = sig.cwiseSqrt().cwiseInverse();
    blk.lambda = sig;
    blk.r = l_x * svd.matrixV() * isq.asDiagonal();
    blk.r_inv = isq.asDiagonal() * svd.matrixU().transpose() * l_s.transpose();
    blk.w = blk.r * blk.r.transpose();
  }
  const Eigen::VectorXd xn = x_.segment(nn_offset_, n_nn_);
  const Eigen::VectorXd sn = s_.segment(nn_offset_, n_nn_);
  if (n_nn_ > 0 && (xn.minCoeff() <= 0 || sn.minCoeff() <= 0)) return false;
  nn_w2_ = xn.cwiseQuotient(sn);
  nn_lambda_ = xn.cwiseProduct(sn).cwiseSqrt();
  return true;
}

Eigen::VectorXd HsdSolver::apply_w(const Eigen::VectorXd& vc) const {
  Eigen::VectorXd out(n_cone_);
  for (const auto& blk : blocks_) {
    const Eigen::MatrixXd z = smat(vc.segment(blk.offset, blk.len), blk.dim);
    svec_into(blk.w * z * blk.w, out.segment(blk.offset, blk.len));
  }
  out.segment(nn_offset_, n_nn_) = nn_w2_.cwiseProduct(vc.segment(nn_offset_, n_nn_));
  return out;
}

void HsdSolver::factor_kkt() {
  const int nf = static_cast<int>(free_cols_.size());
  kkt_ = Eigen::MatrixXd::Zero(m_ + nf, m_ + nf);
  for (const auto& blk : blocks_) {
    const int q = static_cast<int>(blk.rows.size());
    if (q == 0) continue;
    Eigen::MatrixXd f(q, blk.len);
    for (int t = 0; t < q; ++t) {
      const Eigen::MatrixXd z = smat(blk.a.row(t).transpose(), blk.dim);
      Eigen::VectorXd row(blk.len);
      svec_into(blk.w * z * blk.w, row);
      f.row(t) = row.transpose();
    }
    const Eigen::MatrixXd mb = blk.a * f.transpose();
    for (int t = 0; t < q; ++t)
      for (int u = 0; u < q; ++u) kkt_(blk.rows[t], blk.rows[u]) += mb(t, u);
  }
  if (n_nn_ > 0) {
    const Eigen::SparseMatrix<double> scaled = a_nn_ * nn_w2_.asDiagonal();
    const Eigen::SparseMatrix<double> mn = scaled * Eigen::SparseMatrix<double>(a_nn_.transpose());
    for (int k = 0; k < mn.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(mn, k); it; ++it)
        kkt_(it.row(), it.col()) += it.value();
  }
  if (nf > 0) {
    const Eigen::MatrixXd af = Eigen::MatrixXd(a_free_);
    kkt_.topRightCorner(m_, nf) = af;
    kkt_.bottomLeftCorner(nf, m_) = af.transpose();
  }
  // Symmetric diagonal equilibration of the M block, then a tiny shift.
  equil_ = Eigen::VectorXd::Ones(m_ + nf);
  for (int i = 0; i < m_; ++i) {
    const double d = kkt_(i, i);
    equil_(i) = d > 0 ? 1.0 / std::sqrt(d) : 1.0;
  }
  Eigen::MatrixXd reg = equil_.asDiagonal() * kkt_ * equil_.asDiagonal();
  reg.topLeftCorner(m_, m_).diagonal().array() += 1e-14;
  if (nf > 0) reg.bottomRightCorner(nf, nf).diagonal().array() -= 1e-14;
  use_llt_ = false;
  if (nf == 0) {
    llt_.compute(reg);
    use_llt_ = llt_.info() == Eigen::Success;
  }
  if (!use_llt_) lu_.compute(reg);
}

Eigen::VectorXd HsdSolver::solve_kkt(const Eigen::VectorXd& rhs) const {
  auto base = [&](const Eigen::VectorXd& r) -> Eigen::VectorXd {
    const Eigen::VectorXd rs = equil_.cwiseProduct(r);
    const Eigen::VectorXd v = use_llt_ ? Eigen::VectorXd(llt_.solve(rs)) : Eigen::VectorXd(lu_.solve(rs));
    return equil_.cwiseProduct(v);
  };
  Eigen::VectorXd sol = base(rhs);
  for (int k = 0; k < 3; ++k) {
    const Eigen::VectorXd res = rhs - kkt_ * sol;
    if (res.cwiseAbs().maxCoeff() <= 1e-15 * (1.0 + rhs.cwiseAbs().maxCoeff())) break;
    sol += base(res);
  }
  return sol;
}

HsdSolver::Direction HsdSolver::newton_solve(const Eigen::VectorXd& rp, const Eigen::VectorXd& rd,
                                             double rg, const Eigen::VectorXd& ry, double r_tk) const {
  const int nf = static_cast<int>(free_cols_.size());
  const Eigen::VectorXd xfix = ry - apply_w(rd.head(n_cone_));

  Eigen::VectorXd rhs_u(m_ + nf);
  rhs_u.head(m_) = rp - a_c_ * xfix;
  for (int k = 0; k < nf; ++k) rhs_u(m_ + k) = rd(free_cols_[k]);
  const Eigen::VectorXd u = solve_kkt(rhs_u);

  const Eigen::VectorXd xc_u = xfix + apply_w(a_c_.transpose() * u.head(m_));
  const Eigen::VectorXd xc_v = apply_w(a_c_.transpose() * v_y_ - c_.head(n_cone_));

  double cxu = c_.head(n_cone_).dot(xc_u), cxv = c_.head(n_cone_).dot(xc_v);
  for (int k = 0; k < nf; ++k) {
    cxu += c_(free_cols_[k]) * u(m_ + k);
    cxv += c_(free_cols_[k]) * v_f_(k);
  }
  const double num = rg + r_tk / tau_ - b_.dot(u.head(m_)) + cxu;
  const double den = kappa_ / tau_ + b_.dot(v_y_) - cxv;

  Direction d;
  d.dtau = fixed_tau_ ? 0.0 : num / den;
  d.dy = u.head(m_) + d.dtau * v_y_;
  d.dx = Eigen::VectorXd::Zero(n_);
  d.dx.head(n_cone_) = xc_u + d.dtau * xc_v;
  for (int k = 0; k < nf; ++k) d.dx(free_cols_[k]) = u(m_ + k) + d.dtau * v_f_(k);
  d.ds = rd.head(n_cone_) + c_.head(n_cone_) * d.dtau - a_c_.transpose() * d.dy;
  d.dkappa = fixed_tau_ ? 0.0 : (r_tk - kappa_ * d.dtau) / tau_;
  return d;
}

HsdSolver::Direction HsdSolver::direction(double eta, const std::vector<Eigen::MatrixXd>& y_psd,
                                          const Eigen::VectorXd& y_nn, double r_tk) {
  const Eigen::VectorXd r_p = b_ * tau_ - a_ * x_;
  Eigen::VectorXd r_d = c_ * tau_ - a_.transpose() * y_;
  r_d.head(n_cone_) -= s_;
  const double r_g = kappa_ + c_.dot(x_) - b_.dot(y_);

  Eigen::VectorXd ry(n_cone_);
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    const auto& blk = blocks_[k];
    svec_into(blk.r * y_psd[k] * blk.r.transpose(), ry.segment(blk.offset, blk.len));
  }
  // Nonneg entries: y_nn holds rc/x, so (x/s)·y_nn = rc/s.
  ry.segment(nn_offset_, n_nn_) = nn_w2_.cwiseProduct(y_nn);

  const Eigen::VectorXd rp = eta * r_p;
  const Eigen::VectorXd rd = eta * r_d;
  const double rg = eta * r_g;
  Direction d = newton_solve(rp, rd, rg, ry, r_tk);

  // Refinement on the rows whose accuracy depends on the reduced solve:
  // primal equalities, free-column dual rows and the gap row.
  const Eigen::VectorXd zero_c = Eigen::VectorXd::Zero(n_cone_);
  double prev = std::numeric_limits<double>::infinity();
  for (int pass = 0; pass < 4; ++pass) {
    const Eigen::VectorXd e_p = rp - (a_ * d.dx - b_ * d.dtau);
    Eigen::VectorXd e_d = Eigen::VectorXd::Zero(n_);
    if (!free_cols_.empty()) {
      const Eigen::VectorXd atdy = a_.transpose() * d.dy;
      for (int col : free_cols_) e_d(col) = rd(col) - (atdy(col) - c_(col) * d.dtau);
    }
    const double e_g = fixed_tau_ ? 0.0 : -rg - (d.dkappa + c_.dot(d.dx) - b_.dot(d.dy));
    const double err = std::max({e_p.size() ? e_p.cwiseAbs().maxCoeff() : 0.0,
                                 e_d.size() ? e_d.cwiseAbs().maxCoeff() : 0.0, std::abs(e_g)});
    if (err <= 1e-14 * (1.0 + rp.cwiseAbs().maxCoeff()) || err > 0.5 * prev) break;
    prev = err;
    const Direction c = newton_solve(e_p, e_d, -e_g, zero_c, 0.0);
    d.dx += c.dx;
    d.dy += c.dy;
    d.ds += c.ds;
    d.dtau += c.dtau;
    d.dkappa += c.dkappa;
  }
  return d;
}

double HsdSolver::max_step(const Direction& d) const {
  double alpha = std::numeric_limits<double>::infinity();
  for (const auto& blk : blocks_) {
    const Eigen::VectorXd isq = blk.lambda.cwiseSqrt().cwiseInverse();
    for (int pass = 0; pass < 2; ++pass) {
      const Eigen::MatrixXd dm =
          smat(pass == 0 ? d.dx.segment(blk.offset, blk.len) : d.ds.segment(blk.offset, blk.len),
               blk.dim);
      const Eigen::MatrixXd scaled = pass == 0 ? Eigen::MatrixXd(blk.r_inv * dm * blk.r_inv.transpose())
                                               : Eigen::MatrixXd(blk.r.transpose() * dm * blk.r);
      const Eigen::MatrixXd t = isq.asDiagonal() * scaled * isq.asDiagonal();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t, Eigen::EigenvaluesOnly);
      const double g = es.eigenvalues()(0);
      if (g < 0) alpha = std::min(alpha, -1.0 / g);
    }
  }
  for (int i = 0; i < n_nn_; ++i) {
    const double dx = d.dx(nn_offset_ + i), ds = d.ds(nn_offset_ + i);
    if (dx < 0) alpha = std::min(alpha, -x_(nn_offset_ + i) / dx);
    if (ds < 0) alpha = std::min(alpha, -s_(nn_offset_ + i) / ds);
  }
  if (d.dtau < 0) alpha = std::min(alpha, -tau_ / d.dtau);
  if (d.dkappa < 0) alpha = std::min(alpha, -kappa_ / d.dkappa);
  return alpha;
}

void HsdSolver::fill_solution(SdpSolution& out, SolveStatus status) const {
  out.status = status;
  const auto& blocks = prob_.psd_blocks();
  out.psd_values.clear();
  Eigen::VectorXd xs = Eigen::VectorXd::Zero(n_);
  Eigen::VectorXd ys = Eigen::VectorXd::Zero(static_cast<int>(prob_.equalities().size()));
  if (x_.size() == n_ && tau_ > 0) {
    const bool certificate = status == SolveStatus::kInfeasible || status == SolveStatus::kUnbounded;
    const double t = certificate ? 1.0 : tau_;
    xs = x_ / t;
    for (int k = 0; k < m_; ++k) ys(kept_rows_[k]) = y_(k) / t / row_scale_(k);
  }
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    out.psd_values.push_back(smat(xs.segment(psd_offsets_[k], svec_len(blocks[k].dim)), blocks[k].dim));
  }
  out.nonneg_values = xs.segment(nn_offset_, n_nn_);
  out.free_values = xs.segment(n_cone_, n_free_);
  out.dual_values = ys;
  out.objective_value = c_.dot(xs);
  if (status == SolveStatus::kOptimal || status == SolveStatus::kNumericalFailure) {
    const Eigen::VectorXd res = a_full_ * xs - b_full_;
    out.primal_residual = res.size() ? res.cwiseAbs().maxCoeff() : 0.0;
  }
  out.iterations = iter_;
}

void HsdSolver::initialize() {
  x_ = Eigen::VectorXd::Zero(n_);
  s_ = Eigen::VectorXd::Zero(n_cone_);
  for (const auto& blk : blocks_) {
    for (int i = 0; i < blk.dim; ++i) {
      x_(blk.offset + svec_index(blk.dim, i, i)) = 1.0;
      s_(blk.offset + svec_index(blk.dim, i, i)) = 1.0;
    }
  }
  x_.segment(nn_offset_, n_nn_).setOnes();
  s_.segment(nn_offset_, n_nn_).setOnes();
  y_ = Eigen::VectorXd::Zero(m_);
  tau_ = 1.0;
  kappa_ = fixed_tau_ ? 0.0 : 1.0;
}

SolveStatus HsdSolver::iterate(SdpSolution& out) {
  initialize();
  const double c_norm = c_.size() ? c_.cwiseAbs().maxCoeff() : 0.0;
  const bool feasibility_only = c_norm == 0.0;
  const int nf = static_cast<int>(free_cols_.size());
  const double nu = fixed_tau_ ? nu_ : nu_ + 1.0;
  v_y_ = Eigen::VectorXd::Zero(m_);
  v_f_ = Eigen::VectorXd::Zero(nf);

  SolveStatus status = SolveStatus::kNumericalFailure;
  int small_steps = 0;
  int stalled = 0;
  double best_merit = std::numeric_limits<double>::infinity();
  for (iter_ = 0; iter_ < set_.max_iter; ++iter_) {
    // Termination tests on the normalized iterate.
    const Eigen::VectorXd xs = x_ / tau_;
    const Eigen::VectorXd ys = y_ / tau_;
    Eigen::VectorXd pr = (a_ * xs - b_).cwiseProduct(row_scale_);
    const double pres = pr.size() ? pr.cwiseAbs().maxCoeff() : 0.0;
    Eigen::VectorXd dr = c_ - a_.transpose() * ys;
    dr.head(n_cone_) -= s_ / tau_;
    double dres = 0;
    for (int i = 0; i < n_cone_; ++i) dres = std::max(dres, std::abs(dr(i)));
    for (int col : free_cols_) dres = std::max(dres, std::abs(dr(col)));
    const double pobj = c_.dot(xs), dobj = b_.dot(ys);
    const double gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    const double compl_gap = xs.head(n_cone_).dot(s_ / tau_) / (1.0 + std::abs(pobj) + std::abs(dobj));
    const double mu = (x_.head(n_cone_).dot(s_) + tau_ * kappa_) / nu;
    if (set_.verbose) {
      std::fprintf(stderr, "%3d%c pobj % .10e dobj % .10e pres %.2e dres %.2e gap %.2e cg %.2e mu %.2e tau %.2e kap %.2e\n",
                   iter_, fixed_tau_ ? '*' : ' ', pobj, dobj, pres, dres, gap, compl_gap, mu, tau_, kappa_);
    }
    out.primal_residual = pres;
    out.dual_residual = dres;
    out.gap = gap;
    if (pres <= set_.feas_tol && dres <= set_.feas_tol * (1.0 + c_norm) &&
        gap <= set_.gap_tol) {
      status = feasibility_only ? SolveStatus::kFeasible : SolveStatus::kOptimal;
      break;
    }
    if (pres > set_.feas_tol && pres <= 1e4 * set_.feas_tol && dres <= set_.feas_tol * (1.0 + c_norm) &&
        gap <= set_.gap_tol && project_primal()) {
      out.primal_residual = ((a_ * (x_ / tau_) - b_).cwiseProduct(row_scale_)).cwiseAbs().maxCoeff();
      status = feasibility_only ? SolveStatus::kFeasible : SolveStatus::kOptimal;
      break;
    }
    if (!fixed_tau_) {
      const double bty = b_.dot(y_);
      if (bty > 0) {
        Eigen::VectorXd cert = a_.transpose() * y_;
        cert.head(n_cone_) += s_;
        double cn = 0;
        for (int i = 0; i < n_cone_; ++i) cn = std::max(cn, std::abs(cert(i)));
        for (int col : free_cols_) cn = std::max(cn, std::abs(cert(col)));
        if (cn / bty <= set_.infeas_tol) {
          status = SolveStatus::kInfeasible;
          break;
        }
      }
      const double ctx = c_.dot(x_);
      if (ctx < 0) {
        const Eigen::VectorXd ax = (a_ * x_).cwiseProduct(row_scale_);
        const double an = ax.size() ? ax.cwiseAbs().maxCoeff() : 0.0;
        if (an / (-ctx) <= set_.infeas_tol) {
          status = SolveStatus::kUnbounded;
          break;
        }
      }
    }
    const double merit = std::max({pres, dres, gap, compl_gap});
    if (merit < 0.9 * best_merit) {
      best_merit = merit;
      stalled = 0;
    } else if (++stalled > 20) {
      break;
    }

    if (!compute_scaling()) break;
    factor_kkt();
    if (!fixed_tau_) {
      Eigen::VectorXd rhs_v(m_ + nf);
      rhs_v.head(m_) = b_ + a_c_ * apply_w(c_.head(n_cone_));
      for (int k = 0; k < nf; ++k) rhs_v(m_ + k) = c_(free_cols_[k]);
      const Eigen::VectorXd v = solve_kkt(rhs_v);
      v_y_ = v.head(m_);
      v_f_ = v.tail(nf);
    }

    // Predictor.
    std::vector<Eigen::MatrixXd> y_psd(blocks_.size());
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
      y_psd[k] = -Eigen::MatrixXd(blocks_[k].lambda.asDiagonal());
    }
    Eigen::VectorXd y_nn = -s_.segment(nn_offset_, n_nn_);
    const Direction aff = direction(1.0, y_psd, y_nn, -tau_ * kappa_);
    const double a_aff = std::min(1.0, max_step(aff));

    const Eigen::VectorXd xa = x_.head(n_cone_) + a_aff * aff.dx.head(n_cone_);
    const Eigen::VectorXd sa = s_ + a_aff * aff.ds;
    const double mu_aff = (xa.dot(sa) + (tau_ + a_aff * aff.dtau) * (kappa_ + a_aff * aff.dkappa)) / nu;
    const double sigma = std::clamp(std::pow(std::max(mu_aff, 0.0) / mu, 3.0), 0.0, 1.0);

    // Corrector.
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
      const auto& blk = blocks_[k];
      const Eigen::MatrixXd dxt =
          blk.r_inv * smat(aff.dx.segment(blk.offset, blk.len), blk.dim) * blk.r_inv.transpose();
      const Eigen::MatrixXd dst =
          blk.r.transpose() * smat(aff.ds.segment(blk.offset, blk.len), blk.dim) * blk.r;
      Eigen::MatrixXd rc = -0.5 * (dxt * dst + dst * dxt);
      for (int i = 0; i < blk.dim; ++i) rc(i, i) += sigma * mu - blk.lambda(i) * blk.lambda(i);
      Eigen::MatrixXd yk(blk.dim, blk.dim);
      for (int i = 0; i < blk.dim; ++i)
        for (int j = 0; j < blk.dim; ++j) yk(i, j) = 2.0 * rc(i, j) / (blk.lambda(i) + blk.lambda(j));
      y_psd[k] = yk;
    }
    for (int i = 0; i < n_nn_; ++i) {
      const double xi = x_(nn_offset_ + i), si = s_(nn_offset_ + i);
      const double rc = -xi * si + sigma * mu - aff.dx(nn_offset_ + i) * aff.ds(nn_offset_ + i);
      y_nn(i) = rc / xi;
    }
    const double r_tk = -tau_ * kappa_ + sigma * mu - aff.dtau * aff.dkappa;
    const Direction dir = direction(1.0 - sigma, y_psd, y_nn, r_tk);
    const double a_max = max_step(dir);
    const double alpha = std::min(1.0, 0.99 * a_max);
    if (!(alpha > 0) || !std::isfinite(alpha)) break;
    small_steps = alpha < 1e-8 ? small_steps + 1 : 0;
    if (small_steps > 5) break;

    x_ += alpha * dir.dx;
    y_ += alpha * dir.dy;
    s_ += alpha * dir.ds;
    tau_ += alpha * dir.dtau;
    kappa_ += alpha * dir.dkappa;
  }
  return status;
}

// Near the end the normal equations are too ill-conditioned to shrink the
// equality residual further. Move x/τ to the nearest point of {Ax = b} and
// keep it only if the cones, the gap and the residual all still pass.
bool HsdSolver::project_primal() {
  if (m_ == 0) return false;
  if (!aat_) {
    const Eigen::SparseMatrix<double> a = a_;
    const Eigen::SparseMatrix<double> aat = a * Eigen::SparseMatrix<double>(a.transpose());
    aat_.emplace(aat);
    if (aat_->info() != Eigen::Success) return false;
  }
  if (aat_->info() != Eigen::Success) return false;
  Eigen::VectorXd xs = x_ / tau_;
  for (int pass = 0; pass < 2; ++pass) {
    const Eigen::VectorXd r = b_ - a_ * xs;
    xs += a_.transpose() * aat_->solve(r);
  }
  const double pres = ((a_ * xs - b_).cwiseProduct(row_scale_)).cwiseAbs().maxCoeff();
  if (!(pres <= set_.feas_tol)) return false;
  for (const auto& blk : blocks_) {
    const Eigen::MatrixXd x = smat(xs.segment(blk.offset, blk.len), blk.dim);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(x, Eigen::EigenvaluesOnly);
    if (es.eigenvalues()(0) < -set_.feas_tol) return false;
  }
  if (n_nn_ > 0 && xs.segment(nn_offset_, n_nn_).minCoeff() < -set_.feas_tol) return false;
  const Eigen::VectorXd ys = y_ / tau_;
  const double pobj = c_.dot(xs), dobj = b_.dot(ys);
  if (std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj)) > set_.gap_tol) return false;
  x_ = xs * tau_;
  return true;
}

SdpSolution HsdSolver::run() {
  SdpSolution out;
  if (!presolve(out)) return out;
  a_c_ = a_.leftCols(n_cone_);
  fixed_tau_ = false;
  SolveStatus status = iterate(out);
  if (status == SolveStatus::kNumericalFailure) {
    // The embedding stalls on problems without a strict interior (τ, κ → 0
    // together). Retry as a plain infeasible-start path with τ ≡ 1; its
    // residuals contract by (1 − α) per step.
    SdpSolution first = out;
    const int first_iters = iter_;
    fixed_tau_ = true;
    status = iterate(out);
    iter_ += first_iters;
    if (status == SolveStatus::kNumericalFailure && first.primal_residual < out.primal_residual) {
      fixed_tau_ = false;
      status = iterate(out);
      iter_ += first_iters;
    }
  }
  fill_solution(out, status);
  return out;
}

}  // namespace

SdpSolution solve_sdp(const SdpProblem& problem, const SolverSettings& settings) {
  HsdSolver solver(problem, settings);
  return solver.run();
}

}  // namespace relustab
