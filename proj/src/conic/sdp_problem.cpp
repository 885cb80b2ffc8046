#include "relustab/conic/sdp_problem.hpp"

#include <stdexcept>
#include <utility>

namespace relustab {

VarRef VarRef::Psd(int block, int i, int j) {
  if (i < j) std::swap(i, j);
  return {VarKind::kPsd, block, i, j};
}

LinearExpr LinearExpr::Of(VarRef ref, double coeff) {
  LinearExpr e;
  e.add(ref, coeff);
  return e;
}

LinearExpr& LinearExpr::add(VarRef ref, double coeff) {
  if (coeff == 0.0) return *this;
  if (ref.kind == VarKind::kPsd && ref.row < ref.col) std::swap(ref.row, ref.col);
  auto [it, inserted] = terms_.emplace(ref, coeff);
  if (!inserted) {
    it->second += coeff;
    if (it->second == 0.0) terms_.erase(it);
  }
  return *this;
}

LinearExpr& LinearExpr::operator+=(const LinearExpr& other) {
  for (const auto& [ref, c] : other.terms_) add(ref, c);
  constant_ += other.constant_;
  return *this;
}

LinearExpr& LinearExpr::operator-=(const LinearExpr& other) {
  for (const auto& [ref, c] : other.terms_) add(ref, -c);
  constant_ -= other.constant_;
  return *this;
}

LinearExpr& LinearExpr::operator*=(double scale) {
  if (scale == 0.0) {
    terms_.clear();
  } else {
    for (auto& [ref, c] : terms_) c *= scale;
  }
  constant_ *= scale;
  return *this;
}

LinearExpr operator+(LinearExpr a, const LinearExpr& b) { return a += b; }
LinearExpr operator-(LinearExpr a, const LinearExpr& b) { return a -= b; }
LinearExpr operator*(double s, LinearExpr a) { return a *= s; }

ExprMatrix ExprMatrix::Constant(const Eigen::MatrixXd& m) {
  ExprMatrix e(static_cast<int>(m.rows()), static_cast<int>(m.cols()));
  for (int i = 0; i < e.rows(); ++i)
    for (int j = 0; j < e.cols(); ++j) e(i, j) = LinearExpr(m(i, j));
  return e;
}

ExprMatrix ExprMatrix::transpose() const {
  ExprMatrix t(cols_, rows_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

ExprMatrix ExprMatrix::block(int r0, int c0, int nr, int nc) const {
  if (r0 < 0 || c0 < 0 || r0 + nr > rows_ || c0 + nc > cols_) {
    throw std::out_of_range("ExprMatrix::block");
  }
  ExprMatrix b(nr, nc);
  for (int i = 0; i < nr; ++i)
    for (int j = 0; j < nc; ++j) b(i, j) = (*this)(r0 + i, c0 + j);
  return b;
}

void ExprMatrix::set_block(int r0, int c0, const ExprMatrix& b) {
  if (r0 < 0 || c0 < 0 || r0 + b.rows() > rows_ || c0 + b.cols() > cols_) {
    throw std::out_of_range("ExprMatrix::set_block");
  }
  for (int i = 0; i < b.rows(); ++i)
    for (int j = 0; j < b.cols(); ++j) (*this)(r0 + i, c0 + j) = b(i, j);
}

ExprMatrix ExprMatrix::hermitian_part() const { return *this + transpose(); }

ExprMatrix operator+(const ExprMatrix& a, const ExprMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("ExprMatrix +");
  ExprMatrix r(a.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) r(i, j) = a(i, j) + b(i, j);
  return r;
}

ExprMatrix operator-(const ExprMatrix& a, const ExprMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("ExprMatrix -");
  ExprMatrix r(a.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) r(i, j) = a(i, j) - b(i, j);
  return r;
}

ExprMatrix operator*(const Eigen::MatrixXd& m, const ExprMatrix& e) {
  if (m.cols() != e.rows()) throw std::invalid_argument("matrix * ExprMatrix");
  ExprMatrix r(static_cast<int>(m.rows()), e.cols());
  for (int i = 0; i < r.rows(); ++i)
    for (int k = 0; k < e.rows(); ++k) {
      if (m(i, k) == 0.0) continue;
      for (int j = 0; j < r.cols(); ++j) r(i, j) += m(i, k) * e(k, j);
    }
  return r;
}

ExprMatrix operator*(const ExprMatrix& e, const Eigen::MatrixXd& m) {
  if (e.cols() != m.rows()) throw std::invalid_argument("ExprMatrix * matrix");
  ExprMatrix r(e.rows(), static_cast<int>(m.cols()));
  for (int k = 0; k < e.cols(); ++k)
    for (int j = 0; j < r.cols(); ++j) {
      if (m(k, j) == 0.0) continue;
      for (int i = 0; i < r.rows(); ++i) r(i, j) += m(k, j) * e(i, k);
    }
  return r;
}

int SdpProblem::add_psd_block(std::string name, int dim) {
  if (dim < 1) throw std::invalid_argument("add_psd_block: dim must be >= 1");
  psd_blocks_.push_back({std::move(name), dim});
  return static_cast<int>(psd_blocks_.size()) - 1;
}

int SdpProblem::add_nonneg(int count) {
  if (count < 0) throw std::invalid_argument("add_nonneg: negative count");
  const int first = nonneg_count_;
  nonneg_count_ += count;
  return first;
}

int SdpProblem::add_free(int count) {
  if (count < 0) throw std::invalid_argument("add_free: negative count");
  const int first = free_count_;
  free_count_ += count;
  return first;
}

ExprMatrix SdpProblem::psd_matrix(int block) const {
  const int d = psd_blocks_.at(block).dim;
  ExprMatrix e(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) e(i, j) = LinearExpr::Of(VarRef::Psd(block, i, j));
  return e;
}

LinearExpr SdpProblem::nonneg(int index) const {
  if (index < 0 || index >= nonneg_count_) throw std::out_of_range("nonneg index");
  return LinearExpr::Of(VarRef::Nonneg(index));
}

LinearExpr SdpProblem::free(int index) const {
  if (index < 0 || index >= free_count_) throw std::out_of_range("free index");
  return LinearExpr::Of(VarRef::Free(index));
}

void SdpProblem::check(const LinearExpr& e) const {
  for (const auto& [ref, c] : e.terms()) {
    switch (ref.kind) {
      case VarKind::kPsd: {
        if (ref.block < 0 || ref.block >= static_cast<int>(psd_blocks_.size()))
          throw std::invalid_argument("LinearExpr references unknown PSD block");
        const int d = psd_blocks_[ref.block].dim;
        if (ref.row < ref.col || ref.row >= d || ref.col < 0)
          throw std::invalid_argument("LinearExpr references PSD entry out of range");
        break;
      }
      case VarKind::kNonneg:
        if (ref.row < 0 || ref.row >= nonneg_count_)
          throw std::invalid_argument("LinearExpr references unknown nonneg scalar");
        break;
      case VarKind::kFree:
        if (ref.row < 0 || ref.row >= free_count_)
          throw std::invalid_argument("LinearExpr references unknown free scalar");
        break;
    }
  }
}

void SdpProblem::add_equality(const LinearExpr& lhs, double rhs) {
  check(lhs);
  LinearExpr body = lhs;
  const double c = body.constant();
  body -= LinearExpr(c);
  equalities_.push_back({std::move(body), rhs - c});
}

void SdpProblem::set_objective(const LinearExpr& objective) {
  check(objective);
  objective_ = objective;
}

int SdpProblem::constrain_psd(std::string name, const ExprMatrix& expr) {
  if (expr.rows() != expr.cols()) throw std::invalid_argument("constrain_psd: square expression");
  const int blk = add_psd_block(std::move(name), expr.rows());
  for (int j = 0; j < expr.cols(); ++j)
    for (int i = j; i < expr.rows(); ++i) {
      add_equality(LinearExpr::Of(VarRef::Psd(blk, i, j)) - expr(i, j), 0.0);
    }
  return blk;
}

int SdpProblem::constrain_nonneg(const LinearExpr& expr) {
  const int s = add_nonneg(1);
  add_equality(nonneg(s) - expr, 0.0);
  return s;
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "Optimal";
    case SolveStatus::kFeasible: return "Feasible";
    case SolveStatus::kInfeasible: return "Infeasible";
    case SolveStatus::kUnbounded: return "Unbounded";
    case SolveStatus::kNumericalFailure: return "NumericalFailure";
  }
  return "Unknown";
}

double SdpSolution::value(VarRef ref) const {
  switch (ref.kind) {
    case VarKind::kPsd: return psd_values.at(ref.block)(ref.row, ref.col);
    case VarKind::kNonneg: return nonneg_values(ref.row);
    case VarKind::kFree: return free_values(ref.row);
  }
  return 0.0;
}

double SdpSolution::value(const LinearExpr& e) const {
  double v = e.constant();
  for (const auto& [ref, c] : e.terms()) v += c * value(ref);
  return v;
}

Eigen::MatrixXd SdpSolution::value(const ExprMatrix& e) const {
  Eigen::MatrixXd m(e.rows(), e.cols());
  for (int i = 0; i < e.rows(); ++i)
    for (int j = 0; j < e.cols(); ++j) m(i, j) = value(e(i, j));
  return m;
}

}  // namespace relustab
