#include "relustab/conic/sym_matrix.hpp"

#include <stdexcept>

namespace relustab {

SymMatrix::SymMatrix(int dim) {
  if (dim < 1) throw std::invalid_argument("SymMatrix: dim must be >= 1");
  data_ = Eigen::MatrixXd::Zero(dim, dim);
}

SymMatrix::SymMatrix(const Eigen::MatrixXd& m) {
  if (m.rows() < 1 || m.rows() != m.cols()) {
    throw std::invalid_argument("SymMatrix: square nonempty matrix required");
  }
  data_ = m.triangularView<Eigen::Lower>();
  data_.triangularView<Eigen::StrictlyUpper>() = data_.transpose();
}

SymMatrix SymMatrix::Identity(int dim) {
  SymMatrix s(dim);
  s.data_.setIdentity();
  return s;
}

SymMatrix SymMatrix::Outer(const Eigen::VectorXd& v) {
  return SymMatrix(Eigen::MatrixXd(v * v.transpose()));
}

void SymMatrix::set(int i, int j, double value) {
  data_(i, j) = value;
  data_(j, i) = value;
}

Eigen::VectorXd SymMatrix::eigenvalues() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(data_, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

double SymMatrix::min_eigenvalue() const { return eigenvalues()(0); }

double SymMatrix::max_eigenvalue() const {
  const Eigen::VectorXd ev = eigenvalues();
  return ev(ev.size() - 1);
}

}  // namespace relustab
