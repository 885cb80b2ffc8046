#pragma once

#include <Eigen/Dense>

namespace relustab {

/// Dense real symmetric matrix. The lower triangle of the input is
/// authoritative; the upper triangle is overwritten on construction.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(int dim);
  explicit SymMatrix(const Eigen::MatrixXd& m);

  static SymMatrix Identity(int dim);
  static SymMatrix Outer(const Eigen::VectorXd& v);

  int dim() const { return static_cast<int>(data_.rows()); }
  double operator()(int i, int j) const { return data_(i, j); }
  const Eigen::MatrixXd& matrix() const { return data_; }

  /// Sets entry (i, j) and its mirror.
  void set(int i, int j, double value);

  Eigen::VectorXd eigenvalues() const;  // ascending
  double min_eigenvalue() const;
  double max_eigenvalue() const;

 private:
  Eigen::MatrixXd data_;
};

}  // namespace relustab
