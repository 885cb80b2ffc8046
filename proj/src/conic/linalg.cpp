#include "relustab/conic/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace relustab {

double spectral_norm(const Eigen::MatrixXd& m) {
  if (m.size() == 0) throw std::invalid_argument("spectral_norm: empty matrix");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

int numerical_rank(const SymMatrix& m, double rel_tol) {
  const Eigen::VectorXd ev = m.eigenvalues();
  const double top = ev.cwiseAbs().maxCoeff();
  if (top == 0.0) return 0;
  int rank = 0;
  for (int i = 0; i < ev.size(); ++i) {
    if (std::abs(ev(i)) > rel_tol * top) ++rank;
  }
  return rank;
}

Eigen::VectorXd rank_one_factor(const SymMatrix& m, double rel_tol) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.matrix());
  const Eigen::VectorXd& ev = es.eigenvalues();
  const int top = static_cast<int>(ev.size()) - 1;
  const double lead = ev(top);
  if (!(lead > 0.0)) throw RankError("rank_one_factor: no positive eigenvalue");
  if (ev(0) < -rel_tol * lead) throw RankError("rank_one_factor: matrix is not PSD");
  if (top > 0 && std::abs(ev(top - 1)) > rel_tol * lead) {
    throw RankError("rank_one_factor: numerical rank exceeds one");
  }
  return std::sqrt(lead) * es.eigenvectors().col(top);
}

Eigen::VectorXd eigenvalue_profile(const SymMatrix& m, int count) {
  const Eigen::VectorXd ev = m.eigenvalues();
  std::vector<double> vals(ev.data(), ev.data() + ev.size());
  std::sort(vals.begin(), vals.end(),
            [](double a, double b) { return std::abs(a) > std::abs(b); });
  const int k = std::min<int>(count, static_cast<int>(vals.size()));
  return Eigen::Map<Eigen::VectorXd>(vals.data(), k);
}

}  // namespace relustab
