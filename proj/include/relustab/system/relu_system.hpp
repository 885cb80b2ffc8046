#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace relustab {

inline constexpr double kSignTol = 1e-7;
inline constexpr double kOverflowNorm = 1e12;

class InvalidSystem : public std::invalid_argument {
 public:
  explicit InvalidSystem(const std::string& what) : std::invalid_argument(what) {}
};

class NonConvergence : public std::runtime_error {
 public:
  explicit NonConvergence(const std::string& what) : std::runtime_error(what) {}
};

/// x' = A x + B w,  z = C x + D w,  w = relu(z).
class ReluSystem {
 public:
  /// Validates dimensions and well-posedness. Throws InvalidSystem.
  /// Well-posed means ‖D‖ < 1, or every principal minor of I − D is positive
  /// (the loop equation then has a unique piecewise-linear solution).
  ReluSystem(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::MatrixXd C, Eigen::MatrixXd D,
             bool require_hurwitz = false);

  int n() const { return static_cast<int>(A_.rows()); }
  int m() const { return static_cast<int>(D_.rows()); }
  const Eigen::MatrixXd& A() const { return A_; }
  const Eigen::MatrixXd& B() const { return B_; }
  const Eigen::MatrixXd& C() const { return C_; }
  const Eigen::MatrixXd& D() const { return D_; }

  double d_norm() const { return d_norm_; }
  /// Picard iteration on the loop is a contraction (‖D‖ < 1).
  bool contraction() const { return d_norm_ < 1.0; }
  /// Set when A is not Hurwitz; analysis still runs.
  bool hurwitz_warning() const { return hurwitz_warning_; }

 private:
  Eigen::MatrixXd A_, B_, C_, D_;
  double d_norm_ = 0.0;
  bool hurwitz_warning_ = false;
};

/// Largest real part over eig(A).
double spectral_abscissa(const Eigen::MatrixXd& A);

Eigen::VectorXd relu(const Eigen::VectorXd& q);

struct EncodingResiduals {
  Eigen::VectorXd diff;     // p − q
  Eigen::VectorXd value;    // p
  Eigen::VectorXd product;  // (p − q) ⊙ p
  bool holds(double tol = 0.0) const;
};

EncodingResiduals relu_encoding_residuals(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

struct LoopSolution {
  Eigen::VectorXd z;
  Eigen::VectorXd w;
  int iterations = 0;
  std::vector<double> residuals;  // Picard residual per iteration; empty for the pattern solve
  bool pattern_solve = false;
};

inline constexpr double kLoopTol = 1e-12;
inline constexpr int kLoopMaxIter = 10000;

/// Solves z = C x + D relu(z). Throws NonConvergence.
LoopSolution resolve_loop(const ReluSystem& sys, const Eigen::VectorXd& x, double tol = kLoopTol,
                          int max_iter = kLoopMaxIter);

Eigen::VectorXd vector_field(const ReluSystem& sys, const Eigen::VectorXd& x);

struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  bool divergent = false;
};

class SimulationOverflow : public std::runtime_error {
 public:
  SimulationOverflow(Trajectory partial)
      : std::runtime_error("state norm exceeded overflow cutoff"), trajectory(std::move(partial)) {}
  Trajectory trajectory;
};

/// Fixed-step RK4. Steps: ceil(t_end / h) with tₖ = k h. Throws
/// SimulationOverflow (holding the truncated trajectory) past kOverflowNorm.
Trajectory simulate(const ReluSystem& sys, const Eigen::VectorXd& x0, double t_end, double h = 1e-3);

/// Header `t,x1,...,xn`, %.17g, LF.
std::string trajectory_csv(const Trajectory& traj);

struct RayWitness {
  Eigen::VectorXd x;
  Eigen::VectorXd w;
  double lambda = 0.0;
};

struct ValidationReport {
  double residual_eig = 0.0;   // ‖A x + B w − λ x‖
  double min_sign = 0.0;       // min entry of (w − (Cx + Dw), w)
  double max_compl = 0.0;      // max |(w − (Cx + Dw)) ⊙ w|
  double lambda = 0.0;
  bool pass = false;
};

ValidationReport validate_witness(const ReluSystem& sys, const RayWitness& wit, double tol);

/// Rescales so that ‖x‖ = 1.
RayWitness normalize_witness(const RayWitness& wit);

}  // namespace relustab
