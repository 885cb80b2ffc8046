#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace relustab {

enum class VarKind : std::uint8_t { kPsd, kNonneg, kFree };

/// Reference to a single scalar decision variable. PSD entries are always
/// stored canonically with row >= col; a coefficient on a PSD entry applies to
/// that one canonical entry (the value is counted once, not twice).
struct VarRef {
  VarKind kind = VarKind::kFree;
  int block = 0;
  int row = 0;
  int col = 0;

  static VarRef Psd(int block, int i, int j);
  static VarRef Nonneg(int index) { return {VarKind::kNonneg, 0, index, 0}; }
  static VarRef Free(int index) { return {VarKind::kFree, 0, index, 0}; }

  auto operator<=>(const VarRef&) const = default;
};

/// Affine combination of variable entries.
class LinearExpr {
 public:
  LinearExpr() = default;
  explicit LinearExpr(double constant) : constant_(constant) {}
  static LinearExpr Of(VarRef ref, double coeff = 1.0);

  LinearExpr& add(VarRef ref, double coeff);
  LinearExpr& operator+=(const LinearExpr& other);
  LinearExpr& operator-=(const LinearExpr& other);
  LinearExpr& operator*=(double scale);

  double constant() const { return constant_; }
  const std::map<VarRef, double>& terms() const { return terms_; }
  bool is_constant() const { return terms_.empty(); }

 private:
  std::map<VarRef, double> terms_;
  double constant_ = 0.0;
};

LinearExpr operator+(LinearExpr a, const LinearExpr& b);
LinearExpr operator-(LinearExpr a, const LinearExpr& b);
LinearExpr operator*(double s, LinearExpr a);

/// Dense matrix of affine expressions, used to write LMIs as products with
/// constant Eigen matrices.
class ExprMatrix {
 public:
  ExprMatrix() = default;
  ExprMatrix(int rows, int cols) : rows_(rows), cols_(cols), data_(rows * cols) {}
  static ExprMatrix Constant(const Eigen::MatrixXd& m);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  LinearExpr& operator()(int i, int j) { return data_[i * cols_ + j]; }
  const LinearExpr& operator()(int i, int j) const { return data_[i * cols_ + j]; }

  ExprMatrix transpose() const;
  ExprMatrix block(int r0, int c0, int nr, int nc) const;
  void set_block(int r0, int c0, const ExprMatrix& b);
  /// (M + Mᵀ)
  ExprMatrix hermitian_part() const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<LinearExpr> data_;
};

ExprMatrix operator+(const ExprMatrix& a, const ExprMatrix& b);
ExprMatrix operator-(const ExprMatrix& a, const ExprMatrix& b);
ExprMatrix operator*(const Eigen::MatrixXd& m, const ExprMatrix& e);
ExprMatrix operator*(const ExprMatrix& e, const Eigen::MatrixXd& m);

struct PsdBlockInfo {
  std::string name;
  int dim = 0;
};

struct Equality {
  LinearExpr lhs;  // constant part already folded into rhs
  double rhs = 0.0;
};

/// Conic program in standard form:
///   minimize   objective
///   subject to equalities,
///              every PSD block positive semidefinite,
///              every nonneg scalar >= 0, free scalars unconstrained.
class SdpProblem {
 public:
  int add_psd_block(std::string name, int dim);
  /// Returns the index of the first new scalar.
  int add_nonneg(int count);
  int add_free(int count);

  /// Full symmetric matrix of expressions for a PSD block.
  ExprMatrix psd_matrix(int block) const;
  LinearExpr nonneg(int index) const;
  LinearExpr free(int index) const;

  /// Adds lhs == rhs; the constant part of lhs is moved to the right side.
  void add_equality(const LinearExpr& lhs, double rhs = 0.0);
  void set_objective(const LinearExpr& objective);

  /// Adds a PSD slack block S and ties S == expr entrywise (lower triangle).
  int constrain_psd(std::string name, const ExprMatrix& expr);
  /// Adds a nonneg slack s and ties s == expr. Returns the slack index.
  int constrain_nonneg(const LinearExpr& expr);
  void constrain_zero(const LinearExpr& expr) { add_equality(expr, 0.0); }

  const std::vector<PsdBlockInfo>& psd_blocks() const { return psd_blocks_; }
  int nonneg_count() const { return nonneg_count_; }
  int free_count() const { return free_count_; }
  const std::vector<Equality>& equalities() const { return equalities_; }
  const LinearExpr& objective() const { return objective_; }

 private:
  void check(const LinearExpr& e) const;

  std::vector<PsdBlockInfo> psd_blocks_;
  int nonneg_count_ = 0;
  int free_count_ = 0;
  std::vector<Equality> equalities_;
  LinearExpr objective_;
};

enum class SolveStatus { kOptimal, kFeasible, kInfeasible, kUnbounded, kNumericalFailure };

const char* to_string(SolveStatus s);

struct SolverSettings {
  double feas_tol = 1e-8;    // absolute equality residual / cone violation
  double gap_tol = 1e-8;     // relative duality gap
  double infeas_tol = 1e-9;  // Farkas certificate residual
  int max_iter = 200;
  bool verbose = false;
};

struct SdpSolution {
  SolveStatus status = SolveStatus::kNumericalFailure;
  std::vector<Eigen::MatrixXd> psd_values;
  Eigen::VectorXd nonneg_values;
  Eigen::VectorXd free_values;
  double objective_value = 0.0;
  Eigen::VectorXd dual_values;  // one multiplier per equality, original order
  int iterations = 0;
  double primal_residual = 0.0;  // max |lhs - rhs| over equalities
  double dual_residual = 0.0;
  double gap = 0.0;

  bool ok() const { return status == SolveStatus::kOptimal || status == SolveStatus::kFeasible; }
  double value(VarRef ref) const;
  double value(const LinearExpr& e) const;
  Eigen::MatrixXd value(const ExprMatrix& e) const;
};

/// Solves the conic program with the bundled homogeneous interior-point
/// method. Pure function of its inputs.
SdpSolution solve_sdp(const SdpProblem& problem, const SolverSettings& settings = {});

}  // namespace relustab
