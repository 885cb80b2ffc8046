#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "relustab/conic/sdp_problem.hpp"
#include "relustab/conic/sym_matrix.hpp"
#include "relustab/io/system_json.hpp"
#include "relustab/system/relu_system.hpp"

namespace relustab {

inline constexpr int kMaxMomentEntries = 20000;
inline constexpr double kMomentPointTol = 1e-5;

class BasisTooLarge : public std::runtime_error {
 public:
  explicit BasisTooLarge(const std::string& what) : std::runtime_error(what) {}
};

/// Exponents over (x₁…x_n, w₁…w_m, λ).
struct MonomialIndex {
  std::vector<int> exponents;
  int degree() const;
  auto operator<=>(const MonomialIndex&) const = default;
};

MonomialIndex operator+(const MonomialIndex& a, const MonomialIndex& b);

/// All monomials in `vars` variables of degree ≤ `max_degree`, graded by
/// degree and lexicographic inside a degree (x₁ heaviest, λ lightest).
class MonomialBasis {
 public:
  MonomialBasis(int vars, int max_degree);

  int vars() const { return vars_; }
  int max_degree() const { return max_degree_; }
  int size() const { return static_cast<int>(monomials_.size()); }
  /// Number of monomials of degree ≤ d (a prefix of the basis).
  int prefix(int d) const { return prefix_.at(d); }
  const MonomialIndex& operator[](int i) const { return monomials_[i]; }
  /// -1 when absent.
  int index(const MonomialIndex& m) const;

 private:
  int vars_;
  int max_degree_;
  std::vector<MonomialIndex> monomials_;
  std::vector<int> prefix_;
  std::map<std::vector<int>, int> lookup_;
};

/// Number of monomials of degree ≤ d in v variables, saturating at INT_MAX.
long long monomial_count(int vars, int degree);

class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(int vars) : vars_(vars) {}
  static Polynomial Constant(int vars, double c);
  static Polynomial Variable(int vars, int k);

  int vars() const { return vars_; }
  int degree() const;
  const std::map<MonomialIndex, double>& terms() const { return terms_; }
  void add_term(const MonomialIndex& m, double c);

  double evaluate(const Eigen::VectorXd& point) const;

  Polynomial& operator+=(const Polynomial& o);
  Polynomial& operator-=(const Polynomial& o);
  Polynomial& operator*=(double s);

 private:
  int vars_ = 0;
  std::map<MonomialIndex, double> terms_;
};

Polynomial operator+(Polynomial a, const Polynomial& b);
Polynomial operator-(Polynomial a, const Polynomial& b);
Polynomial operator*(const Polynomial& a, const Polynomial& b);
Polynomial operator*(double s, Polynomial a);
bool operator==(const Polynomial& a, const Polynomial& b);

struct PolynomialSet {
  int n = 0;
  int m = 0;
  std::vector<Polynomial> E;  // n linear-growth rows, m complementarity, 1 sphere
  std::vector<Polynomial> G;  // quadratic sign family, exact duplicates removed
  Polynomial lambda;          // the variable λ, localized separately
};

PolynomialSet build_polynomial_sets(const ReluSystem& sys);

/// Point (x, w, λ) stacked in variable order.
Eigen::VectorXd stack_point(const Eigen::VectorXd& x, const Eigen::VectorXd& w, double lambda);

struct MomentVector {
  int vars = 0;
  int degree = 0;          // entries cover every monomial of degree ≤ degree
  Eigen::VectorXd values;  // in MonomialBasis(vars, degree) order
};

/// y_α = p^α.
MomentVector dirac_moments(const Eigen::VectorXd& point, int degree);

/// H_s(y): rows and columns are the monomials of degree ≤ s.
SymMatrix moment_matrix(const MomentVector& y, int s);
/// H_s(p y), entries Σ_α p_α y_{α+β+γ}.
SymMatrix localizing_matrix(const MomentVector& y, const Polynomial& p, int s);

struct MomentRelaxation {
  int order = 1;
  int vars = 0;
  SdpProblem problem;
  int moment_block = 0;       // H_N(y) is this PSD variable, Hankel ties as equalities
  std::vector<LinearExpr> y;  // y_α as one entry of the moment block, basis order
  std::optional<MonomialBasis> basis;
};

/// min L_y(f) s.t. H_N(y) ⪰ 0, H_{N−1}(e y) = 0 (e ∈ E), H_{N−1}(λ y) ⪰ 0,
/// H_{N−1}(g y) ⪰ 0 (g ∈ G), y₀ = 1.
MomentRelaxation build_moment_lmi(const ReluSystem& sys, const Polynomial& f, int order);

/// Smallest s ≤ N with rank H_s(y) = rank H_{s−1}(y), H₀ = [y₀].
std::optional<int> check_flat_extension(const MomentVector& y, int order, double rank_tol);

struct MomentPoint {
  Eigen::VectorXd x;
  Eigen::VectorXd w;
  double lambda = 0.0;
};

/// Degree-1 moments, accepted only if every |e| ≤ 1e-5 and g ≥ −1e-5.
/// The sign of (x, w) is picked so that w ≥ 0.
std::optional<MomentPoint> extract_minimizer(const ReluSystem& sys, const MomentVector& y);

struct MomentResult {
  int order = 1;
  SolveStatus status = SolveStatus::kNumericalFailure;
  double bound = 0.0;
  std::vector<int> ranks;  // r_0 … r_N
  std::optional<int> flat;
  std::optional<MomentPoint> point;
  std::optional<MomentVector> y;
  double seconds = 0.0;
};

/// From N = 2 on the E constraints force H_N(y) to be singular, so the
/// relaxations have no strict interior and the gap stalls near 1e-8.
inline SolverSettings moment_solver_settings() {
  SolverSettings s;
  s.gap_tol = 1e-7;
  return s;
}

MomentResult solve_moment(const ReluSystem& sys, const Polynomial& f, int order, double rank_tol = 1e-5,
                          const SolverSettings& settings = moment_solver_settings());

/// f = λ for orders 1 … max_order.
std::vector<MomentResult> run_moments(const ReluSystem& sys, int max_order, double rank_tol = 1e-5,
                                      const SolverSettings& settings = moment_solver_settings());

Json moment_to_json(const std::vector<MomentResult>& results);

}  // namespace relustab
