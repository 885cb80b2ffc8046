#include "relustab/moments/moment_lmi.hpp"

#include <algorithm>
#include <chrono>
#include <climits>
#include <cmath>
#include <numeric>

#include "relustab/conic/linalg.hpp"

namespace relustab {
namespace {

using Clock = std::chrono::steady_clock;

// Exponent vectors of exactly `degree`, x₁ heaviest first.
void enumerate_degree(int vars, int degree, int pos, std::vector<int>& cur, std::vector<MonomialIndex>& out) {
  if (pos == vars - 1) {
    cur[pos] = degree;
    out.push_back({cur});
    return;
  }
  for (int e = degree; e >= 0; --e) {
    cur[pos] = e;
    enumerate_degree(vars, degree - e, pos + 1, cur, out);
  }
  cur[pos] = 0;
}

MonomialIndex unit(int vars, int k) {
  MonomialIndex m{std::vector<int>(vars, 0)};
  m.exponents[k] = 1;
  return m;
}

// Σ_α p_α y_{α+β+γ} as a linear expression in the moment block.
LinearExpr shifted(const MomentRelaxation& rel, const Polynomial& p, const MonomialIndex& bg) {
  LinearExpr e;
  for (const auto& [alpha, c] : p.terms()) {
    const int k = rel.basis->index(alpha + bg);
    if (k < 0) throw std::logic_error("moment index out of range");
    e += c * rel.y[k];
  }
  return e;
}

double shifted_value(const MonomialBasis& basis, const MomentVector& y, const Polynomial& p,
                     const MonomialIndex& bg) {
  double v = 0;
  for (const auto& [alpha, c] : p.terms()) {
    const int k = basis.index(alpha + bg);
    if (k < 0) throw std::invalid_argument("moment vector degree too small");
    v += c * y.values(k);
  }
  return v;
}

}  // namespace

int MonomialIndex::degree() const { return std::accumulate(exponents.begin(), exponents.end(), 0); }

MonomialIndex operator+(const MonomialIndex& a, const MonomialIndex& b) {
  MonomialIndex r = a;
  for (std::size_t i = 0; i < r.exponents.size(); ++i) r.exponents[i] += b.exponents[i];
  return r;
}

long long monomial_count(int vars, int degree) {
  // binom(vars + degree, degree)
  long double c = 1;
  for (int i = 1; i <= degree; ++i) {
    c = c * (vars + i) / i;
    if (c > static_cast<long double>(INT_MAX)) return INT_MAX;
  }
  return static_cast<long long>(std::llround(c));
}

MonomialBasis::MonomialBasis(int vars, int max_degree) : vars_(vars), max_degree_(max_degree) {
  if (vars < 1 || max_degree < 0) throw std::invalid_argument("MonomialBasis: bad dimensions");
  if (monomial_count(vars, max_degree) > kMaxMomentEntries) {
    throw BasisTooLarge("monomial basis of degree " + std::to_string(max_degree) + " in " + std::to_string(vars) +
                        " variables exceeds " + std::to_string(kMaxMomentEntries) + " entries");
  }
  std::vector<int> cur(vars, 0);
  for (int d = 0; d <= max_degree; ++d) {
    enumerate_degree(vars, d, 0, cur, monomials_);
    prefix_.push_back(static_cast<int>(monomials_.size()));
  }
  for (int i = 0; i < size(); ++i) lookup_[monomials_[i].exponents] = i;
}

int MonomialBasis::index(const MonomialIndex& m) const {
  const auto it = lookup_.find(m.exponents);
  return it == lookup_.end() ? -1 : it->second;
}

Polynomial Polynomial::Constant(int vars, double c) {
  Polynomial p(vars);
  p.add_term({std::vector<int>(vars, 0)}, c);
  return p;
}

Polynomial Polynomial::Variable(int vars, int k) {
  Polynomial p(vars);
  p.add_term(unit(vars, k), 1.0);
  return p;
}

int Polynomial::degree() const {
  int d = 0;
  for (const auto& [m, c] : terms_) d = std::max(d, m.degree());
  return d;
}

void Polynomial::add_term(const MonomialIndex& m, double c) {
  if (static_cast<int>(m.exponents.size()) != vars_) throw std::invalid_argument("Polynomial: variable count");
  if (c == 0.0) return;
  auto it = terms_.find(m);
  if (it == terms_.end()) {
    terms_.emplace(m, c);
  } else {
    it->second += c;
    if (it->second == 0.0) terms_.erase(it);
  }
}

double Polynomial::evaluate(const Eigen::VectorXd& point) const {
  if (point.size() != vars_) throw std::invalid_argument("Polynomial::evaluate: dimension");
  double s = 0;
  for (const auto& [m, c] : terms_) {
    double t = c;
    for (int i = 0; i < vars_; ++i)
      for (int e = 0; e < m.exponents[i]; ++e) t *= point(i);
    s += t;
  }
  return s;
}

Polynomial& Polynomial::operator+=(const Polynomial& o) {
  if (vars_ == 0) vars_ = o.vars_;
  for (const auto& [m, c] : o.terms_) add_term(m, c);
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& o) {
  if (vars_ == 0) vars_ = o.vars_;
  for (const auto& [m, c] : o.terms_) add_term(m, -c);
  return *this;
}

Polynomial& Polynomial::operator*=(double s) {
  if (s == 0.0) {
    terms_.clear();
    return *this;
  }
  for (auto& [m, c] : terms_) c *= s;
  return *this;
}

Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
Polynomial operator*(double s, Polynomial a) { return a *= s; }

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  Polynomial r(a.vars());
  for (const auto& [ma, ca] : a.terms())
    for (const auto& [mb, cb] : b.terms()) r.add_term(ma + mb, ca * cb);
  return r;
}

bool operator==(const Polynomial& a, const Polynomial& b) { return a.vars() == b.vars() && a.terms() == b.terms(); }

PolynomialSet build_polynomial_sets(const ReluSystem& sys) {
  const int n = sys.n(), m = sys.m(), v = n + m + 1;
  PolynomialSet ps;
  ps.n = n;
  ps.m = m;
  std::vector<Polynomial> x, w;
  for (int i = 0; i < n; ++i) x.push_back(Polynomial::Variable(v, i));
  for (int j = 0; j < m; ++j) w.push_back(Polynomial::Variable(v, n + j));
  ps.lambda = Polynomial::Variable(v, n + m);

  // z = Cx + Dw
  std::vector<Polynomial> z(m, Polynomial(v));
  for (int i = 0; i < m; ++i) {
    for (int k = 0; k < n; ++k) z[i] += sys.C()(i, k) * x[k];
    for (int k = 0; k < m; ++k) z[i] += sys.D()(i, k) * w[k];
  }
  for (int i = 0; i < n; ++i) {
    Polynomial e(v);
    for (int k = 0; k < n; ++k) e += sys.A()(i, k) * x[k];
    for (int k = 0; k < m; ++k) e += sys.B()(i, k) * w[k];
    e -= ps.lambda * x[i];
    ps.E.push_back(e);
  }
  for (int i = 0; i < m; ++i) ps.E.push_back(w[i] * z[i] - w[i] * w[i]);
  Polynomial sphere = Polynomial::Constant(v, -1.0);
  for (const auto& p : x) sphere += p * p;
  for (const auto& p : w) sphere += p * p;
  ps.E.push_back(sphere);

  auto push_unique = [&](Polynomial g) {
    for (const auto& h : ps.G)
      if (h == g) return;
    ps.G.push_back(std::move(g));
  };
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      push_unique(w[i] * w[j]);
      push_unique(w[j] * w[i] - w[j] * z[i]);
      push_unique((w[i] - z[i]) * (w[j] - z[j]));
    }
  return ps;
}

Eigen::VectorXd stack_point(const Eigen::VectorXd& x, const Eigen::VectorXd& w, double lambda) {
  Eigen::VectorXd p(x.size() + w.size() + 1);
  p << x, w, lambda;
  return p;
}

MomentVector dirac_moments(const Eigen::VectorXd& point, int degree) {
  const int v = static_cast<int>(point.size());
  const MonomialBasis basis(v, degree);
  MomentVector y{v, degree, Eigen::VectorXd(basis.size())};
  for (int i = 0; i < basis.size(); ++i) {
    Polynomial p(v);
    p.add_term(basis[i], 1.0);
    y.values(i) = p.evaluate(point);
  }
  return y;
}

SymMatrix moment_matrix(const MomentVector& y, int s) {
  return localizing_matrix(y, Polynomial::Constant(y.vars, 1.0), s);
}

SymMatrix localizing_matrix(const MomentVector& y, const Polynomial& p, int s) {
  if (2 * s + p.degree() > y.degree) throw std::invalid_argument("localizing_matrix: degree exceeds moments");
  const MonomialBasis basis(y.vars, y.degree);
  const int k = basis.prefix(s);
  Eigen::MatrixXd h(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j <= i; ++j) h(i, j) = h(j, i) = shifted_value(basis, y, p, basis[i] + basis[j]);
  return SymMatrix(h);
}

MomentRelaxation build_moment_lmi(const ReluSystem& sys, const Polynomial& f, int order) {
  if (order < 1) throw std::invalid_argument("build_moment_lmi: order must be >= 1");
  const int v = sys.n() + sys.m() + 1;
  if (f.vars() != v) throw std::invalid_argument("build_moment_lmi: objective has wrong variable count");
  if (f.degree() > 2 * order) throw std::invalid_argument("build_moment_lmi: deg f exceeds 2N");
  MomentRelaxation rel;
  rel.order = order;
  rel.vars = v;
  rel.basis.emplace(v, 2 * order);
  const MonomialBasis& basis = *rel.basis;
  SdpProblem& p = rel.problem;
  const int k = basis.prefix(order);
  const PolynomialSet ps = build_polynomial_sets(sys);
  rel.moment_block = p.add_psd_block("moment", k);
  const ExprMatrix hm = p.psd_matrix(rel.moment_block);
  rel.y.assign(basis.size(), LinearExpr());
  std::vector<char> seen(basis.size(), 0);
  for (int r = 0; r < k; ++r)
    for (int c = 0; c <= r; ++c) {
      const int a = basis.index(basis[r] + basis[c]);
      if (!seen[a]) {
        seen[a] = 1;
        rel.y[a] = hm(r, c);
      } else {
        p.constrain_zero(hm(r, c) - rel.y[a]);
      }
    }

  auto local = [&](const Polynomial& g, int s) {
    const int q = basis.prefix(s);
    ExprMatrix m(q, q);
    for (int i = 0; i < q; ++i)
      for (int j = 0; j <= i; ++j) m(i, j) = m(j, i) = shifted(rel, g, basis[i] + basis[j]);
    return m;
  };

  p.add_equality(rel.y[0], 1.0);

  for (const auto& e : ps.E) {
    const ExprMatrix m = local(e, order - 1);
    for (int i = 0; i < m.rows(); ++i)
      for (int j = 0; j <= i; ++j) p.constrain_zero(m(i, j));
  }
  p.constrain_psd("lambda", local(ps.lambda, order - 1));
  // g = ±e makes H_{N−1}(g y) = 0 already; as a PSD block it has no interior.
  auto in_e = [&](const Polynomial& g) {
    return std::any_of(ps.E.begin(), ps.E.end(), [&](const Polynomial& e) {
      for (const Polynomial& r : {g + e, g - e}) {
        double big = 0;
        for (const auto& [alpha, c] : r.terms()) big = std::max(big, std::abs(c));
        if (big <= 1e-14 * (1.0 + g.degree())) return true;
      }
      return false;
    });
  };
  for (std::size_t g = 0; g < ps.G.size(); ++g)
    if (!in_e(ps.G[g])) p.constrain_psd("g" + std::to_string(g), local(ps.G[g], order - 1));

  LinearExpr obj;
  for (const auto& [alpha, c] : f.terms()) obj += c * rel.y[basis.index(alpha)];
  p.set_objective(obj);
  return rel;
}

std::optional<int> check_flat_extension(const MomentVector& y, int order, double rank_tol) {
  int prev = numerical_rank(moment_matrix(y, 0), rank_tol);
  for (int s = 1; s <= order; ++s) {
    const int r = numerical_rank(moment_matrix(y, s), rank_tol);
    if (r == prev) return s;
    prev = r;
  }
  return std::nullopt;
}

std::optional<MomentPoint> extract_minimizer(const ReluSystem& sys, const MomentVector& y) {
  const int n = sys.n(), m = sys.m(), v = n + m + 1;
  if (y.vars != v || y.degree < 1) return std::nullopt;
  // Degree-1 monomials sit right after y₀ in variable order.
  Eigen::VectorXd p = y.values.segment(1, v) / y.values(0);
  // G only fixes the sign pattern up to ±(x, w); pick the branch with w, w − z ≥ 0.
  const Eigen::VectorXd x = p.head(n), w = p.segment(n, m);
  if (w.sum() + (w - sys.C() * x - sys.D() * w).sum() < 0) p.head(n + m) *= -1.0;
  const PolynomialSet ps = build_polynomial_sets(sys);
  for (const auto& e : ps.E)
    if (std::abs(e.evaluate(p)) > kMomentPointTol) return std::nullopt;
  for (const auto& g : ps.G)
    if (g.evaluate(p) < -kMomentPointTol) return std::nullopt;
  if (p(v - 1) < -kMomentPointTol) return std::nullopt;
  return MomentPoint{p.head(n), p.segment(n, m), p(v - 1)};
}

MomentResult solve_moment(const ReluSystem& sys, const Polynomial& f, int order, double rank_tol,
                          const SolverSettings& settings) {
  const auto t0 = Clock::now();
  // λ = σ μ keeps the high λ-moments near unit size; in μ the relaxation is
  // the one for (A/σ, B/σ, C, D) with f(σ μ) as objective.
  Eigen::MatrixXd ab(sys.n(), sys.n() + sys.m());
  ab << sys.A(), sys.B();
  const double sigma = std::max(1.0, spectral_norm(ab));
  const int lam = sys.n() + sys.m();
  Polynomial fs(f.vars());
  for (const auto& [alpha, c] : f.terms())
    fs.add_term(alpha, c * (lam < static_cast<int>(alpha.exponents.size())
                                ? std::pow(sigma, alpha.exponents[lam]) : 1.0));
  const ReluSystem scaled(sys.A() / sigma, sys.B() / sigma, sys.C(), sys.D());
  const MomentRelaxation rel = build_moment_lmi(scaled, fs, order);
  const SdpSolution sol = solve_sdp(rel.problem, settings);
  MomentResult r;
  r.order = order;
  r.status = sol.status;
  if (sol.ok()) {
    r.bound = sol.objective_value;
    MomentVector y{rel.vars, 2 * order, Eigen::VectorXd(rel.basis->size())};
    for (int i = 0; i < rel.basis->size(); ++i)
      y.values(i) = sol.value(rel.y[i]) * std::pow(sigma, (*rel.basis)[i].exponents[lam]);
    for (int s = 0; s <= order; ++s) r.ranks.push_back(numerical_rank(moment_matrix(y, s), rank_tol));
    r.flat = check_flat_extension(y, order, rank_tol);
    if (r.flat && r.ranks[*r.flat] == 1) r.point = extract_minimizer(sys, y);
    r.y = std::move(y);
  }
  r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return r;
}

std::vector<MomentResult> run_moments(const ReluSystem& sys, int max_order, double rank_tol,
                                      const SolverSettings& settings) {
  if (max_order < 1) throw std::invalid_argument("run_moments: max_order must be >= 1");
  const Polynomial f = Polynomial::Variable(sys.n() + sys.m() + 1, sys.n() + sys.m());
  std::vector<MomentResult> out;
  for (int order = 1; order <= max_order; ++order) {
    out.push_back(solve_moment(sys, f, order, rank_tol, settings));
    if (out.back().status == SolveStatus::kInfeasible) break;
  }
  return out;
}

Json moment_to_json(const std::vector<MomentResult>& results) {
  Json arr = Json::array();
  for (const auto& r : results) {
    Json j;
    j["order"] = r.order;
    j["status"] = to_string(r.status);
    j["bound"] = r.y ? Json(r.bound) : Json(nullptr);
    j["ranks"] = r.ranks;
    j["flat_extension"] = r.flat ? Json(*r.flat) : Json(nullptr);
    if (r.point) {
      Json p;
      p["x"] = to_json(r.point->x);
      p["w"] = to_json(r.point->w);
      p["lambda"] = r.point->lambda;
      j["point"] = p;
    } else {
      j["point"] = nullptr;
    }
    j["seconds"] = r.seconds;
    arr.push_back(j);
  }
  return arr;
}

}  // namespace relustab
