#include "relustab/oracle/enumeration.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace relustab {
namespace {

constexpr double kImagTol = 1e-10;
constexpr double kRepeatTol = 1e-9;
constexpr double kDedupTol = 1e-8;

std::vector<int> pattern_bits(unsigned mask, int m) {
  std::vector<int> out;
  for (int i = 0; i < m; ++i)
    if (mask & (1u << i)) out.push_back(i);
  return out;
}

// Orthonormal basis of the numerical null space of (K − λI). Always returns
// at least the smallest right singular vector.
std::vector<Eigen::VectorXd> eigenspace(const Eigen::MatrixXd& k, double lambda) {
  const int n = static_cast<int>(k.rows());
  const Eigen::MatrixXd shifted = k - lambda * Eigen::MatrixXd::Identity(n, n);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(shifted, Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double scale = 1.0 + k.norm();
  std::vector<Eigen::VectorXd> basis;
  for (int i = n - 1; i >= 0; --i) {
    if (i == n - 1 || sv(i) <= 1e-8 * scale) basis.push_back(svd.matrixV().col(i));
    else break;
  }
  return basis;
}

bool lex_less(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

}  // namespace

bool ActivationPattern::contains(int i) const { return std::binary_search(J.begin(), J.end(), i); }

std::vector<CandidateRay> OracleResult::feasible() const {
  std::vector<CandidateRay> out;
  for (const auto& c : candidates)
    if (c.feasible()) out.push_back(c);
  return out;
}

Eigen::MatrixXd build_FJ(const ReluSystem& sys, const ActivationPattern& pattern) {
  const int m = sys.m();
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(m, m);
  const int k = static_cast<int>(pattern.J.size());
  if (k == 0) return f;
  Eigen::MatrixXd block(k, k);
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) block(a, b) = (a == b ? 1.0 : 0.0) - sys.D()(pattern.J[a], pattern.J[b]);
  const Eigen::MatrixXd inv = block.inverse();
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) f(pattern.J[a], pattern.J[b]) = inv(a, b);
  return f;
}

OracleResult enumerate_rays(const ReluSystem& sys, double tol, int m_cap) {
  const int n = sys.n();
  const int m = sys.m();
  if (m > m_cap || m > 30) {
    throw EnumerationCapExceeded("m = " + std::to_string(m) + " exceeds enumeration cap " +
                                 std::to_string(m_cap));
  }
  OracleResult out;
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    ActivationPattern pat{pattern_bits(mask, m)};
    const Eigen::MatrixXd f = build_FJ(sys, pat);
    const Eigen::MatrixXd k = sys.A() + sys.B() * f * sys.C();
    Eigen::EigenSolver<Eigen::MatrixXd> es(k, false);
    PatternDiagnostics diag;
    diag.pattern = pat;

    std::vector<double> reals;
    for (int i = 0; i < n; ++i) {
      const std::complex<double> ev = es.eigenvalues()(i);
      if (std::abs(ev.imag()) <= kImagTol * (1.0 + std::abs(ev.real()))) {
        reals.push_back(ev.real());
      } else {
        ++diag.complex_eigenvalues;
      }
    }
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (std::abs(es.eigenvalues()(i) - es.eigenvalues()(j)) <=
            kRepeatTol * (1.0 + std::abs(es.eigenvalues()(i))))
          diag.distinct = false;
    diag.real_eigenvalues = static_cast<int>(reals.size());
    std::sort(reals.begin(), reals.end());

    // Cluster repeated real eigenvalues; each cluster is sampled once via
    // an orthonormal eigenspace basis.
    for (std::size_t i = 0; i < reals.size();) {
      std::size_t j = i + 1;
      while (j < reals.size() && reals[j] - reals[i] <= kRepeatTol * (1.0 + std::abs(reals[i]))) ++j;
      double lambda = 0;
      for (std::size_t t = i; t < j; ++t) lambda += reals[t];
      lambda /= static_cast<double>(j - i);
      if (std::abs(lambda) <= kRepeatTol) diag.zero_eigenvalue = true;
      for (const Eigen::VectorXd& v : eigenspace(k, lambda)) {
        Eigen::VectorXd x = v;
        Eigen::VectorXd w = f * sys.C() * x;
        const double norm = std::sqrt(x.squaredNorm() + w.squaredNorm());
        x /= norm;
        w /= norm;
        if (std::abs(x(0)) <= 1e-8) diag.near_zero_first_coord = true;
        const Eigen::VectorXd z = sys.C() * x + sys.D() * w;
        const double res = (k * x - lambda * x).norm();
        for (int sign : {1, -1}) {
          CandidateRay c;
          c.pattern = pat;
          c.lambda = lambda;
          c.x = sign * x;
          c.w = sign * w;
          c.sign = sign;
          c.eig_residual = res;
          bool ok = true;
          for (int r = 0; r < m; ++r) {
            if (pat.contains(r)) {
              if (sign * w(r) < -tol) ok = false;
            } else if (sign * z(r) > tol) {
              ok = false;
            }
          }
          c.sign_feasible = ok;
          c.lambda_nonneg = lambda >= -kSignTol;
          out.candidates.push_back(std::move(c));
        }
      }
      i = j;
    }
    out.diagnostics.push_back(std::move(diag));
  }

  std::stable_sort(out.candidates.begin(), out.candidates.end(),
                   [](const CandidateRay& a, const CandidateRay& b) {
                     if (a.pattern.J != b.pattern.J) return lex_less(a.pattern.J, b.pattern.J);
                     if (a.lambda != b.lambda) return a.lambda < b.lambda;
                     return a.sign > b.sign;
                   });
  std::stable_sort(out.diagnostics.begin(), out.diagnostics.end(),
                   [](const PatternDiagnostics& a, const PatternDiagnostics& b) {
                     return lex_less(a.pattern.J, b.pattern.J);
                   });

  // Boundary duplicates: a feasible ray on a face of its pattern reappears
  // under the subset pattern. Keep the first in canonical order.
  std::vector<CandidateRay> kept;
  kept.reserve(out.candidates.size());
  for (auto& c : out.candidates) {
    bool dup = false;
    if (c.sign_feasible) {
      for (const auto& k : kept) {
        if (!k.sign_feasible) continue;
        if (std::abs(k.lambda - c.lambda) < kDedupTol && (k.x - c.x).norm() < kDedupTol &&
            (k.w - c.w).norm() < kDedupTol) {
          dup = true;
          break;
        }
      }
    }
    if (!dup) kept.push_back(std::move(c));
  }
  out.candidates = std::move(kept);
  return out;
}

RayWitness to_witness(const CandidateRay& c) { return normalize_witness({c.x, c.w, c.lambda}); }

std::optional<MinLambda> min_unstable_lambda(const OracleResult& result) {
  std::optional<MinLambda> best;
  for (const auto& c : result.candidates) {
    if (!c.feasible()) continue;
    if (!best || c.lambda < best->lambda) {
      RayWitness w = to_witness(c);
      best = MinLambda{c.lambda, w};
    }
  }
  if (best) {
    best->lambda = std::max(best->lambda, 0.0);
    best->witness.lambda = best->lambda;
  }
  return best;
}

std::optional<MinLambda> min_unstable_lambda(const ReluSystem& sys, double tol, int m_cap) {
  return min_unstable_lambda(enumerate_rays(sys, tol, m_cap));
}

RayMatch match_oracle_ray(const RayWitness& wit, const OracleResult& result, double xw_tol,
                          double lambda_tol) {
  RayMatch best;
  const double nw = std::sqrt(wit.x.squaredNorm() + wit.w.squaredNorm());
  if (!(nw > 0)) return best;
  Eigen::VectorXd v(wit.x.size() + wit.w.size());
  v << wit.x / nw, wit.w / nw;
  double best_score = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < result.candidates.size(); ++i) {
    const auto& c = result.candidates[i];
    if (!c.feasible()) continue;
    Eigen::VectorXd u(c.x.size() + c.w.size());
    u << c.x, c.w;
    u.normalize();
    const double d = std::min((u - v).norm(), (u + v).norm());
    const double dl = std::abs(c.lambda - wit.lambda);
    const double score = d / xw_tol + dl / lambda_tol;
    if (score < best_score) {
      best_score = score;
      best.xw_distance = d;
      best.lambda_distance = dl;
      best.candidate = static_cast<int>(i);
    }
  }
  best.found = best.candidate >= 0 && best.xw_distance <= xw_tol && best.lambda_distance <= lambda_tol;
  return best;
}

Json oracle_report_json(const OracleResult& result) {
  Json j;
  Json pats = Json::array();
  for (const auto& d : result.diagnostics) {
    Json p;
    p["J"] = d.pattern.J;
    p["real_eigenvalues"] = d.real_eigenvalues;
    p["complex_eigenvalues"] = d.complex_eigenvalues;
    p["distinct"] = d.distinct;
    p["zero_eigenvalue"] = d.zero_eigenvalue;
    p["near_zero_first_coord"] = d.near_zero_first_coord;
    p["degenerate"] = d.degenerate();
    pats.push_back(p);
  }
  Json rays = Json::array();
  for (const auto& c : result.candidates) {
    if (!c.feasible()) continue;
    Json r;
    r["J"] = c.pattern.J;
    r["lambda"] = c.lambda;
    r["x"] = to_json(c.x);
    r["w"] = to_json(c.w);
    r["eig_residual"] = c.eig_residual;
    rays.push_back(r);
  }
  j["patterns"] = pats;
  j["candidate_count"] = result.candidates.size();
  j["feasible_rays"] = rays;
  const auto mn = min_unstable_lambda(result);
  if (mn) {
    Json s;
    s["lambda"] = mn->lambda;
    s["witness"] = witness_to_json(mn->witness);
    j["lambda_min"] = s;
  } else {
    j["lambda_min"] = nullptr;
  }
  return j;
}

}  // namespace relustab
