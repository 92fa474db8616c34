#include "rkbs/seq_rkbs.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rkbs/optim.hpp"

namespace rkbs {

namespace {

constexpr std::size_t kMaxTruncation = std::size_t{1} << 20;
constexpr std::size_t npos = static_cast<std::size_t>(-1);

std::size_t max_support(const std::vector<SequenceFunctional>& functionals) {
  std::size_t len = 0;
  for (const auto& f : functionals) {
    const std::size_t l = f.SupportLength();
    if (l == npos) return npos;
    len = std::max(len, l);
  }
  return len;
}

double weighted_tail(const std::vector<SequenceFunctional>& functionals, const Vector& c,
                     std::size_t K) {
  double tail = 0.0;
  for (std::size_t j = 0; j < functionals.size(); ++j) {
    const double cj = std::abs(c(static_cast<Eigen::Index>(j)));
    if (cj != 0.0) tail += cj * functionals[j].TailBound(K);
  }
  return tail;
}

SequenceFunctional combine(const std::vector<SequenceFunctional>& functionals, const Vector& w) {
  std::vector<std::pair<double, SequenceFunctional>> terms;
  terms.reserve(functionals.size());
  for (std::size_t j = 0; j < functionals.size(); ++j) {
    terms.emplace_back(w(static_cast<Eigen::Index>(j)), functionals[j]);
  }
  return SequenceFunctional::ScaledSum(std::move(terms));
}

// Certificate for c on an already evaluated block; false while the tails are
// not yet certified.
bool try_certify(const SeqProblem& problem, const Vector& c_in, const Matrix& vk, std::size_t K,
                 DualCertificate& out) {
  const double attain_tol = problem.options.attain_tol;
  const Vector u = vk.transpose() * c_in;
  const double s = u.size() ? u.cwiseAbs().maxCoeff() : 0.0;
  if (!(s > 0)) return false;
  const double tail = weighted_tail(problem.functionals, c_in, K);
  if (tail > s * (1.0 - attain_tol)) return false;

  out.c = c_in / s;
  out.value = out.c.dot(problem.y);
  if (!(out.value > 0)) throw DomainError("certificate needs c^T y > 0");
  out.nu_hat = combine(problem.functionals, out.value * out.c);
  out.truncation_used = K;
  out.unit_norm = u.cwiseAbs().maxCoeff() / s;
  out.attain.clear();
  double worst_other = tail / s;
  for (Eigen::Index k = 0; k < u.size(); ++k) {
    const double a = std::abs(u(k)) / s;
    if (a >= 1.0 - attain_tol) {
      out.attain.push_back(static_cast<std::size_t>(k) + 1);
    } else {
      worst_other = std::max(worst_other, a);
    }
  }
  out.margin = out.value * (1.0 - worst_other);
  return true;
}

void require_nonzero_y(const SeqProblem& problem) {
  problem.Validate();
  if (problem.y.cwiseAbs().maxCoeff() == 0.0) {
    throw DomainError("y = 0: the minimum-norm interpolant is zero and has no dual certificate");
  }
}

// A point in the relative interior of the optimal face
// {c : c^T y = m0, |V_K^T c| <= 1}, which has the fewest active constraints.
Vector relative_interior_point(const Matrix& vk, const Vector& y, const Vector& c_hat, double m0,
                               double attain_tol, double tol) {
  const Eigen::Index n = vk.rows();
  std::vector<Eigen::Index> rows;
  for (Eigen::Index k = 0; k < vk.cols(); ++k) {
    if (vk.col(k).cwiseAbs().maxCoeff() > 0.0) rows.push_back(k);
  }
  const Eigen::Index r = static_cast<Eigen::Index>(rows.size());
  optim::LinearProgram lp;
  lp.sense = optim::ObjectiveSense::kMinimize;
  lp.A.resize(1 + 2 * r, n);
  lp.b.resize(1 + 2 * r);
  lp.row_sense.assign(static_cast<std::size_t>(1 + 2 * r), optim::RowSense::kLessEqual);
  lp.A.row(0) = y.transpose();
  lp.b(0) = m0;
  lp.row_sense[0] = optim::RowSense::kEqual;
  for (Eigen::Index i = 0; i < r; ++i) {
    lp.A.row(1 + 2 * i) = vk.col(rows[i]).transpose();
    lp.A.row(2 + 2 * i) = -vk.col(rows[i]).transpose();
    lp.b(1 + 2 * i) = 1.0;
    lp.b(2 + 2 * i) = 1.0;
  }
  lp.lower = Vector::Constant(n, -kInf);
  lp.upper = Vector::Constant(n, kInf);

  const Vector u = vk.transpose() * c_hat;
  Vector sum = c_hat;
  int count = 1;
  for (Eigen::Index k : rows) {
    if (std::abs(u(k)) < 1.0 - attain_tol) continue;
    const double sign = u(k) > 0 ? 1.0 : -1.0;
    lp.objective = sign * vk.col(k);
    const optim::VertexSolution sol = optim::lp_solve(lp, tol);
    if (sol.status != optim::LpStatus::kOptimal) continue;
    if (sol.objective_value >= 1.0 - attain_tol) continue;  // active on the whole face
    sum += sol.x;
    ++count;
  }
  return sum / count;
}

}  // namespace

Matrix measurement_block(const std::vector<SequenceFunctional>& functionals, std::size_t K) {
  const Eigen::Index n = static_cast<Eigen::Index>(functionals.size());
  Matrix v(n, static_cast<Eigen::Index>(K));
  for (Eigen::Index j = 0; j < n; ++j) {
    const SequenceFunctional& f = functionals[static_cast<std::size_t>(j)];
    if (f.kind() == SequenceFunctional::Kind::kGeometric) {
      double p = 1.0;
      for (std::size_t k = 0; k < K; ++k) {
        v(j, static_cast<Eigen::Index>(k)) = p;
        p *= f.ratio();
      }
    } else {
      for (std::size_t k = 0; k < K; ++k) v(j, static_cast<Eigen::Index>(k)) = f.Eval(k + 1);
    }
  }
  return v;
}

DualCertificate certify_dual(const SeqProblem& problem, const Vector& c) {
  require_nonzero_y(problem);
  if (c.size() != problem.y.size()) throw DomainError("c has the wrong length");
  if (!c.allFinite() || c.cwiseAbs().maxCoeff() == 0.0) throw DomainError("c must be finite and nonzero");
  DualCertificate cert;
  for (std::size_t K = problem.options.truncation_start; K <= kMaxTruncation; K *= 2) {
    if (try_certify(problem, c, measurement_block(problem.functionals, K), K, cert)) return cert;
  }
  throw SolverError("tail certificate unreachable at K = 2^20 (weighted tail " +
                        std::to_string(weighted_tail(problem.functionals, c, kMaxTruncation)) + ")",
                    weighted_tail(problem.functionals, c, kMaxTruncation));
}

DualCertificate dual_solve_l1(const SeqProblem& problem, DualSelection selection) {
  require_nonzero_y(problem);
  const SolverOptions& opt = problem.options;
  const std::size_t n = problem.size();
  const std::size_t support = max_support(problem.functionals);
  double last_slack = kInf;
  for (std::size_t K = opt.truncation_start; K <= kMaxTruncation; K *= 2) {
    const Matrix vk = measurement_block(problem.functionals, K);
    if (numerical_rank(vk, opt.tol) < static_cast<int>(n)) {
      if (support != npos && K >= support) {
        throw DomainError("functionals are linearly dependent");
      }
      continue;
    }
    const optim::VertexSolution bp = optim::basis_pursuit(vk, problem.y, opt.tol);
    if (bp.status != optim::LpStatus::kOptimal) {
      throw SolverError(std::string("truncated dual LP returned ") + optim::to_string(bp.status),
                        kInf);
    }
    Vector c = bp.row_duals;
    DualCertificate cert;
    if (!try_certify(problem, c, vk, K, cert)) {
      const Vector u = vk.transpose() * c;
      last_slack = weighted_tail(problem.functionals, c, K) - u.cwiseAbs().maxCoeff() * (1 - opt.attain_tol);
      continue;
    }
    if (selection == DualSelection::kMinimalAttainment) {
      const Vector interior =
          relative_interior_point(vk, problem.y, cert.c, cert.value, opt.attain_tol, opt.tol);
      DualCertificate refined;
      if (try_certify(problem, interior, vk, K, refined) &&
          std::abs(refined.value - cert.value) <= opt.tol * (1.0 + cert.value) * 10 &&
          refined.attain.size() <= cert.attain.size()) {
        cert = std::move(refined);
      }
    }
    return cert;
  }
  throw SolverError("tail certificate unreachable at K = 2^20; tail exceeds the attained level by " +
                        std::to_string(last_slack),
                    last_slack);
}

std::vector<std::size_t> attainment_set(const DualCertificate& cert, double attain_tol) {
  const std::size_t K = cert.truncation_used;
  std::vector<double> vals(K);
  double sup = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    vals[k] = std::abs(cert.nu_hat.Eval(k + 1));
    sup = std::max(sup, vals[k]);
  }
  if (!(sup > 0)) throw DomainError("nu_hat vanishes on the truncated range");
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < K; ++k) {
    if (vals[k] >= sup * (1.0 - attain_tol)) out.push_back(k + 1);
  }
  return out;
}

KernelMatrix truncation_matrix(const std::vector<SequenceFunctional>& functionals,
                               const std::vector<std::size_t>& indices, double tol) {
  KernelMatrix km;
  const Eigen::Index n = static_cast<Eigen::Index>(functionals.size());
  km.values.resize(n, static_cast<Eigen::Index>(indices.size()));
  for (std::size_t c = 0; c < indices.size(); ++c) {
    if (indices[c] == 0 || (c > 0 && indices[c] <= indices[c - 1])) {
      throw DomainError("indices must be positive, sorted and distinct");
    }
    km.sites.push_back(static_cast<double>(indices[c]));
    for (Eigen::Index j = 0; j < n; ++j) {
      km.values(j, static_cast<Eigen::Index>(c)) = functionals[static_cast<std::size_t>(j)].Eval(indices[c]);
    }
  }
  km.rank = numerical_rank(km.values, tol);
  return km;
}

MniResult mni_solve_l1_from(const SeqProblem& problem, const DualCertificate& cert) {
  const SolverOptions& opt = problem.options;
  MniResult res;
  res.certificate = cert;
  res.matrix = truncation_matrix(problem.functionals, cert.attain, opt.tol);
  const Matrix& v = res.matrix.values;
  const optim::VertexSolution bp = optim::basis_pursuit(v, problem.y, opt.tol);
  if (bp.status != optim::LpStatus::kOptimal) {
    throw SolverError(std::string("basis pursuit on the attainment set returned ") +
                          optim::to_string(bp.status),
                      kInf);
  }
  Vector alpha = bp.x;
  const double total = alpha.cwiseAbs().sum();
  bool pruned = false;
  for (Eigen::Index j = 0; j < alpha.size(); ++j) {
    if (alpha(j) != 0.0 && std::abs(alpha(j)) <= opt.attain_tol * total) {
      alpha(j) = 0.0;
      pruned = true;
    }
  }
  if (pruned) {
    std::vector<Eigen::Index> s;
    for (Eigen::Index j = 0; j < alpha.size(); ++j) {
      if (alpha(j) != 0.0) s.push_back(j);
    }
    Matrix vs(v.rows(), static_cast<Eigen::Index>(s.size()));
    for (std::size_t i = 0; i < s.size(); ++i) vs.col(static_cast<Eigen::Index>(i)) = v.col(s[i]);
    const Vector refit = vs.colPivHouseholderQr().solve(problem.y);
    for (std::size_t i = 0; i < s.size(); ++i) alpha(s[i]) = refit(static_cast<Eigen::Index>(i));
  }
  res.solution = MakeSparseSolution(res.matrix.sites, alpha, 0.0);
  res.solution.residual = v.cols() ? (v * alpha - problem.y).cwiseAbs().maxCoeff()
                                   : problem.y.cwiseAbs().maxCoeff();
  res.solution.rank_bound = res.matrix.rank;
  res.solution.dual_value = cert.value;
  res.solution.CheckInvariants(opt.tol, problem.size());
  return res;
}

MniResult mni_solve_l1_detailed(const SeqProblem& problem, DualSelection selection) {
  return mni_solve_l1_from(problem, dual_solve_l1(problem, selection));
}

SparseSolution mni_solve_l1(const SeqProblem& problem) {
  return mni_solve_l1_detailed(problem).solution;
}

std::vector<SignedAtom> linf_subdiff_extreme_points(const SequenceFunctional& v, std::size_t K,
                                                    double attain_tol) {
  if (K == 0) throw DomainError("K must be positive");
  std::vector<double> vals(K);
  double sup = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    vals[k] = v.Eval(k + 1);
    sup = std::max(sup, std::abs(vals[k]));
  }
  if (sup == 0.0) {
    if (v.TailBound(K) == 0.0) throw DomainError("v = 0 has no norming extreme points");
    throw DomainError("v vanishes on 1..K; enlarge K");
  }
  if (v.TailBound(K) >= sup * (1.0 - attain_tol)) {
    throw DomainError("tail beyond K is not certified below the sup norm");
  }
  std::vector<SignedAtom> out;
  for (std::size_t k = 0; k < K; ++k) {
    if (std::abs(vals[k]) >= sup * (1.0 - attain_tol)) {
      out.push_back({k + 1, vals[k] > 0 ? 1 : -1});
    }
  }
  return out;
}

double LpSolution::Eval(std::size_t k) const {
  double v = 0.0;
  for (std::size_t j = 0; j < functionals.size(); ++j) {
    v += dual_c(static_cast<Eigen::Index>(j)) * functionals[j].Eval(k);
  }
  // x_k = m0 |u_k|^(q-1) sign(u_k) for the unit-norm u = sum c_j v_j.
  if (v == 0.0) return 0.0;
  return value * std::copysign(std::pow(std::abs(v), q - 1.0), v);
}

std::vector<double> LpSolution::Coordinates(std::size_t count) const {
  std::vector<double> out(count);
  for (std::size_t k = 0; k < count; ++k) out[k] = Eval(k + 1);
  return out;
}

LpSolution mni_solve_lp(const SeqProblem& problem, double p, std::size_t truncation) {
  require_nonzero_y(problem);
  if (!(p > 1.0) || !std::isfinite(p)) throw DomainError("p must lie in (1, inf)");
  if (truncation == 0) throw DomainError("truncation must be positive");
  const double q = p / (p - 1.0);
  const Eigen::Index n = static_cast<Eigen::Index>(problem.size());
  const Matrix vk = measurement_block(problem.functionals, truncation);
  if (numerical_rank(vk, problem.options.tol) < n) {
    throw DomainError("functionals are linearly dependent on the truncated range");
  }
  const Vector& y = problem.y;

  // c = c0 + Z z with Z an orthonormal basis of y-perp.
  const Vector c0 = y / y.squaredNorm();
  Matrix z_basis(n, n - 1);
  if (n > 1) {
    Eigen::HouseholderQR<Matrix> qr(y);
    z_basis = Matrix(qr.householderQ()).rightCols(n - 1);
  }
  auto phi = [&](const Vector& c) {
    return (vk.transpose() * c).array().abs().pow(q).sum() / q;
  };
  auto reduced_grad = [&](const Vector& c) -> Vector {
    const Vector u = vk.transpose() * c;
    const Vector w = u.array().abs().pow(q - 1.0) * u.array().sign();
    return z_basis.transpose() * (vk * w);
  };

  LpSolution sol;
  sol.p = p;
  sol.q = q;
  sol.truncation = truncation;
  sol.functionals = problem.functionals;

  Vector c = c0;
  double grad_norm = 0.0;
  constexpr int kMaxIters = 200;
  int it = 0;
  for (; it < kMaxIters && n > 1; ++it) {
    const Vector u = vk.transpose() * c;
    const double umax = u.cwiseAbs().maxCoeff();
    const Vector w = u.array().abs().pow(q - 1.0) * u.array().sign();
    const Vector d = u.cwiseAbs().cwiseMax(1e-12 * umax).array().pow(q - 2.0);
    const Vector g = z_basis.transpose() * (vk * w);
    const Vector full_grad = vk * w;
    grad_norm = g.norm();
    if (grad_norm <= 1e-14 * full_grad.norm()) break;
    const Matrix h = (q - 1.0) * z_basis.transpose() * (vk * d.asDiagonal() * vk.transpose()) * z_basis;
    const Vector step = -h.ldlt().solve(g);
    const double f0 = phi(c);
    double t = 1.0;
    bool accepted = false;
    Vector next;
    while (t > 1e-12) {
      next = c + z_basis * (t * step);
      const double f1 = phi(next);
      if (f1 <= f0 + 1e-4 * t * g.dot(step)) {
        accepted = true;
        break;
      }
      // Near the optimum phi stops resolving the decrease; fall back on the
      // reduced gradient.
      if (f1 <= f0 + 1e-14 * std::abs(f0) && reduced_grad(next).norm() < grad_norm) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
    c = next;
  }
  {
    const Vector u = vk.transpose() * c;
    const Vector w = u.array().abs().pow(q - 1.0) * u.array().sign();
    const Vector full_grad = vk * w;
    grad_norm = n > 1 ? (z_basis.transpose() * full_grad).norm() : 0.0;
    if (grad_norm > 1e-8 * full_grad.norm()) {
      throw SolverError("lp dual did not converge; gradient norm " + std::to_string(grad_norm),
                        grad_norm);
    }
  }
  sol.iterations = it;
  sol.gradient_norm = grad_norm;

  const Vector u = vk.transpose() * c;
  const double mu = std::pow(u.array().abs().pow(q).sum(), 1.0 / q);
  sol.dual_c = c / mu;
  sol.value = sol.dual_c.dot(y);
  sol.tail_bound = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    sol.tail_bound += std::abs(sol.dual_c(j)) *
                      problem.functionals[static_cast<std::size_t>(j)].TailNorm(truncation, q);
  }
  const Vector un = u / mu;
  const Vector x = sol.value * (un.array().abs().pow(q - 1.0) * un.array().sign()).matrix();
  sol.norm_p = std::pow(x.array().abs().pow(p).sum(), 1.0 / p);
  sol.residual = (vk * x - y).cwiseAbs().maxCoeff();
  return sol;
}

const char* to_string(DependencyVerdict verdict) {
  switch (verdict) {
    case DependencyVerdict::kDependent:
      return "dependent";
    case DependencyVerdict::kIndependent:
      return "independent";
    case DependencyVerdict::kInconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

DependencyReport support_dependency_check(const std::vector<SequenceFunctional>& functionals,
                                          std::size_t N, std::size_t window) {
  if (N == 0) throw DomainError("N must be >= 1");
  if (window == 0) throw DomainError("window must be positive");
  const Eigen::Index n = static_cast<Eigen::Index>(functionals.size());
  const Eigen::Index w = static_cast<Eigen::Index>(window);
  Matrix block(n, w);
  bool zero_beyond = true;
  bool unresolved_row = false;
  for (Eigen::Index j = 0; j < n; ++j) {
    const SequenceFunctional& f = functionals[static_cast<std::size_t>(j)];
    for (Eigen::Index k = 0; k < w; ++k) {
      block(j, k) = f.Eval(N + static_cast<std::size_t>(k) + 1);
    }
    const double beyond = f.TailBound(N + window);
    if (beyond != 0.0) zero_beyond = false;
    const double scale = block.row(j).cwiseAbs().maxCoeff();
    if (scale > 0) {
      block.row(j) /= scale;
    } else if (beyond != 0.0) {
      unresolved_row = true;
    }
  }
  DependencyReport rep;
  rep.window = window;
  Eigen::JacobiSVD<Matrix> svd(block);
  const Vector& s = svd.singularValues();
  const double smax = s.size() ? s(0) : 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > 1e-10 * std::max(smax, 1.0)) ++rep.rank;
  }
  if (rep.rank == n) {
    rep.verdict = DependencyVerdict::kIndependent;
  } else if (zero_beyond && !unresolved_row) {
    rep.verdict = DependencyVerdict::kDependent;
  } else {
    rep.verdict = DependencyVerdict::kInconclusive;
  }
  return rep;
}

}  // namespace rkbs
