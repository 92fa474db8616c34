#include "rkbs/oracle.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

namespace rkbs::oracle {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int svd_rank(const Matrix& a) {
  if (a.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(a);
  const Vector& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  const double thr = 1e-12 * static_cast<double>(std::max(a.rows(), a.cols())) * s(0);
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) r += s(i) > thr;
  return r;
}

// Calls f on every subset of {0..m-1} of size k, as sorted index vectors.
template <typename F>
void for_each_subset(int m, int k, F&& f) {
  std::vector<int> idx(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
  while (true) {
    f(idx);
    int i = k - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == m - k + i) --i;
    if (i < 0) return;
    ++idx[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
}

std::vector<Vector> optimal_vertices(const Matrix& L, const Vector& y, double tol, double& best) {
  const int m = static_cast<int>(L.cols());
  const int r = svd_rank(L);
  const double feas = tol * (1.0 + y.cwiseAbs().maxCoeff()) * 10.0;
  std::vector<Vector> basic;
  if (y.cwiseAbs().maxCoeff() <= feas) basic.push_back(Vector::Zero(m));
  for (int k = 1; k <= r; ++k) {
    for_each_subset(m, k, [&](const std::vector<int>& idx) {
      Matrix ls(L.rows(), k);
      for (int i = 0; i < k; ++i) ls.col(i) = L.col(idx[static_cast<std::size_t>(i)]);
      if (svd_rank(ls) < k) return;
      const Vector a = ls.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(y);
      if ((ls * a - y).cwiseAbs().maxCoeff() > feas) return;
      Vector full = Vector::Zero(m);
      for (int i = 0; i < k; ++i) full(idx[static_cast<std::size_t>(i)]) = a(i);
      basic.push_back(full);
    });
  }
  best = kInf;
  for (const Vector& v : basic) best = std::min(best, v.cwiseAbs().sum());
  std::vector<Vector> out;
  for (const Vector& v : basic) {
    if (v.cwiseAbs().sum() > best + tol * (1.0 + best)) continue;
    const bool dup = std::any_of(out.begin(), out.end(), [&](const Vector& w) {
      return (w - v).cwiseAbs().maxCoeff() <= tol * (1.0 + best);
    });
    if (!dup) out.push_back(v);
  }
  return out;
}

}  // namespace

bool OracleReport::Compare(double candidate, double tol) {
  agreement = std::abs(value - candidate) <= tol;
  return *agreement;
}

OracleReport vertex_enumerate_l1(const Matrix& L, const Vector& y, double tol) {
  const auto t0 = Clock::now();
  if (L.rows() != y.size()) throw DomainError("vertex_enumerate_l1: L and y disagree in length");
  if (L.cols() > 12) {
    throw OracleRefusal("vertex enumeration refuses m = " + std::to_string(L.cols()) + " > 12 columns");
  }
  OracleReport rep;
  rep.method = "vertex_enumerate_l1";
  double best = kInf;
  rep.witnesses = optimal_vertices(L, y, tol, best);
  rep.value = best;
  rep.values = {best};
  if (rep.witnesses.empty()) rep.notes = "infeasible: y is not in the range of L";
  rep.elapsed = seconds_since(t0);
  return rep;
}

double grid_error_bound(const Vector& c, double sigma, double step) {
  return 0.5 * step * step * c.cwiseAbs().sum() / (sigma * sigma);
}

OracleReport grid_supremum(const Vector& c, const GaussProblem& problem, double step) {
  const auto t0 = Clock::now();
  if (!(step > 0)) throw DomainError("grid step must be positive");
  if (static_cast<std::size_t>(c.size()) != problem.centers.size()) {
    throw DomainError("c has the wrong length");
  }
  const double inv = 1.0 / (2.0 * problem.sigma * problem.sigma);
  const auto count = static_cast<std::size_t>(std::ceil((problem.hi - problem.lo) / step));
  std::vector<double> ts(count + 1);
  std::vector<double> g(count + 1);
  double sup = 0.0;
  for (std::size_t i = 0; i <= count; ++i) {
    const double t = std::min(problem.hi, problem.lo + static_cast<double>(i) * step);
    double s = 0.0;
    for (std::size_t j = 0; j < problem.centers.size(); ++j) {
      const double d = t - problem.centers[j];
      s += c(static_cast<Eigen::Index>(j)) * std::exp(-d * d * inv);
    }
    ts[i] = t;
    g[i] = std::abs(s);
    sup = std::max(sup, g[i]);
  }
  OracleReport rep;
  rep.method = "grid_supremum";
  rep.value = sup;
  const double thr = sup * (1.0 - problem.options.attain_tol);
  for (std::size_t i = 0; i <= count; ++i) {
    const bool peak = (i == 0 || g[i] >= g[i - 1]) && (i == count || g[i] >= g[i + 1]);
    if (g[i] >= thr && peak) rep.values.push_back(ts[i]);
  }
  const double bound = grid_error_bound(c, problem.sigma, step);
  std::ostringstream os;
  os << "grid points " << count + 1 << ", supremum error bound " << bound;
  rep.notes = os.str();
  rep.witnesses.push_back(Vector::Constant(1, bound));
  rep.elapsed = seconds_since(t0);
  return rep;
}

OracleReport l2_min_norm(const SeqProblem& problem, std::size_t truncation) {
  const auto t0 = Clock::now();
  problem.Validate();
  if (truncation == 0) throw DomainError("truncation must be positive");
  const std::size_t n = problem.size();
  const Eigen::Index ni = static_cast<Eigen::Index>(n);
  Matrix v(ni, static_cast<Eigen::Index>(truncation));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < truncation; ++k) {
      v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = problem.functionals[i].Eval(k + 1);
    }
  }
  const Matrix gram = v * v.transpose();
  double tail_err = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      tail_err = std::max(tail_err, problem.functionals[i].TailNorm(truncation, 2.0) *
                                        problem.functionals[j].TailNorm(truncation, 2.0));
    }
  }
  Eigen::JacobiSVD<Matrix> svd(gram);
  const Vector& s = svd.singularValues();
  const double cond = s(s.size() - 1) > 0 ? s(0) / s(s.size() - 1) : kInf;
  if (!(cond < 1e12)) {
    std::ostringstream os;
    os << "Gram matrix condition estimate " << cond << " >= 1e12";
    throw OracleRefusal(os.str());
  }
  const Vector lam = gram.ldlt().solve(problem.y);
  OracleReport rep;
  rep.method = "l2_min_norm";
  rep.value = std::sqrt(std::max(0.0, lam.dot(problem.y)));
  rep.values.assign(lam.data(), lam.data() + lam.size());
  rep.witnesses.push_back(lam);
  std::ostringstream os;
  os << "truncation " << truncation << ", Gram tail bound " << tail_err << ", condition " << cond;
  rep.notes = os.str();
  const auto functionals = problem.functionals;
  rep.evaluator = [functionals, lam](std::size_t k) {
    double x = 0.0;
    for (std::size_t i = 0; i < functionals.size(); ++i) {
      x += lam(static_cast<Eigen::Index>(i)) * functionals[i].Eval(k);
    }
    return x;
  };
  rep.elapsed = seconds_since(t0);
  return rep;
}

OracleReport norming_check(const SequenceFunctional& nu_hat, std::size_t K,
                           const SparseSolution& solution, double tol) {
  double sup = 0.0;
  for (std::size_t k = 1; k <= K; ++k) sup = std::max(sup, std::abs(nu_hat.Eval(k)));
  return norming_check([&nu_hat](double site) { return nu_hat.Eval(static_cast<std::size_t>(site)); },
                       sup, solution, tol);
}

OracleReport norming_check(const std::function<double(double)>& g_hat, double sup_norm,
                           const SparseSolution& solution, double tol) {
  const auto t0 = Clock::now();
  if (!(sup_norm > 0)) throw DomainError("norming_check needs a nonzero certificate");
  double pairing = 0.0;
  double l1 = 0.0;
  for (const Atom& a : solution.atoms) {
    pairing += g_hat(a.site) * a.coeff;
    l1 += std::abs(a.coeff);
  }
  pairing /= sup_norm;
  OracleReport rep;
  rep.method = "norming_check";
  rep.value = pairing;
  rep.values = {pairing, l1};
  rep.agreement = std::abs(pairing - l1) <= tol * (1.0 + l1);
  std::ostringstream os;
  os << "pairing " << pairing << " vs l1 norm " << l1;
  rep.notes = os.str();
  rep.elapsed = seconds_since(t0);
  return rep;
}

OracleReport solution_set_convexity_check(const Matrix& L, const Vector& y, double tol) {
  const auto t0 = Clock::now();
  OracleReport rep = vertex_enumerate_l1(L, y, tol);
  rep.method = "solution_set_convexity_check";
  const auto& v = rep.witnesses;
  bool ok = !v.empty();
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    for (std::size_t j = i + 1; j < v.size(); ++j) {
      ++pairs;
      const Vector mid = 0.5 * (v[i] + v[j]);
      const bool feasible = (L * mid - y).cwiseAbs().maxCoeff() <= tol * (1.0 + y.cwiseAbs().maxCoeff()) * 10.0;
      const bool optimal = std::abs(mid.cwiseAbs().sum() - rep.value) <= tol * (1.0 + rep.value);
      ok = ok && feasible && optimal;
    }
  }
  rep.agreement = ok;
  rep.notes = pairs == 0 ? "vacuous: fewer than two optimal vertices"
                         : std::to_string(pairs) + " vertex pairs checked";
  rep.elapsed = seconds_since(t0);
  return rep;
}

}  // namespace rkbs::oracle
