#include <cmath>
#include <sstream>
#include <string>

#include "rkbs/optim.hpp"

namespace rkbs::optim {

namespace {

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

double objective(const Matrix& L, const Vector& y, const Vector& alpha, double lambda) {
  return 0.5 * (L * alpha - y).squaredNorm() + lambda * alpha.cwiseAbs().sum();
}

// Solves the stationarity system on the sign pattern of `alpha`. Returns false
// when the pattern is rank deficient or the signs do not survive.
bool polish_on_support(const Matrix& L, const Vector& y, double lambda, Vector& alpha) {
  std::vector<Eigen::Index> support;
  for (Eigen::Index j = 0; j < alpha.size(); ++j) {
    if (alpha(j) != 0.0) support.push_back(j);
  }
  if (support.empty()) return false;
  const Eigen::Index s = static_cast<Eigen::Index>(support.size());
  Matrix ls(L.rows(), s);
  Vector signs(s);
  for (Eigen::Index k = 0; k < s; ++k) {
    ls.col(k) = L.col(support[k]);
    signs(k) = alpha(support[k]) > 0 ? 1.0 : -1.0;
  }
  const Matrix gram = ls.transpose() * ls;
  Eigen::LDLT<Matrix> ldlt(gram);
  if (ldlt.info() != Eigen::Success) return false;
  Eigen::FullPivLU<Matrix> lu(gram);
  if (lu.rank() < s) return false;
  const Vector sol = lu.solve(ls.transpose() * y - lambda * signs);
  for (Eigen::Index k = 0; k < s; ++k) {
    if (!(sol(k) * signs(k) > 0)) return false;
  }
  for (Eigen::Index k = 0; k < s; ++k) alpha(support[k]) = sol(k);
  return true;
}

}  // namespace

double fermat_residual(const Matrix& L, const Vector& y, const Vector& alpha, double lambda) {
  const Vector grad = L.transpose() * (L * alpha - y);
  double worst = 0.0;
  for (Eigen::Index j = 0; j < alpha.size(); ++j) {
    const double v = alpha(j) != 0.0
                         ? std::abs(grad(j) + lambda * (alpha(j) > 0 ? 1.0 : -1.0))
                         : std::max(0.0, std::abs(grad(j)) - lambda);
    worst = std::max(worst, v);
  }
  return worst;
}

Vector prox_l1_solve(const Matrix& L, const Vector& y, double lambda, double tol) {
  ProxOptions options;
  options.tol = tol;
  return prox_l1_solve(L, y, lambda, options);
}

Vector prox_l1_solve(const Matrix& L, const Vector& y, double lambda, const ProxOptions& options) {
  if (!(lambda > 0)) throw DomainError("prox_l1_solve needs lambda > 0");
  if (L.rows() != y.size()) throw DomainError("prox_l1_solve: L and y disagree in length");
  const Eigen::Index m = L.cols();
  Vector alpha = Vector::Zero(m);
  if (m == 0) return alpha;

  // ||L^T L||_2 = ||L L^T||_2, the smaller Gram matrix.
  const Matrix small = L.rows() <= L.cols() ? Matrix(L * L.transpose()) : Matrix(L.transpose() * L);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(small, Eigen::EigenvaluesOnly);
  const double lip = eig.eigenvalues().maxCoeff();
  if (!(lip > 0)) return alpha;  // L == 0: zero is optimal.
  const double step = 1.0 / lip;

  double residual = fermat_residual(L, y, alpha, lambda);
  if (residual <= options.tol) return alpha;

  Vector momentum = alpha;
  double t = 1.0;
  double prev_obj = objective(L, y, alpha, lambda);
  for (int it = 1; it <= options.max_iters; ++it) {
    const Vector grad = L.transpose() * (L * momentum - y);
    Vector next(m);
    for (Eigen::Index j = 0; j < m; ++j) {
      next(j) = soft_threshold(momentum(j) - step * grad(j), step * lambda);
    }
    const double obj = objective(L, y, next, lambda);
    if (obj > prev_obj && t > 1.0) {
      // Adaptive restart: drop momentum when the objective goes up.
      t = 1.0;
      momentum = alpha;
      continue;
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    momentum = next + ((t - 1.0) / t_next) * (next - alpha);
    alpha = std::move(next);
    t = t_next;
    prev_obj = obj;

    residual = fermat_residual(L, y, alpha, lambda);
    if (residual <= options.tol) {
      Vector candidate = alpha;
      if (polish_on_support(L, y, lambda, candidate) &&
          fermat_residual(L, y, candidate, lambda) <= residual) {
        return candidate;
      }
      return alpha;
    }
    if (options.polish_every > 0 && it % options.polish_every == 0) {
      Vector candidate = alpha;
      if (polish_on_support(L, y, lambda, candidate) &&
          fermat_residual(L, y, candidate, lambda) <= options.tol) {
        return candidate;
      }
    }
  }
  std::ostringstream os;
  os << "prox_l1_solve did not converge; last residual " << residual;
  throw SolverError(os.str(), residual);
}

}  // namespace rkbs::optim
