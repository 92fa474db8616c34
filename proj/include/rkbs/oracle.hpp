#pragma once

// Brute-force verifiers that share no solver code: vertex enumeration,
// exhaustive grid scans and normal equations.

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rkbs/core.hpp"

namespace rkbs::oracle {

/// An oracle declined the instance (too large or too ill-conditioned).
class OracleRefusal : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OracleReport {
  std::string method;
  double value = 0.0;
  std::vector<double> values;
  std::vector<Vector> witnesses;
  double elapsed = 0.0;  // seconds
  std::optional<bool> agreement;
  std::string notes;
  /// Coordinate evaluator for oracles that return a sequence.
  std::function<double(std::size_t)> evaluator;

  /// Sets and returns agreement = |value - candidate| <= tol.
  bool Compare(double candidate, double tol);
};

/// min ||alpha||_1 s.t. L alpha = y by enumerating column subsets of size up to
/// rank(L). Refuses m > 12. witnesses hold every minimizing vertex.
OracleReport vertex_enumerate_l1(const Matrix& L, const Vector& y, double tol = 1e-9);

/// sup |sum c_j K(x_j, t)| over the grid lo, lo + step, ..., hi. values hold
/// the grid maximizers within attain_tol; error_bound in notes and values.
OracleReport grid_supremum(const Vector& c, const GaussProblem& problem, double step);
/// (h^2 / 2) * sum |c_j| / sigma^2.
double grid_error_bound(const Vector& c, double sigma, double step);

/// l2 minimum-norm interpolant V^T (V V^T)^{-1} y with the Gram matrix summed
/// over 1..truncation. Refuses condition numbers >= 1e12.
OracleReport l2_min_norm(const SeqProblem& problem, std::size_t truncation);

/// <nu / ||nu||, x> against ||x||_1 for a sequence certificate, sup over 1..K.
OracleReport norming_check(const SequenceFunctional& nu_hat, std::size_t K,
                           const SparseSolution& solution, double tol);
/// Same pairing for a function evaluator with a known sup norm.
OracleReport norming_check(const std::function<double(double)>& g_hat, double sup_norm,
                           const SparseSolution& solution, double tol);

/// Midpoints of every pair of optimal vertices are feasible and optimal.
OracleReport solution_set_convexity_check(const Matrix& L, const Vector& y, double tol);

}  // namespace rkbs::oracle
