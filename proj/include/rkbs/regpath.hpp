#pragma once

// Square-loss l1 / total-variation regularization, the lambda optimality
// conditions, and regularization paths.

#include <string>
#include <variant>
#include <vector>

#include "rkbs/core.hpp"
#include "rkbs/measure_rkbs.hpp"
#include "rkbs/seq_rkbs.hpp"

namespace rkbs {

/// min 1/2 ||L(f) - y||^2 + lambda ||f||.
struct RegProblem {
  std::variant<SeqProblem, GaussProblem> base;
  double lambda = 0.0;

  bool is_sequence() const { return std::holds_alternative<SeqProblem>(base); }
  const SolverOptions& options() const;
  const Vector& y() const;
  void Validate() const;
};

struct LambdaCertificate {
  std::vector<std::size_t> support;  // column indices into L
  std::vector<double> equality_residuals;
  std::vector<double> inequality_slacks;
  Vector a;
  double tol = 0.0;
  bool pass = false;

  double max_equality_residual() const;
  double min_inequality_slack() const;
};

/// Optimality conditions for alpha with a = L alpha - y:
/// lambda = -(L^T a)_k sign(alpha_k) on the support, lambda >= |(L^T a)_j| off it.
LambdaCertificate lambda_certificate(const Matrix& L, const Vector& alpha, const Vector& y,
                                     double lambda, double tol);
LambdaCertificate lambda_certificate(const KernelMatrix& L, const Vector& alpha, const Vector& y,
                                     double lambda, double tol);
/// Same conditions for a caller-supplied subgradient a of the loss at L alpha.
LambdaCertificate lambda_certificate_with_subgradient(const Matrix& L, const Vector& alpha,
                                                      const Vector& a, double lambda, double tol);

/// ||L^T y||_inf.
double lambda_max(const Matrix& L, const Vector& y);
double lambda_max(const KernelMatrix& L, const Vector& y);
/// sup_k |sum_i y_i v_{i,k}| with a certified truncation.
double lambda_max(const SeqProblem& problem);
/// sup_t |sum_i y_i K(x_i, t)|.
double lambda_max(const GaussProblem& problem);

struct RegResult {
  SparseSolution solution;
  /// Measurements over the sites used by the certificate; alpha lives on its columns.
  KernelMatrix matrix;
  Vector alpha;
  LambdaCertificate certificate;
  Vector z_hat;  // L(f_hat)
  double objective = 0.0;
  double lambda_max = 0.0;
  std::size_t truncation = 0;  // sequence problems
  int rounds = 0;              // Gaussian problems
};

RegResult reg_solve_detailed(const RegProblem& problem);
SparseSolution reg_solve(const RegProblem& problem);

struct ConsistencyReport {
  bool zero_regime = false;
  double reg_norm = 0.0;
  double mni_norm = 0.0;
  double reg_objective = 0.0;
  double mni_objective = 0.0;
  Vector z_hat;
  bool consistent = false;
  double tol = 0.0;

  double objective_change() const { return std::abs(mni_objective - reg_objective); }
  double norm_increase() const { return mni_norm - reg_norm; }
};

/// Solves the regularized problem, then MNI with data z_hat = L(f_hat), and
/// compares norms and regularized objectives.
ConsistencyReport reg_mni_consistency(const RegProblem& problem);

struct PathRow {
  double lambda = 0.0;
  std::size_t atoms = 0;
  double l1_norm = 0.0;
  double objective = 0.0;
  bool certificate_pass = false;
  std::string error;  // empty on success
};

/// One reg_solve per lambda (positive, ascending); failures are recorded per row.
std::vector<PathRow> sparsity_path(const std::variant<SeqProblem, GaussProblem>& base,
                                   const std::vector<double>& lambdas);

}  // namespace rkbs
