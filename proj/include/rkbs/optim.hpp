#pragma once

// Finite-dimensional kernels: a dense tableau simplex that returns vertex
// solutions, l1 basis pursuit on top of it, and an accelerated proximal
// solver for the square-loss l1 problem.

#include <vector>

#include "rkbs/core.hpp"

namespace rkbs::optim {

enum class RowSense { kLessEqual, kEqual, kGreaterEqual };
enum class ObjectiveSense { kMinimize, kMaximize };
enum class LpStatus { kOptimal, kInfeasible, kUnbounded };

const char* to_string(LpStatus status);

struct LinearProgram {
  ObjectiveSense sense = ObjectiveSense::kMinimize;
  Vector objective;
  Matrix A;
  Vector b;
  std::vector<RowSense> row_sense;
  /// Variable bounds; -inf / +inf mark a free side. Empty means x >= 0.
  Vector lower;
  Vector upper;

  Eigen::Index num_vars() const { return objective.size(); }
  Eigen::Index num_rows() const { return A.rows(); }
  /// Throws DomainError on inconsistent dimensions or non-finite data.
  void Validate() const;
};

struct VertexSolution {
  LpStatus status = LpStatus::kInfeasible;
  Vector x;
  double objective_value = 0.0;
  /// Basic columns of the internal standard form, ascending.
  std::vector<int> basis;
  /// Row multipliers y with A^T y matching the objective on basic columns,
  /// expressed for the problem as stated (including its objective sense).
  Vector row_duals;
  int iterations = 0;
};

/// Two-phase dense tableau simplex with Bland's anti-cycling rule.
VertexSolution lp_solve(const LinearProgram& lp, double tol = 1e-9);

/// min ||alpha||_1 s.t. L alpha = y, via the split alpha = alpha+ - alpha-.
/// `row_duals` of the result hold a dual vector c with |L^T c| <= 1 and
/// c^T y equal to the optimal value.
VertexSolution basis_pursuit(const Matrix& L, const Vector& y, double tol = 1e-9);

/// Max over coordinates of the violation of the optimality conditions of
/// 1/2 ||L a - y||^2 + lambda ||a||_1.
double fermat_residual(const Matrix& L, const Vector& y, const Vector& alpha, double lambda);

struct ProxOptions {
  double tol = 1e-9;
  int max_iters = 200000;
  /// Attempt an exact solve on the current sign pattern every this many steps.
  int polish_every = 20;
};

/// min 1/2 ||L a - y||^2 + lambda ||a||_1 by FISTA with adaptive restart and
/// step 1/||L^T L||_2. Stops when fermat_residual <= tol; throws SolverError
/// carrying the last residual when the iteration cap is reached.
Vector prox_l1_solve(const Matrix& L, const Vector& y, double lambda, double tol = 1e-9);
Vector prox_l1_solve(const Matrix& L, const Vector& y, double lambda, const ProxOptions& options);

}  // namespace rkbs::optim
