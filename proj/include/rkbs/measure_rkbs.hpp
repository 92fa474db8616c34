#pragma once

// Minimum-norm interpolation by finite signed measures on an interval, with
// Gaussian kernel sessions K(x_j, .) as measurements.

#include <vector>

#include "rkbs/core.hpp"

namespace rkbs {

double gauss_kernel(double x, double t, double sigma);

/// g(x) = sum_j c_j K(x_j, x) and its first two derivatives in x.
double gauss_eval(const Vector& c, const GaussProblem& problem, double x);
double gauss_deriv(const Vector& c, const GaussProblem& problem, double x);
double gauss_deriv2(const Vector& c, const GaussProblem& problem, double x);

struct Extremum {
  double t;
  double value;  // g(t), signed
};

/// Every local maximum of |g| found on a grid of spacing `step` over the
/// domain, refined by safeguarded Newton on g'. Sorted by location.
std::vector<Extremum> refined_local_maxima(const Vector& c, const GaussProblem& problem,
                                           double step);

/// Points where |g| is within attain_tol (relative) of its supremum. Throws
/// DomainError when the supremum sits on the domain boundary.
std::vector<double> find_attainment_points(const Vector& c, const GaussProblem& problem);

struct ContinuousDualCertificate {
  Vector c;
  double value = 0.0;
  std::vector<double> attain_points;
  /// sup |sum c_j K(x_j, .)|, equal to 1 up to attain_tol.
  double sup_norm = 0.0;
  int exchange_iters = 0;
  double final_violation = 0.0;
  bool polished = false;
};

/// max c^T y s.t. |sum c_j K(x_j, t)| <= 1 on the domain, by an exchange
/// method followed by a Newton solve of the optimality system.
ContinuousDualCertificate dual_solve_semiinfinite(const GaussProblem& problem);

KernelMatrix kernel_matrix(const GaussProblem& problem, const std::vector<double>& points);

struct SparseMeasure : SparseSolution {
  double tv_norm() const { return norm; }
  /// f(x) = sum_l w_l K(x, t_l).
  double Eval(const GaussProblem& problem, double x) const;
};

struct MeasureResult {
  ContinuousDualCertificate certificate;
  KernelMatrix matrix;
  SparseMeasure solution;
};

MeasureResult mni_solve_measure_detailed(const GaussProblem& problem);
SparseMeasure mni_solve_measure(const GaussProblem& problem);

}  // namespace rkbs
