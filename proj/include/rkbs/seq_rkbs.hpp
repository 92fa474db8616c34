#pragma once

// Minimum-norm interpolation in l1(N) through its dual certificate, and the
// smooth lp(N) counterpart with its closed-form solution.

#include <cstddef>
#include <vector>

#include "rkbs/core.hpp"

namespace rkbs {

enum class DualSelection {
  kVertex,             // the simplex vertex
  kMinimalAttainment,  // a relative-interior point of the optimal face
};

struct DualCertificate {
  /// Dual coefficients scaled so that ||sum c_j v_j||_inf = 1.
  Vector c;
  /// m0 = c^T y.
  double value = 0.0;
  /// m0 * sum c_j v_j.
  SequenceFunctional nu_hat = SequenceFunctional::Finite({});
  /// Sorted coordinates where |nu_hat| reaches its sup norm.
  std::vector<std::size_t> attain;
  std::size_t truncation_used = 0;
  /// ||nu_hat||_inf minus the largest non-attaining coordinate or tail bound.
  double margin = 0.0;
  /// max_{k <= truncation_used} |sum c_j v_{j,k}|, equal to 1 up to rounding.
  double unit_norm = 0.0;
};

/// max c^T y s.t. |sum_j c_j v_{j,k}| <= 1, with K doubled from
/// truncation_start until the tails provably stay below the attained level.
DualCertificate dual_solve_l1(const SeqProblem& problem,
                              DualSelection selection = DualSelection::kVertex);

/// Builds the certificate for a caller-supplied c (rescaled to unit dual
/// norm). Does not check optimality.
DualCertificate certify_dual(const SeqProblem& problem, const Vector& c);

std::vector<std::size_t> attainment_set(const DualCertificate& cert, double attain_tol);

KernelMatrix truncation_matrix(const std::vector<SequenceFunctional>& functionals,
                               const std::vector<std::size_t>& indices, double tol = 1e-9);

struct MniResult {
  DualCertificate certificate;
  KernelMatrix matrix;
  SparseSolution solution;
};

MniResult mni_solve_l1_detailed(const SeqProblem& problem,
                                DualSelection selection = DualSelection::kVertex);
/// Sparse solution from an already computed certificate.
MniResult mni_solve_l1_from(const SeqProblem& problem, const DualCertificate& cert);
SparseSolution mni_solve_l1(const SeqProblem& problem);

struct SignedAtom {
  std::size_t site;
  int sign;
};

/// {(k, sign v_k) : k in N(v)} over coordinates k <= K.
std::vector<SignedAtom> linf_subdiff_extreme_points(const SequenceFunctional& v, std::size_t K,
                                                    double attain_tol = 1e-7);

/// Sequence measurements restricted to coordinates 1..K, one row per functional.
Matrix measurement_block(const std::vector<SequenceFunctional>& functionals, std::size_t K);

struct LpSolution {
  double p = 2.0;
  double q = 2.0;
  Vector dual_c;       // unit q-norm dual coefficients
  double value = 0.0;  // dual optimum y^T c
  double norm_p = 0.0;
  std::size_t truncation = 0;
  /// Bound on the q-norm of sum c_j v_j beyond the truncation.
  double tail_bound = 0.0;
  double residual = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  std::vector<SequenceFunctional> functionals;

  /// x_k from the closed form, any k >= 1.
  double Eval(std::size_t k) const;
  std::vector<double> Coordinates(std::size_t count) const;
};

/// Solves min ||x||_p s.t. <v_i, x> = y_i for 1 < p < inf through the
/// reciprocal dual min ||sum c_j v_j||_q on {c^T y = 1}, truncated to
/// `truncation` coordinates.
LpSolution mni_solve_lp(const SeqProblem& problem, double p, std::size_t truncation = 1 << 16);

enum class DependencyVerdict { kDependent, kIndependent, kInconclusive };

const char* to_string(DependencyVerdict verdict);

struct DependencyReport {
  DependencyVerdict verdict = DependencyVerdict::kInconclusive;
  int rank = 0;
  std::size_t window = 0;
};

/// Linear dependence of the tails (v_{j,N+1}, v_{j,N+2}, ...) from a window of
/// `window` coordinates plus the tail bounds beyond it.
DependencyReport support_dependency_check(const std::vector<SequenceFunctional>& functionals,
                                          std::size_t N, std::size_t window = 64);

}  // namespace rkbs
