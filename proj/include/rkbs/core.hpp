#pragma once

// Shared domain types: sequence functionals in c0(N), problem descriptions,
// solver options and sparse kernel representations.

#include <cstddef>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace rkbs {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Raised when an input violates an operation's precondition.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a solver cannot reach its stopping criterion. Carries the last
/// measured residual / violation so callers can report it.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double last_residual)
      : std::runtime_error(what), last_residual_(last_residual) {}
  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

/// An element v = (v_1, v_2, ...) of c0(N) with exact coordinates and a
/// certified tail bound. Coordinates are 1-based.
///
/// The object is immutable; scaled sums share their children.
class SequenceFunctional {
 public:
  enum class Kind { kHarmonic, kGeometric, kFinite, kScaledSum };

  struct Term {
    double weight;
    std::shared_ptr<const SequenceFunctional> functional;
  };

  /// v_k = 1/k.
  static SequenceFunctional Harmonic();
  /// v_k = ratio^(k-1), |ratio| < 1.
  static SequenceFunctional Geometric(double ratio);
  /// v_k = values[k-1], zero beyond the list.
  static SequenceFunctional Finite(std::vector<double> values);
  /// The unit vector e_k.
  static SequenceFunctional Unit(std::size_t k);
  /// sum_i weight_i * f_i.
  static SequenceFunctional ScaledSum(std::vector<std::pair<double, SequenceFunctional>> terms);

  Kind kind() const noexcept { return kind_; }
  double ratio() const noexcept { return ratio_; }
  const std::vector<double>& values() const noexcept { return values_; }
  const std::vector<Term>& terms() const noexcept { return terms_; }

  /// Exact coordinate v_k. Throws DomainError for k == 0.
  double Eval(std::size_t k) const;

  /// b(K) with sup_{k>K} |v_k| <= b(K); non-increasing in K.
  double TailBound(std::size_t K) const;

  /// Upper bound on (sum_{k>K} |v_k|^s)^(1/s) for s > 1 (s >= 1 when the
  /// functional has finite support).
  double TailNorm(std::size_t K, double s) const;

  /// Length after which all coordinates vanish, or npos if the support is
  /// infinite.
  std::size_t SupportLength() const;

  /// Structural equality (same kind and parameters).
  bool operator==(const SequenceFunctional& other) const;

  std::string Describe() const;

 private:
  SequenceFunctional() = default;

  Kind kind_ = Kind::kFinite;
  double ratio_ = 0.0;
  std::vector<double> values_;
  std::vector<Term> terms_;
};

double functional_eval(const SequenceFunctional& f, std::size_t k);
double functional_tail_bound(const SequenceFunctional& f, std::size_t K);

struct SolverOptions {
  double tol = 1e-9;
  double attain_tol = 1e-7;
  std::size_t truncation_start = 256;
  /// Grid step for Gaussian problems; 0 selects sigma / 50.
  double grid_step = 0.0;
  int max_exchange_iters = 100;

  /// Throws DomainError unless every field is positive and attain_tol >= tol.
  void Validate() const;
};

struct SeqProblem {
  std::vector<SequenceFunctional> functionals;
  Vector y;
  SolverOptions options;

  std::size_t size() const { return functionals.size(); }
  void Validate() const;
};

struct GaussProblem {
  std::vector<double> centers;
  double sigma = 1.0;
  Vector y;
  double lo = 0.0;
  double hi = 0.0;
  SolverOptions options;

  /// Builds a problem whose domain extends `padding_sigmas` * sigma beyond the
  /// extreme centers.
  static GaussProblem Make(std::vector<double> centers, double sigma, Vector y,
                           double padding_sigmas = 6.0);

  std::size_t size() const { return centers.size(); }
  double grid_step() const { return options.grid_step > 0 ? options.grid_step : sigma / 50.0; }
  void Validate() const;
};

/// A finite kernel expansion sum_j coeff_j K(., site_j). For sequence spaces the
/// sites are positive integers stored exactly in a double.
struct Atom {
  double site;
  double coeff;

  std::size_t index() const { return static_cast<std::size_t>(site); }
};

struct SparseSolution {
  std::vector<Atom> atoms;
  double norm = 0.0;      // sum |coeff|
  double residual = 0.0;  // l-infinity interpolation / fit error
  int rank_bound = 0;
  double dual_value = 0.0;

  std::size_t sparsity() const { return atoms.size(); }
  /// Throws std::logic_error when an invariant fails.
  void CheckInvariants(double tol, std::size_t n) const;
};

/// Sorts sites, drops coefficients with |coeff| <= rel_prune * sum|coeff| and
/// recomputes the norm.
SparseSolution MakeSparseSolution(const std::vector<double>& sites, const Vector& coeffs,
                                  double rel_prune);

/// Measurement matrix restricted to a finite site list.
struct KernelMatrix {
  Matrix values;
  std::vector<double> sites;
  int rank = 0;
};

/// Rank with threshold tol * max(rows, cols) * ||A||_inf, via column-pivoted QR.
int numerical_rank(const Matrix& a, double tol);

}  // namespace rkbs
