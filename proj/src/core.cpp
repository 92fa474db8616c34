#include "rkbs/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace rkbs {

SequenceFunctional SequenceFunctional::Harmonic() {
  SequenceFunctional f;
  f.kind_ = Kind::kHarmonic;
  return f;
}

SequenceFunctional SequenceFunctional::Geometric(double ratio) {
  if (!(std::abs(ratio) < 1.0)) {
    throw DomainError("geometric functional needs |ratio| < 1");
  }
  SequenceFunctional f;
  f.kind_ = Kind::kGeometric;
  f.ratio_ = ratio;
  return f;
}

SequenceFunctional SequenceFunctional::Finite(std::vector<double> values) {
  for (double v : values) {
    if (!std::isfinite(v)) throw DomainError("finite functional has a non-finite entry");
  }
  SequenceFunctional f;
  f.kind_ = Kind::kFinite;
  f.values_ = std::move(values);
  return f;
}

SequenceFunctional SequenceFunctional::Unit(std::size_t k) {
  if (k == 0) throw DomainError("coordinates are 1-based");
  std::vector<double> values(k, 0.0);
  values[k - 1] = 1.0;
  return Finite(std::move(values));
}

SequenceFunctional SequenceFunctional::ScaledSum(
    std::vector<std::pair<double, SequenceFunctional>> terms) {
  SequenceFunctional f;
  f.kind_ = Kind::kScaledSum;
  f.terms_.reserve(terms.size());
  for (auto& [w, child] : terms) {
    if (!std::isfinite(w)) throw DomainError("scaled-sum weight is not finite");
    f.terms_.push_back({w, std::make_shared<const SequenceFunctional>(std::move(child))});
  }
  return f;
}

double SequenceFunctional::Eval(std::size_t k) const {
  if (k == 0) throw DomainError("coordinates are 1-based; k = 0 is undefined");
  switch (kind_) {
    case Kind::kHarmonic:
      return 1.0 / static_cast<double>(k);
    case Kind::kGeometric:
      return std::pow(ratio_, static_cast<double>(k - 1));
    case Kind::kFinite:
      return k <= values_.size() ? values_[k - 1] : 0.0;
    case Kind::kScaledSum: {
      double s = 0.0;
      for (const Term& t : terms_) s += t.weight * t.functional->Eval(k);
      return s;
    }
  }
  return 0.0;
}

double SequenceFunctional::TailBound(std::size_t K) const {
  switch (kind_) {
    case Kind::kHarmonic:
      return 1.0 / static_cast<double>(K + 1);
    case Kind::kGeometric:
      return std::pow(std::abs(ratio_), static_cast<double>(K));
    case Kind::kFinite: {
      double m = 0.0;
      for (std::size_t k = K; k < values_.size(); ++k) m = std::max(m, std::abs(values_[k]));
      return m;
    }
    case Kind::kScaledSum: {
      double b = 0.0;
      for (const Term& t : terms_) b += std::abs(t.weight) * t.functional->TailBound(K);
      return b;
    }
  }
  return kInf;
}

double SequenceFunctional::TailNorm(std::size_t K, double s) const {
  switch (kind_) {
    case Kind::kHarmonic: {
      if (s <= 1.0) return kInf;
      // sum_{k>K} k^-s <= int_K^inf x^-s dx, with the k = 1 term handled for K = 0.
      const double Kd = static_cast<double>(K);
      const double sum = K == 0 ? 1.0 + 1.0 / (s - 1.0) : std::pow(Kd, 1.0 - s) / (s - 1.0);
      return std::pow(sum, 1.0 / s);
    }
    case Kind::kGeometric: {
      const double r = std::abs(ratio_);
      if (r == 0.0) return K == 0 ? 1.0 : 0.0;
      const double rs = std::pow(r, s);
      const double sum = std::pow(r, s * static_cast<double>(K)) / (1.0 - rs);
      return std::pow(sum, 1.0 / s);
    }
    case Kind::kFinite: {
      double sum = 0.0;
      for (std::size_t k = K; k < values_.size(); ++k) sum += std::pow(std::abs(values_[k]), s);
      return std::pow(sum, 1.0 / s);
    }
    case Kind::kScaledSum: {
      // Minkowski.
      double b = 0.0;
      for (const Term& t : terms_) b += std::abs(t.weight) * t.functional->TailNorm(K, s);
      return b;
    }
  }
  return kInf;
}

std::size_t SequenceFunctional::SupportLength() const {
  constexpr std::size_t npos = static_cast<std::size_t>(-1);
  switch (kind_) {
    case Kind::kHarmonic:
      return npos;
    case Kind::kGeometric:
      return ratio_ == 0.0 ? 1 : npos;
    case Kind::kFinite: {
      std::size_t len = values_.size();
      while (len > 0 && values_[len - 1] == 0.0) --len;
      return len;
    }
    case Kind::kScaledSum: {
      std::size_t len = 0;
      for (const Term& t : terms_) {
        if (t.weight == 0.0) continue;
        const std::size_t l = t.functional->SupportLength();
        if (l == npos) return npos;
        len = std::max(len, l);
      }
      return len;
    }
  }
  return npos;
}

bool SequenceFunctional::operator==(const SequenceFunctional& other) const {
  if (kind_ != other.kind_) return false;
  switch (kind_) {
    case Kind::kHarmonic:
      return true;
    case Kind::kGeometric:
      return ratio_ == other.ratio_;
    case Kind::kFinite:
      return values_ == other.values_;
    case Kind::kScaledSum:
      if (terms_.size() != other.terms_.size()) return false;
      for (std::size_t i = 0; i < terms_.size(); ++i) {
        if (terms_[i].weight != other.terms_[i].weight) return false;
        if (!(*terms_[i].functional == *other.terms_[i].functional)) return false;
      }
      return true;
  }
  return false;
}

std::string SequenceFunctional::Describe() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::kHarmonic:
      os << "harmonic";
      break;
    case Kind::kGeometric:
      os << "geometric(" << ratio_ << ")";
      break;
    case Kind::kFinite:
      os << "finite[";
      for (std::size_t i = 0; i < values_.size(); ++i) os << (i ? "," : "") << values_[i];
      os << "]";
      break;
    case Kind::kScaledSum:
      os << "sum(";
      for (std::size_t i = 0; i < terms_.size(); ++i) {
        os << (i ? " + " : "") << terms_[i].weight << "*" << terms_[i].functional->Describe();
      }
      os << ")";
      break;
  }
  return os.str();
}

double functional_eval(const SequenceFunctional& f, std::size_t k) { return f.Eval(k); }

double functional_tail_bound(const SequenceFunctional& f, std::size_t K) {
  return f.TailBound(K);
}

void SolverOptions::Validate() const {
  if (!(tol > 0) || !(attain_tol > 0) || truncation_start == 0 || !(grid_step >= 0) ||
      max_exchange_iters <= 0) {
    throw DomainError("solver options must be strictly positive");
  }
  if (attain_tol < tol) throw DomainError("attain_tol must be >= tol");
}

void SeqProblem::Validate() const {
  options.Validate();
  if (functionals.empty()) throw DomainError("need at least one functional");
  if (static_cast<std::size_t>(y.size()) != functionals.size()) {
    throw DomainError("y has length " + std::to_string(y.size()) + " but there are " +
                      std::to_string(functionals.size()) + " functionals");
  }
  if (!y.allFinite()) throw DomainError("y must be finite");
  for (std::size_t i = 0; i < functionals.size(); ++i) {
    for (std::size_t j = i + 1; j < functionals.size(); ++j) {
      if (functionals[i] == functionals[j]) {
        throw DomainError("functionals " + std::to_string(i + 1) + " and " +
                          std::to_string(j + 1) + " coincide");
      }
    }
  }
}

GaussProblem GaussProblem::Make(std::vector<double> centers, double sigma, Vector y,
                                double padding_sigmas) {
  GaussProblem p;
  p.centers = std::move(centers);
  p.sigma = sigma;
  p.y = std::move(y);
  if (!p.centers.empty()) {
    const auto [mn, mx] = std::minmax_element(p.centers.begin(), p.centers.end());
    p.lo = *mn - padding_sigmas * sigma;
    p.hi = *mx + padding_sigmas * sigma;
  }
  return p;
}

void GaussProblem::Validate() const {
  options.Validate();
  if (!(sigma > 0) || !std::isfinite(sigma)) throw DomainError("sigma must be positive");
  if (centers.empty()) throw DomainError("need at least one center");
  if (static_cast<std::size_t>(y.size()) != centers.size()) {
    throw DomainError("y and centers differ in length");
  }
  if (!y.allFinite()) throw DomainError("y must be finite");
  for (std::size_t i = 0; i < centers.size(); ++i) {
    if (!std::isfinite(centers[i])) throw DomainError("centers must be finite");
    if (i > 0 && !(centers[i] > centers[i - 1])) {
      throw DomainError("centers must be strictly increasing");
    }
  }
  const double pad = 5.0 * sigma * (1.0 - 1e-12);
  if (!(lo <= centers.front() - pad) || !(hi >= centers.back() + pad)) {
    throw DomainError("domain must extend at least 5*sigma beyond the extreme centers");
  }
}

void SparseSolution::CheckInvariants(double tol, std::size_t n) const {
  double s = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (atoms[i].coeff == 0.0) throw std::logic_error("zero coefficient in sparse solution");
    if (i > 0 && !(atoms[i].site > atoms[i - 1].site)) {
      throw std::logic_error("sites not strictly increasing");
    }
    s += std::abs(atoms[i].coeff);
  }
  if (std::abs(norm - s) > tol * (1.0 + s)) throw std::logic_error("norm != sum |coeff|");
  if (atoms.size() > static_cast<std::size_t>(rank_bound) ||
      static_cast<std::size_t>(rank_bound) > n) {
    throw std::logic_error("atom count exceeds rank bound");
  }
}

SparseSolution MakeSparseSolution(const std::vector<double>& sites, const Vector& coeffs,
                                  double rel_prune) {
  const double total = coeffs.cwiseAbs().sum();
  std::vector<Atom> atoms;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    const double c = coeffs(static_cast<Eigen::Index>(i));
    if (c != 0.0 && std::abs(c) > rel_prune * total) atoms.push_back({sites[i], c});
  }
  std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.site < b.site; });
  SparseSolution sol;
  sol.atoms = std::move(atoms);
  sol.norm = 0.0;
  for (const Atom& a : sol.atoms) sol.norm += std::abs(a.coeff);
  return sol;
}

int numerical_rank(const Matrix& a, double tol) {
  if (a.size() == 0) return 0;
  const double norm_inf = a.cwiseAbs().rowwise().sum().maxCoeff();
  if (norm_inf == 0.0) return 0;
  const double threshold =
      tol * static_cast<double>(std::max(a.rows(), a.cols())) * norm_inf;
  Eigen::ColPivHouseholderQR<Matrix> qr(a);
  const Matrix& r = qr.matrixQR();
  const Eigen::Index d = std::min(a.rows(), a.cols());
  int rank = 0;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (std::abs(r(i, i)) > threshold) ++rank;
  }
  return rank;
}

}  // namespace rkbs
