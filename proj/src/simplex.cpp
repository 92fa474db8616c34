#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rkbs/optim.hpp"

namespace rkbs::optim {

const char* to_string(LpStatus status) {
  switch (status) {
    case LpStatus::kOptimal:
      return "optimal";
    case LpStatus::kInfeasible:
      return "infeasible";
    case LpStatus::kUnbounded:
      return "unbounded";
  }
  return "unknown";
}

void LinearProgram::Validate() const {
  const Eigen::Index n = objective.size();
  const Eigen::Index m = A.rows();
  if (m > 0 && A.cols() != n) throw DomainError("constraint matrix has wrong column count");
  if (b.size() != m) throw DomainError("rhs has wrong length");
  if (static_cast<Eigen::Index>(row_sense.size()) != m) {
    throw DomainError("row sense list has wrong length");
  }
  if (lower.size() != 0 && lower.size() != n) throw DomainError("lower bounds have wrong length");
  if (upper.size() != 0 && upper.size() != n) throw DomainError("upper bounds have wrong length");
  if (!objective.allFinite() || !A.allFinite() || !b.allFinite()) {
    throw DomainError("linear program data must be finite");
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    const double l = lower.size() ? lower(j) : 0.0;
    const double u = upper.size() ? upper(j) : kInf;
    if (std::isnan(l) || std::isnan(u) || l == kInf || u == -kInf) {
      throw DomainError("invalid variable bound");
    }
  }
}

namespace {

// One structural column of the standard form: x_orig += coef * s.
struct StdColumn {
  Eigen::Index var;
  double coef;
};

class Tableau {
 public:
  Tableau(Matrix t, Vector rhs, std::vector<int> basis, double tol)
      : t_(std::move(t)), rhs_(std::move(rhs)), basis_(std::move(basis)), tol_(tol) {
    for (Eigen::Index i = 0; i < t_.rows(); ++i) row_ids_.push_back(i);
  }

  // Runs Bland's rule on `cost` until optimal or unbounded. Columns with
  // allowed[j] == false never enter.
  LpStatus Optimize(const Vector& cost, const std::vector<bool>& allowed, int& iterations) {
    const Eigen::Index m = t_.rows();
    const Eigen::Index ncols = t_.cols();
    constexpr int kMaxPivots = 200000;
    while (true) {
      if (iterations > kMaxPivots) {
        throw SolverError("simplex pivot limit reached", static_cast<double>(iterations));
      }
      Vector cb(m);
      for (Eigen::Index i = 0; i < m; ++i) cb(i) = cost(basis_[i]);
      const Vector reduced = cost.transpose() - cb.transpose() * t_;
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < ncols; ++j) {
        if (allowed[j] && reduced(j) < -tol_) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return LpStatus::kOptimal;

      Eigen::Index leave = -1;
      double best = kInf;
      for (Eigen::Index i = 0; i < m; ++i) {
        const double a = t_(i, enter);
        if (a <= kPivotTol) continue;
        const double ratio = std::max(rhs_(i), 0.0) / a;
        const double slack = 1e-12 * (1.0 + std::abs(best));
        if (leave < 0 || ratio < best - slack) {
          best = ratio;
          leave = i;
        } else if (ratio <= best + slack && basis_[i] < basis_[leave]) {
          leave = i;
        }
      }
      if (leave < 0) return LpStatus::kUnbounded;
      Pivot(leave, enter);
      ++iterations;
    }
  }

  void Pivot(Eigen::Index row, Eigen::Index col) {
    const double p = t_(row, col);
    t_.row(row) /= p;
    rhs_(row) /= p;
    const Vector column = t_.col(col);
    for (Eigen::Index i = 0; i < t_.rows(); ++i) {
      if (i == row || column(i) == 0.0) continue;
      t_.row(i) -= column(i) * t_.row(row);
      rhs_(i) -= column(i) * rhs_(row);
      t_(i, col) = 0.0;
    }
    basis_[row] = static_cast<int>(col);
  }

  void RemoveRow(Eigen::Index row) {
    const Eigen::Index m = t_.rows();
    Matrix t(m - 1, t_.cols());
    Vector r(m - 1);
    std::vector<int> basis;
    std::vector<Eigen::Index> ids;
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (i == row) continue;
      t.row(k) = t_.row(i);
      r(k) = rhs_(i);
      basis.push_back(basis_[i]);
      ids.push_back(row_ids_[i]);
      ++k;
    }
    t_ = std::move(t);
    rhs_ = std::move(r);
    basis_ = std::move(basis);
    row_ids_ = std::move(ids);
  }

  double Objective(const Vector& cost) const {
    double v = 0.0;
    for (Eigen::Index i = 0; i < t_.rows(); ++i) v += cost(basis_[i]) * rhs_(i);
    return v;
  }

  const Matrix& t() const { return t_; }
  const Vector& rhs() const { return rhs_; }
  const std::vector<int>& basis() const { return basis_; }
  // Original (standard-form) row of each remaining tableau row.
  const std::vector<Eigen::Index>& row_ids() const { return row_ids_; }

  static constexpr double kPivotTol = 1e-11;

 private:
  Matrix t_;
  Vector rhs_;
  std::vector<int> basis_;
  std::vector<Eigen::Index> row_ids_;
  double tol_;
};

}  // namespace

VertexSolution lp_solve(const LinearProgram& lp, double tol) {
  lp.Validate();
  const Eigen::Index n = lp.num_vars();
  const Eigen::Index m0 = lp.num_rows();

  // Variable substitution x = offset + sum coef * s, s >= 0.
  std::vector<StdColumn> cols;
  Vector offset = Vector::Zero(n);
  std::vector<std::pair<Eigen::Index, double>> bound_rows;  // (std column, upper - lower)
  for (Eigen::Index j = 0; j < n; ++j) {
    const double l = lp.lower.size() ? lp.lower(j) : 0.0;
    const double u = lp.upper.size() ? lp.upper(j) : kInf;
    if (std::isfinite(l)) {
      offset(j) = l;
      cols.push_back({j, 1.0});
      if (std::isfinite(u)) bound_rows.emplace_back(static_cast<Eigen::Index>(cols.size()) - 1, u - l);
    } else if (std::isfinite(u)) {
      offset(j) = u;
      cols.push_back({j, -1.0});
    } else {
      cols.push_back({j, 1.0});
      cols.push_back({j, -1.0});
    }
  }
  const Eigen::Index ns = static_cast<Eigen::Index>(cols.size());
  const Eigen::Index m = m0 + static_cast<Eigen::Index>(bound_rows.size());

  Matrix a = Matrix::Zero(m, ns);
  Vector rhs(m);
  std::vector<RowSense> sense(m);
  for (Eigen::Index i = 0; i < m0; ++i) {
    for (Eigen::Index k = 0; k < ns; ++k) a(i, k) = lp.A(i, cols[k].var) * cols[k].coef;
    rhs(i) = lp.b(i) - lp.A.row(i).dot(offset);
    sense[i] = lp.row_sense[i];
  }
  for (std::size_t r = 0; r < bound_rows.size(); ++r) {
    const Eigen::Index i = m0 + static_cast<Eigen::Index>(r);
    a(i, bound_rows[r].first) = 1.0;
    rhs(i) = bound_rows[r].second;
    sense[i] = RowSense::kLessEqual;
  }
  // Nonnegative right-hand sides.
  Vector row_sign = Vector::Ones(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (rhs(i) < 0) {
      row_sign(i) = -1.0;
      a.row(i) *= -1.0;
      rhs(i) = -rhs(i);
      if (sense[i] == RowSense::kLessEqual) {
        sense[i] = RowSense::kGreaterEqual;
      } else if (sense[i] == RowSense::kGreaterEqual) {
        sense[i] = RowSense::kLessEqual;
      }
    }
  }

  // Column layout: structural | slack/surplus | artificial.
  Eigen::Index n_slack = 0;
  Eigen::Index n_art = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (sense[i] != RowSense::kEqual) ++n_slack;
    if (sense[i] != RowSense::kLessEqual) ++n_art;
  }
  const Eigen::Index ncols = ns + n_slack + n_art;
  Matrix t = Matrix::Zero(m, ncols);
  t.leftCols(ns) = a;
  std::vector<int> basis(m, -1);
  Eigen::Index next_slack = ns;
  Eigen::Index next_art = ns + n_slack;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (sense[i] == RowSense::kLessEqual) {
      t(i, next_slack) = 1.0;
      basis[i] = static_cast<int>(next_slack++);
    } else if (sense[i] == RowSense::kGreaterEqual) {
      t(i, next_slack++) = -1.0;
      t(i, next_art) = 1.0;
      basis[i] = static_cast<int>(next_art++);
    } else {
      t(i, next_art) = 1.0;
      basis[i] = static_cast<int>(next_art++);
    }
  }
  const Matrix std_matrix = t;  // kept for the final refinement
  const Vector std_rhs = rhs;

  Tableau tab(std::move(t), rhs, basis, tol);
  VertexSolution out;
  const Eigen::Index art_begin = ns + n_slack;

  if (n_art > 0) {
    Vector cost1 = Vector::Zero(ncols);
    cost1.tail(n_art).setOnes();
    std::vector<bool> allowed(ncols, true);
    tab.Optimize(cost1, allowed, out.iterations);
    const double infeas = tab.Objective(cost1);
    if (infeas > tol * (1.0 + std_rhs.cwiseAbs().maxCoeff())) {
      out.status = LpStatus::kInfeasible;
      return out;
    }
    // Drive zero-level artificials out of the basis or drop redundant rows.
    for (Eigen::Index i = tab.t().rows() - 1; i >= 0; --i) {
      if (tab.basis()[i] < art_begin) continue;
      Eigen::Index col = -1;
      for (Eigen::Index j = 0; j < art_begin; ++j) {
        if (std::abs(tab.t()(i, j)) > 1e-9) {
          col = j;
          break;
        }
      }
      if (col >= 0) {
        tab.Pivot(i, col);
      } else {
        tab.RemoveRow(i);
      }
    }
  }

  Vector cost2 = Vector::Zero(ncols);
  const double obj_sign = lp.sense == ObjectiveSense::kMaximize ? -1.0 : 1.0;
  for (Eigen::Index k = 0; k < ns; ++k) cost2(k) = obj_sign * lp.objective(cols[k].var) * cols[k].coef;
  std::vector<bool> allowed(ncols, true);
  for (Eigen::Index j = art_begin; j < ncols; ++j) allowed[j] = false;
  if (tab.Optimize(cost2, allowed, out.iterations) == LpStatus::kUnbounded) {
    out.status = LpStatus::kUnbounded;
    return out;
  }

  // Refine the basic solution and row multipliers from a fresh factorization
  // of the final basis.
  const std::vector<Eigen::Index>& kept_rows = tab.row_ids();
  const auto& bas = tab.basis();
  const Eigen::Index mb = static_cast<Eigen::Index>(bas.size());
  Matrix bmat(mb, mb);
  Vector brhs(mb);
  Vector cb(mb);
  for (Eigen::Index r = 0; r < mb; ++r) {
    for (Eigen::Index k = 0; k < mb; ++k) bmat(r, k) = std_matrix(kept_rows[r], bas[k]);
    brhs(r) = std_rhs(kept_rows[r]);
  }
  for (Eigen::Index k = 0; k < mb; ++k) cb(k) = cost2(bas[k]);
  Vector xb = tab.rhs();
  Vector ystd = Vector::Zero(mb);
  if (mb > 0) {
    Eigen::PartialPivLU<Matrix> lu(bmat);
    const Vector refined = lu.solve(brhs);
    if (refined.allFinite() && (bmat * refined - brhs).cwiseAbs().maxCoeff() <=
                                   1e-9 * (1.0 + brhs.cwiseAbs().maxCoeff())) {
      xb = refined;
    }
    const Vector ys = lu.transpose().solve(cb);
    if (ys.allFinite()) ystd = ys;
  }

  Vector s = Vector::Zero(ncols);
  for (Eigen::Index k = 0; k < mb; ++k) s(bas[k]) = std::max(xb(k), 0.0);
  out.x = offset;
  for (Eigen::Index k = 0; k < ns; ++k) out.x(cols[k].var) += cols[k].coef * s(k);
  out.objective_value = lp.objective.dot(out.x);
  out.basis.assign(bas.begin(), bas.end());
  std::sort(out.basis.begin(), out.basis.end());
  out.row_duals = Vector::Zero(m0);
  for (Eigen::Index r = 0; r < mb; ++r) {
    const Eigen::Index i = kept_rows[r];
    if (i < m0) out.row_duals(i) = obj_sign * row_sign(i) * ystd(r);
  }
  out.status = LpStatus::kOptimal;
  return out;
}

}  // namespace rkbs::optim
