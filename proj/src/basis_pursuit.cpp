#include "rkbs/optim.hpp"

namespace rkbs::optim {

VertexSolution basis_pursuit(const Matrix& L, const Vector& y, double tol) {
  if (L.rows() != y.size()) throw DomainError("basis_pursuit: L and y disagree in length");
  const Eigen::Index n = L.rows();
  const Eigen::Index m = L.cols();

  LinearProgram lp;
  lp.sense = ObjectiveSense::kMinimize;
  lp.objective = Vector::Ones(2 * m);
  lp.A.resize(n, 2 * m);
  lp.A.leftCols(m) = L;
  lp.A.rightCols(m) = -L;
  lp.b = y;
  lp.row_sense.assign(static_cast<std::size_t>(n), RowSense::kEqual);

  VertexSolution split = lp_solve(lp, tol);
  VertexSolution out;
  out.status = split.status;
  out.iterations = split.iterations;
  out.basis = split.basis;
  if (split.status != LpStatus::kOptimal) return out;
  out.x = split.x.head(m) - split.x.tail(m);
  out.objective_value = out.x.cwiseAbs().sum();
  out.row_duals = split.row_duals;
  if ((L * out.x - y).cwiseAbs().maxCoeff() > tol * (1.0 + y.cwiseAbs().maxCoeff()) * 1e3) {
    out.status = LpStatus::kInfeasible;
  }
  return out;
}

}  // namespace rkbs::optim
