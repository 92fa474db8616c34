#include "rkbs/measure_rkbs.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rkbs/optim.hpp"

namespace rkbs {

namespace {

void require_problem(const GaussProblem& problem) {
  problem.Validate();
  if (problem.y.cwiseAbs().maxCoeff() == 0.0) {
    throw DomainError("y = 0: the minimum-norm interpolant is zero and has no dual certificate");
  }
}

double sign_of(double v) { return v >= 0 ? 1.0 : -1.0; }

// Refines a grid local maximum of |g| at t_mid inside [a, b].
Extremum refine(const Vector& c, const GaussProblem& problem, double a, double b, double t_mid) {
  const double s = sign_of(gauss_eval(c, problem, t_mid));
  auto f = [&](double t) { return s * gauss_deriv(c, problem, t); };
  double fa = f(a);
  double fb = f(b);
  double x = t_mid;
  if (fa >= 0 && fb <= 0) {
    for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::abs(x)); ++it) {
      const double fx = f(x);
      if (fx == 0.0) break;
      if (fx > 0) {
        a = x;
      } else {
        b = x;
      }
      const double d = s * gauss_deriv2(c, problem, x);
      double next = d < 0 ? x - fx / d : 0.5 * (a + b);
      if (!(next > a && next < b)) next = 0.5 * (a + b);
      x = next;
    }
  } else {
    // No sign change of g' on the bracket: golden section on s * g.
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double lo = a;
    double hi = b;
    double x1 = hi - phi * (hi - lo);
    double x2 = lo + phi * (hi - lo);
    double f1 = s * gauss_eval(c, problem, x1);
    double f2 = s * gauss_eval(c, problem, x2);
    while (hi - lo > 1e-13 * std::max(1.0, std::abs(lo))) {
      if (f1 < f2) {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + phi * (hi - lo);
        f2 = s * gauss_eval(c, problem, x2);
      } else {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - phi * (hi - lo);
        f1 = s * gauss_eval(c, problem, x1);
      }
    }
    x = 0.5 * (lo + hi);
    if (std::abs(gauss_eval(c, problem, t_mid)) > std::abs(gauss_eval(c, problem, x))) x = t_mid;
  }
  return {x, gauss_eval(c, problem, x)};
}

std::vector<double> make_grid(const GaussProblem& problem, double step) {
  const auto count = static_cast<std::size_t>(std::ceil((problem.hi - problem.lo) / step));
  std::vector<double> grid(count + 1);
  for (std::size_t i = 0; i <= count; ++i) {
    grid[i] = std::min(problem.hi, problem.lo + static_cast<double>(i) * step);
  }
  return grid;
}

struct PolishResult {
  bool ok = false;
  Vector c;
  std::vector<double> t;
  Vector w;
};

// Newton's method on the optimality system in (t, w, c):
//   sum_l w_l K(x_i, t_l) = y_i,  g_c(t_l) = s_l,  sigma * g_c'(t_l) = 0.
PolishResult kkt_polish(const GaussProblem& problem, const Vector& c0, const std::vector<double>& t0,
                        const std::vector<double>& signs) {
  PolishResult out;
  const Eigen::Index n = static_cast<Eigen::Index>(problem.size());
  const Eigen::Index m = static_cast<Eigen::Index>(t0.size());
  if (m == 0) return out;
  const double sigma = problem.sigma;
  const double s2 = sigma * sigma;

  Vector z(2 * m + n);
  for (Eigen::Index l = 0; l < m; ++l) z(l) = t0[static_cast<std::size_t>(l)];
  {
    Matrix v(n, m);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index l = 0; l < m; ++l) {
        v(i, l) = gauss_kernel(problem.centers[static_cast<std::size_t>(i)], z(l), sigma);
      }
    }
    z.segment(m, m) = v.completeOrthogonalDecomposition().solve(problem.y);
  }
  z.tail(n) = c0;

  auto residual = [&](const Vector& v) {
    Vector f(2 * m + n);
    const Vector c = v.tail(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      double s = 0.0;
      for (Eigen::Index l = 0; l < m; ++l) {
        s += v(m + l) * gauss_kernel(problem.centers[static_cast<std::size_t>(i)], v(l), sigma);
      }
      f(i) = s - problem.y(i);
    }
    for (Eigen::Index l = 0; l < m; ++l) {
      f(n + l) = gauss_eval(c, problem, v(l)) - signs[static_cast<std::size_t>(l)];
      f(n + m + l) = sigma * gauss_deriv(c, problem, v(l));
    }
    return f;
  };

  Vector f = residual(z);
  const double target = 1e-14 * (1.0 + problem.y.cwiseAbs().maxCoeff());
  for (int it = 0; it < 60 && f.cwiseAbs().maxCoeff() > target; ++it) {
    Matrix jac = Matrix::Zero(2 * m + n, 2 * m + n);
    const Vector c = z.tail(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double xi = problem.centers[static_cast<std::size_t>(i)];
      for (Eigen::Index l = 0; l < m; ++l) {
        const double k = gauss_kernel(xi, z(l), sigma);
        jac(i, l) = z(m + l) * k * (xi - z(l)) / s2;
        jac(i, m + l) = k;
      }
    }
    for (Eigen::Index l = 0; l < m; ++l) {
      jac(n + l, l) = gauss_deriv(c, problem, z(l));
      jac(n + m + l, l) = sigma * gauss_deriv2(c, problem, z(l));
      for (Eigen::Index j = 0; j < n; ++j) {
        const double xj = problem.centers[static_cast<std::size_t>(j)];
        const double k = gauss_kernel(xj, z(l), sigma);
        jac(n + l, 2 * m + j) = k;
        jac(n + m + l, 2 * m + j) = sigma * k * (xj - z(l)) / s2;
      }
    }
    const Vector dz = jac.completeOrthogonalDecomposition().solve(-f);
    if (!dz.allFinite()) return out;
    double step = 1.0;
    bool moved = false;
    while (step > 1e-6) {
      const Vector trial = z + step * dz;
      const Vector ft = residual(trial);
      if (ft.norm() < f.norm()) {
        z = trial;
        f = ft;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
  if (!(f.cwiseAbs().maxCoeff() <= 1e-10 * (1.0 + problem.y.cwiseAbs().maxCoeff()))) return out;

  out.t.resize(static_cast<std::size_t>(m));
  const double wtol = 1e-9 * z.segment(m, m).cwiseAbs().sum();
  for (Eigen::Index l = 0; l < m; ++l) {
    const double t = z(l);
    if (t < problem.lo || t > problem.hi) return out;
    // Zero weights are allowed: the point still attains, it just carries no mass.
    if (sign_of(z(m + l)) != signs[static_cast<std::size_t>(l)] && std::abs(z(m + l)) > wtol) return out;
    out.t[static_cast<std::size_t>(l)] = t;
  }
  for (std::size_t l = 1; l < out.t.size(); ++l) {
    if (std::abs(out.t[l] - out.t[l - 1]) < 1e-6 * sigma) return out;
  }
  out.w = z.segment(m, m);
  out.c = z.tail(n);
  out.ok = true;
  return out;
}

// Merges neighbouring same-sign points closer than sigma / 2.
std::vector<Extremum> cluster(const std::vector<Extremum>& pts, double sigma) {
  std::vector<Extremum> out;
  std::size_t i = 0;
  while (i < pts.size()) {
    std::size_t j = i + 1;
    double sum = pts[i].t;
    while (j < pts.size() && pts[j].t - pts[j - 1].t < 0.5 * sigma &&
           sign_of(pts[j].value) == sign_of(pts[i].value)) {
      sum += pts[j].t;
      ++j;
    }
    out.push_back({sum / static_cast<double>(j - i), pts[i].value});
    i = j;
  }
  return out;
}

double sup_abs(const std::vector<Extremum>& pts) {
  double s = 0.0;
  for (const Extremum& e : pts) s = std::max(s, std::abs(e.value));
  return s;
}

}  // namespace

double gauss_kernel(double x, double t, double sigma) {
  const double d = x - t;
  return std::exp(-d * d / (2.0 * sigma * sigma));
}

double gauss_eval(const Vector& c, const GaussProblem& problem, double x) {
  double s = 0.0;
  for (std::size_t j = 0; j < problem.centers.size(); ++j) {
    s += c(static_cast<Eigen::Index>(j)) * gauss_kernel(problem.centers[j], x, problem.sigma);
  }
  return s;
}

double gauss_deriv(const Vector& c, const GaussProblem& problem, double x) {
  const double s2 = problem.sigma * problem.sigma;
  double s = 0.0;
  for (std::size_t j = 0; j < problem.centers.size(); ++j) {
    const double d = x - problem.centers[j];
    s -= c(static_cast<Eigen::Index>(j)) * gauss_kernel(problem.centers[j], x, problem.sigma) * d / s2;
  }
  return s;
}

double gauss_deriv2(const Vector& c, const GaussProblem& problem, double x) {
  const double s2 = problem.sigma * problem.sigma;
  double s = 0.0;
  for (std::size_t j = 0; j < problem.centers.size(); ++j) {
    const double d = x - problem.centers[j];
    s += c(static_cast<Eigen::Index>(j)) * gauss_kernel(problem.centers[j], x, problem.sigma) *
         (d * d / s2 - 1.0) / s2;
  }
  return s;
}

std::vector<Extremum> refined_local_maxima(const Vector& c, const GaussProblem& problem,
                                           double step) {
  if (static_cast<std::size_t>(c.size()) != problem.size()) throw DomainError("c has the wrong length");
  if (!(step > 0)) throw DomainError("grid step must be positive");
  const std::vector<double> grid = make_grid(problem, step);
  const std::size_t last = grid.size() - 1;
  std::vector<double> vals(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) vals[i] = std::abs(gauss_eval(c, problem, grid[i]));
  std::vector<Extremum> out;
  for (std::size_t i = 0; i <= last; ++i) {
    const bool left_ok = i == 0 || vals[i] >= vals[i - 1];
    const bool right_ok = i == last || vals[i] > vals[i + 1];
    if (!left_ok || !right_ok || vals[i] == 0.0) continue;
    if (i == 0 || i == last) {
      out.push_back({grid[i], gauss_eval(c, problem, grid[i])});
      continue;
    }
    out.push_back(refine(c, problem, grid[i - 1], grid[i + 1], grid[i]));
  }
  std::sort(out.begin(), out.end(), [](const Extremum& a, const Extremum& b) { return a.t < b.t; });
  return out;
}

std::vector<double> find_attainment_points(const Vector& c, const GaussProblem& problem) {
  require_problem(problem);
  if (static_cast<std::size_t>(c.size()) != problem.size() || c.cwiseAbs().maxCoeff() == 0.0) {
    throw DomainError("c must be nonzero with one entry per center");
  }
  const double step = problem.grid_step();
  const std::vector<Extremum> maxima = refined_local_maxima(c, problem, step);
  const double sup = sup_abs(maxima);
  const double attain_tol = problem.options.attain_tol;
  std::vector<Extremum> keep;
  for (const Extremum& e : maxima) {
    if (std::abs(e.value) < sup * (1.0 - attain_tol)) continue;
    if (e.t - problem.lo < step || problem.hi - e.t < step) {
      throw DomainError("supremum lies on the domain boundary; widen the domain");
    }
    keep.push_back(e);
  }
  std::vector<double> out;
  const double radius = problem.sigma * 1e-6;
  for (std::size_t i = 0; i < keep.size(); ++i) {
    if (!out.empty() && keep[i].t - out.back() < radius) {
      if (std::abs(keep[i].value) > std::abs(gauss_eval(c, problem, out.back()))) out.back() = keep[i].t;
      continue;
    }
    out.push_back(keep[i].t);
  }
  return out;
}

KernelMatrix kernel_matrix(const GaussProblem& problem, const std::vector<double>& points) {
  KernelMatrix km;
  const Eigen::Index n = static_cast<Eigen::Index>(problem.size());
  km.values.resize(n, static_cast<Eigen::Index>(points.size()));
  for (std::size_t l = 0; l < points.size(); ++l) {
    for (std::size_t i = 0; i < l; ++i) {
      if (points[i] == points[l]) throw DomainError("kernel matrix points must be distinct");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      km.values(i, static_cast<Eigen::Index>(l)) =
          gauss_kernel(problem.centers[static_cast<std::size_t>(i)], points[l], problem.sigma);
    }
  }
  km.sites = points;
  km.rank = numerical_rank(km.values, problem.options.tol);
  return km;
}

ContinuousDualCertificate dual_solve_semiinfinite(const GaussProblem& problem) {
  require_problem(problem);
  const SolverOptions& opt = problem.options;
  const double step = problem.grid_step();

  std::vector<double> working(problem.centers.begin(), problem.centers.end());
  const double knot = problem.sigma / 5.0;
  for (double t = problem.lo; t <= problem.hi + 1e-12 * knot; t += knot) working.push_back(std::min(t, problem.hi));
  std::sort(working.begin(), working.end());
  working.erase(std::unique(working.begin(), working.end(),
                            [&](double a, double b) { return b - a < 1e-9 * problem.sigma; }),
                working.end());

  ContinuousDualCertificate cert;
  Vector c;
  std::vector<Extremum> maxima;
  double violation = kInf;
  int iter = 0;
  while (true) {
    if (iter >= opt.max_exchange_iters) {
      throw SolverError("exchange method hit the iteration cap; last violation " +
                            std::to_string(violation),
                        violation);
    }
    ++iter;
    const Matrix lw = kernel_matrix(problem, working).values;
    const optim::VertexSolution bp = optim::basis_pursuit(lw, problem.y, opt.tol);
    if (bp.status != optim::LpStatus::kOptimal) {
      throw SolverError(std::string("exchange LP returned ") + optim::to_string(bp.status), violation);
    }
    c = bp.row_duals;
    maxima = refined_local_maxima(c, problem, step);
    violation = sup_abs(maxima) - 1.0;
    if (violation <= opt.attain_tol) break;
    for (const Extremum& e : maxima) {
      if (std::abs(e.value) <= 1.0) continue;
      const bool known = std::any_of(working.begin(), working.end(), [&](double w) {
        return std::abs(w - e.t) < 1e-12 * problem.sigma;
      });
      if (!known) working.push_back(e.t);
    }
    std::sort(working.begin(), working.end());
  }
  cert.exchange_iters = iter;

  // Normalize, then polish the certificate on the optimality system.
  const double sup0 = sup_abs(maxima);
  c /= sup0;
  auto near_set = [&](double rel) {
    std::vector<Extremum> near;
    for (const Extremum& e : maxima) {
      if (std::abs(e.value) / sup0 >= 1.0 - rel) near.push_back({e.t, e.value});
    }
    return near;
  };
  const std::vector<Extremum> wide = near_set(std::max(1e3 * opt.attain_tol, 1e-4));
  const std::vector<Extremum> tight = near_set(opt.attain_tol);
  cert.c = c;
  std::vector<double> polished_sites;
  for (const auto& candidate : {cluster(wide, problem.sigma), wide, cluster(tight, problem.sigma), tight}) {
    std::vector<double> t0;
    std::vector<double> signs;
    for (const Extremum& e : candidate) {
      t0.push_back(e.t);
      signs.push_back(sign_of(e.value));
    }
    const PolishResult pr = kkt_polish(problem, c, t0, signs);
    if (!pr.ok) continue;
    const std::vector<Extremum> check = refined_local_maxima(pr.c, problem, step);
    const double s = sup_abs(check);
    if (!(s <= 1.0 + opt.attain_tol)) continue;
    cert.c = pr.c / std::max(s, 1.0);
    polished_sites = pr.t;
    cert.polished = true;
    break;
  }

  const std::vector<Extremum> final_max = refined_local_maxima(cert.c, problem, step);
  cert.sup_norm = sup_abs(final_max);
  cert.final_violation = std::max(0.0, cert.sup_norm - 1.0);
  cert.value = cert.c.dot(problem.y);

  std::vector<double> found = find_attainment_points(cert.c, problem);
  for (double& t : found) {
    for (double p : polished_sites) {
      if (std::abs(t - p) < 1e-3 * problem.sigma) t = p;
    }
  }
  for (double p : polished_sites) {
    if (std::none_of(found.begin(), found.end(), [&](double t) { return t == p; })) found.push_back(p);
  }
  std::sort(found.begin(), found.end());
  found.erase(std::unique(found.begin(), found.end(),
                          [&](double a, double b) { return b - a < 1e-6 * problem.sigma; }),
              found.end());
  cert.attain_points = std::move(found);
  return cert;
}

double SparseMeasure::Eval(const GaussProblem& problem, double x) const {
  double s = 0.0;
  for (const Atom& a : atoms) s += a.coeff * gauss_kernel(x, a.site, problem.sigma);
  return s;
}

MeasureResult mni_solve_measure_detailed(const GaussProblem& problem) {
  MeasureResult res;
  res.certificate = dual_solve_semiinfinite(problem);
  const SolverOptions& opt = problem.options;
  res.matrix = kernel_matrix(problem, res.certificate.attain_points);
  const Matrix& v = res.matrix.values;
  const optim::VertexSolution bp = optim::basis_pursuit(v, problem.y, opt.tol);
  if (bp.status != optim::LpStatus::kOptimal) {
    throw SolverError(std::string("basis pursuit on the attainment points returned ") +
                          optim::to_string(bp.status),
                      kInf);
  }
  Vector w = bp.x;
  const double total = w.cwiseAbs().sum();
  bool pruned = false;
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    if (w(j) != 0.0 && std::abs(w(j)) <= opt.attain_tol * total) {
      w(j) = 0.0;
      pruned = true;
    }
  }
  if (pruned) {
    std::vector<Eigen::Index> s;
    for (Eigen::Index j = 0; j < w.size(); ++j) {
      if (w(j) != 0.0) s.push_back(j);
    }
    Matrix vs(v.rows(), static_cast<Eigen::Index>(s.size()));
    for (std::size_t i = 0; i < s.size(); ++i) vs.col(static_cast<Eigen::Index>(i)) = v.col(s[i]);
    const Vector refit = vs.colPivHouseholderQr().solve(problem.y);
    for (std::size_t i = 0; i < s.size(); ++i) w(s[i]) = refit(static_cast<Eigen::Index>(i));
  }
  static_cast<SparseSolution&>(res.solution) = MakeSparseSolution(res.matrix.sites, w, 0.0);
  res.solution.residual = (v * w - problem.y).cwiseAbs().maxCoeff();
  res.solution.rank_bound = res.matrix.rank;
  res.solution.dual_value = res.certificate.value;
  res.solution.CheckInvariants(opt.tol, problem.size());
  return res;
}

SparseMeasure mni_solve_measure(const GaussProblem& problem) {
  return mni_solve_measure_detailed(problem).solution;
}

}  // namespace rkbs
