#include "rkbs/regpath.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rkbs/optim.hpp"

namespace rkbs {

namespace {

constexpr std::size_t kMaxTruncation = std::size_t{1} << 20;
constexpr int kMaxRounds = 20;

double objective_of(const Vector& a, double lambda, double l1) {
  return 0.5 * a.squaredNorm() + lambda * l1;
}

// Drops coefficients below rel * ||alpha||_1 and re-solves the stationarity
// system on the surviving sign pattern.
void prune_and_resolve(const Matrix& L, const Vector& y, double lambda, double rel, Vector& alpha) {
  const double total = alpha.cwiseAbs().sum();
  bool pruned = false;
  for (Eigen::Index j = 0; j < alpha.size(); ++j) {
    if (alpha(j) != 0.0 && std::abs(alpha(j)) <= rel * total) {
      alpha(j) = 0.0;
      pruned = true;
    }
  }
  if (!pruned) return;
  std::vector<Eigen::Index> s;
  for (Eigen::Index j = 0; j < alpha.size(); ++j) {
    if (alpha(j) != 0.0) s.push_back(j);
  }
  if (s.empty()) return;
  const Eigen::Index m = static_cast<Eigen::Index>(s.size());
  Matrix ls(L.rows(), m);
  Vector signs(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    ls.col(k) = L.col(s[static_cast<std::size_t>(k)]);
    signs(k) = alpha(s[static_cast<std::size_t>(k)]) > 0 ? 1.0 : -1.0;
  }
  const Vector sol = (ls.transpose() * ls).colPivHouseholderQr().solve(ls.transpose() * y - lambda * signs);
  for (Eigen::Index k = 0; k < m; ++k) {
    if (sol(k) * signs(k) <= 0) return;  // pattern does not survive; keep the pruned iterate
  }
  for (Eigen::Index k = 0; k < m; ++k) alpha(s[static_cast<std::size_t>(k)]) = sol(k);
}

// Moves alpha along null directions of its support columns until those
// columns are independent. L alpha and ||alpha||_1 are unchanged at a solution.
void reduce_to_independent(const Matrix& L, double tol, Vector& alpha) {
  for (;;) {
    std::vector<Eigen::Index> s;
    for (Eigen::Index j = 0; j < alpha.size(); ++j) {
      if (alpha(j) != 0.0) s.push_back(j);
    }
    const Eigen::Index m = static_cast<Eigen::Index>(s.size());
    if (m == 0) return;
    Matrix ls(L.rows(), m);
    for (Eigen::Index k = 0; k < m; ++k) ls.col(k) = L.col(s[static_cast<std::size_t>(k)]);
    if (numerical_rank(ls, tol) >= m) return;
    Eigen::JacobiSVD<Matrix> svd(ls, Eigen::ComputeFullV);
    const Vector d = svd.matrixV().col(m - 1);
    Eigen::Index hit = -1;
    double step = kInf;
    for (Eigen::Index k = 0; k < m; ++k) {
      if (std::abs(d(k)) <= 1e-12) continue;
      const double t = -alpha(s[static_cast<std::size_t>(k)]) / d(k);
      if (std::abs(t) < std::abs(step)) {
        step = t;
        hit = k;
      }
    }
    if (hit < 0) return;
    for (Eigen::Index k = 0; k < m; ++k) alpha(s[static_cast<std::size_t>(k)]) += step * d(k);
    alpha(s[static_cast<std::size_t>(hit)]) = 0.0;
  }
}

// Rank of the columns where |(L^T a)_j| reaches lambda.
int equicorrelation_rank(const Matrix& L, const Vector& a, double lambda, double tol) {
  const Vector corr = L.transpose() * a;
  std::vector<Eigen::Index> e;
  for (Eigen::Index j = 0; j < corr.size(); ++j) {
    if (std::abs(corr(j)) >= lambda * (1.0 - 1e-6)) e.push_back(j);
  }
  Matrix le(L.rows(), static_cast<Eigen::Index>(e.size()));
  for (std::size_t k = 0; k < e.size(); ++k) le.col(static_cast<Eigen::Index>(k)) = L.col(e[k]);
  return numerical_rank(le, tol);
}

RegResult finish(const Matrix& L, const std::vector<double>& sites, const Vector& alpha, const Vector& y,
                 double lambda, const SolverOptions& opt, std::size_t n) {
  RegResult res;
  res.matrix.values = L;
  res.matrix.sites = sites;
  res.matrix.rank = numerical_rank(L, opt.tol);
  res.alpha = alpha;
  res.z_hat = L * alpha;
  const Vector a = res.z_hat - y;
  res.certificate = lambda_certificate(L, alpha, y, lambda, 10.0 * opt.tol);
  res.solution = MakeSparseSolution(sites, alpha, 0.0);
  res.solution.residual = a.size() ? a.cwiseAbs().maxCoeff() : 0.0;
  res.solution.rank_bound = res.solution.atoms.empty() ? 0 : equicorrelation_rank(L, a, lambda, opt.tol);
  res.objective = objective_of(a, lambda, res.solution.norm);
  res.solution.dual_value = res.objective;
  res.solution.CheckInvariants(opt.tol, n);
  return res;
}

double tail_l2(const std::vector<SequenceFunctional>& fs, std::size_t K) {
  double s = 0.0;
  for (const auto& f : fs) {
    const double t = f.TailBound(K);
    s += t * t;
  }
  return std::sqrt(s);
}

RegResult seq_reg(const SeqProblem& sp, double lambda) {
  const SolverOptions& opt = sp.options;
  const double lmax = lambda_max(sp);
  if (lambda >= lmax) {
    const std::size_t K = opt.truncation_start;
    const Matrix vk = measurement_block(sp.functionals, K);
    std::vector<double> sites(K);
    for (std::size_t k = 0; k < K; ++k) sites[k] = static_cast<double>(k + 1);
    RegResult res = finish(vk, sites, Vector::Zero(static_cast<Eigen::Index>(K)), sp.y, lambda, opt, sp.size());
    res.lambda_max = lmax;
    res.truncation = K;
    return res;
  }
  const double ynorm = sp.y.norm();
  for (std::size_t K = opt.truncation_start; K <= kMaxTruncation; K *= 2) {
    // ||a||_2 <= ||y||_2 at any solution, so coordinates beyond K stay inactive.
    if (!(ynorm * tail_l2(sp.functionals, K) < lambda)) continue;
    const Matrix vk = measurement_block(sp.functionals, K);
    optim::ProxOptions po;
    po.tol = opt.tol;
    Vector alpha = optim::prox_l1_solve(vk, sp.y, lambda, po);
    prune_and_resolve(vk, sp.y, lambda, opt.attain_tol, alpha);
    reduce_to_independent(vk, opt.tol, alpha);
    const Vector a = vk * alpha - sp.y;
    double tail = 0.0;
    for (std::size_t i = 0; i < sp.functionals.size(); ++i) {
      tail += std::abs(a(static_cast<Eigen::Index>(i))) * sp.functionals[i].TailBound(K);
    }
    if (!(tail < lambda)) continue;
    std::vector<double> sites(K);
    for (std::size_t k = 0; k < K; ++k) sites[k] = static_cast<double>(k + 1);
    RegResult res = finish(vk, sites, alpha, sp.y, lambda, opt, sp.size());
    res.lambda_max = lmax;
    res.truncation = K;
    return res;
  }
  throw SolverError("no certified truncation up to K = 2^20 for this lambda", lambda);
}

struct RegPolish {
  bool ok = false;
  std::vector<double> t;
  Vector w;
};

// Newton's method on h(t_l) = -lambda s_l, sigma h'(t_l) = 0, with
// h = sum_i a_i K(x_i, .) and a = sum_l w_l K(x, t_l) - y.
RegPolish reg_polish(const GaussProblem& gp, double lambda, const std::vector<double>& t0,
                     const Vector& w0) {
  RegPolish out;
  const Eigen::Index m = static_cast<Eigen::Index>(t0.size());
  if (m == 0) return out;
  const double sigma = gp.sigma;
  std::vector<double> signs(t0.size());
  Vector z(2 * m);
  for (Eigen::Index l = 0; l < m; ++l) {
    z(l) = t0[static_cast<std::size_t>(l)];
    z(m + l) = w0(l);
    signs[static_cast<std::size_t>(l)] = w0(l) > 0 ? 1.0 : -1.0;
  }
  auto residual_of = [&](const Vector& v) {
    Vector a = -gp.y;
    for (std::size_t i = 0; i < gp.size(); ++i) {
      for (Eigen::Index l = 0; l < m; ++l) a(static_cast<Eigen::Index>(i)) += v(m + l) * gauss_kernel(gp.centers[i], v(l), sigma);
    }
    Vector f(2 * m);
    for (Eigen::Index l = 0; l < m; ++l) {
      f(l) = gauss_eval(a, gp, v(l)) + lambda * signs[static_cast<std::size_t>(l)];
      f(m + l) = sigma * gauss_deriv(a, gp, v(l));
    }
    return f;
  };
  Vector f = residual_of(z);
  const double target = 1e-14 * (1.0 + lambda + gp.y.cwiseAbs().maxCoeff());
  for (int it = 0; it < 80 && f.cwiseAbs().maxCoeff() > target; ++it) {
    Matrix jac(2 * m, 2 * m);
    for (Eigen::Index k = 0; k < 2 * m; ++k) {
      const double h = 1e-7 * std::max(1.0, std::abs(z(k)));
      Vector zp = z;
      Vector zm = z;
      zp(k) += h;
      zm(k) -= h;
      jac.col(k) = (residual_of(zp) - residual_of(zm)) / (2.0 * h);
    }
    const Vector dz = jac.completeOrthogonalDecomposition().solve(-f);
    if (!dz.allFinite()) return out;
    double step = 1.0;
    bool moved = false;
    while (step > 1e-6) {
      const Vector trial = z + step * dz;
      const Vector ft = residual_of(trial);
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
  if (!(f.cwiseAbs().maxCoeff() <= 1e-11 * (1.0 + lambda + gp.y.cwiseAbs().maxCoeff()))) return out;
  std::vector<std::pair<double, double>> atoms;
  for (Eigen::Index l = 0; l < m; ++l) {
    if (z(l) < gp.lo || z(l) > gp.hi) return out;
    if (z(m + l) * signs[static_cast<std::size_t>(l)] <= 0) return out;
    atoms.emplace_back(z(l), z(m + l));
  }
  std::sort(atoms.begin(), atoms.end());
  for (std::size_t l = 1; l < atoms.size(); ++l) {
    if (atoms[l].first - atoms[l - 1].first < 1e-6 * sigma) return out;
  }
  out.w.resize(m);
  for (std::size_t l = 0; l < atoms.size(); ++l) {
    out.t.push_back(atoms[l].first);
    out.w(static_cast<Eigen::Index>(l)) = atoms[l].second;
  }
  out.ok = true;
  return out;
}

// Groups support points of alpha into same-sign clusters closer than sigma / 2.
void cluster_support(const std::vector<double>& pts, const Vector& alpha, double sigma, bool merge,
                     std::vector<double>& t, Vector& w) {
  std::vector<std::pair<double, double>> s;
  for (std::size_t j = 0; j < pts.size(); ++j) {
    const double v = alpha(static_cast<Eigen::Index>(j));
    if (v != 0.0) s.emplace_back(pts[j], v);
  }
  std::sort(s.begin(), s.end());
  t.clear();
  std::vector<double> weights;
  std::size_t i = 0;
  while (i < s.size()) {
    std::size_t j = i + 1;
    double mass = std::abs(s[i].second);
    double moment = s[i].first * mass;
    double total = s[i].second;
    while (merge && j < s.size() && s[j].first - s[j - 1].first < 0.5 * sigma &&
           (s[j].second > 0) == (s[i].second > 0)) {
      mass += std::abs(s[j].second);
      moment += s[j].first * std::abs(s[j].second);
      total += s[j].second;
      ++j;
    }
    t.push_back(moment / mass);
    weights.push_back(total);
    i = j;
  }
  w = Eigen::Map<const Vector>(weights.data(), static_cast<Eigen::Index>(weights.size()));
}

Vector residual_vector(const GaussProblem& gp, const std::vector<double>& t, const Vector& w) {
  Vector a = -gp.y;
  for (std::size_t i = 0; i < gp.size(); ++i) {
    for (std::size_t l = 0; l < t.size(); ++l) {
      a(static_cast<Eigen::Index>(i)) += w(static_cast<Eigen::Index>(l)) * gauss_kernel(gp.centers[i], t[l], gp.sigma);
    }
  }
  return a;
}

RegResult gauss_finish(const GaussProblem& gp, double lambda, const std::vector<double>& t,
                       const Vector& w, const std::vector<Extremum>& maxima, int rounds, double lmax) {
  const SolverOptions& opt = gp.options;
  std::vector<double> sites = t;
  for (const Extremum& e : maxima) {
    if (!t.empty() && std::abs(e.value) < lambda * (1.0 - opt.attain_tol)) continue;
    if (std::none_of(t.begin(), t.end(), [&](double s) { return std::abs(s - e.t) < 1e-6 * gp.sigma; })) {
      sites.push_back(e.t);
    }
  }
  Vector alpha = Vector::Zero(static_cast<Eigen::Index>(sites.size()));
  alpha.head(w.size()) = w;
  const KernelMatrix km = kernel_matrix(gp, sites);
  RegResult res = finish(km.values, sites, alpha, gp.y, lambda, opt, gp.size());
  KernelMatrix atoms_km = kernel_matrix(gp, t);
  res.solution.rank_bound = atoms_km.rank;
  res.solution.CheckInvariants(opt.tol, gp.size());
  res.rounds = rounds;
  res.lambda_max = lmax;
  return res;
}

RegResult gauss_reg(const GaussProblem& gp, double lambda) {
  const SolverOptions& opt = gp.options;
  const double step = gp.grid_step();
  const double lmax = lambda_max(gp);
  if (lambda >= lmax) {
    return gauss_finish(gp, lambda, {}, Vector(), refined_local_maxima(-gp.y, gp, step), 0, lmax);
  }
  const double check_tol = 10.0 * opt.tol * (1.0 + lambda);

  std::vector<double> working(gp.centers.begin(), gp.centers.end());
  for (double t = gp.lo; t <= gp.hi; t += gp.sigma / 5.0) working.push_back(t);
  std::sort(working.begin(), working.end());

  std::string last_support;
  for (int round = 1; round <= kMaxRounds; ++round) {
    const Matrix lw = kernel_matrix(gp, working).values;
    optim::ProxOptions po;
    po.tol = opt.tol;
    const Vector alpha = optim::prox_l1_solve(lw, gp.y, lambda, po);

    for (bool merge : {true, false}) {
      std::vector<double> t0;
      Vector w0;
      cluster_support(working, alpha, gp.sigma, merge, t0, w0);
      const RegPolish pr = reg_polish(gp, lambda, t0, w0);
      if (!pr.ok) continue;
      const Vector a = residual_vector(gp, pr.t, pr.w);
      const std::vector<Extremum> maxima = refined_local_maxima(a, gp, step);
      double sup = 0.0;
      for (const Extremum& e : maxima) sup = std::max(sup, std::abs(e.value));
      if (sup <= lambda + check_tol) return gauss_finish(gp, lambda, pr.t, pr.w, maxima, round, lmax);
    }

    const Vector a = lw * alpha - gp.y;
    const std::vector<Extremum> maxima = refined_local_maxima(a, gp, step);
    std::ostringstream os;
    for (Eigen::Index j = 0; j < alpha.size(); ++j) {
      if (alpha(j) != 0.0) os << working[static_cast<std::size_t>(j)] << " ";
    }
    last_support = os.str();
    bool added = false;
    for (const Extremum& e : maxima) {
      if (std::abs(e.value) <= lambda + check_tol) continue;
      if (std::none_of(working.begin(), working.end(), [&](double s) { return std::abs(s - e.t) < 1e-12 * gp.sigma; })) {
        working.push_back(e.t);
        added = true;
      }
    }
    if (!added) {
      // Already certified on the working set as it stands.
      std::vector<double> t;
      Vector w;
      cluster_support(working, alpha, gp.sigma, false, t, w);
      return gauss_finish(gp, lambda, t, w, maxima, round, lmax);
    }
    std::sort(working.begin(), working.end());
  }
  throw SolverError("support fixed-point iteration did not settle in " + std::to_string(kMaxRounds) +
                        " rounds; last support { " + last_support + "}",
                    lambda);
}

}  // namespace

const SolverOptions& RegProblem::options() const {
  return std::visit([](const auto& p) -> const SolverOptions& { return p.options; }, base);
}

const Vector& RegProblem::y() const {
  return std::visit([](const auto& p) -> const Vector& { return p.y; }, base);
}

void RegProblem::Validate() const {
  std::visit([](const auto& p) { p.Validate(); }, base);
  if (!(lambda > 0) || !std::isfinite(lambda)) throw DomainError("lambda must be positive");
}

double LambdaCertificate::max_equality_residual() const {
  double m = 0.0;
  for (double r : equality_residuals) m = std::max(m, r);
  return m;
}

double LambdaCertificate::min_inequality_slack() const {
  double m = kInf;
  for (double s : inequality_slacks) m = std::min(m, s);
  return m;
}

LambdaCertificate lambda_certificate_with_subgradient(const Matrix& L, const Vector& alpha,
                                                      const Vector& a, double lambda, double tol) {
  if (L.cols() != alpha.size() || L.rows() != a.size()) {
    throw DomainError("lambda_certificate: inconsistent dimensions");
  }
  LambdaCertificate cert;
  cert.a = a;
  cert.tol = tol;
  const Vector corr = L.transpose() * a;
  bool ok = true;
  for (Eigen::Index j = 0; j < alpha.size(); ++j) {
    if (alpha(j) != 0.0) {
      cert.support.push_back(static_cast<std::size_t>(j));
      const double r = std::abs(lambda + corr(j) * (alpha(j) > 0 ? 1.0 : -1.0));
      cert.equality_residuals.push_back(r);
      ok = ok && r <= tol;
    } else {
      const double s = lambda - std::abs(corr(j));
      cert.inequality_slacks.push_back(s);
      ok = ok && s >= -tol;
    }
  }
  cert.pass = ok;
  return cert;
}

LambdaCertificate lambda_certificate(const Matrix& L, const Vector& alpha, const Vector& y,
                                     double lambda, double tol) {
  if (L.rows() != y.size() || L.cols() != alpha.size()) {
    throw DomainError("lambda_certificate: inconsistent dimensions");
  }
  return lambda_certificate_with_subgradient(L, alpha, L * alpha - y, lambda, tol);
}

LambdaCertificate lambda_certificate(const KernelMatrix& L, const Vector& alpha, const Vector& y,
                                     double lambda, double tol) {
  return lambda_certificate(L.values, alpha, y, lambda, tol);
}

double lambda_max(const Matrix& L, const Vector& y) {
  if (L.rows() != y.size()) throw DomainError("lambda_max: inconsistent dimensions");
  if (L.cols() == 0) return 0.0;
  return (L.transpose() * y).cwiseAbs().maxCoeff();
}

double lambda_max(const KernelMatrix& L, const Vector& y) { return lambda_max(L.values, y); }

double lambda_max(const SeqProblem& problem) {
  problem.Validate();
  for (std::size_t K = problem.options.truncation_start; K <= kMaxTruncation; K *= 2) {
    const double m = lambda_max(measurement_block(problem.functionals, K), problem.y);
    double tail = 0.0;
    for (std::size_t i = 0; i < problem.size(); ++i) {
      tail += std::abs(problem.y(static_cast<Eigen::Index>(i))) * problem.functionals[i].TailBound(K);
    }
    if (tail <= m) return m;
  }
  throw SolverError("lambda_max: tail not certified up to K = 2^20", kInf);
}

double lambda_max(const GaussProblem& problem) {
  problem.Validate();
  double m = 0.0;
  for (const Extremum& e : refined_local_maxima(problem.y, problem, problem.grid_step())) {
    m = std::max(m, std::abs(e.value));
  }
  return m;
}

RegResult reg_solve_detailed(const RegProblem& problem) {
  problem.Validate();
  if (problem.is_sequence()) return seq_reg(std::get<SeqProblem>(problem.base), problem.lambda);
  return gauss_reg(std::get<GaussProblem>(problem.base), problem.lambda);
}

SparseSolution reg_solve(const RegProblem& problem) { return reg_solve_detailed(problem).solution; }

ConsistencyReport reg_mni_consistency(const RegProblem& problem) {
  const RegResult reg = reg_solve_detailed(problem);
  const SolverOptions& opt = problem.options();
  ConsistencyReport rep;
  rep.tol = 10.0 * opt.tol;
  rep.z_hat = reg.z_hat;
  rep.reg_norm = reg.solution.norm;
  rep.reg_objective = reg.objective;
  if (reg.z_hat.cwiseAbs().maxCoeff() <= opt.tol) {
    rep.zero_regime = true;
    rep.mni_norm = 0.0;
    rep.mni_objective = reg.objective;
    rep.consistent = true;
    return rep;
  }
  const Vector& y = problem.y();
  Vector fit;
  if (problem.is_sequence()) {
    SeqProblem sp = std::get<SeqProblem>(problem.base);
    sp.y = reg.z_hat;
    const SparseSolution mni = mni_solve_l1(sp);
    fit = Vector::Zero(y.size());
    for (const Atom& a : mni.atoms) {
      for (std::size_t i = 0; i < sp.size(); ++i) {
        fit(static_cast<Eigen::Index>(i)) += a.coeff * sp.functionals[i].Eval(a.index());
      }
    }
    rep.mni_norm = mni.norm;
  } else {
    GaussProblem gp = std::get<GaussProblem>(problem.base);
    gp.y = reg.z_hat;
    const SparseMeasure mni = mni_solve_measure(gp);
    fit.resize(y.size());
    for (std::size_t i = 0; i < gp.size(); ++i) fit(static_cast<Eigen::Index>(i)) = mni.Eval(gp, gp.centers[i]);
    rep.mni_norm = mni.norm;
  }
  rep.mni_objective = objective_of(fit - y, problem.lambda, rep.mni_norm);
  rep.consistent = rep.norm_increase() <= rep.tol && rep.objective_change() <= rep.tol;
  return rep;
}

std::vector<PathRow> sparsity_path(const std::variant<SeqProblem, GaussProblem>& base,
                                   const std::vector<double>& lambdas) {
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas[i] > 0)) throw DomainError("lambdas must be positive");
    if (i > 0 && !(lambdas[i] >= lambdas[i - 1])) throw DomainError("lambdas must be ascending");
  }
  std::vector<PathRow> rows;
  for (double lambda : lambdas) {
    PathRow row;
    row.lambda = lambda;
    try {
      const RegResult r = reg_solve_detailed(RegProblem{base, lambda});
      row.atoms = r.solution.sparsity();
      row.l1_norm = r.solution.norm;
      row.objective = r.objective;
      row.certificate_pass = r.certificate.pass;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace rkbs
