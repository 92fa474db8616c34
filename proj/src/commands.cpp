#include "rkbs/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>

#include "CLI11.hpp"
#include "rkbs/measure_rkbs.hpp"
#include "rkbs/optim.hpp"
#include "rkbs/oracle.hpp"
#include "rkbs/regpath.hpp"
#include "rkbs/seq_rkbs.hpp"

namespace rkbs::cli {

using nlohmann::json;

namespace {

constexpr std::size_t kLpPreview = 20;

json header(const io::ProblemFile& pf, const std::string& task) {
  return {{"schema", io::kSchema}, {"space", io::to_string(pf.space)}, {"task", task}};
}

json provenance(const io::ProblemFile& pf) {
  json opts = io::options_to_json(pf.options());
  if (pf.space == io::Space::kLp) {
    opts["p"] = pf.p;
    opts["truncation"] = pf.lp_truncation;
  }
  return {{"tool", io::kToolName}, {"version", io::kToolVersion}, {"options", opts}};
}

json sites_json(const std::vector<std::size_t>& sites) {
  json out = json::array();
  for (std::size_t s : sites) out.push_back(s);
  return out;
}

std::variant<SeqProblem, GaussProblem> base_of(const io::ProblemFile& pf) {
  if (pf.space == io::Space::kGaussian) return pf.gauss;
  return pf.seq;
}

json error_object(int code, const std::string& kind, const std::string& message) {
  return {{"error", {{"code", code}, {"kind", kind}, {"message", message}}}};
}

// Runs a command body and maps exceptions onto exit codes.
int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const oracle::OracleRefusal& e) {
    err << error_object(kExitOracleRefusal, "oracle-refusal", e.what()).dump() << "\n";
    return kExitOracleRefusal;
  } catch (const DomainError& e) {
    err << error_object(kExitValidation, "validation", e.what()).dump() << "\n";
    return kExitValidation;
  } catch (const SolverError& e) {
    json j = error_object(kExitSolverFailure, "solver-failure", e.what());
    if (std::isfinite(e.last_residual())) j["error"]["last_residual"] = e.last_residual();
    err << j.dump() << "\n";
    return kExitSolverFailure;
  } catch (const std::exception& e) {
    err << error_object(kExitSolverFailure, "solver-failure", e.what()).dump() << "\n";
    return kExitSolverFailure;
  }
}

io::ProblemFile load(const std::string& path, const Overrides& ov) {
  io::ProblemFile pf = io::load_problem(path);
  apply_overrides(pf, ov);
  return pf;
}

json l1_mni_report(const io::ProblemFile& pf) {
  const MniResult r = mni_solve_l1_detailed(pf.seq, pf.selection);
  const double m0 = r.certificate.value;
  const bool pass = std::abs(r.solution.norm - m0) <= 10.0 * pf.seq.options.tol * (1.0 + m0) &&
                    r.solution.residual <= 10.0 * pf.seq.options.tol * (1.0 + pf.seq.y.cwiseAbs().maxCoeff());
  json j = header(pf, "mni");
  j["optimal_value"] = r.solution.norm;
  j["dual"] = {{"c", io::vector_to_json(r.certificate.c)},
               {"value", m0},
               {"attainment_sites", sites_json(r.certificate.attain)},
               {"truncation", r.certificate.truncation_used}};
  j["atoms"] = io::atoms_to_json(r.solution.atoms, true);
  j["diagnostics"] = {{"residual", r.solution.residual},
                      {"rank", r.matrix.rank},
                      {"n_attain", r.certificate.attain.size()},
                      {"certificate_verdict", pass ? "pass" : "fail"},
                      {"margin", r.certificate.margin}};
  j["provenance"] = provenance(pf);
  return j;
}

json lp_report(const io::ProblemFile& pf, const std::string& task) {
  const LpSolution s = mni_solve_lp(pf.seq, pf.p, pf.lp_truncation);
  json j = header(pf, task);
  j["optimal_value"] = s.value;
  j["dual"] = {{"c", io::vector_to_json(s.dual_c)},
               {"value", s.value},
               {"truncation", s.truncation},
               {"iterations", s.iterations}};
  json coords = json::array();
  for (std::size_t k = 1; k <= std::min(kLpPreview, s.truncation); ++k) {
    coords.push_back({{"site", k}, {"value", s.Eval(k)}});
  }
  j["atoms"] = json::array();
  j["coordinates"] = coords;
  j["diagnostics"] = {{"residual", s.residual},
                      {"norm_p", s.norm_p},
                      {"q", s.q},
                      {"gradient_norm", s.gradient_norm},
                      {"tail_bound", s.tail_bound},
                      {"certificate_verdict", s.residual <= 1e-6 * (1.0 + pf.seq.y.cwiseAbs().maxCoeff()) ? "pass" : "fail"}};
  j["provenance"] = provenance(pf);
  return j;
}

json gauss_dual_json(const ContinuousDualCertificate& c) {
  return {{"c", io::vector_to_json(c.c)},
          {"value", c.value},
          {"attainment_sites", c.attain_points},
          {"iterations", c.exchange_iters},
          {"final_violation", c.final_violation},
          {"sup_norm", c.sup_norm},
          {"polished", c.polished}};
}

// Sup norm minus the largest local maximum of |g| away from the attainment points.
double gauss_margin(const ContinuousDualCertificate& c, const GaussProblem& gp) {
  double other = 0.0;
  for (const Extremum& e : refined_local_maxima(c.c, gp, gp.grid_step())) {
    const bool attained = std::any_of(c.attain_points.begin(), c.attain_points.end(),
                                      [&](double t) { return std::abs(t - e.t) <= 1e-3 * gp.sigma; });
    if (!attained) other = std::max(other, std::abs(e.value));
  }
  return c.sup_norm - other;
}

json gauss_mni_report(const io::ProblemFile& pf) {
  const MeasureResult r = mni_solve_measure_detailed(pf.gauss);
  const double m0 = r.certificate.value;
  const bool pass = std::abs(r.solution.norm - m0) <= 1e-6 * (1.0 + m0) &&
                    r.solution.residual <= 1e-6 * (1.0 + pf.gauss.y.cwiseAbs().maxCoeff());
  json j = header(pf, "mni");
  j["optimal_value"] = r.solution.norm;
  j["dual"] = gauss_dual_json(r.certificate);
  j["atoms"] = io::atoms_to_json(r.solution.atoms, false);
  j["diagnostics"] = {{"residual", r.solution.residual},
                      {"rank", r.matrix.rank},
                      {"n_attain", r.certificate.attain_points.size()},
                      {"certificate_verdict", pass ? "pass" : "fail"},
                      {"margin", gauss_margin(r.certificate, pf.gauss)}};
  j["provenance"] = provenance(pf);
  return j;
}

json reg_report(const io::ProblemFile& pf) {
  const RegResult r = reg_solve_detailed(RegProblem{base_of(pf), *pf.lambda});
  const bool seq = pf.space != io::Space::kGaussian;
  json j = header(pf, "reg");
  j["lambda"] = *pf.lambda;
  j["optimal_value"] = r.objective;
  j["dual"] = {{"a", io::vector_to_json(r.certificate.a)}, {"lambda_max", r.lambda_max}};
  if (seq) {
    j["dual"]["truncation"] = r.truncation;
  } else {
    j["dual"]["iterations"] = r.rounds;
  }
  j["atoms"] = io::atoms_to_json(r.solution.atoms, seq);
  j["diagnostics"] = {{"residual", r.solution.residual},
                      {"rank", r.solution.rank_bound},
                      {"l1_norm", r.solution.norm},
                      {"certificate_verdict", r.certificate.pass ? "pass" : "fail"},
                      {"max_equality_residual", r.certificate.max_equality_residual()},
                      {"min_inequality_slack",
                       r.certificate.inequality_slacks.empty() ? 0.0 : r.certificate.min_inequality_slack()}};
  j["provenance"] = provenance(pf);
  return j;
}

void write_body(std::ostream& out, const std::string& body) { out << body; }

}  // namespace

void apply_overrides(io::ProblemFile& pf, const Overrides& ov) {
  SolverOptions& o = pf.options();
  if (ov.tol) {
    o.tol = *ov.tol;
    if (!ov.attain_tol && o.attain_tol < o.tol) o.attain_tol = o.tol;
  }
  if (ov.attain_tol) o.attain_tol = *ov.attain_tol;
  if (ov.grid_step) {
    if (!(*ov.grid_step > 0)) throw io::ValidationError("--grid-step must be positive");
    o.grid_step = *ov.grid_step;
  }
  if (ov.truncation) {
    if (*ov.truncation == 0) throw io::ValidationError("--truncation must be positive");
    if (pf.space == io::Space::kLp) {
      pf.lp_truncation = *ov.truncation;
    } else {
      o.truncation_start = *ov.truncation;
    }
  }
  try {
    o.Validate();
  } catch (const DomainError& e) {
    throw io::ValidationError(e.what());
  }
}

json dual_report(const io::ProblemFile& pf) {
  if (pf.space == io::Space::kLp) return lp_report(pf, "dual");
  json j = header(pf, "dual");
  if (pf.space == io::Space::kL1) {
    const DualCertificate c = dual_solve_l1(pf.seq, pf.selection);
    j["optimal_value"] = c.value;
    j["dual"] = {{"c", io::vector_to_json(c.c)},
                 {"value", c.value},
                 {"attainment_sites", sites_json(c.attain)},
                 {"truncation", c.truncation_used}};
    j["diagnostics"] = {{"n_attain", c.attain.size()},
                        {"margin", c.margin},
                        {"rank", truncation_matrix(pf.seq.functionals, c.attain, pf.seq.options.tol).rank}};
  } else {
    const ContinuousDualCertificate c = dual_solve_semiinfinite(pf.gauss);
    j["optimal_value"] = c.value;
    j["dual"] = gauss_dual_json(c);
    j["diagnostics"] = {{"n_attain", c.attain_points.size()},
                        {"rank", kernel_matrix(pf.gauss, c.attain_points).rank},
                        {"margin", gauss_margin(c, pf.gauss)}};
  }
  j["atoms"] = json::array();
  j["provenance"] = provenance(pf);
  return j;
}

std::pair<json, bool> lambda_check_report(const io::ProblemFile& pf) {
  if (pf.space == io::Space::kLp) throw io::ValidationError("lambda-check applies to l1 and gaussian-measure");
  if (!pf.lambda) throw io::ValidationError("lambda-check needs 'lambda'");
  const double lambda = *pf.lambda;
  const SolverOptions& opt = pf.options();
  const double tol = 10.0 * opt.tol;
  LambdaCertificate cert;
  bool tail_ok = true;
  json extra;
  if (pf.space == io::Space::kL1) {
    const SeqProblem& sp = pf.seq;
    Vector a = -sp.y;
    std::size_t max_site = 0;
    for (const Atom& at : pf.atoms) {
      max_site = std::max(max_site, at.index());
      for (std::size_t i = 0; i < sp.size(); ++i) a(static_cast<Eigen::Index>(i)) += at.coeff * sp.functionals[i].Eval(at.index());
    }
    std::size_t K = opt.truncation_start;
    while (K < max_site) K *= 2;
    auto tail_at = [&](std::size_t k) {
      double t = 0.0;
      for (std::size_t i = 0; i < sp.size(); ++i) t += std::abs(a(static_cast<Eigen::Index>(i))) * sp.functionals[i].TailBound(k);
      return t;
    };
    while (tail_at(K) > lambda && K < (std::size_t{1} << 20)) K *= 2;
    tail_ok = tail_at(K) <= lambda;
    const Matrix vk = measurement_block(sp.functionals, K);
    Vector alpha = Vector::Zero(static_cast<Eigen::Index>(K));
    for (const Atom& at : pf.atoms) alpha(static_cast<Eigen::Index>(at.index() - 1)) = at.coeff;
    cert = lambda_certificate_with_subgradient(vk, alpha, a, lambda, tol);
    extra["truncation"] = K;
    json sup = json::array();
    for (std::size_t s : cert.support) sup.push_back(s + 1);
    extra["support"] = sup;
  } else {
    const GaussProblem& gp = pf.gauss;
    std::vector<double> t;
    Vector w(static_cast<Eigen::Index>(pf.atoms.size()));
    for (std::size_t l = 0; l < pf.atoms.size(); ++l) {
      t.push_back(pf.atoms[l].site);
      w(static_cast<Eigen::Index>(l)) = pf.atoms[l].coeff;
    }
    Vector a = kernel_matrix(gp, t).values * w - gp.y;
    std::vector<double> sites = t;
    for (const Extremum& e : refined_local_maxima(a, gp, gp.grid_step())) {
      if (std::none_of(t.begin(), t.end(), [&](double s) { return std::abs(s - e.t) < 1e-6 * gp.sigma; })) {
        sites.push_back(e.t);
      }
    }
    Vector alpha = Vector::Zero(static_cast<Eigen::Index>(sites.size()));
    alpha.head(w.size()) = w;
    cert = lambda_certificate_with_subgradient(kernel_matrix(gp, sites).values, alpha, a, lambda, tol);
    json sup = json::array();
    for (std::size_t s : cert.support) sup.push_back(sites[s]);
    extra["support"] = sup;
  }
  const bool pass = cert.pass && tail_ok;
  json j = header(pf, "lambda-check");
  j["lambda"] = lambda;
  j["certificate"] = {{"verdict", pass ? "pass" : "fail"},
                      {"tol", tol},
                      {"support", extra["support"]},
                      {"equality_residuals", cert.equality_residuals},
                      {"max_equality_residual", cert.max_equality_residual()},
                      {"min_inequality_slack", cert.inequality_slacks.empty() ? 0.0 : cert.min_inequality_slack()},
                      {"a", io::vector_to_json(cert.a)},
                      {"tail_certified", tail_ok}};
  if (extra.contains("truncation")) j["certificate"]["truncation"] = extra["truncation"];
  j["provenance"] = provenance(pf);
  return {j, pass};
}

json lambda_max_report(const io::ProblemFile& pf) {
  if (pf.space == io::Space::kLp) throw io::ValidationError("lambda-max applies to l1 and gaussian-measure");
  json j = header(pf, "lambda-max");
  j["lambda_max"] = pf.space == io::Space::kL1 ? lambda_max(pf.seq) : lambda_max(pf.gauss);
  j["provenance"] = provenance(pf);
  return j;
}

json path_report(const io::ProblemFile& pf) {
  if (pf.space == io::Space::kLp) throw io::ValidationError("path applies to l1 and gaussian-measure");
  if (pf.lambdas.empty()) throw io::ValidationError("path needs 'lambdas'");
  json rows = json::array();
  for (const PathRow& r : sparsity_path(base_of(pf), pf.lambdas)) {
    json row = {{"lambda", r.lambda},
                {"atoms", r.atoms},
                {"l1_norm", r.l1_norm},
                {"objective", r.objective},
                {"certificate_verdict", r.certificate_pass ? "pass" : "fail"}};
    if (!r.error.empty()) row["error"] = r.error;
    rows.push_back(row);
  }
  json j = header(pf, "path");
  j["path"] = rows;
  j["provenance"] = provenance(pf);
  return j;
}

std::string path_csv(const io::ProblemFile& pf) {
  const json j = path_report(pf);
  std::ostringstream os;
  os << "lambda,atoms,l1_norm,objective\n";
  for (const json& row : j["path"]) {
    if (row.contains("error")) {
      os << row["lambda"].dump() << ",,,\n";
      continue;
    }
    os << row["lambda"].dump() << "," << row["atoms"].dump() << "," << row["l1_norm"].dump() << ","
       << row["objective"].dump() << "\n";
  }
  return os.str();
}

json solve_report(const io::ProblemFile& pf) {
  switch (pf.task) {
    case io::Task::kMni:
      if (pf.space == io::Space::kL1) return l1_mni_report(pf);
      if (pf.space == io::Space::kLp) return lp_report(pf, "mni");
      return gauss_mni_report(pf);
    case io::Task::kReg:
      return reg_report(pf);
    case io::Task::kDual:
      return dual_report(pf);
    case io::Task::kLambdaCheck:
      return lambda_check_report(pf).first;
    case io::Task::kPath:
      return path_report(pf);
  }
  return json::object();
}

std::pair<json, bool> oracle_report(const io::ProblemFile& pf) {
  json checks = json::array();
  bool all = true;
  auto record = [&](const std::string& name, double solver, double oracle_value, double tol, bool agree,
                    const std::string& notes) {
    checks.push_back({{"check", name},
                      {"solver_value", solver},
                      {"oracle_value", oracle_value},
                      {"tolerance", tol},
                      {"agreement", agree},
                      {"notes", notes}});
    all = all && agree;
  };

  if (pf.space == io::Space::kL1) {
    const SeqProblem& sp = pf.seq;
    const MniResult r = mni_solve_l1_detailed(sp, pf.selection);
    const double m0 = r.certificate.value;
    std::size_t support = 0;
    for (const auto& f : sp.functionals) support = std::max(support, f.SupportLength());
    Matrix l;
    std::string where;
    if (support <= 12) {
      l = measurement_block(sp.functionals, support);
      where = "all " + std::to_string(support) + " coordinates";
    } else if (r.matrix.values.cols() <= 12) {
      l = r.matrix.values;
      where = "attainment columns";
    } else {
      throw oracle::OracleRefusal("no oracle applies: more than 12 candidate columns");
    }
    oracle::OracleReport ve = oracle::vertex_enumerate_l1(l, sp.y, sp.options.tol);
    const double tol = 1e-9 * (1.0 + m0);
    record("min-l1-value", r.solution.norm, ve.value, tol, ve.Compare(r.solution.norm, tol),
           "vertex enumeration over " + where);
    oracle::OracleReport nc = oracle::norming_check(r.certificate.nu_hat, r.certificate.truncation_used,
                                                    r.solution, 1e-8);
    record("norming-pairing", r.solution.norm, nc.value, 1e-8 * (1.0 + r.solution.norm), *nc.agreement, nc.notes);
    oracle::OracleReport cv = oracle::solution_set_convexity_check(l, sp.y, sp.options.tol);
    record("solution-set-convexity", ve.value, cv.value, tol, *cv.agreement, cv.notes);
  } else if (pf.space == io::Space::kLp) {
    if (pf.p != 2.0) throw oracle::OracleRefusal("the l2 normal-equations oracle needs p = 2");
    const LpSolution s = mni_solve_lp(pf.seq, pf.p, pf.lp_truncation);
    oracle::OracleReport o = oracle::l2_min_norm(pf.seq, pf.lp_truncation);
    double worst = 0.0;
    for (std::size_t k = 1; k <= std::min<std::size_t>(50, pf.lp_truncation); ++k) {
      worst = std::max(worst, std::abs(s.Eval(k) - o.evaluator(k)));
    }
    record("first-50-coordinates", 0.0, worst, 1e-6, worst <= 1e-6, o.notes);
    record("l2-norm", s.norm_p, o.value, 1e-6, o.Compare(s.norm_p, 1e-6), o.notes);
  } else {
    const GaussProblem& gp = pf.gauss;
    const MeasureResult r = mni_solve_measure_detailed(gp);
    const double step = gp.sigma * 1e-4;
    oracle::OracleReport gs = oracle::grid_supremum(r.certificate.c, gp, step);
    const double bound = oracle::grid_error_bound(r.certificate.c, gp.sigma, step);
    const double lower = r.certificate.c.dot(gp.y) / (gs.value + bound);
    const double tv = r.solution.norm;
    const double tol = 1e-6 * (1.0 + tv);
    const bool interp = r.solution.residual <= 1e-6 * (1.0 + gp.y.cwiseAbs().maxCoeff());
    record("weak-duality-gap", tv, lower, tol, interp && tv - lower <= tol && tv >= lower - tol, gs.notes);
    const Vector c = r.certificate.c;
    oracle::OracleReport nc = oracle::norming_check([&](double t) { return gauss_eval(c, gp, t); }, gs.value,
                                                    r.solution, 1e-6);
    record("norming-pairing", tv, nc.value, 1e-6 * (1.0 + tv), *nc.agreement, nc.notes);
  }
  json j = header(pf, "oracle-verify");
  j["checks"] = checks;
  j["agreement"] = all;
  j["provenance"] = provenance(pf);
  return {j, all};
}

namespace {

int emit(std::ostream& out, const json& j) {
  write_body(out, j.dump(2) + "\n");
  return kExitOk;
}

}  // namespace

int cmd_solve(const std::string& path, const Overrides& ov, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const io::ProblemFile pf = load(path, ov);
    if (pf.task == io::Task::kLambdaCheck) {
      const auto [j, pass] = lambda_check_report(pf);
      emit(out, j);
      return pass ? static_cast<int>(kExitOk) : static_cast<int>(kExitMismatch);
    }
    if (pf.task == io::Task::kPath && ov.format == "csv") {
      write_body(out, path_csv(pf));
      return static_cast<int>(kExitOk);
    }
    return emit(out, solve_report(pf));
  });
}

int cmd_dual(const std::string& path, const Overrides& ov, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] { return emit(out, dual_report(load(path, ov))); });
}

int cmd_lambda_check(const std::string& path, const Overrides& ov, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto [j, pass] = lambda_check_report(load(path, ov));
    emit(out, j);
    return pass ? static_cast<int>(kExitOk) : static_cast<int>(kExitMismatch);
  });
}

int cmd_lambda_max(const std::string& path, const Overrides& ov, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] { return emit(out, lambda_max_report(load(path, ov))); });
}

int cmd_path(const std::string& path, const Overrides& ov, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const io::ProblemFile pf = load(path, ov);
    if (ov.format == "csv") {
      write_body(out, path_csv(pf));
      return static_cast<int>(kExitOk);
    }
    return emit(out, path_report(pf));
  });
}

int cmd_oracle_verify(const std::string& path, const Overrides& ov, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto [j, ok] = oracle_report(load(path, ov));
    emit(out, j);
    return ok ? static_cast<int>(kExitOk) : static_cast<int>(kExitMismatch);
  });
}

int cmd_demo(const Overrides& ov, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    io::ProblemFile pf;
    pf.space = io::Space::kL1;
    pf.seq.functionals = {SequenceFunctional::Harmonic(), SequenceFunctional::Geometric(-0.5)};
    pf.seq.y = Vector::Ones(2);
    apply_overrides(pf, ov);
    const SeqProblem& sp = pf.seq;
    const double attain_tol = sp.options.attain_tol;
    const bool loose = attain_tol > 1e-3;

    std::ostringstream os;
    std::vector<std::string> failures;
    auto expect = [&](bool ok, const std::string& what) {
      if (!ok) failures.push_back(what);
    };
    auto print_matrix = [&](const Matrix& m) {
      for (Eigen::Index i = 0; i < m.rows(); ++i) {
        os << "    [";
        for (Eigen::Index k = 0; k < m.cols(); ++k) os << (k ? ", " : "") << m(i, k);
        os << "]\n";
      }
    };
    auto print_sites = [&](const std::vector<std::size_t>& s) {
      os << "{";
      for (std::size_t i = 0; i < s.size(); ++i) os << (i ? ", " : "") << s[i];
      os << "}";
    };
    os << std::setprecision(12);
    os << "v1 = harmonic (1/k), v2 = geometric (-1/2)^(k-1), y = [1, 1]\n";
    if (loose) {
      os << "warning: attain_tol = " << attain_tol
         << " is loose; the attainment set may include non-attaining coordinates\n";
    }

    const DualCertificate vertex = dual_solve_l1(sp, DualSelection::kVertex);
    os << "simplex dual: c = [" << vertex.c(0) << ", " << vertex.c(1) << "], m0 = " << vertex.value << "\n";
    expect(std::abs(vertex.value - 1.0) <= 1e-8, "m0 != 1");
    expect(std::abs(vertex.c.sum() - 1.0) <= 1e-8 && vertex.c(0) >= -0.5 - 1e-8 && vertex.c(0) <= 1.5 + 1e-8,
           "dual solution off the segment c1 + c2 = 1, -1/2 <= c1 <= 3/2");

    struct Case {
      std::string name;
      Vector c;
      std::vector<std::size_t> sites;
      Matrix v;
      int rank;
    };
    Matrix v1(2, 2);
    v1 << 1.0, 0.5, 1.0, -0.5;
    Matrix v2(2, 1);
    v2 << 1.0, 1.0;
    const std::vector<Case> cases = {{"c = [-1/2, 3/2]", (Vector(2) << -0.5, 1.5).finished(), {1, 2}, v1, 2},
                                     {"c = [0, 1]", (Vector(2) << 0.0, 1.0).finished(), {1}, v2, 1}};
    std::vector<int> ranks;
    for (const Case& cs : cases) {
      const DualCertificate cert = certify_dual(sp, cs.c);
      const MniResult r = mni_solve_l1_from(sp, cert);
      os << "\n" << cs.name << ": N(nu) = ";
      print_sites(cert.attain);
      os << ", rank(V) = " << r.matrix.rank << "\n  V =\n";
      print_matrix(r.matrix.values);
      os << "  solution:";
      for (const Atom& a : r.solution.atoms) os << " (" << a.index() << ", " << a.coeff << ")";
      os << "\n";
      ranks.push_back(r.matrix.rank);
      expect(r.matrix.rank <= 2, cs.name + ": rank exceeds 2");
      expect(r.solution.atoms.size() == 1 && r.solution.atoms[0].index() == 1 &&
                 std::abs(r.solution.atoms[0].coeff - 1.0) <= 1e-8,
             cs.name + ": solution is not e1");
      if (cert.attain != cs.sites) {
        os << "  note: N(nu) differs from ";
        print_sites(cs.sites);
        os << (cert.attain.size() > cs.sites.size() ? " (inflated)" : "") << "\n";
      }
      if (!loose) {
        expect(cert.attain == cs.sites, cs.name + ": unexpected attainment set");
        expect(r.matrix.rank == cs.rank, cs.name + ": unexpected rank");
        expect(r.matrix.values.rows() == cs.v.rows() && r.matrix.values.cols() == cs.v.cols() &&
                   (r.matrix.values - cs.v).cwiseAbs().maxCoeff() <= 1e-12,
               cs.name + ": unexpected truncation matrix");
      }
    }

    const MniResult minimal = mni_solve_l1_detailed(sp, DualSelection::kMinimalAttainment);
    os << "\nminimal-attainment dual: c = [" << minimal.certificate.c(0) << ", " << minimal.certificate.c(1)
       << "], N(nu) = ";
    print_sites(minimal.certificate.attain);
    os << ", rank(V) = " << minimal.matrix.rank << "\n";
    expect(minimal.matrix.rank <= 2, "minimal-attainment rank exceeds 2");

    os << "\nrank pair (" << ranks[0] << ", " << ranks[1] << "), common solution x = e1\n";
    if (failures.empty()) {
      os << "all checks passed\n";
    } else {
      for (const std::string& f : failures) os << "MISMATCH: " << f << "\n";
    }
    if (ov.format == "json") {
      json j = {{"schema", io::kSchema},
                {"task", "demo"},
                {"ranks", ranks},
                {"m0", vertex.value},
                {"vertex_c", io::vector_to_json(vertex.c)},
                {"minimal_attainment_c", io::vector_to_json(minimal.certificate.c)},
                {"failures", failures},
                {"provenance", provenance(pf)}};
      write_body(out, j.dump(2) + "\n");
    } else {
      write_body(out, os.str());
    }
    return failures.empty() ? static_cast<int>(kExitOk) : static_cast<int>(kExitMismatch);
  });
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparse minimum-norm interpolation and regularization in reproducing kernel Banach spaces",
               io::kToolName};
  app.require_subcommand(1);
  app.set_version_flag("--version", io::kToolVersion);

  Overrides ov;
  std::string problem;
  std::string output;
  double tol = 0.0;
  double attain_tol = 0.0;
  std::size_t truncation = 0;
  double grid_step = 0.0;

  auto add_common = [&](CLI::App* sub, bool needs_file) {
    if (needs_file) sub->add_option("problem", problem, "Problem file (JSON)")->required();
    sub->add_option("--tol", tol, "Solver tolerance");
    sub->add_option("--attain-tol", attain_tol, "Relative attainment tolerance");
    sub->add_option("--truncation", truncation, "Initial truncation (l1) or fixed truncation (lp)");
    sub->add_option("--grid-step", grid_step, "Grid step for Gaussian problems");
    sub->add_option("--output", output, "Write the report to this file instead of stdout");
    sub->add_option("--format", ov.format, "Output format")->check(CLI::IsMember({"json", "csv", "text"}));
  };
  CLI::App* solve = app.add_subcommand("solve", "Run the task named in the problem file");
  CLI::App* dual = app.add_subcommand("dual", "Compute the dual certificate");
  CLI::App* lcheck = app.add_subcommand("lambda-check", "Check the lambda optimality conditions for given atoms");
  CLI::App* lmax = app.add_subcommand("lambda-max", "Smallest lambda with a zero solution");
  CLI::App* path = app.add_subcommand("path", "Sparsity along a list of lambdas");
  CLI::App* verify = app.add_subcommand("oracle-verify", "Compare the solver with brute-force oracles");
  CLI::App* demo = app.add_subcommand("demo", "Worked two-functional example in l1");
  for (CLI::App* sub : {solve, dual, lcheck, lmax, path, verify}) add_common(sub, true);
  add_common(demo, false);
  demo->get_option("--format")->default_str("text");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << io::kToolVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << error_object(kExitValidation, "usage", e.what()).dump() << "\n";
    return kExitValidation;
  }

  CLI::App* sub = app.get_subcommands().front();
  if (sub->count("--tol")) ov.tol = tol;
  if (sub->count("--attain-tol")) ov.attain_tol = attain_tol;
  if (sub->count("--truncation")) ov.truncation = truncation;
  if (sub->count("--grid-step")) ov.grid_step = grid_step;
  if (sub == demo && !sub->count("--format")) ov.format = "text";
  if (sub != demo && ov.format == "text") ov.format = "json";

  std::ofstream file;
  std::ostream* dest = &out;
  if (!output.empty()) {
    file.open(output);
    if (!file) {
      err << error_object(kExitValidation, "validation", "cannot open output file '" + output + "'").dump()
          << "\n";
      return kExitValidation;
    }
    dest = &file;
  }

  if (sub == solve) return cmd_solve(problem, ov, *dest, err);
  if (sub == dual) return cmd_dual(problem, ov, *dest, err);
  if (sub == lcheck) return cmd_lambda_check(problem, ov, *dest, err);
  if (sub == lmax) return cmd_lambda_max(problem, ov, *dest, err);
  if (sub == path) return cmd_path(problem, ov, *dest, err);
  if (sub == verify) return cmd_oracle_verify(problem, ov, *dest, err);
  return cmd_demo(ov, *dest, err);
}

}  // namespace rkbs::cli
