#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "random_instances.hpp"
#include "rkbs/measure_rkbs.hpp"
#include "rkbs/optim.hpp"
#include "rkbs/oracle.hpp"
#include "rkbs/regpath.hpp"
#include "rkbs/seq_rkbs.hpp"

using namespace rkbs;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

SeqProblem worked_example() {
  SeqProblem p;
  p.functionals = {SequenceFunctional::Harmonic(), SequenceFunctional::Geometric(-0.5)};
  p.y = Vector::Ones(2);
  return p;
}

std::vector<SeqProblem> random_batch(unsigned seed, int count) {
  std::mt19937 rng(seed);
  std::vector<SeqProblem> out;
  for (int i = 0; i < count; ++i) out.push_back(testutil::random_seq_problem(rng));
  return out;
}

struct Outcome {
  bool pass = true;
  std::string detail;
  void fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
};

int report(int id, const std::string& name, const std::function<Outcome()>& body) {
  Outcome o;
  const auto t0 = Clock::now();
  try {
    o = body();
  } catch (const std::exception& e) {
    o.fail(std::string("exception: ") + e.what());
  }
  std::printf("criterion %d %-34s %s  (%.2fs)%s%s\n", id, name.c_str(), o.pass ? "PASS" : "FAIL",
              seconds_since(t0), o.detail.empty() ? "" : "  ", o.detail.c_str());
  std::fflush(stdout);
  return o.pass ? 0 : 1;
}

Outcome worked_example_check() {
  Outcome o;
  const auto t0 = Clock::now();
  const SeqProblem p = worked_example();
  const DualCertificate vertex = dual_solve_l1(p, DualSelection::kVertex);
  if (std::abs(vertex.value - 1.0) > 1e-8) o.fail("m0 != 1");
  if (std::abs(vertex.c.sum() - 1.0) > 1e-8 || vertex.c(0) < -0.5 - 1e-8 || vertex.c(0) > 1.5 + 1e-8) {
    o.fail("c off the optimal segment");
  }
  const DualCertificate minimal = dual_solve_l1(p, DualSelection::kMinimalAttainment);
  if (std::abs(minimal.value - 1.0) > 1e-8 || std::abs(minimal.c.sum() - 1.0) > 1e-8) {
    o.fail("minimal-attainment c off the optimal segment");
  }

  Matrix v1(2, 2);
  v1 << 1.0, 0.5, 1.0, -0.5;
  Matrix v2(2, 1);
  v2 << 1.0, 1.0;
  struct Case {
    Vector c;
    std::vector<std::size_t> sites;
    Matrix v;
    int rank;
  };
  const std::vector<Case> cases = {{(Vector(2) << -0.5, 1.5).finished(), {1, 2}, v1, 2},
                                   {(Vector(2) << 0.0, 1.0).finished(), {1}, v2, 1}};
  for (const Case& cs : cases) {
    const MniResult r = mni_solve_l1_from(p, certify_dual(p, cs.c));
    if (r.certificate.attain != cs.sites) o.fail("attainment set mismatch");
    if (r.matrix.values.rows() != cs.v.rows() || r.matrix.values.cols() != cs.v.cols() ||
        (r.matrix.values - cs.v).cwiseAbs().maxCoeff() > 1e-12) {
      o.fail("V matrix mismatch");
    }
    if (r.matrix.rank != cs.rank) o.fail("rank mismatch");
    if (r.solution.atoms.size() != 1 || r.solution.atoms[0].index() != 1 ||
        std::abs(r.solution.atoms[0].coeff - 1.0) > 1e-8) {
      o.fail("solution is not e1");
    }
  }
  const SparseSolution s = mni_solve_l1(p);
  if (s.atoms.size() != 1 || s.atoms[0].index() != 1 || std::abs(s.atoms[0].coeff - 1.0) > 1e-8) {
    o.fail("default solution is not e1");
  }
  if (seconds_since(t0) >= 1.0) o.fail("runtime >= 1 s");
  return o;
}

Outcome strong_duality_check(const std::vector<MniResult>& results, const std::vector<SeqProblem>& probs,
                             double elapsed) {
  Outcome o;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const MniResult& r = results[i];
    const double ymax = probs[i].y.cwiseAbs().maxCoeff();
    if (std::abs(r.solution.norm - r.certificate.value) > 1e-8) {
      o.fail("instance " + std::to_string(i) + ": duality gap");
    }
    if (r.solution.residual > 1e-8 * (1.0 + ymax)) o.fail("instance " + std::to_string(i) + ": residual");
  }
  if (elapsed >= 30.0) o.fail("runtime >= 30 s");
  if (o.pass) o.detail = "solves took " + std::to_string(elapsed) + " s";
  return o;
}

Outcome rank_bound_check(const std::vector<MniResult>& results, const std::vector<SeqProblem>& probs) {
  Outcome o;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const MniResult& r = results[i];
    if (static_cast<int>(r.solution.atoms.size()) > r.matrix.rank ||
        r.matrix.rank > static_cast<int>(probs[i].size())) {
      o.fail("instance " + std::to_string(i) + ": atoms > rank or rank > n");
    }
  }
  return o;
}

Outcome oracle_equivalence_check(const std::vector<MniResult>& results, const std::vector<SeqProblem>& probs) {
  Outcome o;
  int compared = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const MniResult& r = results[i];
    if (probs[i].size() > 3 || r.certificate.attain.size() > 6) continue;
    const Matrix& l = r.matrix.values;
    const double bp = optim::basis_pursuit(l, probs[i].y).objective_value;
    const oracle::OracleReport ve = oracle::vertex_enumerate_l1(l, probs[i].y);
    ++compared;
    if (std::abs(bp - ve.value) > 1e-9) o.fail("instance " + std::to_string(i) + ": value mismatch");
  }
  if (compared == 0) o.fail("no eligible instances");
  o.detail = o.pass ? std::to_string(compared) + " instances compared" : o.detail;
  return o;
}

Outcome lp_contrast_check() {
  Outcome o;
  const SeqProblem p = worked_example();
  const LpSolution s = mni_solve_lp(p, 2.0);
  const oracle::OracleReport orc = oracle::l2_min_norm(p, s.truncation);
  for (std::size_t k = 1; k <= 50; ++k) {
    if (std::abs(s.Eval(k) - orc.evaluator(k)) > 1e-6) o.fail("coordinate " + std::to_string(k) + " differs");
  }
  int nonzero = 0;
  for (std::size_t k = 1; k <= 100; ++k) nonzero += std::abs(s.Eval(k)) > 1e-12 ? 1 : 0;
  if (nonzero < 99) o.fail("only " + std::to_string(nonzero) + " nonzero coordinates");
  for (std::size_t n : {5, 10, 20}) {
    if (support_dependency_check(p.functionals, n).verdict != DependencyVerdict::kIndependent) {
      o.fail("tails not independent at N = " + std::to_string(n));
    }
  }
  return o;
}

Outcome gaussian_check() {
  Outcome o;
  {
    const auto t0 = Clock::now();
    const GaussProblem g = GaussProblem::Make({-1.0, 1.0}, 1.0, Vector::Ones(2));
    const MeasureResult r = mni_solve_measure_detailed(g);
    const double root_e = std::exp(0.5);
    if (r.solution.atoms.size() != 1) {
      o.fail("centers +-1: expected one atom");
    } else {
      if (std::abs(r.solution.atoms[0].site) > 1e-6) o.fail("centers +-1: atom not at 0");
      if (std::abs(r.solution.atoms[0].coeff - root_e) > 1e-6) o.fail("centers +-1: weight != sqrt(e)");
    }
    if (std::abs(r.solution.tv_norm() - root_e) > 1e-6) o.fail("centers +-1: TV norm != sqrt(e)");
    if (r.solution.residual > 1e-6) o.fail("centers +-1: residual");
    if (r.certificate.exchange_iters > 100) o.fail("centers +-1: too many exchange iterations");
    if (seconds_since(t0) >= 5.0) o.fail("centers +-1: runtime >= 5 s");
  }
  {
    const auto t0 = Clock::now();
    const GaussProblem g = GaussProblem::Make({-2.0, 2.0}, 1.0, Vector::Ones(2));
    const MeasureResult r = mni_solve_measure_detailed(g);
    if (r.solution.atoms.size() != 2) o.fail("centers +-2: expected two atoms");
    if (r.solution.residual > 1e-6) o.fail("centers +-2: residual");
    if (r.certificate.exchange_iters > 100) o.fail("centers +-2: too many exchange iterations");
    if (seconds_since(t0) >= 5.0) o.fail("centers +-2: runtime >= 5 s");
  }
  return o;
}

Outcome lambda_conditions_check() {
  Outcome o;
  SeqProblem id;
  id.functionals = {SequenceFunctional::Finite({1.0, 0.0}), SequenceFunctional::Finite({0.0, 1.0})};
  id.y = Vector::Ones(2);
  const std::vector<PathRow> path = sparsity_path(id, {0.5, 0.9, 1.5});
  const std::size_t counts[] = {2, 2, 0};
  const double norms[] = {1.0, 0.2, 0.0};
  for (std::size_t i = 0; i < 3; ++i) {
    if (!path[i].error.empty()) {
      o.fail("path row failed: " + path[i].error);
      continue;
    }
    if (path[i].atoms != counts[i]) o.fail("path atom counts differ");
    if (std::abs(path[i].l1_norm - norms[i]) > 1e-8) o.fail("path l1 norms differ");
  }

  std::vector<RegProblem> probs;
  for (double lam : {0.05, 0.1, 0.5}) probs.push_back({worked_example(), lam});
  std::mt19937 rng(20240607);
  for (int i = 0; i < 20; ++i) {
    SeqProblem p = testutil::random_seq_problem(rng);
    const double lmax = lambda_max(p);
    std::uniform_real_distribution<double> frac(0.05, 0.95);
    probs.push_back({p, frac(rng) * lmax});
    probs.push_back({p, lmax * 1.5});
    probs.push_back({p, lmax});
  }
  probs.push_back({GaussProblem::Make({-1.0, 1.0}, 1.0, Vector::Ones(2)), 0.1});
  probs.push_back({GaussProblem::Make({-1.0, 0.5, 2.0}, 1.0, (Vector(3) << 1.0, -0.5, 0.8).finished()), 0.1});
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const RegResult r = reg_solve_detailed(probs[i]);
    const LambdaCertificate c =
        lambda_certificate(r.matrix, r.alpha, probs[i].y(), probs[i].lambda, 1e-7);
    if (!c.pass) o.fail("instance " + std::to_string(i) + ": certificate fails at 1e-7");
    if (probs[i].lambda >= r.lambda_max && !r.solution.atoms.empty()) {
      o.fail("instance " + std::to_string(i) + ": nonzero solution above lambda_max");
    }
  }
  return o;
}

Outcome consistency_check() {
  Outcome o;
  std::mt19937 rng(777);
  int done = 0;
  int attempts = 0;
  while (done < 50 && attempts < 500) {
    ++attempts;
    SeqProblem p = testutil::random_seq_problem(rng);
    std::uniform_real_distribution<double> frac(0.05, 0.9);
    const RegProblem rp{p, frac(rng) * lambda_max(p)};
    const ConsistencyReport c = reg_mni_consistency(rp);
    if (c.zero_regime) continue;
    ++done;
    if (c.objective_change() > 1e-7) o.fail("instance " + std::to_string(done) + ": objective changed");
    if (c.norm_increase() > 1e-7) o.fail("instance " + std::to_string(done) + ": l1 norm increased");
  }
  if (done < 50) o.fail("fewer than 50 instances with nonzero z_hat");
  return o;
}

}  // namespace

int main() {
  std::setvbuf(stdout, nullptr, _IONBF, 0);
  int failures = 0;
  failures += report(1, "worked example", worked_example_check);

  const std::vector<SeqProblem> probs = random_batch(12345, 200);
  std::vector<MniResult> results;
  double elapsed = 0.0;
  std::string batch_error;
  {
    const auto t0 = Clock::now();
    try {
      for (const SeqProblem& p : probs) results.push_back(mni_solve_l1_detailed(p));
    } catch (const std::exception& e) {
      batch_error = e.what();
    }
    elapsed = seconds_since(t0);
  }
  auto batch = [&](const std::function<Outcome()>& body) {
    return [&, body] {
      if (!batch_error.empty()) {
        Outcome o;
        o.fail("instance " + std::to_string(results.size()) + " threw: " + batch_error);
        return o;
      }
      return body();
    };
  };
  failures += report(2, "strong duality (200 instances)", batch([&] { return strong_duality_check(results, probs, elapsed); }));
  failures += report(3, "rank-sparsity bound", batch([&] { return rank_bound_check(results, probs); }));
  failures += report(4, "oracle equivalence", batch([&] { return oracle_equivalence_check(results, probs); }));
  failures += report(5, "lp contrast", lp_contrast_check);
  failures += report(6, "gaussian measure space", gaussian_check);
  failures += report(7, "lambda conditions", lambda_conditions_check);
  failures += report(8, "regularization-MNI consistency", consistency_check);
  std::printf("%d of 8 criteria passed\n", 8 - failures);
  return failures == 0 ? 0 : 1;
}
