#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "random_instances.hpp"
#include "rkbs/optim.hpp"
#include "rkbs/oracle.hpp"
#include "rkbs/seq_rkbs.hpp"

using namespace rkbs;

namespace {

SeqProblem worked_example() {
  SeqProblem p;
  p.functionals = {SequenceFunctional::Harmonic(), SequenceFunctional::Geometric(-0.5)};
  p.y = Vector::Ones(2);
  return p;
}

SeqProblem upper_triangular() {
  SeqProblem p;
  p.functionals = {SequenceFunctional::Finite({1.0, 0.5}), SequenceFunctional::Finite({0.0, 1.0})};
  p.y = Vector::Ones(2);
  return p;
}

SeqProblem single_unit(double y) {
  SeqProblem p;
  p.functionals = {SequenceFunctional::Finite({1.0})};
  p.y = Vector::Constant(1, y);
  return p;
}

}  // namespace

TEST(DualSolveL1, WorkedExampleValueAndSegment) {
  for (DualSelection sel : {DualSelection::kVertex, DualSelection::kMinimalAttainment}) {
    const DualCertificate c = dual_solve_l1(worked_example(), sel);
    EXPECT_NEAR(c.value, 1.0, 1e-10);
    EXPECT_NEAR(c.c(0) + c.c(1), 1.0, 1e-10);
    EXPECT_GE(c.c(0), -0.5 - 1e-10);
    EXPECT_LE(c.c(0), 1.5 + 1e-10);
    EXPECT_NEAR(c.unit_norm, 1.0, 1e-10);
    EXPECT_GT(c.margin, 0.0);
  }
}

TEST(DualSolveL1, MinimalAttainmentShrinksAttainmentSet) {
  const DualCertificate v = dual_solve_l1(worked_example(), DualSelection::kVertex);
  const DualCertificate m = dual_solve_l1(worked_example(), DualSelection::kMinimalAttainment);
  EXPECT_LE(m.attain.size(), v.attain.size());
  EXPECT_EQ(m.attain, std::vector<std::size_t>({1}));
}

TEST(DualSolveL1, SingleUnit) {
  const DualCertificate c = dual_solve_l1(single_unit(2.0));
  EXPECT_NEAR(c.value, 2.0, 1e-12);
  EXPECT_NEAR(c.c(0), 1.0, 1e-12);
  EXPECT_EQ(c.attain, std::vector<std::size_t>({1}));
}

TEST(DualSolveL1, UpperTriangular) {
  EXPECT_NEAR(dual_solve_l1(upper_triangular()).value, 1.5, 1e-12);
}

TEST(DualSolveL1, RejectsZeroDataAndDependentFunctionals) {
  SeqProblem p = worked_example();
  p.y = Vector::Zero(2);
  EXPECT_THROW(dual_solve_l1(p), DomainError);
  SeqProblem q;
  q.functionals = {SequenceFunctional::Finite({1.0, 2.0}), SequenceFunctional::Finite({2.0, 4.0})};
  q.y = Vector::Ones(2);
  EXPECT_THROW(dual_solve_l1(q), DomainError);
}

TEST(AttainmentSet, ExplicitCertificates) {
  const SeqProblem p = worked_example();
  const DualCertificate a = certify_dual(p, (Vector(2) << -0.5, 1.5).finished());
  EXPECT_EQ(attainment_set(a, 1e-7), std::vector<std::size_t>({1, 2}));
  const DualCertificate b = certify_dual(p, (Vector(2) << 0.0, 1.0).finished());
  EXPECT_EQ(attainment_set(b, 1e-7), std::vector<std::size_t>({1}));
}

TEST(AttainmentSet, UnitVector) {
  SeqProblem p;
  p.functionals = {SequenceFunctional::Unit(3)};
  p.y = Vector::Ones(1);
  EXPECT_EQ(attainment_set(certify_dual(p, Vector::Ones(1)), 1e-7), std::vector<std::size_t>({3}));
}

TEST(TruncationMatrix, TwoFunctionalMatrices) {
  const SeqProblem p = worked_example();
  const KernelMatrix v1 = truncation_matrix(p.functionals, {1, 2});
  Matrix e1(2, 2);
  e1 << 1, 0.5, 1, -0.5;
  EXPECT_EQ(v1.values, e1);
  EXPECT_EQ(v1.rank, 2);
  const KernelMatrix v2 = truncation_matrix(p.functionals, {1});
  EXPECT_EQ(v2.values, Matrix::Ones(2, 1));
  EXPECT_EQ(v2.rank, 1);
  const KernelMatrix u = truncation_matrix({SequenceFunctional::Unit(1)}, {1});
  EXPECT_EQ(u.values, Matrix::Ones(1, 1));
}

TEST(MniSolveL1, WorkedExample) {
  const SparseSolution s = mni_solve_l1(worked_example());
  ASSERT_EQ(s.atoms.size(), 1u);
  EXPECT_EQ(s.atoms[0].index(), 1u);
  EXPECT_NEAR(s.atoms[0].coeff, 1.0, 1e-12);
  EXPECT_NEAR(s.norm, 1.0, 1e-12);
}

TEST(MniSolveL1, SingleUnit) {
  const SparseSolution s = mni_solve_l1(single_unit(2.0));
  ASSERT_EQ(s.atoms.size(), 1u);
  EXPECT_NEAR(s.atoms[0].coeff, 2.0, 1e-12);
}

TEST(MniSolveL1, UpperTriangular) {
  const SparseSolution s = mni_solve_l1(upper_triangular());
  ASSERT_EQ(s.atoms.size(), 2u);
  EXPECT_EQ(s.atoms[0].index(), 1u);
  EXPECT_NEAR(s.atoms[0].coeff, 0.5, 1e-12);
  EXPECT_EQ(s.atoms[1].index(), 2u);
  EXPECT_NEAR(s.atoms[1].coeff, 1.0, 1e-12);
  EXPECT_NEAR(s.norm, 1.5, 1e-12);
}

TEST(MniSolveL1, BothExplicitCertificatesGiveE1) {
  const SeqProblem p = worked_example();
  for (const Vector& c : {(Vector(2) << -0.5, 1.5).finished(), (Vector(2) << 0.0, 1.0).finished()}) {
    const MniResult r = mni_solve_l1_from(p, certify_dual(p, c));
    ASSERT_EQ(r.solution.atoms.size(), 1u);
    EXPECT_EQ(r.solution.atoms[0].index(), 1u);
    EXPECT_NEAR(r.solution.atoms[0].coeff, 1.0, 1e-12);
  }
}

TEST(LinfSubdiff, ExtremePoints) {
  auto sites = [](const std::vector<SignedAtom>& v) {
    std::vector<std::pair<std::size_t, int>> out;
    for (const auto& a : v) out.emplace_back(a.site, a.sign);
    return out;
  };
  using P = std::vector<std::pair<std::size_t, int>>;
  EXPECT_EQ(sites(linf_subdiff_extreme_points(SequenceFunctional::Unit(1), 10)), (P{{1, 1}}));
  EXPECT_EQ(sites(linf_subdiff_extreme_points(SequenceFunctional::Finite({1.0, -1.0, 0.5}), 10)),
            (P{{1, 1}, {2, -1}}));
  const auto nu = SequenceFunctional::ScaledSum(
      {{-0.5, SequenceFunctional::Harmonic()}, {1.5, SequenceFunctional::Geometric(-0.5)}});
  EXPECT_NEAR(nu.Eval(3), 5.0 / 24.0, 1e-15);
  EXPECT_EQ(sites(linf_subdiff_extreme_points(nu, 256)), (P{{1, 1}, {2, -1}}));
}

class RandomL1 : public ::testing::TestWithParam<int> {};

TEST_P(RandomL1, DualityRankNormingAndHomogeneity) {
  std::mt19937 rng(static_cast<unsigned>(1000 + GetParam()));
  for (int trial = 0; trial < 25; ++trial) {
    const SeqProblem p = testutil::random_seq_problem(rng);
    const MniResult r = mni_solve_l1_detailed(p);
    const double ymax = p.y.cwiseAbs().maxCoeff();
    EXPECT_NEAR(r.solution.norm, r.certificate.value, 1e-8);
    EXPECT_LE(r.solution.residual, 1e-8 * (1.0 + ymax));
    EXPECT_LE(static_cast<int>(r.solution.atoms.size()), r.matrix.rank);
    EXPECT_LE(static_cast<std::size_t>(r.matrix.rank), std::min(p.size(), r.certificate.attain.size()));
    EXPECT_NO_THROW(r.solution.CheckInvariants(1e-9, p.size()));

    const oracle::OracleReport pair =
        oracle::norming_check(r.certificate.nu_hat, r.certificate.truncation_used, r.solution, 1e-8);
    EXPECT_TRUE(*pair.agreement);

    for (const SignedAtom& a : linf_subdiff_extreme_points(r.certificate.nu_hat, r.certificate.truncation_used)) {
      EXPECT_TRUE(a.sign == 1 || a.sign == -1);
    }

    SeqProblem scaled = p;
    scaled.y *= 3.0;
    const SparseSolution s3 = mni_solve_l1(scaled);
    ASSERT_EQ(s3.atoms.size(), r.solution.atoms.size());
    for (std::size_t i = 0; i < s3.atoms.size(); ++i) {
      EXPECT_EQ(s3.atoms[i].site, r.solution.atoms[i].site);
      EXPECT_NEAR(s3.atoms[i].coeff, 3.0 * r.solution.atoms[i].coeff, 1e-8 * (1.0 + std::abs(s3.atoms[i].coeff)));
    }
  }
}

TEST_P(RandomL1, CertificateValidatesAlternativeVertices) {
  std::mt19937 rng(static_cast<unsigned>(5000 + GetParam()));
  std::uniform_real_distribution<double> pert(0.0, 1e-7);
  for (int trial = 0; trial < 10; ++trial) {
    const SeqProblem p = testutil::random_seq_problem(rng);
    const MniResult r = mni_solve_l1_detailed(p);
    const Matrix& L = r.matrix.values;
    const Eigen::Index m = L.cols();
    optim::LinearProgram lp;
    lp.objective = Vector(2 * m);
    for (Eigen::Index j = 0; j < 2 * m; ++j) lp.objective(j) = 1.0 + pert(rng);
    lp.A.resize(L.rows(), 2 * m);
    lp.A << L, -L;
    lp.b = p.y;
    lp.row_sense.assign(static_cast<std::size_t>(L.rows()), optim::RowSense::kEqual);
    const optim::VertexSolution s = optim::lp_solve(lp);
    ASSERT_EQ(s.status, optim::LpStatus::kOptimal);
    const Vector alpha = s.x.head(m) - s.x.tail(m);
    // Any optimal vertex pairs with the same certificate to give its l1 norm.
    EXPECT_NEAR(alpha.cwiseAbs().sum(), r.certificate.value, 1e-6);
    const Vector u = L.transpose() * r.certificate.c;
    EXPECT_NEAR(r.certificate.value * u.dot(alpha) / p.y.dot(r.certificate.c), alpha.cwiseAbs().sum(), 1e-6);
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, RandomL1, ::testing::Range(0, 8));
