#include <gtest/gtest.h>

#include <cmath>

#include "rkbs/measure_rkbs.hpp"
#include "rkbs/oracle.hpp"
#include "rkbs/seq_rkbs.hpp"

using namespace rkbs;
using namespace rkbs::oracle;

namespace {

Matrix mat(int r, int c, std::initializer_list<double> v) {
  Matrix m(r, c);
  auto it = v.begin();
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = *it++;
  return m;
}

SeqProblem worked_example() {
  SeqProblem p;
  p.functionals = {SequenceFunctional::Harmonic(), SequenceFunctional::Geometric(-0.5)};
  p.y = Vector::Ones(2);
  return p;
}

}  // namespace

TEST(VertexEnumerate, Examples) {
  const OracleReport a = vertex_enumerate_l1(mat(2, 2, {1, 0.5, 1, -0.5}), Vector::Ones(2));
  EXPECT_NEAR(a.value, 1.0, 1e-12);
  ASSERT_EQ(a.witnesses.size(), 1u);
  EXPECT_NEAR(a.witnesses[0](0), 1.0, 1e-12);
  EXPECT_NEAR(a.witnesses[0](1), 0.0, 1e-12);

  const OracleReport b = vertex_enumerate_l1(mat(2, 2, {1, 0.5, 0, 1}), Vector::Ones(2));
  EXPECT_NEAR(b.value, 1.5, 1e-12);
  EXPECT_NEAR(b.witnesses[0](0), 0.5, 1e-12);
  EXPECT_NEAR(b.witnesses[0](1), 1.0, 1e-12);

  const OracleReport c = vertex_enumerate_l1(mat(1, 1, {1}), Vector::Zero(1));
  EXPECT_EQ(c.value, 0.0);
}

TEST(VertexEnumerate, RefusesLargeInstances) {
  EXPECT_THROW(vertex_enumerate_l1(Matrix::Ones(2, 13), Vector::Ones(2)), OracleRefusal);
}

TEST(VertexEnumerate, Deterministic) {
  const Matrix L = mat(2, 4, {0.8, -0.3, 1.2, 0.1, -0.4, 0.9, 0.2, 1.1});
  const Vector y = (Vector(2) << 0.7, -0.2).finished();
  const OracleReport a = vertex_enumerate_l1(L, y);
  const OracleReport b = vertex_enumerate_l1(L, y);
  EXPECT_EQ(a.value, b.value);
  ASSERT_EQ(a.witnesses.size(), b.witnesses.size());
  for (std::size_t i = 0; i < a.witnesses.size(); ++i) EXPECT_EQ(a.witnesses[i], b.witnesses[i]);
}

TEST(GridSupremum, Examples) {
  const GaussProblem one = GaussProblem::Make({0.0}, 1.0, Vector::Ones(1));
  const OracleReport a = grid_supremum(Vector::Ones(1), one, 1e-3);
  EXPECT_NEAR(a.value, 1.0, 1e-12);
  ASSERT_FALSE(a.values.empty());
  EXPECT_NEAR(a.values[0], 0.0, 1e-3);

  const GaussProblem pair = GaussProblem::Make({-1.0, 1.0}, 1.0, Vector::Ones(2));
  const OracleReport b = grid_supremum(Vector::Ones(2), pair, 1e-4);
  EXPECT_NEAR(b.value, 2.0 * std::exp(-0.5), 1e-8);
  ASSERT_FALSE(b.values.empty());
  for (double t : b.values) EXPECT_NEAR(t, 0.0, 1e-3);

  const OracleReport c = grid_supremum((Vector(2) << 1.0, -1.0).finished(), pair, 1e-4);
  ASSERT_GE(c.values.size(), 2u);
  EXPECT_LT(c.values.front(), 0.0);
  EXPECT_GT(c.values.back(), 0.0);
  EXPECT_NEAR(c.values.front(), -c.values.back(), 2e-3);
}

TEST(GridSupremum, RefinedAttainmentWithinErrorBound) {
  const GaussProblem g = GaussProblem::Make({-1.3, 0.4, 1.9}, 0.9, Vector::Ones(3));
  const Vector c = (Vector(3) << 0.9, -0.6, 1.1).finished();
  for (double step : {1e-2, 1e-3}) {
    const OracleReport r = grid_supremum(c, g, step);
    double refined = 0.0;
    for (const Extremum& e : refined_local_maxima(c, g, g.grid_step())) refined = std::max(refined, std::abs(e.value));
    EXPECT_GE(refined, r.value - 1e-12);
    EXPECT_LE(refined - r.value, grid_error_bound(c, g.sigma, step));
  }
}

TEST(L2MinNorm, CoordinateConstraints) {
  SeqProblem p;
  p.functionals = {SequenceFunctional::Unit(1), SequenceFunctional::Unit(2)};
  p.y = (Vector(2) << 3.0, 4.0).finished();
  const OracleReport r = l2_min_norm(p, 100);
  EXPECT_NEAR(r.evaluator(1), 3.0, 1e-12);
  EXPECT_NEAR(r.evaluator(2), 4.0, 1e-12);
  EXPECT_EQ(r.evaluator(3), 0.0);
  EXPECT_NEAR(r.value, 5.0, 1e-12);
}

TEST(L2MinNorm, HarmonicScaling) {
  SeqProblem p;
  p.functionals = {SequenceFunctional::Harmonic()};
  p.y = Vector::Ones(1);
  const OracleReport r = l2_min_norm(p, 1u << 20);
  const double scale = 6.0 / (M_PI * M_PI);
  for (std::size_t k : {1u, 2u, 10u}) EXPECT_NEAR(r.evaluator(k), scale / static_cast<double>(k), 1e-6);
}

TEST(L2MinNorm, WorkedExampleGram) {
  const OracleReport r = l2_min_norm(worked_example(), 1u << 16);
  EXPECT_GT(r.value, 0.0);
  EXPECT_FALSE(r.notes.empty());
}

TEST(L2MinNorm, RefusesIllConditionedGram) {
  SeqProblem p;
  p.functionals = {SequenceFunctional::Finite({1.0, 1.0}), SequenceFunctional::Finite({1.0, 1.0 + 1e-14})};
  p.y = Vector::Ones(2);
  EXPECT_THROW(l2_min_norm(p, 10), OracleRefusal);
}

TEST(NormingCheck, WorkedExample) {
  const MniResult r = mni_solve_l1_detailed(worked_example());
  const OracleReport ok = norming_check(r.certificate.nu_hat, r.certificate.truncation_used, r.solution, 1e-8);
  EXPECT_TRUE(*ok.agreement);
}

TEST(NormingCheck, SignFlipFails) {
  SeqProblem p;
  p.functionals = {SequenceFunctional::Finite({1.0, 0.5}), SequenceFunctional::Finite({0.0, 1.0})};
  p.y = Vector::Ones(2);
  const MniResult r = mni_solve_l1_detailed(p);
  SparseSolution flipped = r.solution;
  flipped.atoms[0].coeff = -flipped.atoms[0].coeff;
  EXPECT_FALSE(*norming_check(r.certificate.nu_hat, r.certificate.truncation_used, flipped, 1e-8).agreement);
}

TEST(NormingCheck, GaussianPair) {
  const GaussProblem g = GaussProblem::Make({-1.0, 1.0}, 1.0, Vector::Ones(2));
  const MeasureResult r = mni_solve_measure_detailed(g);
  const Vector c = r.certificate.c;
  const OracleReport rep =
      norming_check([&](double t) { return gauss_eval(c, g, t); }, r.certificate.sup_norm, r.solution, 1e-6);
  EXPECT_TRUE(*rep.agreement);
}

TEST(Convexity, Examples) {
  const OracleReport a = solution_set_convexity_check(mat(1, 2, {1, 1}), Vector::Ones(1), 1e-9);
  EXPECT_TRUE(*a.agreement);
  EXPECT_NEAR(a.value, 1.0, 1e-12);
  EXPECT_TRUE(*solution_set_convexity_check(mat(2, 2, {1, 0.5, 1, -0.5}), Vector::Ones(2), 1e-9).agreement);
  EXPECT_TRUE(*solution_set_convexity_check(mat(1, 2, {1, -1}), Vector::Zero(1), 1e-9).agreement);
}

TEST(OracleReport, Compare) {
  OracleReport r;
  r.value = 1.0;
  EXPECT_TRUE(r.Compare(1.0 + 1e-10, 1e-9));
  EXPECT_TRUE(*r.agreement);
  EXPECT_FALSE(r.Compare(1.1, 1e-9));
  EXPECT_FALSE(*r.agreement);
}
