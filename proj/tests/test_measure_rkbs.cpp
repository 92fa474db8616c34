#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "rkbs/measure_rkbs.hpp"
#include "rkbs/oracle.hpp"

using namespace rkbs;

namespace {

GaussProblem make(std::vector<double> centers, std::vector<double> y, double sigma = 1.0) {
  Vector v(static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < y.size(); ++i) v(static_cast<Eigen::Index>(i)) = y[i];
  return GaussProblem::Make(std::move(centers), sigma, v);
}

}  // namespace

TEST(GaussEval, ClosedForms) {
  EXPECT_DOUBLE_EQ(gauss_eval(Vector::Ones(1), make({0.0}, {1.0}), 0.0), 1.0);
  EXPECT_NEAR(gauss_eval(Vector::Ones(2), make({-0.5, 0.5}, {1, 1}), 0.0), 2.0 * std::exp(-0.125), 1e-15);
  EXPECT_NEAR(gauss_eval((Vector(2) << 1.0, -1.0).finished(), make({-0.7, 0.7}, {1, 1}), 0.0), 0.0, 1e-15);
}

TEST(GaussEval, DerivativesMatchFiniteDifferences) {
  const GaussProblem g = make({-1.0, 0.3, 2.0}, {1, 1, 1}, 0.8);
  const Vector c = (Vector(3) << 0.7, -1.2, 0.4).finished();
  const double h = 1e-5;
  for (double x : {-2.0, -0.4, 0.0, 1.1, 2.5}) {
    EXPECT_NEAR(gauss_deriv(c, g, x), (gauss_eval(c, g, x + h) - gauss_eval(c, g, x - h)) / (2 * h), 1e-8);
    EXPECT_NEAR(gauss_deriv2(c, g, x), (gauss_deriv(c, g, x + h) - gauss_deriv(c, g, x - h)) / (2 * h), 1e-7);
  }
}

TEST(FindAttainmentPoints, Examples) {
  const auto single = find_attainment_points(Vector::Ones(1), make({0.0}, {1.0}));
  ASSERT_EQ(single.size(), 1u);
  EXPECT_NEAR(single[0], 0.0, 1e-9);

  const auto near = find_attainment_points(Vector::Ones(2), make({-0.5, 0.5}, {1, 1}));
  ASSERT_EQ(near.size(), 1u);
  EXPECT_NEAR(near[0], 0.0, 1e-9);

  const auto far = find_attainment_points(Vector::Ones(2), make({-2.0, 2.0}, {1, 1}));
  ASSERT_EQ(far.size(), 2u);
  EXPECT_NEAR(far[0], -far[1], 1e-9);
  EXPECT_NEAR(far[1], 2.0, 0.05);
}

TEST(KernelMatrix, Examples) {
  EXPECT_EQ(kernel_matrix(make({0.0}, {1.0}), {0.0}).values, Matrix::Ones(1, 1));
  const KernelMatrix k = kernel_matrix(make({-1.0, 1.0}, {1, 1}), {0.0});
  EXPECT_NEAR(k.values(0, 0), std::exp(-0.5), 1e-15);
  EXPECT_NEAR(k.values(1, 0), std::exp(-0.5), 1e-15);
  EXPECT_EQ(k.rank, 1);
  const KernelMatrix d = kernel_matrix(make({-2.0, 2.0}, {1, 1}), {-1.99, 1.99});
  EXPECT_EQ(d.rank, 2);
  EXPECT_GT(d.values(0, 0), 10 * d.values(0, 1));
  EXPECT_GT(d.values(1, 1), 10 * d.values(1, 0));
}

TEST(DualSolveSemiinfinite, SingleCenter) {
  const ContinuousDualCertificate c = dual_solve_semiinfinite(make({0.0}, {1.0}));
  EXPECT_NEAR(c.c(0), 1.0, 1e-9);
  EXPECT_NEAR(c.value, 1.0, 1e-9);
  ASSERT_EQ(c.attain_points.size(), 1u);
  EXPECT_NEAR(c.attain_points[0], 0.0, 1e-9);
}

TEST(DualSolveSemiinfinite, SymmetricPair) {
  const ContinuousDualCertificate c = dual_solve_semiinfinite(make({-1.0, 1.0}, {1, 1}));
  EXPECT_NEAR(c.value, std::exp(0.5), 1e-8);
  EXPECT_NEAR(c.c(0), c.c(1), 1e-8);
  ASSERT_EQ(c.attain_points.size(), 1u);
  EXPECT_NEAR(c.attain_points[0], 0.0, 1e-8);
  EXPECT_LE(c.exchange_iters, 100);
}

TEST(DualSolveSemiinfinite, SeparatedPair) {
  const ContinuousDualCertificate c = dual_solve_semiinfinite(make({-2.0, 2.0}, {1, 1}));
  EXPECT_EQ(c.attain_points.size(), 2u);
}

TEST(DualSolveSemiinfinite, RejectsZeroData) {
  EXPECT_THROW(dual_solve_semiinfinite(make({0.0, 1.0}, {0, 0})), DomainError);
}

TEST(MniSolveMeasure, SingleCenter) {
  const SparseMeasure m = mni_solve_measure(make({0.0}, {1.0}));
  ASSERT_EQ(m.atoms.size(), 1u);
  EXPECT_NEAR(m.atoms[0].site, 0.0, 1e-9);
  EXPECT_NEAR(m.atoms[0].coeff, 1.0, 1e-9);
  EXPECT_NEAR(m.tv_norm(), 1.0, 1e-9);
}

TEST(MniSolveMeasure, SymmetricPairHasOneAtomAtZero) {
  const GaussProblem g = make({-1.0, 1.0}, {1, 1});
  const SparseMeasure m = mni_solve_measure(g);
  ASSERT_EQ(m.atoms.size(), 1u);
  EXPECT_NEAR(m.atoms[0].site, 0.0, 1e-6);
  EXPECT_NEAR(m.atoms[0].coeff, std::exp(0.5), 1e-6);
  EXPECT_NEAR(m.Eval(g, -1.0), 1.0, 1e-6);
  EXPECT_NEAR(m.Eval(g, 1.0), 1.0, 1e-6);
}

TEST(MniSolveMeasure, SeparatedPairHasTwoEqualAtoms) {
  const SparseMeasure m = mni_solve_measure(make({-2.0, 2.0}, {1, 1}));
  ASSERT_EQ(m.atoms.size(), 2u);
  EXPECT_NEAR(m.atoms[0].coeff, m.atoms[1].coeff, 1e-6);
  EXPECT_NEAR(m.atoms[0].site, -m.atoms[1].site, 1e-6);
}

TEST(MeasureProperty, RandomInstances) {
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> loc(-3.0, 3.0);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  std::uniform_int_distribution<int> count(1, 4);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = count(rng);
    std::vector<double> centers;
    while (static_cast<int>(centers.size()) < n) {
      const double x = loc(rng);
      bool ok = true;
      for (double c : centers) ok = ok && std::abs(c - x) > 0.3;
      if (ok) centers.push_back(x);
    }
    std::sort(centers.begin(), centers.end());
    std::vector<double> y(static_cast<std::size_t>(n));
    for (double& v : y) v = val(rng);
    const GaussProblem g = make(centers, y);
    const MeasureResult r = mni_solve_measure_detailed(g);
    const ContinuousDualCertificate& cert = r.certificate;
    const SparseMeasure& m = r.solution;

    EXPECT_NEAR(m.tv_norm(), cert.value, 1e-6) << "trial " << trial;
    EXPECT_LE(m.residual, 1e-6 * (1.0 + g.y.cwiseAbs().maxCoeff()));
    EXPECT_LE(static_cast<int>(m.atoms.size()), r.matrix.rank);
    EXPECT_LE(static_cast<std::size_t>(r.matrix.rank), g.size());

    double s = 0.0;
    for (const Atom& a : m.atoms) s += std::abs(a.coeff);
    EXPECT_EQ(s, m.norm);

    double pairing = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) pairing += cert.c(static_cast<Eigen::Index>(j)) * m.Eval(g, g.centers[j]);
    EXPECT_NEAR(pairing, m.tv_norm(), 1e-6 * (1.0 + m.tv_norm()));

    for (const Atom& a : m.atoms) {
      EXPECT_EQ(a.coeff > 0, gauss_eval(cert.c, g, a.site) > 0);
    }

    const oracle::OracleReport grid = oracle::grid_supremum(cert.c, g, g.sigma * 1e-3);
    for (double t : cert.attain_points) {
      EXPECT_GE(std::abs(gauss_eval(cert.c, g, t)), grid.value - 1e-6);
      EXPECT_LE(g.sigma * std::abs(gauss_deriv(cert.c, g, t)), 1e-6);
    }
  }
}

TEST(MeasureProperty, AttainmentStableUnderGridRefinement) {
  GaussProblem g = make({-1.5, 0.2, 1.7}, {1.0, -0.4, 0.9});
  const ContinuousDualCertificate a = dual_solve_semiinfinite(g);
  g.options.grid_step = g.sigma / 100.0;
  const ContinuousDualCertificate b = dual_solve_semiinfinite(g);
  ASSERT_EQ(a.attain_points.size(), b.attain_points.size());
  for (std::size_t i = 0; i < a.attain_points.size(); ++i) {
    EXPECT_NEAR(a.attain_points[i], b.attain_points[i], 1e-6);
  }
}
