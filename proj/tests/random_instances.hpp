#pragma once

#include <algorithm>
#include <random>
#include <vector>

#include "rkbs/core.hpp"
#include "rkbs/seq_rkbs.hpp"

namespace rkbs::testutil {

// Seeded random sequence problems: n <= max_n functionals drawn from finite,
// harmonic (at most one) and geometric kinds with distinct ratios.
inline SeqProblem random_seq_problem(std::mt19937& rng, int max_n = 4) {
  const std::vector<double> ratios = {-0.7, -0.5, -0.3, 0.2, 0.4, 0.6, 0.8};
  std::uniform_int_distribution<int> n_dist(1, max_n);
  std::uniform_int_distribution<int> kind_dist(0, 2);
  std::uniform_int_distribution<int> len_dist(2, 6);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (;;) {
    SeqProblem p;
    const int n = n_dist(rng);
    bool harmonic = false;
    std::vector<double> pool = ratios;
    std::shuffle(pool.begin(), pool.end(), rng);
    for (int i = 0; i < n; ++i) {
      int kind = kind_dist(rng);
      if (kind == 1 && harmonic) kind = 2;
      if (kind == 0) {
        std::vector<double> v(static_cast<std::size_t>(len_dist(rng)));
        for (double& x : v) x = std::round(unif(rng) * 8.0) / 8.0;
        p.functionals.push_back(SequenceFunctional::Finite(v));
      } else if (kind == 1) {
        harmonic = true;
        p.functionals.push_back(SequenceFunctional::Harmonic());
      } else {
        p.functionals.push_back(SequenceFunctional::Geometric(pool.back()));
        pool.pop_back();
      }
    }
    p.y.resize(n);
    for (int i = 0; i < n; ++i) p.y(i) = unif(rng);
    if (p.y.cwiseAbs().maxCoeff() < 1e-3) continue;
    const Matrix block = measurement_block(p.functionals, 64);
    Eigen::JacobiSVD<Matrix> svd(block);
    const Vector s = svd.singularValues();
    if (s(s.size() - 1) < 1e-3 * s(0)) continue;
    return p;
  }
}

}  // namespace rkbs::testutil
