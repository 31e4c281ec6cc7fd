#pragma once

// Seeded random problem instances.

#include <Eigen/Dense>

#include <optional>
#include <random>

#include "auxfn/model.hpp"

namespace auxfn {

using Rng = std::mt19937_64;

inline Eigen::VectorXd random_uniform(Rng& rng, Eigen::Index n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

inline Eigen::MatrixXd random_uniform(Rng& rng, Eigen::Index rows, Eigen::Index cols,
                                      double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = u(rng);
  return m;
}

/// Entries U(0.1, 1), columns scaled to sum to one.
inline ColumnStochastic random_column_stochastic(Rng& rng, Eigen::Index rows,
                                                 Eigen::Index cols) {
  Eigen::MatrixXd m = random_uniform(rng, rows, cols, 0.1, 1.0);
  const Eigen::VectorXd x = Eigen::VectorXd::Ones(cols);
  return normalize_columns(NonnegMatrix(std::move(m)), x).matrix;
}

struct KlInstance {
  ColumnStochastic matrix;
  Eigen::VectorXd data;
  Eigen::VectorXd start;
  std::optional<Eigen::VectorXd> truth;  // set when data = P truth

  KlProblem problem() const { return KlProblem(matrix, data, start); }
};

/// Consistent: y = P x_true with x_true ~ U(0.5, 2). Otherwise y ~ U(0.5, 3).
/// Start is all ones.
inline KlInstance random_kl_instance(Rng& rng, Eigen::Index rows, Eigen::Index cols,
                                     bool consistent) {
  ColumnStochastic p = random_column_stochastic(rng, rows, cols);
  KlInstance inst{p, Eigen::VectorXd(), Eigen::VectorXd::Ones(cols), std::nullopt};
  if (consistent) {
    Eigen::VectorXd truth = random_uniform(rng, cols, 0.5, 2.0);
    inst.data = p.apply(truth);
    inst.truth = std::move(truth);
  } else {
    inst.data = random_uniform(rng, rows, 0.5, 3.0);
  }
  return inst;
}

struct EuclidInstance {
  RealMatrix matrix;
  Eigen::VectorXd data;
  Eigen::VectorXd start;
  std::optional<Eigen::VectorXd> truth;

  EuclidProblem problem() const { return EuclidProblem(matrix, data, start); }
};

/// A ~ U(-1, 1); b = A x_true (x_true ~ U(-1, 1)) when consistent, else
/// b ~ U(-1, 1). Start is zero.
inline EuclidInstance random_euclid_instance(Rng& rng, Eigen::Index rows, Eigen::Index cols,
                                             bool consistent) {
  RealMatrix a(random_uniform(rng, rows, cols, -1.0, 1.0));
  EuclidInstance inst{a, Eigen::VectorXd(), Eigen::VectorXd::Zero(cols), std::nullopt};
  if (consistent) {
    Eigen::VectorXd truth = random_uniform(rng, cols, -1.0, 1.0);
    inst.data = a.apply(truth);
    inst.truth = std::move(truth);
  } else {
    inst.data = random_uniform(rng, rows, -1.0, 1.0);
  }
  return inst;
}

}  // namespace auxfn
