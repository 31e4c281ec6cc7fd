#include <gtest/gtest.h>

#include <cmath>

#include "auxfn/random_instances.hpp"
#include "auxfn/solvers.hpp"

using namespace auxfn;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) out[i++] = d;
  return out;
}

MatrixXd row(std::initializer_list<double> v) { return vec(v).transpose(); }

ColumnStochastic half_half() {
  return ColumnStochastic::from_normalized(MatrixXd::Constant(2, 1, 0.5));
}

double max_abs_diff(const VectorXd& a, const VectorXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

StoppingRule fixed_iters(std::size_t n) {
  StoppingRule r;
  r.max_iters = n;
  r.step_tol = 0.0;
  return r;
}

}  // namespace

TEST(PowerMethod, Examples) {
  EXPECT_NEAR(power_method_rho(MatrixXd::Identity(3, 3)).value, 1.0, 1e-12);
  MatrixXd d = MatrixXd::Zero(2, 2);
  d(0, 0) = 1;
  d(1, 1) = 4;
  EXPECT_NEAR(power_method_rho(d).value, 4.0, 1e-6);
  const MatrixXd a = row({1, 1});
  EXPECT_NEAR(power_method_rho(a.transpose() * a).value, 2.0, 1e-6);
  EXPECT_TRUE(power_method_rho(MatrixXd::Zero(2, 2)).approximate);
  EXPECT_THROW(power_method_rho(MatrixXd(2, 3)), DimensionError);
}

TEST(Landweber, Examples) {
  const RealMatrix one(MatrixXd::Constant(1, 1, 1.0));
  EXPECT_EQ(landweber_step(one, vec({2}), vec({5}), 1.0)[0], 2.0);
  const RealMatrix a(row({1, 1}));
  EXPECT_EQ(landweber_step(a, vec({2}), vec({0, 0}), 0.5), vec({1, 1}));
  EXPECT_EQ(landweber_step(a, vec({2}), vec({0.5, 1.5}), 0.5), vec({0.5, 1.5}));
}

TEST(Landweber, GammaBound) {
  const RealMatrix a(row({1, 1}));
  EXPECT_THROW(landweber_step(a, vec({2}), vec({0, 0}), 1.0), ConfigError);
  EXPECT_THROW(landweber_step(a, vec({2}), vec({0, 0}), 0.0), ConfigError);
  try {
    validate_landweber_gamma(a, 3.0);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("2/rho(A^T A)"), std::string::npos);
  }
  EXPECT_NEAR(landweber_gamma_bound(a), 2.0 / (1.01 * 2.0), 1e-9);
}

TEST(GradientDescent, Examples) {
  auto zero = [](const VectorXd& x) { return VectorXd::Zero(x.size()).eval(); };
  EXPECT_EQ(gradient_descent_step(zero, vec({1, 2}), 0.3), vec({1, 2}));
  auto half_sq = [](const VectorXd& x) { return x; };
  EXPECT_EQ(gradient_descent_step(half_sq, vec({3}), 1.0), vec({0}));
}

TEST(GradientDescent, MatchesLandweberWithHalvedStep) {
  Rng rng(41);
  const EuclidInstance inst = random_euclid_instance(rng, 5, 3, false);
  const RealMatrix& a = inst.matrix;
  const double gamma = 0.5 * landweber_gamma_bound(a);
  auto grad = [&](const VectorXd& x) {
    return VectorXd(2.0 * a.values().transpose() * (a.apply(x) - inst.data));
  };
  VectorXd u = inst.start, v = inst.start;
  for (int k = 0; k < 50; ++k) {
    u = landweber_step(a, inst.data, u, gamma);
    v = gradient_descent_step(grad, v, gamma / 2.0);
    EXPECT_LE(max_abs_diff(u, v), 1e-14 * (1.0 + u.cwiseAbs().maxCoeff()));
  }
}

TEST(QuadraticMm, Examples) {
  MatrixXd b(2, 2);
  b << 3, 1, 1, 2;
  const VectorXd c = vec({1, -1});
  auto grad = [&](const VectorXd& x) { return VectorXd(b * x - c); };
  auto solve = [&](const VectorXd& v) { return VectorXd(b.ldlt().solve(v)); };
  const VectorXd x1 = quadratic_mm_step(grad, solve, vec({5, 5}));
  EXPECT_LE(max_abs_diff(x1, b.ldlt().solve(c)), 1e-14);
  EXPECT_LE(max_abs_diff(quadratic_mm_step(grad, solve, x1), x1), 1e-14);

  const double gamma = 0.1;
  auto scaled = [&](const VectorXd& v) { return VectorXd(gamma * v); };
  EXPECT_LE(max_abs_diff(quadratic_mm_step(grad, scaled, vec({1, 2})),
                         gradient_descent_step(grad, vec({1, 2}), gamma)),
            1e-15);
  auto broken = [](const VectorXd&) { return vec({std::nan("")}); };
  EXPECT_THROW(quadratic_mm_step(grad, broken, vec({1, 2})), DomainError);
}

TEST(EuclidL, Examples) {
  const RealMatrix a(row({1, 1}));
  EXPECT_EQ(euclid_L_step(a, vec({2}), vec({0, 0})), vec({1, 1}));
  const RealMatrix b(row({1, 2}));
  const VectorXd x1 = euclid_L_step(b, vec({3}), vec({0, 0}));
  EXPECT_EQ(x1, vec({1.5, 0.75}));
  EXPECT_EQ(euclid_L_step(b, vec({3}), x1), x1);
}

TEST(LandweberEquivalence, Examples) {
  const RealMatrix a(row({1, 1}));
  const LandweberRescaling t = landweber_equiv_transform(a);
  EXPECT_LE(max_abs_diff(t.sqrt_beta.cwiseAbs2(), vec({0.5, 0.5})), 1e-15);
  const MatrixXd btb = t.matrix.values().transpose() * t.matrix.values();
  EXPECT_NEAR(btb.trace(), 1.0, 1e-12);
  const VectorXd x = vec({0.3, -1.7});
  EXPECT_LE(max_abs_diff(t.back(t.forward(x)), x), 1e-14);

  VectorXd xl = vec({0, 0});
  VectorXd z = t.forward(xl);
  for (int k = 0; k < 50; ++k) {
    xl = euclid_L_step(a, vec({2}), xl);
    z = landweber_step(t.matrix, vec({2}), z, 1.0);
    EXPECT_LE(max_abs_diff(t.back(z), xl), 1e-10);
  }
}

TEST(Multiplicative, OneColumnExamples) {
  const ColumnStochastic p = half_half();
  const VectorXd y = vec({1, 3});
  const VectorXd x = vec({1});
  EXPECT_NEAR(smart_step(p, y, x)[0], 2.0 * std::sqrt(3.0), 1e-14);
  EXPECT_NEAR(emml_step(p, y, x)[0], 4.0, 1e-14);
  EXPECT_NEAR(hellinger_T_step(p, y, x)[0], 2.0 + std::sqrt(3.0), 1e-14);
  EXPECT_NEAR(pearson_R_step(p, y, x)[0], 2.0 * std::sqrt(5.0), 1e-14);
  const ColumnStochastic one = ColumnStochastic::from_normalized(MatrixXd::Constant(1, 1, 1.0));
  EXPECT_NEAR(smart_step(one, vec({2}), vec({1}))[0], 2.0, 1e-15);
}

TEST(Multiplicative, MassExamples) {
  const ColumnStochastic p = half_half();
  const VectorXd y = vec({1, 3});
  EXPECT_NEAR(emml_step(p, y, vec({1})).sum(), 4.0, 1e-12);
  EXPECT_LE(hellinger_T_step(p, y, vec({1})).sum(), 4.0);
  EXPECT_GE(pearson_R_step(p, y, vec({1})).sum(), 4.0);
}

TEST(Multiplicative, FixedPointsOnConsistentData) {
  Rng rng(42);
  for (int s = 0; s < 100; ++s) {
    const KlInstance inst = random_kl_instance(rng, 5, 3, true);
    const VectorXd& x = *inst.truth;
    for (Family f : {Family::smart, Family::emml, Family::hellinger, Family::pearson}) {
      EXPECT_LE(max_abs_diff(kl_family_step(f, inst.matrix, inst.data, x), x), 1e-12)
          << to_string(f);
    }
  }
}

TEST(Multiplicative, SingularityNamesRow) {
  MatrixXd m(2, 2);
  m << 1, 0, 0, 1;
  const ColumnStochastic p = ColumnStochastic::from_normalized(m);
  try {
    smart_step(p, vec({1, 1}), vec({1, 0}));
    FAIL();
  } catch (const SingularityError& e) {
    EXPECT_EQ(e.row(), 1);
  }
  EXPECT_THROW(emml_step(p, vec({1, 1}), vec({0, 1})), SingularityError);
}

TEST(Multiplicative, DescentPositivityAndMassRandom) {
  Rng rng(43);
  std::uniform_int_distribution<int> dim_i(1, 6), dim_j(1, 4);
  for (int s = 0; s < 1000; ++s) {
    const int I = dim_i(rng), J = dim_j(rng);
    const KlInstance inst = random_kl_instance(rng, I, J, s % 3 == 0);
    const VectorXd x = random_uniform(rng, J, 0.1, 3.0);
    const double mass = inst.data.sum();
    for (Family f : {Family::smart, Family::emml, Family::hellinger, Family::pearson}) {
      const VectorXd next = kl_family_step(f, inst.matrix, inst.data, x);
      EXPECT_GT(next.minCoeff(), 0.0);
      const double f0 = kl_family_objective(f, inst.matrix, inst.data, x);
      const double f1 = kl_family_objective(f, inst.matrix, inst.data, next);
      EXPECT_LE(f1, f0 + 1e-12 * (1.0 + f0)) << to_string(f);
    }
    EXPECT_LE(smart_step(inst.matrix, inst.data, x).sum(), mass + 1e-10);
    EXPECT_NEAR(emml_step(inst.matrix, inst.data, x).sum(), mass, 1e-12 * (1.0 + mass));
  }
}

TEST(Landweber, ScaleCovariance) {
  Rng rng(44);
  const EuclidInstance inst = random_euclid_instance(rng, 4, 3, false);
  const double alpha = 3.7;
  const VectorXd x0 = random_uniform(rng, 3, -1.0, 1.0);
  const double gamma = 0.9 * landweber_gamma_bound(inst.matrix);
  VectorXd u = x0, v = alpha * x0, lu = x0, lv = alpha * x0;
  for (int k = 0; k < 50; ++k) {
    u = landweber_step(inst.matrix, inst.data, u, gamma);
    v = landweber_step(inst.matrix, alpha * inst.data, v, gamma);
    lu = euclid_L_step(inst.matrix, inst.data, lu);
    lv = euclid_L_step(inst.matrix, alpha * inst.data, lv);
    EXPECT_LE(max_abs_diff(alpha * u, v), 1e-12 * (1.0 + v.cwiseAbs().maxCoeff()));
    EXPECT_LE(max_abs_diff(alpha * lu, lv), 1e-12 * (1.0 + lv.cwiseAbs().maxCoeff()));
  }
}

TEST(HellingerProx, MinimizesProximalObjective) {
  Rng rng(45);
  const KlInstance inst = random_kl_instance(rng, 4, 3, false);
  const VectorXd z = random_uniform(rng, 3, 0.5, 2.0);
  const VectorXd w = hellinger_prox_step(inst.matrix, inst.data, z);
  auto obj = [&](const VectorXd& x) {
    return hellinger(inst.data, inst.matrix.apply(x)) + hellinger(x, z);
  };
  const double best = obj(w);
  for (int s = 0; s < 200; ++s) {
    const VectorXd other = w.cwiseProduct(random_uniform(rng, 3, 0.9, 1.1));
    EXPECT_GE(obj(other), best - 1e-14);
  }
}

TEST(Drivers, SolveKlOneColumnOptima) {
  const NonnegMatrix p(MatrixXd::Constant(2, 1, 0.5));
  const KlProblem problem(p, vec({1, 3}), vec({1}));
  SolverConfig cfg;
  EXPECT_NEAR(solve_kl(Family::smart, problem, cfg).x[0], 2.0 * std::sqrt(3.0), 1e-8);
  EXPECT_NEAR(solve_kl(Family::emml, problem, cfg).x[0], 4.0, 1e-8);
  EXPECT_NEAR(solve_kl(Family::hellinger, problem, cfg).x[0], 2.0 + std::sqrt(3.0), 1e-8);
  EXPECT_NEAR(solve_kl(Family::pearson, problem, cfg).x[0], 2.0 * std::sqrt(5.0), 1e-8);
}

TEST(Drivers, OriginalCoordinatesAfterNormalization) {
  // Unnormalized column (sum 2): the solution in original coordinates is half
  // the normalized one.
  const NonnegMatrix p(MatrixXd::Constant(2, 1, 1.0));
  const KlProblem problem(p, vec({1, 3}), vec({1}));
  const SolveResult r = solve_kl(Family::emml, problem);
  EXPECT_NEAR(r.x[0], 2.0, 1e-10);
  ASSERT_TRUE(r.normalization.has_value());
  EXPECT_NEAR(r.trace.last().x[0], 4.0, 1e-10);
}

TEST(Drivers, PositivityPolicy) {
  MatrixXd m(2, 2);
  m << 1, 0, 1, 1;
  const KlProblem problem{NonnegMatrix(m), vec({1, 2}), vec({1, 1})};
  SolverConfig warn;
  warn.rule = fixed_iters(5);
  EXPECT_EQ(solve_kl(Family::smart, problem, warn).warnings.size(), 1u);
  SolverConfig strict = warn;
  strict.positivity = PositivityPolicy::require;
  EXPECT_THROW(solve_kl(Family::smart, problem, strict), ConfigError);
}

TEST(Drivers, TraceSlacksPerFamily) {
  Rng rng(46);
  const KlInstance inst = random_kl_instance(rng, 6, 4, false);
  SolverConfig cfg;
  cfg.rule = fixed_iters(20);
  EXPECT_EQ(solve_kl(Family::smart, inst.problem(), cfg).trace.slack_names(),
            (std::vector<std::string>{"first_monotonicity", "mass_bound"}));
  EXPECT_EQ(solve_kl(Family::emml, inst.problem(), cfg).trace.slack_names(),
            (std::vector<std::string>{"first_monotonicity", "mass_identity"}));
  EXPECT_EQ(solve_kl(Family::pearson, inst.problem(), cfg).trace.slack_names(),
            (std::vector<std::string>{"descent", "mass_bound"}));
  for (Family f : {Family::smart, Family::emml, Family::hellinger, Family::pearson}) {
    const SolveResult r = solve_kl(f, inst.problem(), cfg);
    for (const auto& rec : r.trace.steps()) {
      for (const auto& [name, v] : rec.slacks) {
        EXPECT_GE(v, -1e-10 * (1.0 + std::abs(rec.f))) << to_string(f) << " " << name;
      }
    }
  }
}

TEST(Drivers, LandweberDefaultsAndValidation) {
  const EuclidProblem problem(RealMatrix(row({1, 1})), vec({2}), vec({0, 0}));
  const SolveResult r = solve_landweber(problem);
  ASSERT_TRUE(r.gamma.has_value());
  EXPECT_NEAR(*r.gamma, 0.5, 1e-9);
  EXPECT_LE(max_abs_diff(r.x, vec({1, 1})), 1e-9);
  SolverConfig bad;
  bad.gamma = 1.5;
  EXPECT_THROW(solve_landweber(problem, bad), ConfigError);
}

TEST(Drivers, EuclidFirstMonotonicitySlack) {
  Rng rng(47);
  const EuclidInstance inst = random_euclid_instance(rng, 6, 4, false);
  SolverConfig cfg;
  cfg.rule = fixed_iters(100);
  const SolveResult r = solve_euclid(inst.problem(), cfg);
  for (const auto& rec : r.trace.steps()) {
    EXPECT_GE(rec.slacks.at("first_monotonicity"), -1e-10 * (1.0 + std::abs(rec.f)));
  }
}

TEST(Family, Strings) {
  for (Family f : {Family::euclid, Family::landweber, Family::smart, Family::emml,
                   Family::hellinger, Family::pearson}) {
    EXPECT_EQ(family_from_string(to_string(f)), f);
  }
  EXPECT_THROW(family_from_string("nope"), std::invalid_argument);
}
