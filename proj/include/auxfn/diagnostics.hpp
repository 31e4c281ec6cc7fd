#pragma once

// Numerical verification of the identities, inequalities and limit
// characterizations satisfied by the solvers, independent minimizers for
// small instances, and probes of relations that are only conjectured.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "auxfn/check_report.hpp"
#include "auxfn/couplings.hpp"
#include "auxfn/distances.hpp"
#include "auxfn/framework.hpp"
#include "auxfn/model.hpp"
#include "auxfn/solvers.hpp"

namespace auxfn {

inline constexpr double kIdentityTolerance = 1e-10;
inline constexpr double kSecondMonotonicityTolerance = 1e-8;
inline constexpr double kLimitGridTolerance = 1e-4;
inline constexpr double kLimitProjectionTolerance = 1e-8;

// ---------------------------------------------------------------------------
// Pythagorean identities.

struct Residual {
  double lhs = 0.0;
  double rhs = 0.0;

  double absolute() const { return std::abs(lhs - rhs); }
  double relative() const {
    return absolute() / std::max({1.0, std::abs(lhs), std::abs(rhs)});
  }
};

struct ResidualPair {
  Residual first;
  Residual second;

  double worst() const { return std::max(first.relative(), second.relative()); }
};

/// KL(q(x), r(z)) = KL(q(x), r(x)) + KL(x, z) - KL(Px, Pz)
/// KL(q(x), r(z)) = KL(q(Sz), r(z)) + KL(x, Sz)
inline ResidualPair pythagorean_smart(const ColumnStochastic& p,
                                      const Eigen::VectorXd& y,
                                      const Eigen::VectorXd& x,
                                      const Eigen::VectorXd& z) {
  const CoupleArray rz = kl_r_array(p, y, z);
  const CoupleArray qx = kl_q_array(p, x);
  const double lhs = kl_vec(qx, rz);
  const Eigen::VectorXd sz = smart_step(p, y, z);
  ResidualPair out;
  out.first = {lhs, kl_vec(qx, kl_r_array(p, y, x)) + kl_vec(x, z) -
                        kl_vec(p.apply(x), p.apply(z))};
  out.second = {lhs, kl_vec(kl_q_array(p, sz), rz) + kl_vec(x, sz)};
  return out;
}

/// KL(r(x), q(z)) = KL(r(z), q(z)) + KL(r(x), r(z))
/// KL(r(x), q(z)) = KL(r(x), q(Mx)) + KL(Mx, z)
inline ResidualPair pythagorean_emml(const ColumnStochastic& p,
                                     const Eigen::VectorXd& y,
                                     const Eigen::VectorXd& x,
                                     const Eigen::VectorXd& z) {
  const CoupleArray rx = kl_r_array(p, y, x);
  const CoupleArray rz = kl_r_array(p, y, z);
  const CoupleArray qz = kl_q_array(p, z);
  const double lhs = kl_vec(rx, qz);
  const Eigen::VectorXd mx = emml_step(p, y, x);
  ResidualPair out;
  out.first = {lhs, kl_vec(rz, qz) + kl_vec(rx, rz)};
  out.second = {lhs, kl_vec(rx, kl_q_array(p, mx)) + kl_vec(mx, z)};
  return out;
}

/// E(r(z), q(x)) = E(r(x), q(x)) + E(r(z), r(x))
/// E(r(x), q(z)) = E(r(x), q(Lx)) + sum_j c_j (Lx_j - z_j)^2
inline ResidualPair pythagorean_euclid(const RealMatrix& a,
                                       const Eigen::VectorXd& b,
                                       const Eigen::VectorXd& x,
                                       const Eigen::VectorXd& z) {
  const CoupleArray rx = euclid_r_array(a, b, x);
  const CoupleArray rz = euclid_r_array(a, b, z);
  const CoupleArray qx = euclid_q_array(a, x);
  const Eigen::VectorXd lx = euclid_L_step(a, b, x);
  ResidualPair out;
  out.first = {squared_distance(rz, qx),
               squared_distance(rx, qx) + squared_distance(rz, rx)};
  out.second = {squared_distance(rx, euclid_q_array(a, z)),
                squared_distance(rx, euclid_q_array(a, lx)) +
                    weighted_sq(lx, z, a.col_sq_sums())};
  return out;
}

/// H(r(x), q(z)) = H(r(x), q(Tx)) + H(Tx, z)
inline Residual pythagorean_hellinger(const ColumnStochastic& p,
                                      const Eigen::VectorXd& y,
                                      const Eigen::VectorXd& x,
                                      const Eigen::VectorXd& z) {
  const CoupleArray rx = kl_r_array(p, y, x);
  const Eigen::VectorXd tx = hellinger_T_step(p, y, x);
  return {hellinger(rx, kl_q_array(p, z)),
          hellinger(rx, kl_q_array(p, tx)) + hellinger(tx, z)};
}

/// first:  phi^2(r(z), q(x)) = phi^2(r(z), q(Rz)) + phi^2(Rz, x)
/// second: phi^2(Rz, x) = phi^2(q(Rz), q(x))
inline ResidualPair pythagorean_pearson(const ColumnStochastic& p,
                                        const Eigen::VectorXd& y,
                                        const Eigen::VectorXd& z,
                                        const Eigen::VectorXd& x) {
  const CoupleArray rz = kl_r_array(p, y, z);
  const Eigen::VectorXd rzv = pearson_R_step(p, y, z);
  const CoupleArray qx = kl_q_array(p, x);
  const double tail = pearson(rzv, x);
  ResidualPair out;
  out.first = {pearson(rz, qx), pearson(rz, kl_q_array(p, rzv)) + tail};
  out.second = {tail, pearson(kl_q_array(p, rzv), qx)};
  return out;
}

// ---------------------------------------------------------------------------
// Monotonicity.

namespace detail {

inline double scaled(double slack, double f) { return slack / (1.0 + std::abs(f)); }

inline void require_steps(const IterationTrace& trace, const char* what) {
  if (trace.iterations() < 1) {
    throw std::invalid_argument(std::string(what) + ": trace needs at least 2 iterates");
  }
}

}  // namespace detail

/// f(x^k) - f(x^{k+1}) >= D(x^k, x^{k+1}). D is recomputed from the iterates
/// for the KL families; for euclid the recorded step distance is used (use
/// the RealMatrix overload to recompute it).
inline CheckReport first_monotonicity(Family family, const IterationTrace& trace,
                                      double tol = kInequalityTolerance) {
  detail::require_steps(trace, "first_monotonicity");
  if (family != Family::smart && family != Family::emml &&
      family != Family::hellinger && family != Family::euclid) {
    throw std::invalid_argument(
        "first_monotonicity: family must be smart, emml, euclid or hellinger");
  }
  SlackAccumulator acc;
  for (std::size_t k = 0; k < trace.iterations(); ++k) {
    const double d = family == Family::euclid
                         ? trace.at(k + 1).step_distance
                         : kl_family_step_distance(family, trace.x(k), trace.x(k + 1));
    acc.add(detail::scaled(trace.f(k) - trace.f(k + 1) - d, trace.f(k)));
  }
  return acc.finish("first_monotonicity", tol);
}

inline CheckReport first_monotonicity(const RealMatrix& a, const IterationTrace& trace,
                                      double tol = kInequalityTolerance) {
  detail::require_steps(trace, "first_monotonicity");
  SlackAccumulator acc;
  for (std::size_t k = 0; k < trace.iterations(); ++k) {
    const double d = euclid_step_distance(a, trace.x(k), trace.x(k + 1));
    acc.add(detail::scaled(trace.f(k) - trace.f(k + 1) - d, trace.f(k)));
  }
  return acc.finish("first_monotonicity", tol);
}

/// KL(x_hat, x^k) - KL(x_hat, x^{k+1}) >= rhs_k with
///   smart:     f(x^{k+1}) - f(x_hat)   (plus the exact decomposition residual)
///   emml:      f(x^k) - f(x^{k+1})
///   hellinger: 2 (f(x^{k+1}) - f(x_hat))
/// `p` and `x_hat` must be in the same coordinates as the trace.
inline CheckReport second_monotonicity(Family family, const ColumnStochastic& p,
                                       const Eigen::VectorXd& y,
                                       const Eigen::VectorXd& x_hat,
                                       const IterationTrace& trace,
                                       double tol = kSecondMonotonicityTolerance) {
  detail::require_steps(trace, "second_monotonicity");
  if (family != Family::smart && family != Family::emml && family != Family::hellinger) {
    throw std::invalid_argument(
        "second_monotonicity: family must be smart, emml or hellinger (or pass a RealMatrix)");
  }
  const double f_hat = kl_family_objective(family, p, y, x_hat);
  const Eigen::VectorXd px_hat = p.apply(x_hat);
  SlackAccumulator acc;
  for (std::size_t k = 0; k < trace.iterations(); ++k) {
    const Eigen::VectorXd& xk = trace.x(k);
    const Eigen::VectorXd& xk1 = trace.x(k + 1);
    const double drop = kl_vec(x_hat, xk) - kl_vec(x_hat, xk1);
    const double fk = trace.f(k);
    const double fk1 = trace.f(k + 1);
    switch (family) {
      case Family::smart: {
        acc.add("inequality", detail::scaled(drop - (fk1 - f_hat), fk));
        const Eigen::VectorXd pxk = p.apply(xk);
        const double rhs = fk1 - f_hat + kl_vec(px_hat, pxk) + kl_vec(xk1, xk) -
                           kl_vec(p.apply(xk1), pxk);
        acc.add("identity", -Residual{drop, rhs}.relative());
        break;
      }
      case Family::emml:
        acc.add("inequality", detail::scaled(drop - (fk - fk1), fk));
        break;
      default:
        acc.add("inequality", detail::scaled(drop - 2.0 * (fk1 - f_hat), fk));
        break;
    }
  }
  return acc.finish("second_monotonicity", tol);
}

/// Least squares: g_k(x_hat) - g_{k+1}(x_hat) >= f(x^k) - f(x_hat) with
/// g_k(x) = J sum_j c_j (x^{k-1}_j - x_j)^2 - ||A x^{k-1} - A x||^2, k >= 1.
inline CheckReport second_monotonicity(const RealMatrix& a, const Eigen::VectorXd& b,
                                       const Eigen::VectorXd& x_hat,
                                       const IterationTrace& trace,
                                       double tol = kSecondMonotonicityTolerance) {
  if (trace.iterations() < 2) {
    throw std::invalid_argument("second_monotonicity: trace needs at least 3 iterates");
  }
  const double f_hat = euclid_objective(a, b, x_hat);
  auto g = [&](std::size_t k) {
    const Eigen::VectorXd& prev = trace.x(k - 1);
    return euclid_step_distance(a, prev, x_hat) -
           (a.apply(prev) - a.apply(x_hat)).squaredNorm();
  };
  SlackAccumulator acc;
  for (std::size_t k = 1; k < trace.iterations(); ++k) {
    const double fk = trace.f(k);
    acc.add(detail::scaled(g(k) - g(k + 1) - (fk - f_hat), fk));
  }
  return acc.finish("second_monotonicity", tol);
}

enum class ObjectiveIndex { newer, older };

/// phi''(1) (KL(x_hat, x^k) - KL(x_hat, x^{k+1})) >= f(x^j) - f(x_hat), with
/// j = k+1 (`newer`, the form that holds for proximal sequences) or j = k
/// (`older`).
inline CheckReport at_induced_prox_check(const PhiSpec& spec, const IterationTrace& trace,
                                         const Eigen::VectorXd& x_hat,
                                         const std::function<double(const Eigen::VectorXd&)>& f,
                                         ObjectiveIndex index = ObjectiveIndex::newer,
                                         double tol = kSecondMonotonicityTolerance) {
  detail::require_steps(trace, "at_induced_prox_check");
  const double f_hat = f(x_hat);
  SlackAccumulator acc;
  for (std::size_t k = 0; k < trace.iterations(); ++k) {
    const double drop = kl_vec(x_hat, trace.x(k)) - kl_vec(x_hat, trace.x(k + 1));
    const double fj = index == ObjectiveIndex::newer ? trace.f(k + 1) : trace.f(k);
    acc.add(detail::scaled(spec.ddphi1 * drop - (fj - f_hat), trace.f(k)));
  }
  CheckReport r = acc.finish("at_induced_prox", tol);
  r.add_note(std::string("kernel ") + spec.name + ", objective index " +
             (index == ObjectiveIndex::newer ? "k+1" : "k"));
  return r;
}

// ---------------------------------------------------------------------------
// Mass and contraction laws.

/// Per sample: EMML sum(Mx) = sum(y); SMART and Hellinger sum <= sum(y);
/// Pearson sum(Rx) >= sum(y). Slack relative to 1 + sum(y).
inline CheckReport mass_law_check(Family family, const ColumnStochastic& p,
                                  const Eigen::VectorXd& y,
                                  std::span<const Eigen::VectorXd> samples,
                                  double tol = 1e-12) {
  const double mass = y.sum();
  SlackAccumulator acc;
  for (const auto& x : samples) {
    const double next = kl_family_step(family, p, y, x).sum();
    double slack = 0.0;
    switch (family) {
      case Family::emml: slack = -std::abs(next - mass); break;
      case Family::pearson: slack = next - mass; break;
      default: slack = mass - next; break;
    }
    acc.add(slack / (1.0 + mass));
  }
  return acc.finish(std::string("mass_law_") + std::string(to_string(family)), tol);
}

/// d(x, z) >= d(Px, Pz) for KL, Hellinger and Pearson on unit-column-sum P.
inline CheckReport contraction_check(const ColumnStochastic& p,
                                     std::span<const Eigen::VectorXd> xs,
                                     std::span<const Eigen::VectorXd> zs,
                                     double tol = 1e-12) {
  if (xs.size() != zs.size()) throw DimensionError("contraction_check: sample counts differ");
  SlackAccumulator acc;
  for (std::size_t s = 0; s < xs.size(); ++s) {
    const Eigen::VectorXd px = p.apply(xs[s]);
    const Eigen::VectorXd pz = p.apply(zs[s]);
    const double kl_d = kl_vec(xs[s], zs[s]);
    const double h_d = hellinger(xs[s], zs[s]);
    const double p_d = pearson(xs[s], zs[s]);
    acc.add("kl", (kl_d - kl_vec(px, pz)) / (1.0 + kl_d));
    acc.add("hellinger", (h_d - hellinger(px, pz)) / (1.0 + h_d));
    acc.add("pearson", (p_d - pearson(px, pz)) / (1.0 + p_d));
  }
  return acc.finish("contraction", tol);
}

// ---------------------------------------------------------------------------
// SUMMA-type monitors for the concrete solvers.

/// G_k(x) = KL(q(x), r(x^{k-1})), g_{k+1}(x) = KL(x, x^k) - KL(Px, Px^k).
inline CheckReport smart_summa_check(const ColumnStochastic& p, const Eigen::VectorXd& y,
                                     const IterationTrace& trace,
                                     std::span<const Eigen::VectorXd> samples,
                                     double tol = kInequalityTolerance) {
  auto big_g = [&](std::size_t k, const Eigen::VectorXd& x) {
    return kl_vec(kl_q_array(p, x), kl_r_array(p, y, trace.x(k - 1)));
  };
  auto gap = [&](std::size_t k, const Eigen::VectorXd& x) {
    return big_g(k, x) - big_g(k, trace.x(k));
  };
  auto g_next = [&](std::size_t k, const Eigen::VectorXd& x) {
    return kl_vec(x, trace.x(k)) - kl_vec(p.apply(x), p.apply(trace.x(k)));
  };
  CheckReport r = check_summa(trace, gap, g_next, samples, tol);
  r.name = "summa";
  return r;
}

/// G_k(x) = J E(r(x^{k-1}), q(x)), g_{k+1}(x) = J E(r(x^k), r(x)). The gap
/// also equals J sum_j c_j (x^k_j - x_j)^2; its residual is a component.
inline CheckReport euclid_summa_check(const RealMatrix& a, const Eigen::VectorXd& b,
                                      const IterationTrace& trace,
                                      std::span<const Eigen::VectorXd> samples,
                                      double tol = kInequalityTolerance) {
  const double j = static_cast<double>(a.cols());
  SlackAccumulator acc;
  for (std::size_t k = 1; k <= trace.iterations(); ++k) {
    const double scale = 1.0 + std::abs(trace.f(k));
    const CoupleArray r_prev = euclid_r_array(a, b, trace.x(k - 1));
    const CoupleArray r_k = euclid_r_array(a, b, trace.x(k));
    const double g_at_xk = j * squared_distance(r_prev, euclid_q_array(a, trace.x(k)));
    for (const auto& x : samples) {
      const double gap = j * squared_distance(r_prev, euclid_q_array(a, x)) - g_at_xk;
      const double g_next = j * squared_distance(r_k, euclid_r_array(a, b, x));
      acc.add("inequality", (gap - g_next) / scale);
      const double identity = euclid_step_distance(a, trace.x(k), x);
      acc.add("gap_identity", -Residual{gap, identity}.relative());
    }
  }
  return acc.finish("summa", tol);
}

/// h(k, x) = KL(Mx, x^k), k from 0.
inline CheckReport emml_summa2_check(const ColumnStochastic& p, const Eigen::VectorXd& y,
                                     const IterationTrace& trace,
                                     std::span<const Eigen::VectorXd> samples,
                                     double tol = kInequalityTolerance) {
  auto h = [&](std::size_t k, const Eigen::VectorXd& x) {
    return kl_vec(emml_step(p, y, x), trace.x(k));
  };
  auto f = [&](const Eigen::VectorXd& x) { return kl_vec(y, p.apply(x)); };
  return check_summa2(h, f, trace, samples, 0, tol);
}

/// SUMMA implies SUMMA2 with h_k = g_k = KL(x, x^{k-1}) - KL(Px, Px^{k-1}).
inline CheckReport smart_summa2_check(const ColumnStochastic& p, const Eigen::VectorXd& y,
                                      const IterationTrace& trace,
                                      std::span<const Eigen::VectorXd> samples,
                                      double tol = kInequalityTolerance) {
  auto h = [&](std::size_t k, const Eigen::VectorXd& x) {
    const Eigen::VectorXd& prev = trace.x(k - 1);
    return kl_vec(x, prev) - kl_vec(p.apply(x), p.apply(prev));
  };
  auto f = [&](const Eigen::VectorXd& x) { return kl_vec(p.apply(x), y); };
  return check_summa2(h, f, trace, samples, 1, tol);
}

/// Least-squares AM: h_k(x) = J sum_j c_j (Lx_j - x^k_j)^2 with the
/// sharper form h_k(x) - h_{k+1}(x) >= f(x^k) - f(x) + J sum_j c_j (Lx_j - x_j)^2
/// as a component. f here is ||b - Ax||^2.
inline CheckReport euclid_summa2_check(const RealMatrix& a, const Eigen::VectorXd& b,
                                       const IterationTrace& trace,
                                       std::span<const Eigen::VectorXd> samples,
                                       double tol = kInequalityTolerance) {
  SlackAccumulator acc;
  for (const auto& x : samples) {
    const Eigen::VectorXd lx = euclid_L_step(a, b, x);
    const double fx = euclid_objective(a, b, x);
    const double extra = euclid_step_distance(a, lx, x);
    for (std::size_t k = 0; k < trace.iterations(); ++k) {
      const double fk = trace.f(k);
      const double hk = euclid_step_distance(a, lx, trace.x(k));
      const double hk1 = euclid_step_distance(a, lx, trace.x(k + 1));
      acc.add("summa2", detail::scaled(hk + fx - hk1 - fk, fk));
      acc.add("with_extra_term", detail::scaled(hk - hk1 - (fk - fx) - extra, fk));
    }
  }
  CheckReport r = acc.finish("summa2", tol);
  r.add_note("h_k(x) = J sum c_j (Lx_j - x^k_j)^2");
  return r;
}

// ---------------------------------------------------------------------------
// Independent minimizers.

class OracleUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OracleSolution {
  Eigen::VectorXd minimizer;
  double optimum = 0.0;
  std::string method;
};

namespace detail {

/// Root of an increasing function on (0, inf), bracketed by doubling/halving.
inline double bisect_increasing(const std::function<double(double)>& d) {
  double lo = 1.0;
  double hi = 1.0;
  while (d(hi) <= 0.0) {
    hi *= 2.0;
    if (hi > 1e300) throw OracleUnavailable("oracle unavailable: no upper bracket");
  }
  while (d(lo) >= 0.0) {
    lo *= 0.5;
    if (lo < 1e-300) return 0.0;
  }
  for (int it = 0; it < 2000; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (d(mid) > 0.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Minimizer of a convex function on [lo, hi] by golden-section search.
inline double golden_section(const std::function<double(double)>& g, double lo, double hi,
                             int iterations = 160) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double gc = g(c);
  double gd = g(d);
  for (int it = 0; it < iterations; ++it) {
    if (gc <= gd) {
      hi = d;
      d = c;
      gd = gc;
      c = hi - inv_phi * (hi - lo);
      gc = g(c);
    } else {
      lo = c;
      c = d;
      gc = gd;
      d = lo + inv_phi * (hi - lo);
      gd = g(d);
    }
  }
  return 0.5 * (lo + hi);
}

/// f' for one column p: the objective sum_i d(p_i x, y_i) or d(y_i, p_i x).
inline double one_column_derivative(Family family, const Eigen::VectorXd& p,
                                    const Eigen::VectorXd& y, double x) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double pi = p[i];
    if (pi == 0.0) continue;
    switch (family) {
      case Family::smart: s += pi * std::log(pi * x / y[i]); break;
      case Family::emml: s += pi - y[i] / x; break;
      case Family::hellinger: s += pi - std::sqrt(y[i] * pi / x); break;
      case Family::pearson: s += pi - y[i] * y[i] / (pi * x * x); break;
      default: throw std::invalid_argument("one_column_derivative: family");
    }
  }
  return s;
}

}  // namespace detail

/// Least squares by the minimum-norm solution of the normal equations.
inline OracleSolution oracle_minimize(const RealMatrix& a, const Eigen::VectorXd& b) {
  if (b.size() != a.rows()) throw DimensionError("oracle_minimize: b length");
  const Eigen::MatrixXd ata = a.values().transpose() * a.values();
  const Eigen::VectorXd atb = a.values().transpose() * b;
  Eigen::VectorXd x = ata.completeOrthogonalDecomposition().solve(atb);
  const double f = euclid_objective(a, b, x);
  return {std::move(x), f, "normal equations"};
}

/// KL-family minimizer over x >= 0 for J = 1 (root of f') or J = 2 (nested
/// golden-section search on a box). Works in the caller's coordinates.
inline OracleSolution oracle_minimize(Family family, const NonnegMatrix& p,
                                      const Eigen::VectorXd& y) {
  if (!is_kl_family(family)) {
    throw std::invalid_argument("oracle_minimize: use the RealMatrix overload for least squares");
  }
  if (y.size() != p.rows()) throw DimensionError("oracle_minimize: y length");
  auto f = [&](const Eigen::VectorXd& x) { return kl_family_objective(family, p, y, x); };
  if (p.cols() == 1) {
    const Eigen::VectorXd col = p.values().col(0);
    const double root = detail::bisect_increasing(
        [&](double x) { return detail::one_column_derivative(family, col, y, x); });
    Eigen::VectorXd x(1);
    x[0] = root;
    return {x, f(x), "1-D calculus root"};
  }
  if (p.cols() == 2) {
    // Every minimizer has sum_j s_j x_j within a small multiple of the data
    // mass (Pearson minimizers can exceed it), so this box contains one.
    const double ymax = y.maxCoeff();
    double pmin = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < p.rows(); ++i)
      for (Eigen::Index j = 0; j < 2; ++j)
        if (p(i, j) > 0.0) pmin = std::min(pmin, p(i, j));
    const double bound =
        10.0 * (1.0 + y.sum() + y.squaredNorm() / pmin + ymax) / p.column_sums().minCoeff();
    Eigen::VectorXd x(2);
    auto inner = [&](double x1) {
      x[0] = x1;
      const double x2 = detail::golden_section(
          [&](double t) {
            x[1] = t;
            return f(x);
          },
          0.0, bound);
      return x2;
    };
    auto profile = [&](double x1) {
      Eigen::VectorXd v(2);
      v << x1, inner(x1);
      return f(v);
    };
    const double x1 = detail::golden_section(profile, 0.0, bound);
    Eigen::VectorXd best(2);
    best << x1, inner(x1);
    return {best, f(best), "grid"};
  }
  std::ostringstream os;
  os << "oracle unavailable for " << to_string(family) << " with J = " << p.cols()
     << " (supported: J <= 2)";
  throw OracleUnavailable(os.str());
}

// ---------------------------------------------------------------------------
// Limit characterizations.

/// argmin sum_j c_j (x_j - x0_j)^2 over least-squares solutions of Ax = b.
/// With u = C^{1/2}(x - x0) this is the minimum-norm least-squares solution
/// of (A C^{-1/2}) u = b - A x0.
inline Eigen::VectorXd weighted_projection_oracle(const RealMatrix& a,
                                                  const Eigen::VectorXd& b,
                                                  const Eigen::VectorXd& x0) {
  const Eigen::VectorXd root_c = a.col_sq_sums().cwiseSqrt();
  const Eigen::MatrixXd scaled = a.values() * root_c.cwiseInverse().asDiagonal();
  const Eigen::VectorXd u =
      scaled.completeOrthogonalDecomposition().solve(b - a.apply(x0));
  return x0 + u.cwiseQuotient(root_c);
}

inline CheckReport limit_characterization_euclid(const RealMatrix& a,
                                                 const Eigen::VectorXd& b,
                                                 const Eigen::VectorXd& x0,
                                                 const IterationTrace& trace,
                                                 double tol = kLimitProjectionTolerance) {
  const Eigen::VectorXd oracle = weighted_projection_oracle(a, b, x0);
  const Eigen::VectorXd& limit = trace.last().x;
  SlackAccumulator acc;
  for (Eigen::Index j = 0; j < limit.size(); ++j) {
    acc.add(-std::abs(limit[j] - oracle[j]));
  }
  CheckReport r = acc.finish("limit_characterization_euclid", tol);
  std::ostringstream os;
  os.precision(12);
  os << "projection oracle (";
  for (Eigen::Index j = 0; j < oracle.size(); ++j) os << (j ? " " : "") << oracle[j];
  os << ")";
  r.add_note(os.str());
  return r;
}

/// The limit of a SMART run minimizes KL(x, x0) over {x >= 0 : Px = Px*}
/// (the solution set when consistent) and, for x0 = 1, maximizes entropy
/// there. The set is searched along a one-dimensional segment; P must have
/// a kernel of dimension <= 1.
inline CheckReport limit_characterization_smart(const ColumnStochastic& p,
                                                const Eigen::VectorXd& y,
                                                const Eigen::VectorXd& x0,
                                                const IterationTrace& trace,
                                                double tol = kLimitGridTolerance) {
  const Eigen::VectorXd& limit = trace.last().x;
  const Eigen::MatrixXd& pm = p.values();
  const Eigen::VectorXd x_ls = pm.completeOrthogonalDecomposition().solve(y);
  const bool consistent = (pm * x_ls - y).norm() <= 1e-9 * (1.0 + y.norm()) &&
                          x_ls.minCoeff() >= -1e-9 * (1.0 + x_ls.cwiseAbs().maxCoeff());
  Eigen::FullPivLU<Eigen::MatrixXd> lu(pm);
  lu.setThreshold(1e-10);
  const Eigen::MatrixXd kernel = lu.kernel();
  const Eigen::Index dim = lu.rank() == pm.cols() ? 0 : kernel.cols();

  SlackAccumulator acc;
  std::vector<std::string> notes;
  const Eigen::VectorXd target = consistent ? y : Eigen::VectorXd(pm * limit);
  notes.emplace_back(consistent ? "consistent: solution set of y = Px"
                                : "inconsistent: minimizer set of KL(Px, y)");
  acc.add("feasibility",
          -(pm * limit - target).cwiseAbs().maxCoeff() / (1.0 + target.cwiseAbs().maxCoeff()));

  if (dim == 0) {
    const Eigen::VectorXd unique = consistent ? x_ls : limit;
    acc.add("kl_minimality", -(limit - unique).cwiseAbs().maxCoeff());
    notes.emplace_back("solution set is a single point");
  } else if (dim == 1) {
    const Eigen::VectorXd base = consistent ? x_ls : limit;
    const Eigen::VectorXd dir = kernel.col(0);
    double t_lo = -std::numeric_limits<double>::infinity();
    double t_hi = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < dir.size(); ++j) {
      if (dir[j] > 0.0) t_lo = std::max(t_lo, -base[j] / dir[j]);
      if (dir[j] < 0.0) t_hi = std::min(t_hi, -base[j] / dir[j]);
    }
    if (!(t_lo <= t_hi) || !std::isfinite(t_lo) || !std::isfinite(t_hi)) {
      throw OracleUnavailable("limit_characterization_smart: empty or unbounded segment");
    }
    auto point = [&](double t) {
      return Eigen::VectorXd((base + t * dir).cwiseMax(0.0));
    };
    const bool entropy = ((x0.array() - 1.0).abs() <= 1e-12).all();
    constexpr int kGrid = 10000;
    auto scan = [&](double lo, double hi, const std::function<double(const Eigen::VectorXd&)>& g) {
      double best_t = lo;
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i <= kGrid; ++i) {
        const double t = lo + (hi - lo) * static_cast<double>(i) / kGrid;
        const double v = g(point(t));
        if (v < best) {
          best = v;
          best_t = t;
        }
      }
      return std::pair{best_t, best};
    };
    auto refine = [&](const std::function<double(const Eigen::VectorXd&)>& g) {
      const double cell = (t_hi - t_lo) / kGrid;
      auto [t, v] = scan(t_lo, t_hi, g);
      auto [t2, v2] = scan(std::max(t_lo, t - cell), std::min(t_hi, t + cell), g);
      (void)t2;
      return std::min(v, v2);
    };
    const double kl_best = refine([&](const Eigen::VectorXd& x) { return kl_vec(x, x0); });
    acc.add("kl_minimality", kl_best - kl_vec(limit, x0));
    if (entropy) {
      const double neg_h = refine([&](const Eigen::VectorXd& x) { return -shannon_entropy(x); });
      acc.add("max_entropy", shannon_entropy(limit) + neg_h);
    }
    std::ostringstream os;
    os.precision(6);
    os << "segment t in [" << t_lo << ", " << t_hi << "], " << kGrid + 1
       << "-point grid plus refinement";
    notes.push_back(os.str());
  } else {
    throw OracleUnavailable("limit_characterization_smart: solution set has dimension > 1");
  }
  CheckReport r = acc.finish("limit_characterization_smart", tol);
  for (const auto& n : notes) r.add_note(n);
  return r;
}

// ---------------------------------------------------------------------------
// Probes. These report statistics and never assert.

/// Residual H(r(z), q(x)) - H(r(x), q(x)) - H(r(z), r(x)) over the given
/// pairs ("general") and over (Tz, z) for each z ("x_equals_Tz").
inline CheckReport hrr_probe(const ColumnStochastic& p, const Eigen::VectorXd& y,
                             std::span<const std::pair<Eigen::VectorXd, Eigen::VectorXd>> pairs) {
  SlackAccumulator acc;
  double max_abs = 0.0;
  auto residual = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& z) {
    const CoupleArray rx = kl_r_array(p, y, x);
    const CoupleArray rz = kl_r_array(p, y, z);
    const CoupleArray qx = kl_q_array(p, x);
    return hellinger(rz, qx) - hellinger(rx, qx) - hellinger(rz, rx);
  };
  for (const auto& [x, z] : pairs) {
    const double g = residual(x, z);
    const double t = residual(hellinger_T_step(p, y, z), z);
    max_abs = std::max({max_abs, std::abs(g), std::abs(t)});
    acc.add("general", g);
    acc.add("x_equals_Tz", t);
  }
  CheckReport r = acc.finish("hrr_probe", 0.0, true);
  std::ostringstream os;
  os.precision(6);
  os << "max |residual| " << max_abs;
  r.add_note(os.str());
  return r;
}

/// Candidate SUMMA2 functions h(k, x) = d(Fx, x^k) for the Hellinger (F = T,
/// d = H) and Pearson (F = R, d = phi^2) iterations.
inline CheckReport summa2_candidate_probe(Family family, const ColumnStochastic& p,
                                          const Eigen::VectorXd& y,
                                          const IterationTrace& trace,
                                          std::span<const Eigen::VectorXd> samples) {
  IndexedFunction h;
  if (family == Family::pearson) {
    h = [&](std::size_t k, const Eigen::VectorXd& x) {
      return pearson(pearson_R_step(p, y, x), trace.x(k));
    };
  } else if (family == Family::hellinger) {
    h = [&](std::size_t k, const Eigen::VectorXd& x) {
      return hellinger(hellinger_T_step(p, y, x), trace.x(k));
    };
  } else {
    throw std::invalid_argument("summa2_candidate_probe: family must be hellinger or pearson");
  }
  auto f = [&](const Eigen::VectorXd& x) { return kl_family_objective(family, p, y, x); };
  CheckReport r = check_summa2(h, f, trace, samples, 0, 0.0);
  r.name = std::string(to_string(family)) + "_summa2_probe";
  r.probe = true;
  r.add_note(family == Family::pearson ? "h(k,x) = phi^2(Rx, x^k)" : "h(k,x) = H(Tx, x^k)");
  return r;
}

/// Side-by-side slacks of the two KL inequalities on a Hellinger problem:
///   klh:            KL(xh, x^k) - KL(xh, x^{k+1}) - 2 (f(x^{k+1}) - f(xh)) on T iterates
///   prox_newer:     the same drop minus 2 (f(x^{k+1}) - f(xh)) on proximal iterates
///   prox_older:     the same drop minus 2 (f(x^k) - f(xh)) on proximal iterates
struct KlInequalityRow {
  std::size_t k = 0;
  double klh = 0.0;
  double prox_newer = 0.0;
  double prox_older = 0.0;
};

struct KlInequalityComparison {
  std::vector<KlInequalityRow> rows;
  CheckReport report;
};

inline KlInequalityComparison compare_kl_inequalities(const ColumnStochastic& p,
                                                      const Eigen::VectorXd& y,
                                                      const Eigen::VectorXd& x_hat,
                                                      const IterationTrace& t_trace,
                                                      const IterationTrace& prox_trace) {
  const double f_hat = hellinger(y, p.apply(x_hat));
  const std::size_t n = std::min(t_trace.iterations(), prox_trace.iterations());
  KlInequalityComparison out;
  SlackAccumulator acc;
  for (std::size_t k = 0; k < n; ++k) {
    KlInequalityRow row;
    row.k = k;
    const double t_drop = kl_vec(x_hat, t_trace.x(k)) - kl_vec(x_hat, t_trace.x(k + 1));
    row.klh = detail::scaled(t_drop - 2.0 * (t_trace.f(k + 1) - f_hat), t_trace.f(k));
    const double p_drop = kl_vec(x_hat, prox_trace.x(k)) - kl_vec(x_hat, prox_trace.x(k + 1));
    row.prox_newer = detail::scaled(p_drop - 2.0 * (prox_trace.f(k + 1) - f_hat), prox_trace.f(k));
    row.prox_older = detail::scaled(p_drop - 2.0 * (prox_trace.f(k) - f_hat), prox_trace.f(k));
    acc.add("klh", row.klh);
    acc.add("prox_newer", row.prox_newer);
    acc.add("prox_older", row.prox_older);
    out.rows.push_back(row);
  }
  out.report = acc.finish("kl_inequality_comparison", 0.0, true);
  return out;
}

/// Runs EMML from each start and reports the largest pairwise max-norm
/// distance between the limits (the limit's dependence on x0 is open).
inline CheckReport emml_start_spread(const NonnegMatrix& p, const Eigen::VectorXd& y,
                                     std::span<const Eigen::VectorXd> starts,
                                     const StoppingRule& rule) {
  std::vector<Eigen::VectorXd> limits;
  SolverConfig cfg;
  cfg.rule = rule;
  for (const auto& s : starts) {
    limits.push_back(solve_kl(Family::emml, KlProblem(p, y, s), cfg).x);
  }
  SlackAccumulator acc;
  double spread = 0.0;
  for (std::size_t a = 0; a < limits.size(); ++a) {
    for (std::size_t b = a + 1; b < limits.size(); ++b) {
      const double d = (limits[a] - limits[b]).cwiseAbs().maxCoeff();
      spread = std::max(spread, d);
      acc.add(-d);
    }
  }
  CheckReport r = acc.finish("emml_start_spread", 0.0, true);
  std::ostringstream os;
  os.precision(6);
  os << limits.size() << " starts, max pairwise limit distance " << spread;
  r.add_note(os.str());
  return r;
}

}  // namespace auxfn
