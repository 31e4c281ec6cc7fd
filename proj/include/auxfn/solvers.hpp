#pragma once

// Iteration operators and full-solve drivers:
//   Landweber / gradient descent / quadratic-majorizer MM,
//   the least-squares AM operator L,
//   SMART (S), EMML (M), Hellinger (T) and Pearson (R) multiplicative updates,
//   and a Hellinger proximal step (PMA with d = H).
//
// The multiplicative operators assume unit column sums; they take a
// ColumnStochastic matrix so the assumption is checked by construction.

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "auxfn/distances.hpp"
#include "auxfn/framework.hpp"
#include "auxfn/model.hpp"

namespace auxfn {

/// Invalid solver configuration (step size out of range, policy violation).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Family { euclid, landweber, smart, emml, hellinger, pearson };

inline std::string_view to_string(Family f) {
  switch (f) {
    case Family::euclid: return "euclid";
    case Family::landweber: return "landweber";
    case Family::smart: return "smart";
    case Family::emml: return "emml";
    case Family::hellinger: return "hellinger";
    case Family::pearson: return "pearson";
  }
  return "unknown";
}

inline Family family_from_string(std::string_view s) {
  for (Family f : {Family::euclid, Family::landweber, Family::smart,
                   Family::emml, Family::hellinger, Family::pearson}) {
    if (to_string(f) == s) return f;
  }
  throw std::invalid_argument("unknown family '" + std::string(s) +
                              "' (expected euclid, landweber, smart, emml, "
                              "hellinger or pearson)");
}

inline bool is_kl_family(Family f) {
  return f == Family::smart || f == Family::emml || f == Family::hellinger ||
         f == Family::pearson;
}

// ---------------------------------------------------------------------------
// Spectral radius and Landweber.

struct RhoEstimate {
  double value = 0.0;
  std::size_t iterations = 0;
  bool approximate = false;  // tolerance not reached within the budget
};

/// Largest eigenvalue of a symmetric positive semidefinite matrix by power
/// iteration with a Rayleigh-quotient estimate.
inline RhoEstimate power_method_rho(const Eigen::MatrixXd& m,
                                    std::size_t iters = 200,
                                    double tol = 1e-12) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw DimensionError("power_method_rho: matrix must be square and nonempty");
  }
  std::mt19937_64 rng(0x5eedULL);
  std::normal_distribution<double> n01;
  Eigen::VectorXd v(m.rows());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = 1.0 + 0.25 * n01(rng);
  v.normalize();

  RhoEstimate est;
  double lambda = 0.0;
  for (std::size_t it = 1; it <= iters; ++it) {
    const Eigen::VectorXd w = m * v;
    const double next = v.dot(w);
    const double norm = w.norm();
    est.iterations = it;
    if (norm == 0.0) {
      est.value = 0.0;
      est.approximate = true;
      return est;
    }
    v = w / norm;
    if (it > 1 && std::abs(next - lambda) <= tol * std::abs(next)) {
      est.value = next;
      return est;
    }
    lambda = next;
  }
  est.value = lambda;
  est.approximate = true;
  return est;
}

/// Safety factor applied to the estimated rho(A^T A) in the step-size bound.
inline constexpr double kRhoSafety = 1.01;

/// Upper end of the admissible Landweber interval, 2 / (1.01 rho(A^T A)).
inline double landweber_gamma_bound(const RealMatrix& a) {
  const Eigen::MatrixXd ata = a.values().transpose() * a.values();
  return 2.0 / (kRhoSafety * power_method_rho(ata).value);
}

inline void validate_landweber_gamma(const RealMatrix& a, double gamma) {
  const double bound = landweber_gamma_bound(a);
  if (!(gamma > 0.0) || !(gamma < bound)) {
    std::ostringstream os;
    os.precision(10);
    os << "Landweber step gamma = " << gamma
       << " violates 0 < gamma < 2/rho(A^T A) (bound with 1.01 safety factor: "
       << bound << ")";
    throw ConfigError(os.str());
  }
}

namespace detail {

inline Eigen::VectorXd landweber_update(const RealMatrix& a,
                                        const Eigen::VectorXd& b,
                                        const Eigen::VectorXd& x, double gamma) {
  return x - gamma * (a.values().transpose() * (a.apply(x) - b));
}

}  // namespace detail

/// x - gamma A^T (Ax - b). Validates gamma against the spectral bound.
inline Eigen::VectorXd landweber_step(const RealMatrix& a,
                                      const Eigen::VectorXd& b,
                                      const Eigen::VectorXd& x, double gamma) {
  if (b.size() != a.rows()) throw DimensionError("landweber_step: b length");
  validate_landweber_gamma(a, gamma);
  return detail::landweber_update(a, b, x, gamma);
}

template <class Grad>
Eigen::VectorXd gradient_descent_step(Grad&& grad_f, const Eigen::VectorXd& x,
                                      double gamma) {
  const Eigen::VectorXd g = grad_f(x);
  if (g.size() != x.size()) throw DimensionError("gradient_descent_step: gradient length");
  return x - gamma * g;
}

/// Minimizer of f(z) + <grad f(z), x - z> + (1/2)(x - z)^T B (x - z), i.e.
/// z - B^{-1} grad f(z). `solve_b(v)` must return u with Bu = v.
template <class Grad, class SolveB>
Eigen::VectorXd quadratic_mm_step(Grad&& grad_f, SolveB&& solve_b,
                                  const Eigen::VectorXd& x) {
  const Eigen::VectorXd g = grad_f(x);
  const Eigen::VectorXd u = solve_b(g);
  if (u.size() != x.size() || !u.allFinite()) {
    throw DomainError("quadratic_mm_step: B-solve returned an invalid vector");
  }
  return x - u;
}

// ---------------------------------------------------------------------------
// Least-squares alternating minimization.

/// (Lx)_j = x_j + (1 / (J c_j)) sum_i A_ij (b_i - (Ax)_i).
inline Eigen::VectorXd euclid_L_step(const RealMatrix& a,
                                     const Eigen::VectorXd& b,
                                     const Eigen::VectorXd& x) {
  if (b.size() != a.rows()) throw DimensionError("euclid_L_step: b length");
  const double j = static_cast<double>(a.cols());
  const Eigen::VectorXd back = a.values().transpose() * (b - a.apply(x));
  return x + back.cwiseQuotient(j * a.col_sq_sums());
}

/// B_ij = sqrt(beta_j) A_ij with beta_j = 1 / (J c_j); z = x / sqrt(beta).
/// Landweber on (B, b) with gamma = 1 reproduces the L iteration.
struct LandweberRescaling {
  RealMatrix matrix;
  Eigen::VectorXd sqrt_beta;

  Eigen::VectorXd forward(const Eigen::VectorXd& x) const {
    return x.cwiseQuotient(sqrt_beta);
  }
  Eigen::VectorXd back(const Eigen::VectorXd& z) const {
    return z.cwiseProduct(sqrt_beta);
  }
};

inline LandweberRescaling landweber_equiv_transform(const RealMatrix& a) {
  const double j = static_cast<double>(a.cols());
  const Eigen::VectorXd sqrt_beta =
      (j * a.col_sq_sums()).cwiseInverse().cwiseSqrt();
  return LandweberRescaling{RealMatrix(a.values() * sqrt_beta.asDiagonal()),
                            sqrt_beta};
}

// ---------------------------------------------------------------------------
// Multiplicative operators on unit-column-sum P.

namespace detail {

inline void require_kl_shapes(const ColumnStochastic& p, const Eigen::VectorXd& y,
                              const Eigen::VectorXd& x, const char* what) {
  if (y.size() != p.rows() || x.size() != p.cols()) {
    throw DimensionError(std::string(what) + ": shape mismatch");
  }
}

}  // namespace detail

/// (Sx)_j = x_j exp(sum_i P_ij (log y_i - log (Px)_i)).
inline Eigen::VectorXd smart_step(const ColumnStochastic& p,
                                  const Eigen::VectorXd& y,
                                  const Eigen::VectorXd& x) {
  detail::require_kl_shapes(p, y, x, "smart_step");
  const Eigen::VectorXd px = detail::checked_projection(p, x);
  Eigen::VectorXd log_ratio(px.size());
  for (Eigen::Index i = 0; i < px.size(); ++i) {
    log_ratio[i] = std::log(y[i]) - std::log(px[i]);
  }
  const Eigen::VectorXd exponent = p.values().transpose() * log_ratio;
  return x.array() * exponent.array().exp();
}

/// (Mx)_j = x_j sum_i P_ij y_i / (Px)_i.
inline Eigen::VectorXd emml_step(const ColumnStochastic& p,
                                 const Eigen::VectorXd& y,
                                 const Eigen::VectorXd& x) {
  detail::require_kl_shapes(p, y, x, "emml_step");
  const Eigen::VectorXd px = detail::checked_projection(p, x);
  const Eigen::VectorXd back = p.values().transpose() * y.cwiseQuotient(px);
  return x.cwiseProduct(back);
}

/// (Tx)_j = x_j (sum_i P_ij sqrt(y_i / (Px)_i))^2.
inline Eigen::VectorXd hellinger_T_step(const ColumnStochastic& p,
                                        const Eigen::VectorXd& y,
                                        const Eigen::VectorXd& x) {
  detail::require_kl_shapes(p, y, x, "hellinger_T_step");
  const Eigen::VectorXd px = detail::checked_projection(p, x);
  const Eigen::VectorXd back =
      p.values().transpose() * y.cwiseQuotient(px).cwiseSqrt();
  return x.cwiseProduct(back.cwiseAbs2());
}

/// (Rx)_j = x_j sqrt(sum_i P_ij (y_i / (Px)_i)^2).
inline Eigen::VectorXd pearson_R_step(const ColumnStochastic& p,
                                      const Eigen::VectorXd& y,
                                      const Eigen::VectorXd& x) {
  detail::require_kl_shapes(p, y, x, "pearson_R_step");
  const Eigen::VectorXd px = detail::checked_projection(p, x);
  const Eigen::VectorXd back =
      p.values().transpose() * y.cwiseQuotient(px).cwiseAbs2();
  return x.cwiseProduct(back.cwiseSqrt());
}

/// argmin_x H(y, Px) + H(x, z): a proximal step with the Hellinger distance.
/// Solved by inner majorization, w <- ((sqrt(Tw) + sqrt(z)) / 2)^2, which
/// decreases the strictly convex proximal objective monotonically.
inline Eigen::VectorXd hellinger_prox_step(const ColumnStochastic& p,
                                           const Eigen::VectorXd& y,
                                           const Eigen::VectorXd& z,
                                           double inner_tol = 1e-15,
                                           std::size_t max_inner = 100000) {
  detail::require_kl_shapes(p, y, z, "hellinger_prox_step");
  const Eigen::VectorXd sqrt_z = z.cwiseSqrt();
  Eigen::VectorXd w = z;
  for (std::size_t it = 0; it < max_inner; ++it) {
    const Eigen::VectorXd root = 0.5 * (hellinger_T_step(p, y, w).cwiseSqrt() + sqrt_z);
    Eigen::VectorXd next = root.cwiseAbs2();
    const double change = (next - w).cwiseAbs().maxCoeff();
    w = std::move(next);
    if (change <= inner_tol * std::max(1.0, w.cwiseAbs().maxCoeff())) break;
  }
  return w;
}

// ---------------------------------------------------------------------------
// Family dispatch.

/// f(x) for each KL-family problem: KL(Px, y), KL(y, Px), H(y, Px),
/// phi^2(y, Px).
inline double kl_family_objective(Family family, const NonnegMatrix& p,
                                  const Eigen::VectorXd& y,
                                  const Eigen::VectorXd& x) {
  const Eigen::VectorXd px = p.apply(x);
  switch (family) {
    case Family::smart: return kl_vec(px, y);
    case Family::emml: return kl_vec(y, px);
    case Family::hellinger: return hellinger(y, px);
    case Family::pearson: return pearson(y, px);
    default: break;
  }
  throw std::invalid_argument("kl_family_objective: not a KL-family problem");
}

inline Eigen::VectorXd kl_family_step(Family family, const ColumnStochastic& p,
                                      const Eigen::VectorXd& y,
                                      const Eigen::VectorXd& x) {
  switch (family) {
    case Family::smart: return smart_step(p, y, x);
    case Family::emml: return emml_step(p, y, x);
    case Family::hellinger: return hellinger_T_step(p, y, x);
    case Family::pearson: return pearson_R_step(p, y, x);
    default: break;
  }
  throw std::invalid_argument("kl_family_step: not a KL-family problem");
}

/// The distance that bounds the per-step objective decrease:
/// KL(x^k, x^{k+1}) for SMART, KL(x^{k+1}, x^k) for EMML, H for Hellinger,
/// phi^2(x^{k+1}, x^k) for Pearson.
inline double kl_family_step_distance(Family family, const Eigen::VectorXd& prev,
                                      const Eigen::VectorXd& next) {
  switch (family) {
    case Family::smart: return kl_vec(prev, next);
    case Family::emml: return kl_vec(next, prev);
    case Family::hellinger: return hellinger(prev, next);
    case Family::pearson: return pearson(next, prev);
    default: break;
  }
  throw std::invalid_argument("kl_family_step_distance: not a KL-family problem");
}

/// J sum_j c_j (x_j - z_j)^2.
inline double euclid_step_distance(const RealMatrix& a, const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& z) {
  return static_cast<double>(a.cols()) * weighted_sq(x, z, a.col_sq_sums());
}

inline double euclid_objective(const RealMatrix& a, const Eigen::VectorXd& b,
                               const Eigen::VectorXd& x) {
  return (b - a.apply(x)).squaredNorm();
}

// ---------------------------------------------------------------------------
// Drivers.

enum class PositivityPolicy { warn, require };

struct SolverConfig {
  std::optional<double> gamma;  // Landweber only; defaults to 1/rho(A^T A)
  StoppingRule rule;
  PositivityPolicy positivity = PositivityPolicy::warn;
};

struct SolveResult {
  /// Iterates in the solver's working coordinates (column-normalized for the
  /// KL families).
  IterationTrace trace;
  /// Final iterate in the caller's original coordinates.
  Eigen::VectorXd x;
  double f = 0.0;
  std::vector<std::string> warnings;
  std::optional<Normalized> normalization;
  std::optional<double> gamma;
};

inline SolveResult solve_kl(Family family, const KlProblem& problem,
                            const SolverConfig& config = {}) {
  if (!is_kl_family(family)) {
    throw std::invalid_argument("solve_kl: family must be smart, emml, hellinger or pearson");
  }
  std::vector<std::string> warnings;
  if (!problem.matrix.strictly_positive()) {
    const char* msg = "matrix has zero entries; (Px)_i may vanish along the iteration";
    if (config.positivity == PositivityPolicy::require) throw ConfigError(msg);
    warnings.emplace_back(msg);
  }
  Normalized norm = normalize_columns(problem.matrix, problem.start);
  const ColumnStochastic& p = norm.matrix;
  const Eigen::VectorXd& y = problem.data;
  const double y_mass = y.sum();

  auto step = [&](const Eigen::VectorXd& x) { return kl_family_step(family, p, y, x); };
  auto objective = [&](const Eigen::VectorXd& x) {
    return kl_family_objective(family, p, y, x);
  };
  AfHooks hooks;
  hooks.distance = [family](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return kl_family_step_distance(family, a, b);
  };
  hooks.annotate = [family, y_mass](const IterationRecord& prev, IterationRecord& next) {
    const double mass = next.x.sum();
    const double drop = prev.f - next.f;
    switch (family) {
      case Family::smart:
        next.slacks["first_monotonicity"] = drop - next.step_distance;
        next.slacks["mass_bound"] = y_mass - mass;
        break;
      case Family::emml:
        next.slacks["first_monotonicity"] = drop - next.step_distance;
        next.slacks["mass_identity"] = -std::abs(mass - y_mass);
        break;
      case Family::hellinger:
        next.slacks["first_monotonicity"] = drop - next.step_distance;
        next.slacks["mass_bound"] = y_mass - mass;
        break;
      case Family::pearson:
        next.slacks["descent"] = drop;
        next.slacks["mass_bound"] = mass - y_mass;
        break;
      default: break;
    }
  };

  IterationTrace trace = run_af(step, objective, norm.x, config.rule, hooks);
  Eigen::VectorXd x = norm.to_original(trace.last().x);
  const double f = trace.last().f;
  return SolveResult{std::move(trace), std::move(x), f, std::move(warnings),
                     std::move(norm), std::nullopt};
}

/// Runs the Hellinger proximal iteration x^k = argmin H(y, Px) + H(x, x^{k-1})
/// in normalized coordinates.
inline SolveResult solve_hellinger_prox(const KlProblem& problem,
                                        const SolverConfig& config = {}) {
  Normalized norm = normalize_columns(problem.matrix, problem.start);
  const ColumnStochastic& p = norm.matrix;
  const Eigen::VectorXd& y = problem.data;
  auto step = [&](const Eigen::VectorXd& z) { return hellinger_prox_step(p, y, z); };
  auto objective = [&](const Eigen::VectorXd& x) { return hellinger(y, p.apply(x)); };
  AfHooks hooks;
  hooks.distance = [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return hellinger(b, a);
  };
  // Inner iterations stop at roundoff, so allow that much slack in descent.
  hooks.descent_tol = 1e-10;
  IterationTrace trace = run_af(step, objective, norm.x, config.rule, hooks);
  Eigen::VectorXd x = norm.to_original(trace.last().x);
  const double f = trace.last().f;
  return SolveResult{std::move(trace), std::move(x), f, {}, std::move(norm),
                     std::nullopt};
}

inline SolveResult solve_euclid(const EuclidProblem& problem,
                                const SolverConfig& config = {}) {
  const RealMatrix& a = problem.matrix;
  const Eigen::VectorXd& b = problem.data;
  auto step = [&](const Eigen::VectorXd& x) { return euclid_L_step(a, b, x); };
  auto objective = [&](const Eigen::VectorXd& x) { return euclid_objective(a, b, x); };
  AfHooks hooks;
  hooks.distance = [&a](const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
    return euclid_step_distance(a, u, v);
  };
  hooks.annotate = [](const IterationRecord& prev, IterationRecord& next) {
    next.slacks["first_monotonicity"] = prev.f - next.f - next.step_distance;
  };
  IterationTrace trace = run_af(step, objective, problem.start, config.rule, hooks);
  Eigen::VectorXd x = trace.last().x;
  const double f = trace.last().f;
  return SolveResult{std::move(trace), std::move(x), f, {}, std::nullopt,
                     std::nullopt};
}

inline SolveResult solve_landweber(const EuclidProblem& problem,
                                   const SolverConfig& config = {}) {
  const RealMatrix& a = problem.matrix;
  const Eigen::VectorXd& b = problem.data;
  double gamma;
  if (config.gamma) {
    gamma = *config.gamma;
    validate_landweber_gamma(a, gamma);
  } else {
    const Eigen::MatrixXd ata = a.values().transpose() * a.values();
    gamma = 1.0 / power_method_rho(ata).value;
  }
  auto step = [&](const Eigen::VectorXd& x) {
    return detail::landweber_update(a, b, x, gamma);
  };
  auto objective = [&](const Eigen::VectorXd& x) { return euclid_objective(a, b, x); };
  AfHooks hooks;
  hooks.distance = [](const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
    return (u - v).squaredNorm();
  };
  hooks.annotate = [](const IterationRecord& prev, IterationRecord& next) {
    next.slacks["descent"] = prev.f - next.f;
  };
  IterationTrace trace = run_af(step, objective, problem.start, config.rule, hooks);
  Eigen::VectorXd x = trace.last().x;
  const double f = trace.last().f;
  return SolveResult{std::move(trace), std::move(x), f, {}, std::nullopt, gamma};
}

}  // namespace auxfn
