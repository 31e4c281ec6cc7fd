#pragma once

// Auxiliary-function iteration driver, alternating minimization runner,
// the AM / PMA / MM adapters, and the sampled inequality monitors
// (SUMMA, SUMMA2, three-point and weak three-point properties).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <exception>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "auxfn/check_report.hpp"
#include "auxfn/distances.hpp"

namespace auxfn {

/// Default slack tolerance for the inequality monitors, applied after
/// dividing each slack by 1 + |f(x^k)|.
inline constexpr double kInequalityTolerance = 1e-10;

struct StoppingRule {
  std::size_t max_iters = 1000;
  double f_tol = 0.0;      // stop when f(x^{k-1}) - f(x^k) < f_tol
  double step_tol = 1e-12;  // stop when the step distance < step_tol

  void validate() const {
    if (max_iters < 1) throw std::invalid_argument("StoppingRule: max_iters must be >= 1");
    if (!(f_tol >= 0.0)) throw std::invalid_argument("StoppingRule: f_tol must be >= 0");
    if (!(step_tol >= 0.0)) throw std::invalid_argument("StoppingRule: step_tol must be >= 0");
  }
};

enum class StopReason { step_tol, f_tol, max_iters };

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::step_tol: return "step_tol";
    case StopReason::f_tol: return "f_tol";
    case StopReason::max_iters: return "max_iters";
  }
  return "unknown";
}

struct IterationRecord {
  std::size_t k = 0;
  Eigen::VectorXd x;
  double f = 0.0;
  double step_distance = 0.0;
  std::map<std::string, double> slacks;
};

/// Append-only sequence x^0, x^1, ..., x^n with objective values.
class IterationTrace {
 public:
  explicit IterationTrace(IterationRecord initial) {
    initial.k = 0;
    records_.push_back(std::move(initial));
  }

  void append(IterationRecord rec) {
    if (rec.k != records_.back().k + 1) {
      throw std::logic_error("IterationTrace: records must be appended in order");
    }
    records_.push_back(std::move(rec));
  }

  /// Number of completed iterations n (x^0 is not an iteration).
  std::size_t iterations() const { return records_.size() - 1; }

  const IterationRecord& initial() const { return records_.front(); }
  const IterationRecord& last() const { return records_.back(); }
  const IterationRecord& at(std::size_t k) const { return records_.at(k); }
  const Eigen::VectorXd& x(std::size_t k) const { return records_.at(k).x; }
  double f(std::size_t k) const { return records_.at(k).f; }

  /// Records for k = 1..n.
  std::span<const IterationRecord> steps() const {
    return std::span<const IterationRecord>(records_).subspan(1);
  }
  std::span<const IterationRecord> all() const { return records_; }

  std::vector<Eigen::VectorXd> iterates() const {
    std::vector<Eigen::VectorXd> out;
    out.reserve(records_.size());
    for (const auto& r : records_) out.push_back(r.x);
    return out;
  }

  /// Union of slack names over all records, sorted.
  std::vector<std::string> slack_names() const {
    std::set<std::string> names;
    for (const auto& r : records_) {
      for (const auto& [k, v] : r.slacks) names.insert(k);
    }
    return {names.begin(), names.end()};
  }

  StopReason reason = StopReason::max_iters;
  bool converged() const { return reason != StopReason::max_iters; }

 private:
  std::vector<IterationRecord> records_;
};

/// The step operator threw while producing x^iteration.
class StepError : public std::runtime_error {
 public:
  StepError(std::size_t iteration, const std::string& what)
      : std::runtime_error(make_message(iteration, what)), iteration_(iteration) {}
  std::size_t iteration() const { return iteration_; }

 private:
  static std::string make_message(std::size_t iteration, const std::string& what) {
    std::ostringstream os;
    os << "step failed at iteration " << iteration << ": " << what;
    return os.str();
  }
  std::size_t iteration_;
};

/// f(x^k) exceeded f(x^{k-1}) beyond the descent tolerance.
class DescentError : public std::runtime_error {
 public:
  DescentError(std::size_t iteration, double f_prev, double f_next)
      : std::runtime_error(make_message(iteration, f_prev, f_next)),
        iteration_(iteration) {}
  std::size_t iteration() const { return iteration_; }

 private:
  static std::string make_message(std::size_t k, double a, double b) {
    std::ostringstream os;
    os.precision(17);
    os << "descent violated at iteration " << k << ": f went from " << a
       << " to " << b;
    return os.str();
  }
  std::size_t iteration_;
};

using VectorDistance =
    std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

inline double euclidean_step(const Eigen::VectorXd& prev,
                             const Eigen::VectorXd& next) {
  return (next - prev).norm();
}

struct AfHooks {
  /// d(x^{k-1}, x^k) recorded as the step distance; Euclidean norm if empty.
  VectorDistance distance;
  /// Called after each step to attach named slacks to the new record.
  std::function<void(const IterationRecord& prev, IterationRecord& next)>
      annotate;
  /// Relative slack allowed on f(x^k) <= f(x^{k-1}).
  double descent_tol = 1e-12;
};

namespace detail {

inline bool descent_ok(double f_prev, double f_next, double tol) {
  if (!std::isfinite(f_next)) return false;
  return f_next <= f_prev + tol * (1.0 + std::abs(f_prev));
}

}  // namespace detail

/// Runs x^k = step(x^{k-1}) from x0 until the stopping rule fires. Each
/// step minimizes some G_k = f + g_k with g_k(x^{k-1}) = 0, so f must not
/// increase; an increase is reported as DescentError.
template <class Step, class Objective>
IterationTrace run_af(Step&& step, Objective&& f, const Eigen::VectorXd& x0,
                      const StoppingRule& stop, const AfHooks& hooks = {}) {
  stop.validate();
  const double f0 = f(x0);
  if (!std::isfinite(f0)) {
    throw std::domain_error("run_af: f(x0) is not finite");
  }
  IterationTrace trace(IterationRecord{0, x0, f0, 0.0, {}});
  const VectorDistance dist =
      hooks.distance ? hooks.distance : VectorDistance(euclidean_step);

  Eigen::VectorXd prev = x0;
  double f_prev = f0;
  for (std::size_t k = 1;; ++k) {
    Eigen::VectorXd next;
    double f_next;
    try {
      next = step(prev);
      if (next.size() != prev.size()) {
        throw DimensionError("step changed the vector length");
      }
      f_next = f(next);
    } catch (const StepError&) {
      throw;
    } catch (const std::exception& e) {
      throw StepError(k, e.what());
    }
    if (!detail::descent_ok(f_prev, f_next, hooks.descent_tol)) {
      throw DescentError(k, f_prev, f_next);
    }
    IterationRecord rec{k, next, f_next, dist(prev, next), {}};
    if (hooks.annotate) hooks.annotate(trace.last(), rec);
    const double step_distance = rec.step_distance;
    trace.append(std::move(rec));

    if (step_distance < stop.step_tol) {
      trace.reason = StopReason::step_tol;
      break;
    }
    if (f_prev - f_next < stop.f_tol) {
      trace.reason = StopReason::f_tol;
      break;
    }
    if (k >= stop.max_iters) {
      trace.reason = StopReason::max_iters;
      break;
    }
    prev = std::move(next);
    f_prev = f_next;
  }
  return trace;
}

// ---------------------------------------------------------------------------
// Alternating minimization and the equivalent PMA / MM views.

/// Phi : X x Y -> R+ with its two partial minimizers. argmin_y is y(x).
template <class X, class Y>
struct AMInstance {
  std::function<double(const X&, const Y&)> phi;
  std::function<X(const Y&)> argmin_x;
  std::function<Y(const X&)> argmin_y;
};

/// Minimize f(x) + d(x, x^{k-1}).
template <class X>
struct PMAInstance {
  std::function<double(const X&)> f;
  std::function<double(const X&, const X&)> d;
  std::function<X(const X&)> prox_step;
};

/// Minimize the majorizer g(x | x^{k-1}), g >= f with g(x|x) = f(x).
template <class X>
struct MMInstance {
  std::function<double(const X&)> f;
  std::function<double(const X&, const X&)> g;  // g(x, z) = g(x | z)
  std::function<X(const X&)> step;
};

/// f(x) = Phi(x, y(x)), d(x, z) = Phi(x, y(z)) - Phi(x, y(x)),
/// prox_step(z) = argmin_x Phi(x, y(z)).
template <class X, class Y>
PMAInstance<X> am_to_pma(const AMInstance<X, Y>& am) {
  PMAInstance<X> pma;
  pma.f = [am](const X& x) { return am.phi(x, am.argmin_y(x)); };
  pma.d = [am](const X& x, const X& z) {
    return am.phi(x, am.argmin_y(z)) - am.phi(x, am.argmin_y(x));
  };
  pma.prox_step = [am](const X& z) { return am.argmin_x(am.argmin_y(z)); };
  return pma;
}

/// g(x | z) = Phi(x, y(z)).
template <class X, class Y>
MMInstance<X> am_to_mm(const AMInstance<X, Y>& am) {
  MMInstance<X> mm;
  mm.f = [am](const X& x) { return am.phi(x, am.argmin_y(x)); };
  mm.g = [am](const X& x, const X& z) { return am.phi(x, am.argmin_y(z)); };
  mm.step = [am](const X& z) { return am.argmin_x(am.argmin_y(z)); };
  return mm;
}

/// d(x, z) = g(x | z) - f(x).
template <class X>
PMAInstance<X> mm_to_pma(const MMInstance<X>& mm) {
  PMAInstance<X> pma;
  pma.f = mm.f;
  pma.d = [mm](const X& x, const X& z) { return mm.g(x, z) - mm.f(x); };
  pma.prox_step = mm.step;
  return pma;
}

/// Phi(x, z) = g(x | z) on X x X; minimizing over z returns z = x.
template <class X>
AMInstance<X, X> mm_to_am(const MMInstance<X>& mm) {
  AMInstance<X, X> am;
  am.phi = mm.g;
  am.argmin_x = mm.step;
  am.argmin_y = [](const X& x) { return x; };
  return am;
}

/// g(x | z) = f(x) + d(x, z); argmin is the proximal step.
template <class X>
MMInstance<X> pma_to_mm(const PMAInstance<X>& pma) {
  MMInstance<X> mm;
  mm.f = pma.f;
  mm.g = [pma](const X& x, const X& z) { return pma.f(x) + pma.d(x, z); };
  mm.step = pma.prox_step;
  return mm;
}

template <class X>
IterationTrace run_pma(const PMAInstance<X>& pma, const Eigen::VectorXd& x0,
                       const StoppingRule& stop, const AfHooks& hooks = {}) {
  return run_af(pma.prox_step, pma.f, x0, stop, hooks);
}

template <class X>
IterationTrace run_mm(const MMInstance<X>& mm, const Eigen::VectorXd& x0,
                      const StoppingRule& stop, const AfHooks& hooks = {}) {
  return run_af(mm.step, mm.f, x0, stop, hooks);
}

inline double default_am_distance(double a, double b) { return std::abs(a - b); }
inline double default_am_distance(const Eigen::VectorXd& a,
                                  const Eigen::VectorXd& b) {
  return (a - b).norm();
}

/// x_j = argmin_x Phi(x, y_j), y_{j+1} = y(x_j), starting from y_0.
/// value(j) = Phi(x_j, y_{j+1}) = f(x_j) is non-increasing in j.
template <class X, class Y>
struct AmTrace {
  std::vector<X> xs;
  std::vector<Y> ys;           // ys.size() == xs.size() + 1
  std::vector<double> values;  // Phi(x_j, y_{j+1})
  std::vector<double> pre_values;  // Phi(x_j, y_j)
  StopReason reason = StopReason::max_iters;

  std::size_t size() const { return xs.size(); }

  IterationTrace to_iteration_trace() const
    requires std::same_as<X, Eigen::VectorXd>
  {
    IterationTrace t(IterationRecord{0, xs.front(), values.front(), 0.0,
                                     {{"phi_drop", pre_values.front() - values.front()}}});
    for (std::size_t j = 1; j < xs.size(); ++j) {
      t.append(IterationRecord{j, xs[j], values[j],
                               default_am_distance(xs[j - 1], xs[j]),
                               {{"phi_drop", pre_values[j] - values[j]}}});
    }
    t.reason = reason;
    return t;
  }
};

template <class X, class Y>
AmTrace<X, Y> run_am(const AMInstance<X, Y>& am, const Y& y0,
                     const StoppingRule& stop, double descent_tol = 1e-12) {
  stop.validate();
  AmTrace<X, Y> t;
  t.ys.push_back(y0);
  for (std::size_t j = 0;; ++j) {
    X x;
    Y y_next;
    try {
      x = am.argmin_x(t.ys.back());
      y_next = am.argmin_y(x);
    } catch (const std::exception& e) {
      throw StepError(j, e.what());
    }
    const double pre = am.phi(x, t.ys.back());
    const double value = am.phi(x, y_next);
    if (!t.values.empty() &&
        !detail::descent_ok(t.values.back(), value, descent_tol)) {
      throw DescentError(j, t.values.back(), value);
    }
    t.xs.push_back(std::move(x));
    t.ys.push_back(std::move(y_next));
    t.pre_values.push_back(pre);
    t.values.push_back(value);
    if (j >= 1) {
      const double step = default_am_distance(t.xs[j - 1], t.xs[j]);
      if (step < stop.step_tol) {
        t.reason = StopReason::step_tol;
        break;
      }
      if (t.values[j - 1] - t.values[j] < stop.f_tol) {
        t.reason = StopReason::f_tol;
        break;
      }
    }
    if (j + 1 >= stop.max_iters) {
      t.reason = StopReason::max_iters;
      break;
    }
  }
  return t;
}

// ---------------------------------------------------------------------------
// Sample sets for the universally quantified inequalities.

enum class SampleDomain { positive, real };

/// The known minimizer (if any), up to half the budget of evenly spaced
/// iterates, then random perturbations of iterates: multiplicative
/// exp(U(-1,1)) for positive domains, additive U(-1,1)(1+|x|) otherwise.
inline std::vector<Eigen::VectorXd> make_samples(
    std::span<const Eigen::VectorXd> iterates, std::size_t count,
    std::mt19937_64& rng, SampleDomain domain,
    const std::optional<Eigen::VectorXd>& minimizer = std::nullopt) {
  std::vector<Eigen::VectorXd> out;
  if (iterates.empty() || count == 0) return out;
  if (minimizer) out.push_back(*minimizer);
  const std::size_t take = std::min(iterates.size(), std::max<std::size_t>(1, count / 2));
  for (std::size_t i = 0; i < take && out.size() < count; ++i) {
    const std::size_t idx =
        take == 1 ? iterates.size() - 1 : i * (iterates.size() - 1) / (take - 1);
    out.push_back(iterates[idx]);
  }
  std::uniform_int_distribution<std::size_t> pick(0, iterates.size() - 1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  while (out.size() < count) {
    Eigen::VectorXd x = iterates[pick(rng)];
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      if (domain == SampleDomain::positive) {
        x[j] *= std::exp(u(rng));
      } else {
        x[j] += u(rng) * (1.0 + std::abs(x[j]));
      }
    }
    out.push_back(std::move(x));
  }
  return out;
}

inline std::vector<Eigen::VectorXd> make_samples(
    const IterationTrace& trace, std::size_t count, std::mt19937_64& rng,
    SampleDomain domain,
    const std::optional<Eigen::VectorXd>& minimizer = std::nullopt) {
  const auto its = trace.iterates();
  return make_samples(its, count, rng, domain, minimizer);
}

// ---------------------------------------------------------------------------
// Inequality monitors. Every slack is divided by 1 + |f(x^k)|.

using IndexedFunction = std::function<double(std::size_t, const Eigen::VectorXd&)>;

/// G_k(x) - G_k(x^k) >= g_{k+1}(x) for k = 1..n.
/// `gap(k, x)` returns G_k(x) - G_k(x^k); `g_next(k, x)` returns g_{k+1}(x).
inline CheckReport check_summa(const IterationTrace& trace,
                               const IndexedFunction& gap,
                               const IndexedFunction& g_next,
                               std::span<const Eigen::VectorXd> samples,
                               double tol = kInequalityTolerance) {
  SlackAccumulator acc;
  for (std::size_t k = 1; k <= trace.iterations(); ++k) {
    const double scale = 1.0 + std::abs(trace.f(k));
    for (const auto& x : samples) {
      acc.add((gap(k, x) - g_next(k, x)) / scale);
    }
  }
  return acc.finish("summa", tol);
}

/// h_k(x) + f(x) >= h_{k+1}(x) + f(x^k) for k = first_k..n-1.
inline CheckReport check_summa2(const IndexedFunction& h,
                                const std::function<double(const Eigen::VectorXd&)>& f,
                                const IterationTrace& trace,
                                std::span<const Eigen::VectorXd> samples,
                                std::size_t first_k = 0,
                                double tol = kInequalityTolerance) {
  SlackAccumulator acc;
  for (std::size_t k = first_k; k < trace.iterations(); ++k) {
    const double fk = trace.f(k);
    const double scale = 1.0 + std::abs(fk);
    for (const auto& x : samples) {
      acc.add((h(k, x) + f(x) - h(k + 1, x) - fk) / scale);
    }
  }
  return acc.finish("summa2", tol);
}

/// Phi(x, y^k) - Phi(x^k, y^k) >= d(x, x^k) with d induced by Phi.
template <class Y>
CheckReport check_3pp(const AMInstance<Eigen::VectorXd, Y>& am,
                      const AmTrace<Eigen::VectorXd, Y>& trace,
                      std::span<const Eigen::VectorXd> samples,
                      double tol = kInequalityTolerance) {
  SlackAccumulator acc;
  for (std::size_t j = 0; j < trace.size(); ++j) {
    const double scale = 1.0 + std::abs(trace.values[j]);
    const Y& yk = trace.ys[j];
    const Y& yk1 = trace.ys[j + 1];  // y(x^k)
    for (const auto& x : samples) {
      const Y yx = am.argmin_y(x);
      const double d = am.phi(x, yk1) - am.phi(x, yx);
      acc.add((am.phi(x, yk) - trace.pre_values[j] - d) / scale);
    }
  }
  return acc.finish("three_point", tol);
}

/// Phi(x, y^k) - Phi(x^k, y^{k+1}) >= d(x, x^k), plus the SUMMA2 form it
/// implies: d(x, x^{k-1}) + f(x) >= d(x, x^k) + f(x^k).
template <class Y>
CheckReport check_w3pp(const AMInstance<Eigen::VectorXd, Y>& am,
                       const AmTrace<Eigen::VectorXd, Y>& trace,
                       std::span<const Eigen::VectorXd> samples,
                       double tol = kInequalityTolerance) {
  SlackAccumulator acc;
  for (std::size_t j = 0; j < trace.size(); ++j) {
    const double scale = 1.0 + std::abs(trace.values[j]);
    const Y& yk = trace.ys[j];
    const Y& yk1 = trace.ys[j + 1];
    for (const auto& x : samples) {
      const Y yx = am.argmin_y(x);
      const double fx = am.phi(x, yx);
      const double d_k = am.phi(x, yk1) - fx;
      acc.add("weak_three_point", (am.phi(x, yk) - trace.values[j] - d_k) / scale);
      if (j >= 1) {
        // d(x, x^{k-1}) uses y(x^{k-1}) = y^k.
        const double d_prev = am.phi(x, yk) - fx;
        acc.add("summa2_from_w3pp",
                (d_prev + fx - d_k - trace.values[j]) / scale);
      }
    }
  }
  return acc.finish("weak_three_point", tol);
}

}  // namespace auxfn
