#pragma once

// Componentwise divergences on nonnegative vectors and arrays: KL, Hellinger,
// Pearson phi^2, weighted squared Euclidean, Bregman and phi-divergences.
//
// All vector-valued entry points accept any Eigen dense expression (vectors,
// matrices, arrays); the divergence is summed over every coefficient.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "auxfn/check_report.hpp"

namespace auxfn {

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

namespace detail {

inline void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) {
    std::ostringstream os;
    os << what << ": non-finite value " << v;
    throw DomainError(os.str());
  }
}

inline void require_nonneg(double v, const char* what) {
  require_finite(v, what);
  if (v < 0.0) {
    std::ostringstream os;
    os << what << ": negative value " << v;
    throw DomainError(os.str());
  }
}

inline void require_positive(double v, const char* what) {
  require_finite(v, what);
  if (v <= 0.0) {
    std::ostringstream os;
    os << what << ": nonpositive value " << v;
    throw DomainError(os.str());
  }
}

template <class A, class B>
void require_same_shape(const Eigen::DenseBase<A>& a,
                        const Eigen::DenseBase<B>& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    std::ostringstream os;
    os << what << ": shape mismatch " << a.rows() << "x" << a.cols() << " vs "
       << b.rows() << "x" << b.cols();
    throw DimensionError(os.str());
  }
}

}  // namespace detail

/// A vector of finite nonnegative reals whose length is fixed at
/// construction.
class NonnegVector {
 public:
  explicit NonnegVector(Eigen::VectorXd values) : values_(std::move(values)) {
    if (values_.size() < 1) throw DimensionError("NonnegVector: empty");
    for (Eigen::Index j = 0; j < values_.size(); ++j) {
      detail::require_nonneg(values_[j], "NonnegVector");
    }
  }

  const Eigen::VectorXd& values() const { return values_; }
  Eigen::Index size() const { return values_.size(); }
  double operator[](Eigen::Index j) const { return values_[j]; }
  double sum() const { return values_.sum(); }

 private:
  Eigen::VectorXd values_;
};

/// KL(s, t) = s log(s/t) + t - s, extended by limits: KL(0, t) = t and
/// KL(s, 0) = +inf for s > 0.
inline double kl(double s, double t) {
  detail::require_nonneg(s, "kl");
  detail::require_nonneg(t, "kl");
  if (s == 0.0) return t;
  if (t == 0.0) return kInfinity;
  return s * std::log(s / t) + t - s;
}

template <class A, class B>
double kl_vec(const Eigen::DenseBase<A>& x, const Eigen::DenseBase<B>& z) {
  detail::require_same_shape(x, z, "kl_vec");
  double total = 0.0;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      total += kl(x(i, j), z(i, j));
    }
  }
  return total;
}

inline double kl_vec(const NonnegVector& x, const NonnegVector& z) {
  return kl_vec(x.values(), z.values());
}

/// KL(x, z) split into the mass term KL(x+, z+) and the shape term
/// KL(x, (x+/z+) z).
struct KlSplit {
  double total;
  double mass_part;
  double shape_part;
};

template <class A, class B>
KlSplit kl_split(const Eigen::DenseBase<A>& x, const Eigen::DenseBase<B>& z) {
  detail::require_same_shape(x, z, "kl_split");
  const double x_mass = x.sum();
  const double z_mass = z.sum();
  if (!(z_mass > 0.0)) throw DomainError("kl_split: z has zero total mass");
  const Eigen::MatrixXd rescaled = (x_mass / z_mass) * z.derived();
  return KlSplit{kl_vec(x, z), kl(x_mass, z_mass), kl_vec(x, rescaled)};
}

inline double hellinger(double s, double t) {
  detail::require_nonneg(s, "hellinger");
  detail::require_nonneg(t, "hellinger");
  const double d = std::sqrt(s) - std::sqrt(t);
  return d * d;
}

template <class A, class B>
double hellinger(const Eigen::DenseBase<A>& x, const Eigen::DenseBase<B>& z) {
  detail::require_same_shape(x, z, "hellinger");
  double total = 0.0;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      total += hellinger(x(i, j), z(i, j));
    }
  }
  return total;
}

/// Pearson phi^2(s, t) = (s - t)^2 / t. Requires t > 0.
inline double pearson(double s, double t) {
  detail::require_nonneg(s, "pearson");
  detail::require_positive(t, "pearson");
  const double d = s - t;
  return d * d / t;
}

template <class A, class B>
double pearson(const Eigen::DenseBase<A>& x, const Eigen::DenseBase<B>& z) {
  detail::require_same_shape(x, z, "pearson");
  double total = 0.0;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      total += pearson(x(i, j), z(i, j));
    }
  }
  return total;
}

/// sum_j w_j (x_j - z_j)^2 over real vectors with positive weights.
template <class A, class B, class W>
double weighted_sq(const Eigen::DenseBase<A>& x, const Eigen::DenseBase<B>& z,
                   const Eigen::DenseBase<W>& w) {
  detail::require_same_shape(x, z, "weighted_sq");
  detail::require_same_shape(x, w, "weighted_sq");
  double total = 0.0;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      detail::require_finite(x(i, j), "weighted_sq");
      detail::require_finite(z(i, j), "weighted_sq");
      detail::require_positive(w(i, j), "weighted_sq weight");
      const double d = x(i, j) - z(i, j);
      total += w(i, j) * d * d;
    }
  }
  return total;
}

/// Plain squared Euclidean distance, the coupling E(u, v) of the least
/// squares alternating minimization.
template <class A, class B>
double squared_distance(const Eigen::DenseBase<A>& x,
                        const Eigen::DenseBase<B>& z) {
  detail::require_same_shape(x, z, "squared_distance");
  double total = 0.0;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      detail::require_finite(x(i, j), "squared_distance");
      detail::require_finite(z(i, j), "squared_distance");
      const double d = x(i, j) - z(i, j);
      total += d * d;
    }
  }
  return total;
}

/// D_h(x, z) = h(x) - h(z) - <grad h(z), x - z>.
template <class H, class GradH>
double bregman(H&& h, GradH&& grad_h, const Eigen::VectorXd& x,
               const Eigen::VectorXd& z) {
  if (x.size() != z.size()) throw DimensionError("bregman: length mismatch");
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    detail::require_finite(x[j], "bregman");
    detail::require_finite(z[j], "bregman");
  }
  const Eigen::VectorXd g = grad_h(z);
  if (g.size() != z.size()) throw DimensionError("bregman: gradient length");
  return h(x) - h(z) - g.dot(x - z);
}

/// Convex kernel phi with phi(1) = phi'(1) = 0, used to build
/// d_phi(x, z) = sum_j z_j phi(x_j / z_j).
struct PhiSpec {
  std::string name;
  std::function<double(double)> phi;
  std::function<double(double)> dphi;
  double ddphi1 = 0.0;  // phi''(1)
};

/// phi(t) = (sqrt t - 1)^2, giving the Hellinger distance.
inline PhiSpec hellinger_phi() {
  return PhiSpec{"hellinger",
                 [](double t) {
                   const double d = std::sqrt(t) - 1.0;
                   return d * d;
                 },
                 [](double t) { return 1.0 - 1.0 / std::sqrt(t); }, 0.5};
}

/// phi(t) = t log t - t + 1, giving the KL distance.
inline PhiSpec entropy_phi() {
  return PhiSpec{"entropy",
                 [](double t) { return t * std::log(t) - t + 1.0; },
                 [](double t) { return std::log(t); }, 1.0};
}

/// phi(t) = (t - 1)^2, giving Pearson's phi^2 distance.
inline PhiSpec pearson_phi() {
  return PhiSpec{"pearson",
                 [](double t) { return (t - 1.0) * (t - 1.0); },
                 [](double t) { return 2.0 * (t - 1.0); }, 2.0};
}

template <class A, class B>
double phi_distance(const PhiSpec& spec, const Eigen::DenseBase<A>& x,
                    const Eigen::DenseBase<B>& z) {
  detail::require_same_shape(x, z, "phi_distance");
  double total = 0.0;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      detail::require_positive(x(i, j), "phi_distance");
      detail::require_positive(z(i, j), "phi_distance");
      total += z(i, j) * spec.phi(x(i, j) / z(i, j));
    }
  }
  return total;
}

/// Checks the kernel conditions on a grid of positive points:
///   phi(t) >= 0,
///   phi''(1)(1 - 1/t) <= phi'(t) <= phi''(1) log t,
///   phi(1) = phi'(1) = 0 (within 1e-12),
///   convexity via second divided differences >= -1e-9.
/// Each condition's worst slack is reported as a component.
inline CheckReport validate_phi(const PhiSpec& spec,
                                std::span<const double> grid) {
  constexpr double kTolerance = 1e-9;
  constexpr double kAnchorTolerance = 1e-12;
  SlackAccumulator acc;
  std::vector<double> pts(grid.begin(), grid.end());
  std::sort(pts.begin(), pts.end());

  bool bad_grid = pts.empty();
  for (double t : pts) {
    if (!(t > 0.0) || !std::isfinite(t)) bad_grid = true;
  }
  if (bad_grid) {
    CheckReport r = acc.finish("validate_phi:" + spec.name, kTolerance);
    r.pass = false;
    r.add_note("grid must be nonempty and strictly positive");
    return r;
  }

  for (double t : pts) {
    const double p = spec.phi(t);
    const double dp = spec.dphi(t);
    acc.add("nonnegative", p);
    acc.add("derivative_lower", dp - spec.ddphi1 * (1.0 - 1.0 / t));
    acc.add("derivative_upper", spec.ddphi1 * std::log(t) - dp);
  }

  // The anchor slacks are rescaled so a 1e-12 miss maps onto the shared
  // tolerance.
  const double scale = kTolerance / kAnchorTolerance;
  acc.add("phi_at_one", -std::abs(spec.phi(1.0)) * scale);
  acc.add("phi_prime_at_one", -std::abs(spec.dphi(1.0)) * scale);

  for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
    const double h0 = pts[i] - pts[i - 1];
    const double h1 = pts[i + 1] - pts[i];
    if (h0 <= 0.0 || h1 <= 0.0) continue;
    const double left = (spec.phi(pts[i]) - spec.phi(pts[i - 1])) / h0;
    const double right = (spec.phi(pts[i + 1]) - spec.phi(pts[i])) / h1;
    acc.add("convexity", (right - left) / (0.5 * (h0 + h1)));
  }

  CheckReport r = acc.finish("validate_phi:" + spec.name, kTolerance);
  std::ostringstream os;
  os << "grid [" << pts.front() << ", " << pts.back() << "]";
  r.add_note(os.str());
  if (pts.front() < 0.01) {
    r.add_note("derivative bracket near t -> 0+ is not guaranteed by the kernel conditions");
  } else {
    r.add_note("t < 0.01 not sampled");
  }
  for (const auto& [k, v] : r.components) {
    if (!(v >= -kTolerance)) r.add_note("failed: " + k);
  }
  return r;
}

/// Log-spaced grid of `count` points on [lo, hi].
inline std::vector<double> log_grid(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0) || !(hi >= lo) || count == 0) {
    throw DomainError("log_grid: need 0 < lo <= hi and count >= 1");
  }
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = lo;
    return out;
  }
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = std::exp(a + (b - a) * static_cast<double>(i) /
                              static_cast<double>(count - 1));
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

/// -sum_j x_j log x_j with 0 log 0 = 0.
template <class A>
double shannon_entropy(const Eigen::DenseBase<A>& x) {
  double total = 0.0;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double v = x(i, j);
      detail::require_nonneg(v, "shannon_entropy");
      if (v > 0.0) total -= v * std::log(v);
    }
  }
  return total;
}

}  // namespace auxfn
