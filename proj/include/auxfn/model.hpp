#pragma once

// Problem data for the linear system y = Px (nonnegative, KL family) and
// b = Ax (real, least squares), column normalization, and the I x J coupling
// arrays r(x), q(x) that the alternating-minimization derivations work with.

#include <Eigen/Dense>

#include <cmath>
#include <sstream>
#include <string>

#include "auxfn/distances.hpp"

namespace auxfn {

/// (Px)_i vanished (or fell below the representable floor) for some row i.
class SingularityError : public DomainError {
 public:
  SingularityError(Eigen::Index row, double value)
      : DomainError(make_message(row, value)), row_(row), value_(value) {}

  Eigen::Index row() const { return row_; }
  double value() const { return value_; }

 private:
  static std::string make_message(Eigen::Index row, double value) {
    std::ostringstream os;
    os << "singular forward projection: (Px)_" << row << " = " << value;
    return os.str();
  }
  Eigen::Index row_;
  double value_;
};

/// Rows of Px below this are treated as zero by every ratio operator.
inline constexpr double kProjectionFloor = 1e-300;

using CoupleArray = Eigen::MatrixXd;

/// I x J matrix of finite nonnegative entries with every column sum > 0.
class NonnegMatrix {
 public:
  explicit NonnegMatrix(Eigen::MatrixXd values) : values_(std::move(values)) {
    if (values_.rows() < 1 || values_.cols() < 1) {
      throw DimensionError("NonnegMatrix: empty matrix");
    }
    for (Eigen::Index j = 0; j < values_.cols(); ++j) {
      for (Eigen::Index i = 0; i < values_.rows(); ++i) {
        detail::require_nonneg(values_(i, j), "NonnegMatrix entry");
      }
    }
    column_sums_ = values_.colwise().sum().transpose();
    for (Eigen::Index j = 0; j < column_sums_.size(); ++j) {
      if (!(column_sums_[j] > 0.0)) {
        std::ostringstream os;
        os << "NonnegMatrix: column " << j << " is zero";
        throw DomainError(os.str());
      }
    }
  }

  const Eigen::MatrixXd& values() const { return values_; }
  const Eigen::VectorXd& column_sums() const { return column_sums_; }
  Eigen::Index rows() const { return values_.rows(); }
  Eigen::Index cols() const { return values_.cols(); }
  double operator()(Eigen::Index i, Eigen::Index j) const {
    return values_(i, j);
  }

  bool strictly_positive() const { return (values_.array() > 0.0).all(); }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
    if (x.size() != cols()) throw DimensionError("NonnegMatrix::apply: length");
    return values_ * x;
  }

 private:
  Eigen::MatrixXd values_;
  Eigen::VectorXd column_sums_;
};

struct Normalized;

/// A NonnegMatrix whose columns each sum to one (within 1e-12).
class ColumnStochastic : public NonnegMatrix {
 public:
  /// Wraps a matrix that is already column-normalized; throws otherwise.
  static ColumnStochastic from_normalized(Eigen::MatrixXd values) {
    NonnegMatrix m(std::move(values));
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (std::abs(m.column_sums()[j] - 1.0) > 1e-12) {
        std::ostringstream os;
        os << "ColumnStochastic: column " << j << " sums to "
           << m.column_sums()[j];
        throw DomainError(os.str());
      }
    }
    return ColumnStochastic(std::move(m));
  }

 private:
  friend struct Normalized;
  friend Normalized normalize_columns(const NonnegMatrix&,
                                      const Eigen::VectorXd&);
  explicit ColumnStochastic(NonnegMatrix m) : NonnegMatrix(std::move(m)) {}
};

/// Real I x J matrix with no zero column; caches c_j = sum_i A_ij^2.
class RealMatrix {
 public:
  explicit RealMatrix(Eigen::MatrixXd values) : values_(std::move(values)) {
    if (values_.rows() < 1 || values_.cols() < 1) {
      throw DimensionError("RealMatrix: empty matrix");
    }
    for (Eigen::Index j = 0; j < values_.cols(); ++j) {
      for (Eigen::Index i = 0; i < values_.rows(); ++i) {
        detail::require_finite(values_(i, j), "RealMatrix entry");
      }
    }
    col_sq_sums_ = values_.colwise().squaredNorm().transpose();
    for (Eigen::Index j = 0; j < col_sq_sums_.size(); ++j) {
      if (!(col_sq_sums_[j] > 0.0)) {
        std::ostringstream os;
        os << "RealMatrix: column " << j << " is zero";
        throw DomainError(os.str());
      }
    }
  }

  const Eigen::MatrixXd& values() const { return values_; }
  const Eigen::VectorXd& col_sq_sums() const { return col_sq_sums_; }
  Eigen::Index rows() const { return values_.rows(); }
  Eigen::Index cols() const { return values_.cols(); }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
    if (x.size() != cols()) throw DimensionError("RealMatrix::apply: length");
    return values_ * x;
  }

 private:
  Eigen::MatrixXd values_;
  Eigen::VectorXd col_sq_sums_;
};

/// Column-normalized form of (P, x): P' = P diag(1/s), x' = diag(s) x,
/// so that P'x' = Px.
struct Normalized {
  ColumnStochastic matrix;
  Eigen::VectorXd x;
  Eigen::VectorXd scale;  // the original column sums s_j

  Eigen::VectorXd to_original(const Eigen::VectorXd& xn) const {
    return xn.cwiseQuotient(scale);
  }
  Eigen::VectorXd to_normalized(const Eigen::VectorXd& xo) const {
    return xo.cwiseProduct(scale);
  }
};

inline Normalized normalize_columns(const NonnegMatrix& p,
                                    const Eigen::VectorXd& x) {
  if (x.size() != p.cols()) {
    throw DimensionError("normalize_columns: x length must equal column count");
  }
  const Eigen::VectorXd& s = p.column_sums();
  Eigen::MatrixXd scaled = p.values();
  for (Eigen::Index j = 0; j < scaled.cols(); ++j) scaled.col(j) /= s[j];
  // Recomputing the sums of the scaled columns can differ from 1 by a few
  // ulps; that is within ColumnStochastic's tolerance.
  return Normalized{ColumnStochastic(NonnegMatrix(std::move(scaled))),
                    x.cwiseProduct(s), s};
}

/// Problem y = Px over x >= 0 for the KL-family solvers.
struct KlProblem {
  NonnegMatrix matrix;
  Eigen::VectorXd data;
  Eigen::VectorXd start;

  KlProblem(NonnegMatrix p, Eigen::VectorXd y, Eigen::VectorXd x0)
      : matrix(std::move(p)), data(std::move(y)), start(std::move(x0)) {
    if (data.size() != matrix.rows()) {
      throw DimensionError("KlProblem: data length must equal row count");
    }
    if (start.size() != matrix.cols()) {
      throw DimensionError("KlProblem: start length must equal column count");
    }
    for (Eigen::Index i = 0; i < data.size(); ++i) {
      detail::require_positive(data[i], "KlProblem data");
    }
    for (Eigen::Index j = 0; j < start.size(); ++j) {
      detail::require_positive(start[j], "KlProblem start");
    }
  }
};

/// Problem b = Ax in the least-squares sense.
struct EuclidProblem {
  RealMatrix matrix;
  Eigen::VectorXd data;
  Eigen::VectorXd start;

  EuclidProblem(RealMatrix a, Eigen::VectorXd b, Eigen::VectorXd x0)
      : matrix(std::move(a)), data(std::move(b)), start(std::move(x0)) {
    if (data.size() != matrix.rows()) {
      throw DimensionError("EuclidProblem: data length must equal row count");
    }
    if (start.size() != matrix.cols()) {
      throw DimensionError("EuclidProblem: start length must equal column count");
    }
    for (Eigen::Index i = 0; i < data.size(); ++i) {
      detail::require_finite(data[i], "EuclidProblem data");
    }
    for (Eigen::Index j = 0; j < start.size(); ++j) {
      detail::require_finite(start[j], "EuclidProblem start");
    }
  }
};

namespace detail {

inline Eigen::VectorXd checked_projection(const NonnegMatrix& p,
                                          const Eigen::VectorXd& x) {
  Eigen::VectorXd px = p.apply(x);
  for (Eigen::Index i = 0; i < px.size(); ++i) {
    if (!(px[i] >= kProjectionFloor)) throw SingularityError(i, px[i]);
  }
  return px;
}

}  // namespace detail

/// r(x)_ij = x_j P_ij y_i / (Px)_i. Row i sums to y_i.
inline CoupleArray kl_r_array(const NonnegMatrix& p, const Eigen::VectorXd& y,
                              const Eigen::VectorXd& x) {
  if (y.size() != p.rows()) throw DimensionError("kl_r_array: y length");
  const Eigen::VectorXd px = detail::checked_projection(p, x);
  CoupleArray r(p.rows(), p.cols());
  for (Eigen::Index j = 0; j < p.cols(); ++j) {
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      r(i, j) = x[j] * p(i, j) * y[i] / px[i];
    }
  }
  return r;
}

/// q(x)_ij = x_j P_ij.
inline CoupleArray kl_q_array(const NonnegMatrix& p, const Eigen::VectorXd& x) {
  if (x.size() != p.cols()) throw DimensionError("kl_q_array: x length");
  return p.values() * x.asDiagonal();
}

/// r(x)_ij = A_ij x_j + (b_i - (Ax)_i) / J, the minimizer of E(r, q(x)) over
/// arrays whose rows sum to b.
inline CoupleArray euclid_r_array(const RealMatrix& a, const Eigen::VectorXd& b,
                                  const Eigen::VectorXd& x) {
  if (b.size() != a.rows()) throw DimensionError("euclid_r_array: b length");
  const Eigen::VectorXd residual = b - a.apply(x);
  const double inv_j = 1.0 / static_cast<double>(a.cols());
  CoupleArray r = a.values() * x.asDiagonal();
  r.colwise() += inv_j * residual;
  return r;
}

/// q(x)_ij = A_ij x_j.
inline CoupleArray euclid_q_array(const RealMatrix& a, const Eigen::VectorXd& x) {
  if (x.size() != a.cols()) throw DimensionError("euclid_q_array: x length");
  return a.values() * x.asDiagonal();
}

}  // namespace auxfn
