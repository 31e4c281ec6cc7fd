#pragma once

// Alternating-minimization couplings Phi(x, r) for each problem family.
//
// Every family uses y(x) = r(x), the array closest to q(x) among arrays whose
// rows sum to the data. The x-minimizers below are the closed forms of
// argmin_x Phi(x, r) for an arbitrary array r; applied to r = r(z) they give
// the operators S, M, T, R and L, but they are computed from r directly and
// serve as an independent route to those operators.

#include <Eigen/Dense>

#include <cmath>

#include "auxfn/distances.hpp"
#include "auxfn/framework.hpp"
#include "auxfn/model.hpp"
#include "auxfn/solvers.hpp"

namespace auxfn {

using CouplingAM = AMInstance<Eigen::VectorXd, CoupleArray>;

/// Phi(x, r) = KL(q(x), r). argmin_x: log x_j = sum_i P_ij log(r_ij / P_ij).
inline CouplingAM smart_am(const ColumnStochastic& p, const Eigen::VectorXd& y) {
  CouplingAM am;
  am.phi = [p](const Eigen::VectorXd& x, const CoupleArray& r) {
    return kl_vec(kl_q_array(p, x), r);
  };
  am.argmin_x = [p](const CoupleArray& r) {
    Eigen::VectorXd x(p.cols());
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      double log_x = 0.0;
      bool zero = false;
      for (Eigen::Index i = 0; i < p.rows(); ++i) {
        const double pij = p(i, j);
        if (pij == 0.0) continue;
        if (r(i, j) == 0.0) {
          zero = true;
          break;
        }
        log_x += pij * std::log(r(i, j) / pij);
      }
      x[j] = zero ? 0.0 : std::exp(log_x);
    }
    return x;
  };
  am.argmin_y = [p, y](const Eigen::VectorXd& x) { return kl_r_array(p, y, x); };
  return am;
}

/// Phi(x, r) = KL(r, q(x)). argmin_x: x_j = sum_i r_ij.
inline CouplingAM emml_am(const ColumnStochastic& p, const Eigen::VectorXd& y) {
  CouplingAM am;
  am.phi = [p](const Eigen::VectorXd& x, const CoupleArray& r) {
    return kl_vec(r, kl_q_array(p, x));
  };
  am.argmin_x = [](const CoupleArray& r) -> Eigen::VectorXd {
    return r.colwise().sum().transpose();
  };
  am.argmin_y = [p, y](const Eigen::VectorXd& x) { return kl_r_array(p, y, x); };
  return am;
}

/// Phi(x, r) = H(r, q(x)). argmin_x: x_j = (sum_i sqrt(r_ij P_ij))^2.
inline CouplingAM hellinger_am(const ColumnStochastic& p, const Eigen::VectorXd& y) {
  CouplingAM am;
  am.phi = [p](const Eigen::VectorXd& x, const CoupleArray& r) {
    return hellinger(r, kl_q_array(p, x));
  };
  am.argmin_x = [p](const CoupleArray& r) -> Eigen::VectorXd {
    const Eigen::VectorXd root =
        r.cwiseProduct(p.values()).cwiseSqrt().colwise().sum().transpose();
    return root.cwiseAbs2();
  };
  am.argmin_y = [p, y](const Eigen::VectorXd& x) { return kl_r_array(p, y, x); };
  return am;
}

/// Phi(x, r) = phi^2(r, q(x)). argmin_x: x_j^2 = sum_i r_ij^2 / P_ij.
inline CouplingAM pearson_am(const ColumnStochastic& p, const Eigen::VectorXd& y) {
  CouplingAM am;
  am.phi = [p](const Eigen::VectorXd& x, const CoupleArray& r) {
    return pearson(r, kl_q_array(p, x));
  };
  am.argmin_x = [p](const CoupleArray& r) {
    Eigen::VectorXd x(p.cols());
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      double s = 0.0;
      for (Eigen::Index i = 0; i < p.rows(); ++i) {
        if (p(i, j) > 0.0) s += r(i, j) * r(i, j) / p(i, j);
      }
      x[j] = std::sqrt(s);
    }
    return x;
  };
  am.argmin_y = [p, y](const Eigen::VectorXd& x) { return kl_r_array(p, y, x); };
  return am;
}

/// Phi(x, r) = E(r, q(x)). argmin_x: x_j = sum_i A_ij r_ij / c_j.
/// f(x) = Phi(x, r(x)) = ||b - Ax||^2 / J.
inline CouplingAM euclid_am(const RealMatrix& a, const Eigen::VectorXd& b) {
  CouplingAM am;
  am.phi = [a](const Eigen::VectorXd& x, const CoupleArray& r) {
    return squared_distance(r, euclid_q_array(a, x));
  };
  am.argmin_x = [a](const CoupleArray& r) -> Eigen::VectorXd {
    const Eigen::VectorXd num =
        r.cwiseProduct(a.values()).colwise().sum().transpose();
    return num.cwiseQuotient(a.col_sq_sums());
  };
  am.argmin_y = [a, b](const Eigen::VectorXd& x) { return euclid_r_array(a, b, x); };
  return am;
}

inline CouplingAM kl_family_am(Family family, const ColumnStochastic& p,
                               const Eigen::VectorXd& y) {
  switch (family) {
    case Family::smart: return smart_am(p, y);
    case Family::emml: return emml_am(p, y);
    case Family::hellinger: return hellinger_am(p, y);
    case Family::pearson: return pearson_am(p, y);
    default: break;
  }
  throw std::invalid_argument("kl_family_am: not a KL-family problem");
}

}  // namespace auxfn
