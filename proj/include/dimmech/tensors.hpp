#pragma once

/// @file tensors.hpp
/// Pointwise tensor calculus for Lichnerowicz pairs: Schouten square of a
/// bivector, Lie derivative of a bivector along a vector field, and R wedge pi.

#include <dimmech/field.hpp>

namespace dimmech {

/// A bivector and its first derivatives at one point: pi(i,j) and
/// dpi[l](i,j) = d_l pi^{ij}. Both are antisymmetric in (i,j).
struct LocalBivector {
  Eigen::MatrixXd pi;
  std::vector<Eigen::MatrixXd> dpi;

  static LocalBivector of(const BivectorField &P, const Point &x) {
    auto n = static_cast<Eigen::Index>(P.n());
    LocalBivector L;
    L.pi = Eigen::MatrixXd::Zero(n, n);
    L.dpi.assign(static_cast<std::size_t>(n), Eigen::MatrixXd::Zero(n, n));
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const ScalarField &f = P.upper_[P.slot(static_cast<std::size_t>(i), static_cast<std::size_t>(j))];
        if (f.is_zero())
          continue;
        Jet jt = f.jet(x, 1);
        L.pi(i, j) = jt.v;
        L.pi(j, i) = -jt.v;
        for (Eigen::Index l = 0; l < n; ++l) {
          L.dpi[static_cast<std::size_t>(l)](i, j) = jt.g[l];
          L.dpi[static_cast<std::size_t>(l)](j, i) = -jt.g[l];
        }
      }
    return L;
  }
};

/// A vector and its Jacobian at one point: dv(i,l) = d_l v^i.
struct LocalVector {
  Eigen::VectorXd v;
  Eigen::MatrixXd dv;

  static LocalVector of(const VectorField &X, const Point &x) {
    auto n = static_cast<Eigen::Index>(X.n());
    LocalVector L;
    L.v = Eigen::VectorXd::Zero(n);
    L.dv = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const ScalarField &f = X[static_cast<std::size_t>(i)];
      if (f.is_zero())
        continue;
      Jet jt = f.jet(x, 1);
      L.v[i] = jt.v;
      L.dv.row(i) = jt.g.transpose();
    }
    return L;
  }
};

/// Totally antisymmetric rank-3 array stored by its components i < j < k.
class Trivector {
public:
  explicit Trivector(std::size_t n) : n_(n), c_(n >= 3 ? n * (n - 1) * (n - 2) / 6 : 0, 0.0) {}

  std::size_t n() const { return n_; }

  double operator()(std::size_t i, std::size_t j, std::size_t k) const {
    if (i == j || j == k || i == k)
      return 0.0;
    int sign = 1;
    // sort with parity
    if (i > j) { std::swap(i, j); sign = -sign; }
    if (j > k) { std::swap(j, k); sign = -sign; }
    if (i > j) { std::swap(i, j); sign = -sign; }
    return sign * c_[slot(i, j, k)];
  }

  double &at_sorted(std::size_t i, std::size_t j, std::size_t k) { return c_[slot(i, j, k)]; }

  const std::vector<double> &independent() const { return c_; }

  double max_abs() const {
    double m = 0.0;
    for (double v : c_)
      m = std::max(m, std::abs(v));
    return m;
  }

  Trivector &operator+=(const Trivector &o) {
    for (std::size_t s = 0; s < c_.size(); ++s)
      c_[s] += o.c_[s];
    return *this;
  }

  Trivector operator*(double a) const {
    Trivector r = *this;
    for (double &v : r.c_)
      v *= a;
    return r;
  }

private:
  std::size_t slot(std::size_t i, std::size_t j, std::size_t k) const {
    // combinatorial number system index of the sorted triple
    return k * (k - 1) * (k - 2) / 6 + j * (j - 1) / 2 + i;
  }

  std::size_t n_;
  std::vector<double> c_;
};

/// [pi,pi]^{ijk} = 2 sum_l (pi^{il} d_l pi^{jk} + pi^{jl} d_l pi^{ki} + pi^{kl} d_l pi^{ij}).
/// With this contraction order, {f,g} = pi(df,dg) + f R[g] - g R[f] obeys the
/// Jacobi identity exactly when [R,pi] = 0 and [pi,pi] + 2 R^pi = 0.
inline Trivector schouten_pi_pi(const LocalBivector &L) {
  auto n = static_cast<std::size_t>(L.pi.rows());
  Trivector T(n);
  auto term = [&](std::size_t a, std::size_t b, std::size_t c) {
    double s = 0.0;
    for (std::size_t l = 0; l < n; ++l)
      s += L.pi(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(l)) *
           L.dpi[l](static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(c));
    return s;
  };
  for (std::size_t k = 2; k < n; ++k)
    for (std::size_t j = 1; j < k; ++j)
      for (std::size_t i = 0; i < j; ++i)
        T.at_sorted(i, j, k) = 2.0 * (term(i, j, k) + term(j, k, i) + term(k, i, j));
  return T;
}

/// (R^pi)^{ijk} = R^i pi^{jk} + R^j pi^{ki} + R^k pi^{ij}.
inline Trivector wedge_R_pi(const Eigen::VectorXd &R, const Eigen::MatrixXd &pi) {
  auto n = static_cast<std::size_t>(pi.rows());
  Trivector T(n);
  for (std::size_t k = 2; k < n; ++k)
    for (std::size_t j = 1; j < k; ++j)
      for (std::size_t i = 0; i < j; ++i) {
        auto I = static_cast<Eigen::Index>(i), J = static_cast<Eigen::Index>(j),
             K = static_cast<Eigen::Index>(k);
        T.at_sorted(i, j, k) = R[I] * pi(J, K) + R[J] * pi(K, I) + R[K] * pi(I, J);
      }
  return T;
}

/// (L_R pi)^{ij} = R^l d_l pi^{ij} - pi^{lj} d_l R^i - pi^{il} d_l R^j.
inline Eigen::MatrixXd lie_derivative_bivector(const LocalVector &R, const LocalBivector &L) {
  auto n = L.pi.rows();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (Eigen::Index l = 0; l < n; ++l)
        s += R.v[l] * L.dpi[static_cast<std::size_t>(l)](i, j) - L.pi(l, j) * R.dv(i, l) -
             L.pi(i, l) * R.dv(j, l);
      out(i, j) = s;
      out(j, i) = -s;
    }
  if (!out.allFinite())
    throw NonFinite("lie_derivative_bivector");
  return out;
}

inline Trivector schouten_pi_pi(const BivectorField &P, const Point &x) {
  return schouten_pi_pi(LocalBivector::of(P, x));
}

inline Trivector wedge_R_pi(const VectorField &R, const BivectorField &P, const Point &x) {
  require_same_chart(R.chart(), P.chart(), "wedge_R_pi");
  return wedge_R_pi(R.value(x), P.value(x));
}

inline Eigen::MatrixXd lie_derivative_bivector(const VectorField &R, const BivectorField &P,
                                               const Point &x) {
  require_same_chart(R.chart(), P.chart(), "lie_derivative_bivector");
  return lie_derivative_bivector(LocalVector::of(R, x), LocalBivector::of(P, x));
}

} // namespace dimmech
