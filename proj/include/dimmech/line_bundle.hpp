#pragma once

/// @file line_bundle.hpp
/// Calculus on trivial line bundles R_M over a chart. Sections are scalar
/// fields, factors are pairs (b, beta), derivations are pairs X (+) f, and
/// first jets are pairs (ds, s).

#include <dimmech/field.hpp>
#include <dimmech/sampling.hpp>

#include <optional>

namespace dimmech {

inline constexpr std::size_t kNonvanishingSamples = 10000;
inline constexpr double kNonvanishingThreshold = 1e-12;
inline constexpr std::uint64_t kDefaultSeed = 0x5eed5eed5eedULL;

/// Throws VanishingDenominator if |f| <= 1e-12 (or f is undefined) at any of
/// 10^4 quasi-random points of the chart's sampling box, or if f takes both
/// signs there (the box is connected, so a sign change implies a zero).
inline void certify_nonvanishing(const ScalarField &f, const std::string &what,
                                 std::uint64_t seed = kDefaultSeed) {
  int sign = 0;
  for (const Point &x : quasi_random(*f.chart(), kNonvanishingSamples, seed)) {
    double v;
    try {
      v = f.value(x);
    } catch (const Error &e) {
      throw VanishingDenominator(what + " is undefined at a sample point: " + e.what());
    }
    if (!(std::abs(v) > kNonvanishingThreshold))
      throw VanishingDenominator(what + " vanishes near a sample point");
    int s = v > 0 ? 1 : -1;
    if (sign != 0 && s != sign)
      throw VanishingDenominator(what + " changes sign on the sampling box");
    sign = s;
  }
}

/// Fibre-wise invertible morphism R_M -> R_N covering b: M -> N, scaling
/// fibres by beta. Optionally carries the inverse of b as expressions on N.
class Factor {
public:
  Factor(Chart source, Chart target, std::vector<ScalarField> b, ScalarField beta,
         std::optional<std::vector<ScalarField>> inverse = std::nullopt, bool certify = true)
      : source_(std::move(source)), target_(std::move(target)), b_(std::move(b)),
        beta_(std::move(beta)), inverse_(std::move(inverse)) {
    if (b_.size() != target_->n())
      throw LengthMismatch("factor base map needs one component per target coordinate");
    for (const auto &c : b_)
      require_same_chart(c.chart(), source_, "Factor base map");
    require_same_chart(beta_.chart(), source_, "Factor beta");
    if (inverse_) {
      if (inverse_->size() != source_->n())
        throw LengthMismatch("factor inverse needs one component per source coordinate");
      for (const auto &c : *inverse_)
        require_same_chart(c.chart(), target_, "Factor inverse");
    }
    if (certify)
      certify_nonvanishing(beta_, "factor beta");
  }

  static Factor identity(const Chart &c) {
    std::vector<ScalarField> id;
    for (std::size_t i = 0; i < c->n(); ++i)
      id.push_back(ScalarField::coordinate(c, i));
    return {c, c, id, ScalarField::constant(c, 1.0), id, false};
  }

  const Chart &source() const { return source_; }
  const Chart &target() const { return target_; }
  const std::vector<ScalarField> &b() const { return b_; }
  const ScalarField &beta() const { return beta_; }
  bool has_inverse() const { return inverse_.has_value(); }

  const std::vector<ScalarField> &inverse() const {
    if (!inverse_)
      throw NoInverseDeclared("factor has no declared inverse");
    return *inverse_;
  }

  /// b(x); DomainError if it leaves the target chart's bounds.
  Point map(const Point &x) const {
    Point y(static_cast<Eigen::Index>(b_.size()));
    for (std::size_t i = 0; i < b_.size(); ++i)
      y[static_cast<Eigen::Index>(i)] = b_[i].value(x);
    if (!target_->contains(y))
      throw DomainError("base map leaves the target chart");
    return y;
  }

  /// Jacobian T_x b, rows indexed by target coordinates.
  Eigen::MatrixXd jacobian(const Point &x) const {
    Eigen::MatrixXd J(static_cast<Eigen::Index>(b_.size()), x.size());
    for (std::size_t i = 0; i < b_.size(); ++i)
      J.row(static_cast<Eigen::Index>(i)) = b_[i].grad(x).transpose();
    return J;
  }

  /// Same base map with beta multiplied by `scale` (a source field).
  Factor rescaled(const ScalarField &scale) const {
    return {source_, target_, b_, beta_ * scale, inverse_};
  }

private:
  Chart source_, target_;
  std::vector<ScalarField> b_;
  ScalarField beta_;
  std::optional<std::vector<ScalarField>> inverse_;
};

/// (b, beta)* s = (s o b) / beta.
inline ScalarField pullback_section(const Factor &F, const ScalarField &s) {
  require_same_chart(s.chart(), F.target(), "pullback_section");
  return s.compose(F.source(), F.b()) / F.beta();
}

/// F o G for G: A -> B and F: B -> C.
inline Factor compose(const Factor &F, const Factor &G) {
  require_same_chart(G.target(), F.source(), "compose");
  std::vector<ScalarField> b;
  for (const auto &c : F.b())
    b.push_back(c.compose(G.source(), G.b()));
  ScalarField beta = F.beta().compose(G.source(), G.b()) * G.beta();
  std::optional<std::vector<ScalarField>> inv;
  if (F.has_inverse() && G.has_inverse()) {
    inv.emplace();
    for (const auto &c : G.inverse())
      inv->push_back(c.compose(F.target(), F.inverse()));
  }
  return {G.source(), F.target(), b, beta, inv, false};
}

/// The factor B^{-1} = (b^{-1}, 1 / (beta o b^{-1})).
inline Factor inverse_factor(const Factor &F) {
  const auto &inv = F.inverse();
  ScalarField beta = ScalarField::constant(F.target(), 1.0) / F.beta().compose(F.target(), inv);
  return {F.target(), F.source(), inv, beta, F.b(), false};
}

/// Derivation X (+) f of R_M, acting on sections by s |-> X[s] + f s.
struct Derivation {
  VectorField X;
  ScalarField f;

  Derivation(VectorField X_, ScalarField f_) : X(std::move(X_)), f(std::move(f_)) {
    require_same_chart(X.chart(), f.chart(), "Derivation");
  }

  static Derivation zero(const Chart &c) { return {VectorField::zero(c), ScalarField::constant(c, 0.0)}; }

  const Chart &chart() const { return X.chart(); }
};

inline Derivation operator+(const Derivation &a, const Derivation &b) { return {a.X + b.X, a.f + b.f}; }
inline Derivation operator*(double c, const Derivation &a) {
  return {ScalarField::constant(a.chart(), c) * a.X, c * a.f};
}

/// A derivation evaluated at a point: tangent vector v and real a.
struct DerValue {
  Point point;
  Eigen::VectorXd v;
  double a = 0.0;
};

inline DerValue derivation_at(const Derivation &D, const Point &x) { return {x, D.X.value(x), D.f.value(x)}; }

inline ScalarField apply_derivation(const Derivation &D, const ScalarField &s) {
  require_same_chart(D.chart(), s.chart(), "apply_derivation");
  return D.X.apply(s) + D.f * s;
}

/// [X (+) f, Y (+) g] = [X,Y] (+) (X[g] - Y[f]).
inline Derivation der_bracket(const Derivation &D1, const Derivation &D2) {
  require_same_chart(D1.chart(), D2.chart(), "der_bracket");
  return {lie_bracket(D1.X, D2.X), D1.X.apply(D2.f) - D2.X.apply(D1.f)};
}

/// D(b,beta)(v (+) a) = T_x b(v) (+) (a - d_x beta(v) / beta(x)), based at b(x).
inline DerValue der_map(const Factor &F, const Point &x, const DerValue &d) {
  if (d.point.size() != x.size() || d.point != x)
    throw BasePointMismatch("der_map: derivation value is based elsewhere");
  Jet beta = F.beta().jet(x, 1);
  if (beta.v == 0.0)
    throw DomainError("der_map: beta vanishes");
  return {F.map(x), F.jacobian(x) * d.v, d.a - beta.g.dot(d.v) / beta.v};
}

/// B_* (X (+) f) on the target, using the declared inverse of b.
inline Derivation der_pushforward(const Factor &F, const Derivation &D) {
  require_same_chart(D.chart(), F.source(), "der_pushforward");
  const auto &inv = F.inverse();
  std::vector<ScalarField> comps;
  for (const auto &bi : F.b()) {
    ScalarField c = ScalarField::constant(F.source(), 0.0);
    for (std::size_t j = 0; j < D.X.n(); ++j)
      c = c + bi.diff(j) * D.X[j];
    comps.push_back(c.compose(F.target(), inv));
  }
  ScalarField scalar = D.f - D.X.apply(F.beta()) / F.beta();
  return {VectorField(F.target(), comps), scalar.compose(F.target(), inv)};
}

/// First jet of a section at a point: p = ds(x), u = s(x).
struct JetValue {
  Point base_point;
  Covector p;
  double u = 0.0;
};

inline JetValue jet_prolong(const ScalarField &s, const Point &x) {
  Jet j = s.jet(x, 1);
  return {x, j.g, j.v};
}

/// p . v + u a.
inline double jet_pairing(const JetValue &j, const DerValue &d) {
  if (j.base_point.size() != d.point.size() || j.base_point != d.point)
    throw BasePointMismatch("jet_pairing: jet and derivation are based at different points");
  return j.p.dot(d.v) + j.u * d.a;
}

/// Coordinate model M x N x R^x of the line product of R_M and R_N.
struct BaseProduct {
  Chart chart;
  Chart left, right;
  std::size_t n1 = 0, n2 = 0;

  std::size_t ratio_index() const { return n1 + n2; }

  ScalarField ratio_coordinate() const { return ScalarField::coordinate(chart, ratio_index()); }

  /// Pulls a left-chart field back along (y1, y2, b) -> y1.
  ScalarField from_left(const ScalarField &f) const {
    require_same_chart(f.chart(), left, "BaseProduct::from_left");
    std::vector<ScalarField> subs;
    for (std::size_t i = 0; i < n1; ++i)
      subs.push_back(ScalarField::coordinate(chart, i));
    return f.compose(chart, subs);
  }

  ScalarField from_right(const ScalarField &f) const {
    require_same_chart(f.chart(), right, "BaseProduct::from_right");
    std::vector<ScalarField> subs;
    for (std::size_t i = 0; i < n2; ++i)
      subs.push_back(ScalarField::coordinate(chart, n1 + i));
    return f.compose(chart, subs);
  }

  Point left_point(const Point &x) const { return x.head(static_cast<Eigen::Index>(n1)); }
  Point right_point(const Point &x) const { return x.segment(static_cast<Eigen::Index>(n1), static_cast<Eigen::Index>(n2)); }
  double ratio(const Point &x) const { return x[static_cast<Eigen::Index>(ratio_index())]; }

  /// P1 = (y1, 1): sections of the left bundle pull back unchanged.
  Factor projection_left() const {
    std::vector<ScalarField> b;
    for (std::size_t i = 0; i < n1; ++i)
      b.push_back(ScalarField::coordinate(chart, i));
    return {chart, left, b, ScalarField::constant(chart, 1.0), std::nullopt, false};
  }

  /// P2 = (y2, b): sections of the right bundle pull back divided by b.
  Factor projection_right() const {
    std::vector<ScalarField> b;
    for (std::size_t i = 0; i < n2; ++i)
      b.push_back(ScalarField::coordinate(chart, n1 + i));
    return {chart, right, b, ratio_coordinate(), std::nullopt, false};
  }
};

struct ProductOptions {
  std::string left_prefix, right_prefix;
  std::string ratio_name = "b";
  bool negative_branch = false;
};

/// Chart (y1..., y2..., b) with b in (0, inf), or (-inf, 0) on the negative
/// branch. Name clashes are an error unless distinct prefixes are supplied.
inline BaseProduct base_product(const Chart &L1, const Chart &L2, const ProductOptions &opt = {}) {
  std::vector<std::string> names;
  std::vector<std::optional<Interval>> bounds;
  for (std::size_t i = 0; i < L1->n(); ++i) {
    names.push_back(opt.left_prefix + L1->name(i));
    bounds.push_back(L1->bounds()[i]);
  }
  for (std::size_t i = 0; i < L2->n(); ++i) {
    names.push_back(opt.right_prefix + L2->name(i));
    bounds.push_back(L2->bounds()[i]);
  }
  names.push_back(opt.ratio_name);
  bounds.push_back(opt.negative_branch ? Interval{-std::numeric_limits<double>::infinity(), 0.0}
                                       : Interval{0.0, std::numeric_limits<double>::infinity()});
  for (std::size_t i = 0; i < names.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (names[i] == names[j])
        throw CoordinateNameClash("base product coordinate '" + names[i] +
                                  "' appears twice; supply distinct prefixes");
  return {make_chart(names, bounds), L1, L2, L1->n(), L2->n()};
}

/// (s1/s2)(y1, y2, b) = s1(y1) b / s2(y2).
inline ScalarField ratio_function(const BaseProduct &P, const ScalarField &s1, const ScalarField &s2,
                                  bool certify = true) {
  if (certify)
    certify_nonvanishing(s2, "ratio denominator");
  return P.from_left(s1) * P.ratio_coordinate() / P.from_right(s2);
}

} // namespace dimmech
