#pragma once

/// @file jacobi.hpp
/// Lichnerowicz pairs (pi, R) on a chart and the constructions built on
/// them: brackets, Hamiltonian fields, integrability certification, contact
/// forms, canonical jet spaces, coisotropy tests, products and jet lifts.
///
/// Conventions. {f,g} = pi(df,dg) + f R[g] - g R[f] with pi(df,dg) =
/// pi^{ij} d_i f d_j g, X_f^i = pi^{ji} d_j f + f R^i, Delta_f = X_f (+) -R[f].
/// On a jet chart (q, p, z) the contact form is theta = dz - p_i dq^i and the
/// pair is pi^{p_i q^i} = 1, pi^{p_i z} = p_i, R = -d/dz, which makes
/// {l_a, l_b} = l_[a,b], {l_a, pi* s} = pi* a[s] and {pi* s, pi* r} = 0.
/// R is the negative of the Reeb field of theta.

#include <dimmech/line_bundle.hpp>
#include <dimmech/report.hpp>
#include <dimmech/tensors.hpp>

#include <Eigen/SVD>

namespace dimmech {

using CertificationReport = Report;

inline constexpr std::uint64_t kBatterySeed = 0xb477e5eedULL;
inline constexpr double kSurfaceTolerance = 1e-8;

/// (pi, R) and, when requested, their first derivatives at one point:
/// dpi[l](i,j) = d_l pi^{ij}, dR(i,l) = d_l R^i.
struct LocalPair {
  Eigen::MatrixXd pi;
  Eigen::VectorXd R;
  std::vector<Eigen::MatrixXd> dpi;
  Eigen::MatrixXd dR;

  bool has_derivatives() const { return !dpi.empty(); }
};

class PairSource {
public:
  virtual ~PairSource() = default;
  virtual LocalPair at(const Point &x, bool derivatives) const = 0;
};

namespace detail {

class ExplicitSource final : public PairSource {
public:
  ExplicitSource(BivectorField pi, VectorField R) : pi_(std::move(pi)), R_(std::move(R)) {}

  LocalPair at(const Point &x, bool derivatives) const override {
    LocalPair L;
    if (derivatives) {
      LocalBivector B = LocalBivector::of(pi_, x);
      LocalVector V = LocalVector::of(R_, x);
      L.pi = std::move(B.pi);
      L.dpi = std::move(B.dpi);
      L.R = std::move(V.v);
      L.dR = std::move(V.dv);
    } else {
      L.pi = pi_.value(x);
      L.R = R_.value(x);
    }
    return L;
  }

private:
  BivectorField pi_;
  VectorField R_;
};

class OppositeSource final : public PairSource {
public:
  explicit OppositeSource(std::shared_ptr<const PairSource> inner) : inner_(std::move(inner)) {}

  LocalPair at(const Point &x, bool derivatives) const override {
    LocalPair L = inner_->at(x, derivatives);
    L.pi = -L.pi;
    L.R = -L.R;
    for (auto &d : L.dpi)
      d = -d;
    if (L.dR.size())
      L.dR = -L.dR;
    return L;
  }

private:
  std::shared_ptr<const PairSource> inner_;
};

} // namespace detail

/// A bivector and a vector field on a chart, evaluated pointwise through a
/// source. Pairs built from expressions also keep their symbolic fields.
class LichnerowiczPair {
public:
  LichnerowiczPair(BivectorField pi, VectorField R, std::string kind = "explicit")
      : chart_(pi.chart()), kind_(std::move(kind)) {
    require_same_chart(pi.chart(), R.chart(), "LichnerowiczPair");
    source_ = std::make_shared<detail::ExplicitSource>(pi, R);
    pi_ = std::move(pi);
    R_ = std::move(R);
  }

  LichnerowiczPair(Chart chart, std::shared_ptr<const PairSource> source, std::string kind)
      : chart_(std::move(chart)), source_(std::move(source)), kind_(std::move(kind)) {}

  static LichnerowiczPair zero(const Chart &c) {
    return {BivectorField(c), VectorField::zero(c), "zero"};
  }

  const Chart &chart() const { return chart_; }
  const std::string &kind() const { return kind_; }
  bool certified() const { return certified_; }
  void set_certified(bool c) { certified_ = c; }

  LocalPair local(const Point &x, bool derivatives = true) const {
    if (static_cast<std::size_t>(x.size()) != chart_->n())
      throw ChartMismatch("point dimension does not match the pair's chart");
    LocalPair L = source_->at(x, derivatives);
    if (!L.pi.allFinite() || !L.R.allFinite())
      throw NonFinite("Lichnerowicz pair evaluation");
    return L;
  }

  Eigen::MatrixXd pi(const Point &x) const { return local(x, false).pi; }
  Eigen::VectorXd R(const Point &x) const { return local(x, false).R; }

  bool is_explicit() const { return pi_.has_value(); }

  const BivectorField &pi_field() const {
    if (!pi_)
      throw Error("pair of kind '" + kind_ + "' has no symbolic bivector");
    return *pi_;
  }

  const VectorField &R_field() const {
    if (!R_)
      throw Error("pair of kind '" + kind_ + "' has no symbolic vector field");
    return *R_;
  }

  const std::shared_ptr<const PairSource> &source() const { return source_; }

private:
  Chart chart_;
  std::shared_ptr<const PairSource> source_;
  std::string kind_;
  std::optional<BivectorField> pi_;
  std::optional<VectorField> R_;
  bool certified_ = false;
};

/// (-pi, -R): the pair of the negated bracket.
inline LichnerowiczPair opposite(const LichnerowiczPair &J) {
  if (J.is_explicit()) {
    const BivectorField &P = J.pi_field();
    BivectorField N(J.chart());
    for (std::size_t i = 0; i < P.n(); ++i)
      for (std::size_t j = i + 1; j < P.n(); ++j)
        N.set(i, j, -P(i, j));
    std::vector<ScalarField> r;
    for (const auto &c : J.R_field().components())
      r.push_back(-c);
    LichnerowiczPair out(N, VectorField(J.chart(), r), "opposite");
    out.set_certified(J.certified());
    return out;
  }
  LichnerowiczPair out(J.chart(), std::make_shared<detail::OppositeSource>(J.source()), "opposite");
  out.set_certified(J.certified());
  return out;
}

// ---------------------------------------------------------------------------
// Brackets and Hamiltonian fields

/// {f,g} at a point from value-and-gradient jets.
inline double bracket_value(const LocalPair &L, const Jet &f, const Jet &g) {
  return f.g.dot(L.pi * g.g) + f.v * L.R.dot(g.g) - g.v * L.R.dot(f.g);
}

/// Value and gradient of {f,g} from second-order jets and a local pair with
/// derivatives.
inline Jet bracket_jet(const LocalPair &L, const Jet &f, const Jet &g) {
  Jet out;
  out.v = bracket_value(L, f, g);
  auto n = f.g.size();
  Eigen::VectorXd grad(n);
  for (Eigen::Index k = 0; k < n; ++k)
    grad[k] = f.g.dot(L.dpi[static_cast<std::size_t>(k)] * g.g);
  double Rg = L.R.dot(g.g), Rf = L.R.dot(f.g);
  grad += f.h * (L.pi * g.g) + g.h * (L.pi.transpose() * f.g);
  grad += f.g * Rg + f.v * (L.dR.transpose() * g.g + g.h * L.R);
  grad -= g.g * Rf + g.v * (L.dR.transpose() * f.g + f.h * L.R);
  out.g = std::move(grad);
  return out;
}

inline double jacobi_bracket(const LichnerowiczPair &J, const ScalarField &f, const ScalarField &g,
                             const Point &x) {
  require_same_chart(f.chart(), J.chart(), "jacobi_bracket");
  require_same_chart(g.chart(), J.chart(), "jacobi_bracket");
  double v = bracket_value(J.local(x, false), f.jet(x, 1), g.jet(x, 1));
  if (!std::isfinite(v))
    throw NonFinite("jacobi_bracket");
  return v;
}

/// {f,g} as a field; needs symbolic (pi, R).
inline ScalarField bracket_field(const LichnerowiczPair &J, const ScalarField &f, const ScalarField &g) {
  require_same_chart(f.chart(), J.chart(), "bracket_field");
  require_same_chart(g.chart(), J.chart(), "bracket_field");
  const auto &P = J.pi_field();
  const auto &R = J.R_field();
  ScalarField acc = f * R.apply(g) - g * R.apply(f);
  for (std::size_t i = 0; i < P.n(); ++i)
    for (std::size_t j = i + 1; j < P.n(); ++j) {
      ScalarField c = P(i, j);
      if (!c.is_zero())
        acc = acc + c * (f.diff(i) * g.diff(j) - f.diff(j) * g.diff(i));
    }
  return acc;
}

/// X_f at a point.
inline Eigen::VectorXd hamiltonian_value(const LocalPair &L, const Jet &f) {
  return L.pi.transpose() * f.g + f.v * L.R;
}

/// Jacobian d_k X_f^i from a second-order jet.
inline Eigen::MatrixXd hamiltonian_jacobian(const LocalPair &L, const Jet &f) {
  auto n = f.g.size();
  Eigen::MatrixXd D = L.pi.transpose() * f.h + L.R * f.g.transpose() + f.v * L.dR;
  for (Eigen::Index k = 0; k < n; ++k)
    D.col(k) += L.dpi[static_cast<std::size_t>(k)].transpose() * f.g;
  return D;
}

/// The Hamiltonian vector field X_f = pi#(df) + f R and derivation
/// Delta_f = X_f (+) -R[f] of a function.
class HamiltonianField {
public:
  HamiltonianField(LichnerowiczPair J, ScalarField f) : J_(std::move(J)), f_(std::move(f)) {
    require_same_chart(f_.chart(), J_.chart(), "hamiltonian_vf");
  }

  const LichnerowiczPair &pair() const { return J_; }
  const ScalarField &function() const { return f_; }

  Eigen::VectorXd value(const Point &x) const {
    Eigen::VectorXd v = hamiltonian_value(J_.local(x, false), f_.jet(x, 1));
    if (!v.allFinite())
      throw NonFinite("Hamiltonian vector field");
    return v;
  }

  Eigen::MatrixXd jacobian(const Point &x) const { return hamiltonian_jacobian(J_.local(x, true), f_.jet(x, 2)); }

  DerValue derivation_at(const Point &x) const {
    LocalPair L = J_.local(x, false);
    Jet j = f_.jet(x, 1);
    return {x, hamiltonian_value(L, j), -L.R.dot(j.g)};
  }

  /// Symbolic X_f; needs an explicit pair.
  VectorField vector_field() const {
    const auto &P = J_.pi_field();
    const auto &R = J_.R_field();
    std::vector<ScalarField> comps;
    for (std::size_t i = 0; i < P.n(); ++i) {
      ScalarField c = f_ * R[i];
      for (std::size_t j = 0; j < P.n(); ++j)
        if (j != i && !P(j, i).is_zero())
          c = c + P(j, i) * f_.diff(j);
      comps.push_back(c);
    }
    return {J_.chart(), comps};
  }

  Derivation derivation() const { return {vector_field(), -J_.R_field().apply(f_)}; }

private:
  LichnerowiczPair J_;
  ScalarField f_;
};

inline HamiltonianField hamiltonian_vf(const LichnerowiczPair &J, const ScalarField &f) { return {J, f}; }

inline Derivation hamiltonian_derivation(const LichnerowiczPair &J, const ScalarField &f) {
  return HamiltonianField(J, f).derivation();
}

/// |{f,{g,h}} + {g,{h,f}} + {h,{f,g}}| at a point.
inline double jacobi_identity_residual(const LocalPair &L, const Jet &f, const Jet &g, const Jet &h) {
  Jet gh = bracket_jet(L, g, h), hf = bracket_jet(L, h, f), fg = bracket_jet(L, f, g);
  return std::abs(bracket_value(L, f, gh) + bracket_value(L, g, hf) + bracket_value(L, h, fg));
}

inline double jacobi_identity_residual(const LichnerowiczPair &J, const ScalarField &f, const ScalarField &g,
                                       const ScalarField &h, const Point &x) {
  return jacobi_identity_residual(J.local(x, true), f.jet(x, 2), g.jet(x, 2), h.jet(x, 2));
}

/// max_i |X_{f,g} - [X_f, X_g]|^i at a point.
inline double hamiltonian_morphism_residual(const LichnerowiczPair &J, const ScalarField &f,
                                            const ScalarField &g, const Point &x) {
  LocalPair L = J.local(x, true);
  Jet fj = f.jet(x, 2), gj = g.jet(x, 2);
  Jet fg = bracket_jet(L, fj, gj);
  Eigen::VectorXd Xfg = hamiltonian_value(L, fg);
  Eigen::VectorXd Xf = hamiltonian_value(L, fj), Xg = hamiltonian_value(L, gj);
  Eigen::VectorXd comm = hamiltonian_jacobian(L, gj) * Xf - hamiltonian_jacobian(L, fj) * Xg;
  return (Xfg - comm).cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------
// Certification

namespace detail {

/// Constant plus three random monomials of degree <= 2 plus a sine or cosine
/// of a random linear form; coefficients in [-1, 1].
inline ScalarField battery_field(const Chart &c, Rng &rng) {
  auto n = static_cast<std::int64_t>(c->n());
  auto coord = [&](std::int64_t i) { return ScalarField::coordinate(c, static_cast<std::size_t>(i)); };
  ScalarField f = ScalarField::constant(c, rng.uniform(-1, 1));
  for (int t = 0; t < 3; ++t) {
    auto i = rng.integer(0, n - 1), j = rng.integer(0, n - 1);
    f = f + rng.uniform(-1, 1) * coord(i) + rng.uniform(-1, 1) * (coord(i) * coord(j));
  }
  ScalarField lin = ScalarField::constant(c, rng.uniform(-1, 1));
  for (std::int64_t i = 0; i < n; ++i)
    lin = lin + rng.uniform(-0.7, 0.7) * coord(i);
  return f + rng.uniform(-1, 1) * (rng.uniform() < 0.5 ? sin(lin) : cos(lin));
}

inline std::vector<ScalarField> battery(const Chart &c, std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<ScalarField> out;
  for (std::size_t i = 0; i < count; ++i)
    out.push_back(battery_field(c, rng));
  return out;
}

inline Derivation battery_derivation(const Chart &c, Rng &rng) {
  std::vector<ScalarField> comps;
  for (std::size_t i = 0; i < c->n(); ++i)
    comps.push_back(battery_field(c, rng));
  return {VectorField(c, comps), battery_field(c, rng)};
}

} // namespace detail

/// Quasi-random points in the chart's sampling box.
inline std::vector<Point> sample_points(const Chart &c, std::size_t count, std::uint64_t seed = kDefaultSeed) {
  return quasi_random(*c, count, seed);
}

/// Max residuals of [R,pi] and [pi,pi] + 2 R^pi over the samples, plus the
/// Jacobi-identity residual of a fixed battery of 10 test triples (reported,
/// not part of the verdict). Sets J.certified() to the verdict.
inline CertificationReport check_jacobi_pair(LichnerowiczPair &J, const std::vector<Point> &samples,
                                             double tol) {
  CertificationReport rep;
  rep.check = "check_jacobi_pair";
  rep.tolerance = tol;
  rep.samples = samples.size();
  rep.note("pair_kind", J.kind());
  auto fns = detail::battery(J.chart(), 30, kBatterySeed);
  double lie = 0.0, sch = 0.0, jac = 0.0;
  for (const Point &x : samples) {
    LocalPair L = J.local(x, true);
    LocalVector R{L.R, L.dR};
    LocalBivector B{L.pi, L.dpi};
    lie = std::max(lie, lie_derivative_bivector(R, B).cwiseAbs().maxCoeff());
    Trivector T = schouten_pi_pi(B);
    T += wedge_R_pi(L.R, L.pi) * 2.0;
    sch = std::max(sch, T.max_abs());
    for (std::size_t t = 0; t < 10; ++t)
      jac = std::max(jac, jacobi_identity_residual(L, fns[3 * t].jet(x, 2), fns[3 * t + 1].jet(x, 2),
                                                   fns[3 * t + 2].jet(x, 2)));
  }
  rep.add("max_lie_derivative_residual", lie);
  rep.add("max_schouten_residual", sch);
  rep.note("max_jacobi_identity_residual", Report::num(jac));
  rep.decide();
  J.set_certified(rep.passed);
  return rep;
}

inline CertificationReport certify(LichnerowiczPair &J, std::size_t count = 100, double tol = 1e-9,
                                   std::uint64_t seed = kDefaultSeed) {
  return check_jacobi_pair(J, sample_points(J.chart(), count, seed), tol);
}

inline void require_certified(const LichnerowiczPair &J, const char *where) {
  if (!J.certified())
    throw UncertifiedInput(std::string(where) + ": pair of kind '" + J.kind() + "' is not certified");
}

// ---------------------------------------------------------------------------
// Contact forms

/// A 1-form theta on an odd-dimensional chart, with omega = -d theta and
/// eta = theta (x) theta + omega.
class ContactForm {
public:
  ContactForm(Chart chart, std::vector<ScalarField> theta) : chart_(std::move(chart)), theta_(std::move(theta)) {
    if (theta_.size() != chart_->n())
      throw LengthMismatch("contact form needs one component per coordinate");
    if (chart_->n() % 2 == 0)
      throw Error("contact form needs an odd-dimensional chart");
    for (const auto &c : theta_)
      require_same_chart(c.chart(), chart_, "ContactForm");
  }

  const Chart &chart() const { return chart_; }
  const std::vector<ScalarField> &components() const { return theta_; }

  Covector value(const Point &x) const {
    Covector t(static_cast<Eigen::Index>(theta_.size()));
    for (std::size_t i = 0; i < theta_.size(); ++i)
      t[static_cast<Eigen::Index>(i)] = theta_[i].value(x);
    return t;
  }

  /// (d theta)(i,j) = d_i theta_j - d_j theta_i.
  Eigen::MatrixXd d_theta(const Point &x) const {
    auto n = static_cast<Eigen::Index>(theta_.size());
    Eigen::MatrixXd G(n, n); // G(i,k) = d_k theta_i
    for (Eigen::Index i = 0; i < n; ++i)
      G.row(i) = theta_[static_cast<std::size_t>(i)].grad(x).transpose();
    return G.transpose() - G;
  }

  Eigen::MatrixXd eta(const Point &x) const {
    Covector t = value(x);
    return t * t.transpose() - d_theta(x);
  }

  /// The Reeb field E: theta(E) = 1, i_E d theta = 0.
  Eigen::VectorXd reeb(const Point &x) const {
    return eta(x).transpose().partialPivLu().solve(value(x));
  }

  /// Throws DegenerateEta where |det eta| <= 1e-10.
  void certify_nondegenerate(const std::vector<Point> &samples) const {
    for (const Point &x : samples)
      if (!(std::abs(eta(x).determinant()) > 1e-10))
        throw DegenerateEta("eta is degenerate at a sample point");
  }

private:
  Chart chart_;
  std::vector<ScalarField> theta_;
};

namespace detail {

class ContactSource final : public PairSource {
public:
  explicit ContactSource(ContactForm theta) : theta_(std::move(theta)) {}

  LocalPair at(const Point &x, bool derivatives) const override {
    const auto &th = theta_.components();
    auto n = static_cast<Eigen::Index>(th.size());
    std::vector<Jet> jets;
    for (const auto &c : th)
      jets.push_back(c.jet(x, derivatives ? 2 : 1));
    Eigen::VectorXd t(n);
    Eigen::MatrixXd G(n, n); // G(i,k) = d_k theta_i
    for (Eigen::Index i = 0; i < n; ++i) {
      t[i] = jets[static_cast<std::size_t>(i)].v;
      G.row(i) = jets[static_cast<std::size_t>(i)].g.transpose();
    }
    Eigen::MatrixXd omega = G - G.transpose(); // -(d_i theta_j - d_j theta_i)
    Eigen::MatrixXd eta = t * t.transpose() + omega;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(eta);
    const auto &s = svd.singularValues();
    if (!(s[n - 1] > 0.0) || s[0] / s[n - 1] > 1e12)
      throw DegenerateEta("eta is singular or ill-conditioned (condition number above 1e12)");
    Eigen::MatrixXd A = eta.partialPivLu().inverse();
    LocalPair L;
    L.pi = A * omega * A.transpose();
    L.pi = 0.5 * (L.pi - L.pi.transpose());
    Eigen::VectorXd E = A.transpose() * t;
    L.R = -E;
    if (!derivatives)
      return L;
    L.dR.resize(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
      Eigen::VectorXd dt = G.col(k);
      Eigen::MatrixXd domega(n, n);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
          domega(i, j) = jets[static_cast<std::size_t>(i)].h(j, k) - jets[static_cast<std::size_t>(j)].h(i, k);
      Eigen::MatrixXd deta = dt * t.transpose() + t * dt.transpose() + domega;
      Eigen::MatrixXd dA = -A * deta * A;
      Eigen::MatrixXd dpi = dA * omega * A.transpose() + A * domega * A.transpose() + A * omega * dA.transpose();
      L.dpi.push_back(0.5 * (dpi - dpi.transpose()));
      L.dR.col(k) = -(dA.transpose() * t + A.transpose() * dt);
    }
    return L;
  }

private:
  ContactForm theta_;
};

} // namespace detail

/// The non-degenerate pair of a contact form, certified at the samples.
/// Throws DegenerateEta at samples (and later at any evaluation point) where
/// eta cannot be inverted reliably.
inline LichnerowiczPair contact_to_jacobi(const ContactForm &theta, const std::vector<Point> &samples,
                                          double tol = 1e-9, CertificationReport *report = nullptr) {
  theta.certify_nondegenerate(samples);
  LichnerowiczPair J(theta.chart(), std::make_shared<detail::ContactSource>(theta), "contact");
  CertificationReport rep = check_jacobi_pair(J, samples, tol);
  if (report)
    *report = rep;
  return J;
}

/// The contact form of a non-degenerate pair at a point: the covector that
/// annihilates the image of pi and pairs to -1 with R.
inline Covector jacobi_to_contact(const LichnerowiczPair &J, const Point &x) {
  LocalPair L = J.local(x, false);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(L.pi, Eigen::ComputeFullU);
  auto n = L.pi.rows();
  Eigen::VectorXd k = svd.matrixU().col(n - 1);
  double s = k.dot(L.R);
  if (std::abs(s) < 1e-12 || svd.singularValues()[n - 2] < 1e-12)
    throw DegenerateEta("pair is degenerate at the point");
  return -k / s;
}

/// Numerical rank of the n x (n+1) matrix [pi | R].
inline Eigen::Index nondegeneracy_rank(const LichnerowiczPair &J, const Point &x) {
  LocalPair L = J.local(x, false);
  auto n = L.pi.rows();
  Eigen::MatrixXd M(n, n + 1);
  M << L.pi, L.R;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  const auto &s = svd.singularValues();
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s[i] > 1e-10 * std::max(1.0, s[0]))
      ++r;
  return r;
}

// ---------------------------------------------------------------------------
// Jet charts

/// Coordinates (q_1..q_n, p_1..p_n, z) on J^1 R_M over a base chart. Base
/// coordinate names beginning with 'q' give momenta named with 'p' in their
/// place; others get a "p_" prefix.
class JetSpace {
public:
  explicit JetSpace(Chart base) : base_(std::move(base)) {
    std::vector<std::string> names = base_->names();
    std::vector<std::optional<Interval>> bounds = base_->bounds();
    for (const auto &nm : base_->names()) {
      names.push_back(momentum_name(nm));
      bounds.emplace_back();
    }
    names.push_back("z");
    bounds.emplace_back();
    chart_ = make_chart(names, bounds);
  }

  static std::string momentum_name(const std::string &q) {
    if (!q.empty() && q[0] == 'q')
      return "p" + q.substr(1);
    return "p_" + q;
  }

  const Chart &base() const { return base_; }
  const Chart &chart() const { return chart_; }
  std::size_t n() const { return base_->n(); }

  ScalarField q(std::size_t i) const { return ScalarField::coordinate(chart_, i); }
  ScalarField p(std::size_t i) const { return ScalarField::coordinate(chart_, n() + i); }
  ScalarField z() const { return ScalarField::coordinate(chart_, 2 * n()); }

  /// pi* s: the z- and p-independent extension of a base section.
  ScalarField lift(const ScalarField &s) const {
    require_same_chart(s.chart(), base_, "JetSpace::lift");
    std::vector<ScalarField> subs;
    for (std::size_t i = 0; i < n(); ++i)
      subs.push_back(q(i));
    return s.compose(chart_, subs);
  }

  Point base_point(const Point &x) const { return x.head(static_cast<Eigen::Index>(n())); }

  Point point(const Point &q0, const Covector &p0, double z0) const {
    Point x(static_cast<Eigen::Index>(2 * n() + 1));
    x << q0, p0, z0;
    return x;
  }

  /// theta = dz - p_i dq^i.
  ContactForm contact_form() const {
    std::vector<ScalarField> th;
    for (std::size_t i = 0; i < n(); ++i)
      th.push_back(-p(i));
    for (std::size_t i = 0; i < n(); ++i)
      th.push_back(ScalarField::constant(chart_, 0.0));
    th.push_back(ScalarField::constant(chart_, 1.0));
    return {chart_, th};
  }

  /// The canonical pair in closed form.
  LichnerowiczPair canonical_pair() const {
    BivectorField P(chart_);
    std::vector<ScalarField> R(chart_->n(), ScalarField::constant(chart_, 0.0));
    for (std::size_t i = 0; i < n(); ++i) {
      P.set(n() + i, i, ScalarField::constant(chart_, 1.0));
      P.set(n() + i, 2 * n(), p(i));
    }
    R[2 * n()] = ScalarField::constant(chart_, -1.0);
    return {P, VectorField(chart_, R), "canonical_contact"};
  }

private:
  Chart base_, chart_;
};

/// l_{X (+) f}(q,p,z) = p_i X^i(q) + z f(q).
struct FibrewiseLinearSection {
  JetSpace jet;
  Derivation generator;
  ScalarField field;

  FibrewiseLinearSection(JetSpace j, Derivation D)
      : jet(std::move(j)), generator(std::move(D)), field(ScalarField::constant(jet.chart(), 0.0)) {
    require_same_chart(generator.chart(), jet.base(), "FibrewiseLinearSection");
    ScalarField acc = jet.z() * jet.lift(generator.f);
    for (std::size_t i = 0; i < jet.n(); ++i)
      acc = acc + jet.p(i) * jet.lift(generator.X[i]);
    field = acc;
  }

  double operator()(const Point &x) const { return field.value(x); }

  bool in_zero_locus(const Point &x, double tol = 1e-12) const { return std::abs(field.value(x)) <= tol; }
};

inline FibrewiseLinearSection linear_section(const JetSpace &jet, const Derivation &D) { return {jet, D}; }

inline ScalarField pi_star(const JetSpace &jet, const ScalarField &s) { return jet.lift(s); }

struct CanonicalContact {
  JetSpace jet;
  ContactForm theta;
  LichnerowiczPair pair;
  CertificationReport certification;
};

/// Jet chart of the base with its contact form and the canonical pair,
/// certified at 100 quasi-random points of the jet chart's sampling box.
inline CanonicalContact canonical_contact(const Chart &base, std::uint64_t seed = kDefaultSeed) {
  JetSpace jet(base);
  LichnerowiczPair J = jet.canonical_pair();
  CertificationReport rep = certify(J, 100, 1e-9, seed);
  return {jet, jet.contact_form(), J, rep};
}

/// Residuals of {l_a,l_b} - l_[a,b], {l_a, pi*s} - pi* a[s] and
/// {pi*s, pi*r} over the samples.
inline Report check_bracket_relations(const LichnerowiczPair &J, const JetSpace &jet, const Derivation &a,
                                      const Derivation &b, const ScalarField &s, const ScalarField &r,
                                      const std::vector<Point> &samples, double tol) {
  require_same_chart(J.chart(), jet.chart(), "check_bracket_relations");
  ScalarField la = linear_section(jet, a).field, lb = linear_section(jet, b).field;
  ScalarField lab = linear_section(jet, der_bracket(a, b)).field;
  ScalarField ps = jet.lift(s), pr = jet.lift(r), pas = jet.lift(apply_derivation(a, s));
  double r1 = 0, r2 = 0, r3 = 0;
  for (const Point &x : samples) {
    r1 = std::max(r1, std::abs(jacobi_bracket(J, la, lb, x) - lab.value(x)));
    r2 = std::max(r2, std::abs(jacobi_bracket(J, la, ps, x) - pas.value(x)));
    r3 = std::max(r3, std::abs(jacobi_bracket(J, ps, pr, x)));
  }
  Report rep;
  rep.check = "check_bracket_relations";
  rep.tolerance = tol;
  rep.samples = samples.size();
  rep.add("max_linear_linear_residual", r1);
  rep.add("max_linear_pullback_residual", r2);
  rep.add("max_pullback_pullback_residual", r3);
  return rep.decide();
}

// ---------------------------------------------------------------------------
// Coisotropy

namespace detail {

/// Tangency of X_s to {c = 0} for vanishing sections s, and closure of the
/// vanishing sections under the bracket.
inline void coisotropy_residuals(const LichnerowiczPair &J, const std::vector<ScalarField> &constraints,
                                 const std::vector<ScalarField> &vanishing, const std::vector<Point> &samples,
                                 double &tangency, double &closure) {
  tangency = 0.0;
  closure = 0.0;
  for (const Point &x : samples) {
    LocalPair L = J.local(x, false);
    std::vector<Jet> cj, vj;
    for (const auto &c : constraints)
      cj.push_back(c.jet(x, 1));
    for (const auto &s : vanishing)
      vj.push_back(s.jet(x, 1));
    for (std::size_t a = 0; a < vj.size(); ++a) {
      Eigen::VectorXd X = hamiltonian_value(L, vj[a]);
      for (const auto &c : cj)
        tangency = std::max(tangency, std::abs(c.g.dot(X)));
      for (std::size_t b = a + 1; b < vj.size(); ++b)
        closure = std::max(closure, std::abs(bracket_value(L, vj[a], vj[b])));
    }
    if (!std::isfinite(tangency) || !std::isfinite(closure)) {
      tangency = closure = std::numeric_limits<double>::infinity();
      return;
    }
  }
}

} // namespace detail

/// Tests whether {c_j = 0} is coisotropic: the Hamiltonian fields of the
/// vanishing sections c_j u must be tangent to it, and those sections must
/// close under the bracket. Throws SampleOffSurface for samples with
/// |c_j| >= 1e-8.
inline Report coisotropic_check(const LichnerowiczPair &J, const std::vector<ScalarField> &constraints,
                                const std::vector<Point> &surface_samples,
                                const std::vector<ScalarField> &test_sections, double tol) {
  for (const auto &c : constraints)
    require_same_chart(c.chart(), J.chart(), "coisotropic_check");
  for (const Point &x : surface_samples)
    for (const auto &c : constraints)
      if (!(std::abs(c.value(x)) < kSurfaceTolerance))
        throw SampleOffSurface("sample point violates a constraint by " + Report::num(std::abs(c.value(x))));
  std::vector<ScalarField> tests = test_sections;
  if (tests.empty())
    tests.push_back(ScalarField::constant(J.chart(), 1.0));
  std::vector<ScalarField> vanishing;
  for (const auto &c : constraints)
    for (const auto &u : tests) {
      require_same_chart(u.chart(), J.chart(), "coisotropic_check");
      vanishing.push_back(c * u);
    }
  double tan, clo;
  detail::coisotropy_residuals(J, constraints, vanishing, surface_samples, tan, clo);
  Report rep;
  rep.check = "coisotropic_check";
  rep.tolerance = tol;
  rep.samples = surface_samples.size();
  rep.note("vanishing_sections", std::to_string(vanishing.size()));
  rep.add("max_tangency_residual", tan);
  rep.add("max_closure_residual", clo);
  return rep.decide();
}

/// Pulls quasi-random points of the chart's sampling box onto {c = 0} by
/// minimum-norm Newton steps. Points that do not converge are skipped.
inline std::vector<Point> surface_samples(const std::vector<ScalarField> &constraints, std::size_t count,
                                          std::uint64_t seed = kDefaultSeed) {
  if (constraints.empty())
    throw LengthMismatch("surface_samples needs at least one constraint");
  const Chart &c = constraints.front().chart();
  std::vector<Point> out;
  auto m = static_cast<Eigen::Index>(constraints.size());
  for (const Point &start : quasi_random(*c, count * 4, seed)) {
    if (out.size() == count)
      break;
    Point x = start;
    bool ok = false;
    try {
      for (int it = 0; it < 50; ++it) {
        Eigen::VectorXd r(m);
        Eigen::MatrixXd Jc(m, x.size());
        for (Eigen::Index j = 0; j < m; ++j) {
          Jet jt = constraints[static_cast<std::size_t>(j)].jet(x, 1);
          r[j] = jt.v;
          Jc.row(j) = jt.g.transpose();
        }
        if (r.cwiseAbs().maxCoeff() < 1e-12) {
          ok = c->contains(x);
          break;
        }
        x -= Jc.completeOrthogonalDecomposition().solve(r);
      }
    } catch (const Error &) {
      ok = false;
    }
    if (ok)
      out.push_back(x);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Products

namespace detail {

/// Product pair on (y1, y2, b): pi = pi1 + b pi2 - b R1 ^ d_b + b^2 R2 ^ d_b,
/// R = R1.
class ProductSource final : public PairSource {
public:
  ProductSource(LichnerowiczPair J1, LichnerowiczPair J2, std::size_t n1, std::size_t n2)
      : J1_(std::move(J1)), J2_(std::move(J2)), n1_(static_cast<Eigen::Index>(n1)),
        n2_(static_cast<Eigen::Index>(n2)) {}

  LocalPair at(const Point &x, bool derivatives) const override {
    Eigen::Index n = n1_ + n2_ + 1, c = n1_ + n2_;
    LocalPair A = J1_.local(x.head(n1_), derivatives);
    LocalPair B = J2_.local(x.segment(n1_, n2_), derivatives);
    double b = x[c];
    LocalPair L;
    L.pi = Eigen::MatrixXd::Zero(n, n);
    L.pi.topLeftCorner(n1_, n1_) = A.pi;
    L.pi.block(n1_, n1_, n2_, n2_) = b * B.pi;
    L.pi.block(0, c, n1_, 1) = -b * A.R;
    L.pi.block(n1_, c, n2_, 1) = b * b * B.R;
    L.pi.block(c, 0, 1, n1_) = b * A.R.transpose();
    L.pi.block(c, n1_, 1, n2_) = -b * b * B.R.transpose();
    L.R = Eigen::VectorXd::Zero(n);
    L.R.head(n1_) = A.R;
    if (!derivatives)
      return L;
    L.dR = Eigen::MatrixXd::Zero(n, n);
    L.dR.topLeftCorner(n1_, n1_) = A.dR;
    for (Eigen::Index l = 0; l < n; ++l) {
      Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
      if (l < n1_) {
        D.topLeftCorner(n1_, n1_) = A.dpi[static_cast<std::size_t>(l)];
        D.block(0, c, n1_, 1) = -b * A.dR.col(l);
      } else if (l < c) {
        Eigen::Index k = l - n1_;
        D.block(n1_, n1_, n2_, n2_) = b * B.dpi[static_cast<std::size_t>(k)];
        D.block(n1_, c, n2_, 1) = b * b * B.dR.col(k);
      } else {
        D.block(n1_, n1_, n2_, n2_) = B.pi;
        D.block(0, c, n1_, 1) = -A.R;
        D.block(n1_, c, n2_, 1) = 2.0 * b * B.R;
      }
      D.row(c) = -D.col(c).transpose();
      L.dpi.push_back(std::move(D));
    }
    return L;
  }

private:
  LichnerowiczPair J1_, J2_;
  Eigen::Index n1_, n2_;
};

} // namespace detail

struct ProductPair {
  BaseProduct base;
  LichnerowiczPair pair;
  CertificationReport certification;
};

/// The product Jacobi structure of two certified pairs on the base product
/// chart, characterized by {P1*s, P1*s'} = P1*{s,s'}, {P2*s, P2*s'} =
/// P2*{s,s'} and {P1*s, P2*s'} = 0. The result is certified at 100 samples.
inline ProductPair product_jacobi(const LichnerowiczPair &J1, const LichnerowiczPair &J2,
                                  const ProductOptions &opt = {}, std::uint64_t seed = kDefaultSeed) {
  require_certified(J1, "product_jacobi");
  require_certified(J2, "product_jacobi");
  BaseProduct P = base_product(J1.chart(), J2.chart(), opt);
  LichnerowiczPair J(P.chart, std::make_shared<detail::ProductSource>(J1, J2, P.n1, P.n2), "product");
  CertificationReport rep = certify(J, 100, 1e-8, seed);
  return {P, J, rep};
}

/// Residuals of the three defining relations of the product on battery
/// sections of each factor.
inline Report check_product_relations(const ProductPair &PP, const LichnerowiczPair &J1,
                                      const LichnerowiczPair &J2, const std::vector<Point> &samples,
                                      double tol, std::size_t sections = 4) {
  const BaseProduct &P = PP.base;
  auto s1 = detail::battery(P.left, sections, kBatterySeed + 1);
  auto s2 = detail::battery(P.right, sections, kBatterySeed + 2);
  double r1 = 0, r2 = 0, r3 = 0;
  for (const Point &x : samples) {
    Point y1 = P.left_point(x), y2 = P.right_point(x);
    double b = P.ratio(x);
    for (std::size_t i = 0; i < sections; ++i)
      for (std::size_t j = 0; j < sections; ++j) {
        ScalarField a1 = P.from_left(s1[i]), c1 = P.from_left(s1[j]);
        ScalarField a2 = P.from_right(s2[i]) / P.ratio_coordinate();
        ScalarField c2 = P.from_right(s2[j]) / P.ratio_coordinate();
        if (i < j) {
          r1 = std::max(r1, std::abs(jacobi_bracket(PP.pair, a1, c1, x) - jacobi_bracket(J1, s1[i], s1[j], y1)));
          r2 = std::max(r2, std::abs(jacobi_bracket(PP.pair, a2, c2, x) - jacobi_bracket(J2, s2[i], s2[j], y2) / b));
        }
        r3 = std::max(r3, std::abs(jacobi_bracket(PP.pair, a1, c2, x)));
      }
  }
  Report rep;
  rep.check = "product_relations";
  rep.tolerance = tol;
  rep.samples = samples.size();
  rep.add("max_left_left_residual", r1);
  rep.add("max_right_right_residual", r2);
  rep.add("max_left_right_residual", r3);
  return rep.decide();
}

// ---------------------------------------------------------------------------
// Jacobi maps

/// Max |B*{s,s'}_2 - {B*s, B*s'}_1| for factor B from J1's chart to J2's
/// chart, over section pairs and source-chart samples.
inline Report jacobi_map_check(const Factor &F, const LichnerowiczPair &J1, const LichnerowiczPair &J2,
                               const std::vector<std::pair<ScalarField, ScalarField>> &section_pairs,
                               const std::vector<Point> &samples, double tol) {
  require_same_chart(F.source(), J1.chart(), "jacobi_map_check");
  require_same_chart(F.target(), J2.chart(), "jacobi_map_check");
  double res = 0.0;
  std::vector<std::pair<ScalarField, ScalarField>> pulled;
  for (const auto &[s, t] : section_pairs) {
    require_same_chart(s.chart(), F.target(), "jacobi_map_check");
    require_same_chart(t.chart(), F.target(), "jacobi_map_check");
    pulled.emplace_back(pullback_section(F, s), pullback_section(F, t));
  }
  for (const Point &x : samples) {
    Point y = F.map(x);
    double beta = F.beta().value(x);
    for (std::size_t k = 0; k < section_pairs.size(); ++k) {
      double lhs = jacobi_bracket(J2, section_pairs[k].first, section_pairs[k].second, y) / beta;
      double rhs = jacobi_bracket(J1, pulled[k].first, pulled[k].second, x);
      res = std::max(res, std::abs(lhs - rhs));
    }
  }
  if (!std::isfinite(res))
    res = std::numeric_limits<double>::infinity();
  Report rep;
  rep.check = "jacobi_map_check";
  rep.tolerance = tol;
  rep.samples = samples.size();
  rep.note("section_pairs", std::to_string(section_pairs.size()));
  rep.add("max_morphism_residual", res);
  return rep.decide();
}

/// Battery section pairs on a chart for jacobi_map_check.
inline std::vector<std::pair<ScalarField, ScalarField>> battery_pairs(const Chart &c, std::size_t count,
                                                                      std::uint64_t seed = kBatterySeed) {
  auto fs = detail::battery(c, 2 * count, seed);
  std::vector<std::pair<ScalarField, ScalarField>> out;
  for (std::size_t i = 0; i < count; ++i)
    out.emplace_back(fs[2 * i], fs[2 * i + 1]);
  return out;
}

// ---------------------------------------------------------------------------
// Jet lifts

/// J^1 B for a diffeomorphic factor B = (b, beta): R_M -> R_N, as a factor
/// from the jet chart over N to the jet chart over M. In coordinates, with
/// q' = b^{-1}(q):
///   q -> q',  p -> (Db(q')^T p - z dbeta(q') / beta(q')) / beta(q'),
///   z -> z / beta(q'),  fibre multiplier 1 / beta(q').
/// It satisfies J^1B* l_a = l_{B_* a} and J^1B* pi* u = pi* (B^{-1})* u.
inline Factor jet_lift_diffeo(const Factor &F, const JetSpace &jet_source, const JetSpace &jet_target) {
  require_same_chart(jet_source.base(), F.source(), "jet_lift_diffeo");
  require_same_chart(jet_target.base(), F.target(), "jet_lift_diffeo");
  if (F.source()->n() != F.target()->n())
    throw Error("jet_lift_diffeo needs base charts of equal dimension");
  const auto &inv = F.inverse();
  const JetSpace &N = jet_target;
  std::size_t n = N.n();
  std::vector<ScalarField> qprime;
  for (const auto &c : inv)
    qprime.push_back(N.lift(c));
  auto at_qprime = [&](const ScalarField &f) { return f.compose(N.chart(), qprime); };
  ScalarField beta = at_qprime(F.beta());
  std::vector<ScalarField> comps = qprime;
  for (std::size_t a = 0; a < n; ++a) {
    ScalarField acc = -(N.z() * at_qprime(F.beta().diff(a)) / beta);
    for (std::size_t i = 0; i < n; ++i)
      acc = acc + at_qprime(F.b()[i].diff(a)) * N.p(i);
    comps.push_back(acc / beta);
  }
  comps.push_back(N.z() / beta);
  return {N.chart(), jet_source.chart(), comps, ScalarField::constant(N.chart(), 1.0) / beta, std::nullopt,
          false};
}

namespace detail {

inline Report graph_report(const std::string &name, const LichnerowiczPair &J,
                           const std::vector<ScalarField> &constraints, const std::vector<ScalarField> &generators,
                           const std::vector<Point> &samples, double tol) {
  for (const Point &x : samples)
    for (const auto &c : constraints)
      if (!(std::abs(c.value(x)) < kSurfaceTolerance))
        throw SampleOffGraph("sample point is " + Report::num(std::abs(c.value(x))) + " off the graph");
  double gt, gc, ct, cc;
  detail::coisotropy_residuals(J, constraints, generators, samples, gt, gc);
  detail::coisotropy_residuals(J, constraints, constraints, samples, ct, cc);
  Report rep;
  rep.check = name;
  rep.tolerance = tol;
  rep.samples = samples.size();
  rep.note("generators", std::to_string(generators.size()));
  rep.note("constraints", std::to_string(constraints.size()));
  rep.add("max_generator_tangency_residual", gt);
  rep.add("max_generator_closure_residual", gc);
  rep.add("max_constraint_tangency_residual", ct);
  rep.add("max_constraint_closure_residual", cc);
  return rep.decide();
}

} // namespace detail

/// The graph of the jet lift of B inside J^1 M x J^1 N x R^x, carrying the
/// product of the canonical pair on J^1 M with the opposite of the one on
/// J^1 N. Points are parametrized by (q1, p2, z2).
class JetLiftGraph {
public:
  JetLiftGraph(Factor F, std::uint64_t seed = kDefaultSeed)
      : F_(std::move(F)), M_(canonical_contact(F_.source(), seed)), N_(canonical_contact(F_.target(), seed)),
        PP_(product_jacobi(M_.pair, opposite(N_.pair), options(F_, seed), seed)) {
    const BaseProduct &P = PP_.base;
    std::size_t n = M_.jet.n();
    auto y = [&](std::size_t i) { return ScalarField::coordinate(P.chart, i); };
    std::vector<ScalarField> q1;
    for (std::size_t i = 0; i < n; ++i)
      q1.push_back(y(i));
    auto at_q1 = [&](const ScalarField &f) { return f.compose(P.chart, q1); };
    std::size_t o2 = P.n1;
    ScalarField beta = at_q1(F_.beta());
    for (std::size_t i = 0; i < n; ++i)
      constraints_.push_back(y(o2 + i) - at_q1(F_.b()[i]));
    for (std::size_t a = 0; a < n; ++a) {
      ScalarField acc = -(y(o2 + 2 * n) * at_q1(F_.beta().diff(a)) / beta);
      for (std::size_t i = 0; i < n; ++i)
        acc = acc + at_q1(F_.b()[i].diff(a)) * y(o2 + n + i);
      constraints_.push_back(y(n + a) - acc / beta);
    }
    constraints_.push_back(y(2 * n) - y(o2 + 2 * n) / beta);
    constraints_.push_back(P.ratio_coordinate() - beta);
  }

  const Factor &factor() const { return F_; }
  const CanonicalContact &left() const { return M_; }
  const CanonicalContact &right() const { return N_; }
  const ProductPair &product() const { return PP_; }
  const std::vector<ScalarField> &constraints() const { return constraints_; }

  /// The graph point over (q1, p2, z2).
  Point point(const Point &q1, const Covector &p2, double z2) const {
    Point q2 = F_.map(q1);
    Eigen::MatrixXd Db = F_.jacobian(q1);
    Jet beta = F_.beta().jet(q1, 1);
    Covector p1 = (Db.transpose() * p2 - z2 * beta.g / beta.v) / beta.v;
    Point x(static_cast<Eigen::Index>(PP_.base.chart->n()));
    x << q1, p1, z2 / beta.v, q2, p2, z2, beta.v;
    return x;
  }

  /// Graph points over quasi-random parameters in the source sampling box
  /// and [-2, 2] for (p2, z2).
  std::vector<Point> samples(std::size_t count, std::uint64_t seed = kDefaultSeed) const {
    std::size_t n = M_.jet.n();
    Box box = F_.source()->sampling_box();
    for (std::size_t i = 0; i <= n; ++i)
      box.emplace_back(-2.0, 2.0);
    std::vector<Point> out;
    for (const Point &u : quasi_random(box, count, seed)) {
      auto ni = static_cast<Eigen::Index>(n);
      out.push_back(point(u.head(ni), u.segment(ni, ni), u[2 * ni]));
    }
    return out;
  }

  /// l_{a1} - l_{B_* a1} / b and pi* B*u2 - pi* u2 / b on the product chart.
  std::vector<ScalarField> generators(std::size_t count, std::uint64_t seed = kBatterySeed) const {
    const BaseProduct &P = PP_.base;
    Rng rng(seed);
    std::vector<ScalarField> out;
    for (std::size_t k = 0; k < count; ++k) {
      Derivation a1 = detail::battery_derivation(F_.source(), rng);
      Derivation a2 = der_pushforward(F_, a1);
      out.push_back(P.from_left(linear_section(M_.jet, a1).field) -
                    P.from_right(linear_section(N_.jet, a2).field) / P.ratio_coordinate());
      ScalarField u2 = detail::battery_field(F_.target(), rng);
      ScalarField u1 = pullback_section(F_, u2);
      out.push_back(P.from_left(M_.jet.lift(u1)) - P.from_right(N_.jet.lift(u2)) / P.ratio_coordinate());
    }
    return out;
  }

private:
  static ProductOptions options(const Factor &F, std::uint64_t seed) {
    ProductOptions o{"l.", "r.", "b", false};
    auto pts = quasi_random(*F.source(), 1, seed);
    o.negative_branch = F.beta().value(pts.front()) < 0;
    return o;
  }

  Factor F_;
  CanonicalContact M_, N_;
  ProductPair PP_;
  std::vector<ScalarField> constraints_;
};

/// Coisotropy of the jet-lift graph against the spanning vanishing sections
/// l_{a1} - l_{a2}/b (a1 related to a2 by B) and pi*u1 - pi*u2/b (u1 = B*u2).
/// Throws SampleOffGraph for samples off the graph by 1e-8 or more.
inline Report jet_lift_graph_check(const JetLiftGraph &G, const std::vector<Point> &samples, double tol,
                                   std::size_t generator_count = 3) {
  return detail::graph_report("jet_lift_graph_check", G.product().pair, G.constraints(),
                              G.generators(generator_count), samples, tol);
}

/// The graph {(x, g(x), gamma(x))} of a factor G: R_A -> R_B inside the
/// product of J_A with the opposite of J_B.
class FactorGraph {
public:
  FactorGraph(Factor G, const LichnerowiczPair &JA, const LichnerowiczPair &JB, std::uint64_t seed = kDefaultSeed)
      : G_(std::move(G)), PP_(product_jacobi(JA, opposite(JB), options(G_, seed), seed)) {
    require_same_chart(G_.source(), JA.chart(), "FactorGraph");
    require_same_chart(G_.target(), JB.chart(), "FactorGraph");
    const BaseProduct &P = PP_.base;
    std::vector<ScalarField> y1;
    for (std::size_t i = 0; i < P.n1; ++i)
      y1.push_back(ScalarField::coordinate(P.chart, i));
    for (std::size_t i = 0; i < P.n2; ++i)
      constraints_.push_back(ScalarField::coordinate(P.chart, P.n1 + i) - G_.b()[i].compose(P.chart, y1));
    constraints_.push_back(P.ratio_coordinate() - G_.beta().compose(P.chart, y1));
  }

  const ProductPair &product() const { return PP_; }
  const std::vector<ScalarField> &constraints() const { return constraints_; }

  Point point(const Point &x) const {
    Point out(static_cast<Eigen::Index>(PP_.base.chart->n()));
    out << x, G_.map(x), G_.beta().value(x);
    return out;
  }

  std::vector<Point> samples(std::size_t count, std::uint64_t seed = kDefaultSeed) const {
    std::vector<Point> out;
    for (const Point &x : quasi_random(*G_.source(), count, seed))
      out.push_back(point(x));
    return out;
  }

  /// P1* G*s - P2* s for battery sections s of the target.
  std::vector<ScalarField> generators(std::size_t count, std::uint64_t seed = kBatterySeed) const {
    const BaseProduct &P = PP_.base;
    std::vector<ScalarField> out;
    for (const auto &s : detail::battery(G_.target(), count, seed))
      out.push_back(P.from_left(pullback_section(G_, s)) - P.from_right(s) / P.ratio_coordinate());
    return out;
  }

private:
  static ProductOptions options(const Factor &G, std::uint64_t seed) {
    ProductOptions o{"l.", "r.", "b", false};
    auto pts = quasi_random(*G.source(), 1, seed);
    o.negative_branch = G.beta().value(pts.front()) < 0;
    return o;
  }

  Factor G_;
  ProductPair PP_;
  std::vector<ScalarField> constraints_;
};

/// Coisotropy of a factor's graph; passes for Jacobi maps.
inline Report factor_graph_check(const FactorGraph &G, const std::vector<Point> &samples, double tol,
                                 std::size_t generator_count = 6) {
  return detail::graph_report("factor_graph_check", G.product().pair, G.constraints(),
                              G.generators(generator_count), samples, tol);
}

// ---------------------------------------------------------------------------
// Comoment

/// mu(xi) = l_{sum_i xi_i Psi_i}.
inline FibrewiseLinearSection comoment(const JetSpace &jet, const std::vector<Derivation> &Psi,
                                       const std::vector<double> &xi) {
  if (Psi.size() != xi.size())
    throw LengthMismatch("comoment needs one coefficient per generator");
  Derivation acc = Derivation::zero(jet.base());
  for (std::size_t i = 0; i < Psi.size(); ++i) {
    require_same_chart(Psi[i].chart(), jet.base(), "comoment");
    acc = acc + xi[i] * Psi[i];
  }
  return {jet, acc};
}

} // namespace dimmech
