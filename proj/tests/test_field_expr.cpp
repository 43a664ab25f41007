#include "support.hpp"

#include <dimmech/tensors.hpp>

#include <gtest/gtest.h>

using namespace dimmech;
using namespace testsupport;

namespace {

Chart qpz() { return make_chart({"q", "p", "z"}); }

Point pt(std::initializer_list<double> v) {
  Point x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v)
    x[i++] = d;
  return x;
}

} // namespace

TEST(ParseField, AcceptsGrammar) {
  auto c = qpz();
  auto H = parse_field("p^2/2 + q^2/2 + 0.1*z", c);
  EXPECT_DOUBLE_EQ(H(pt({1, 2, 3})), 2.0 + 0.5 + 0.3);
  auto g = parse_field("sin(q)*exp(p)", c);
  EXPECT_DOUBLE_EQ(g(pt({0.5, 0.25, 0})), std::sin(0.5) * std::exp(0.25));
  EXPECT_DOUBLE_EQ(parse_field("-q^2", c)(pt({3, 0, 0})), -9.0);
  EXPECT_DOUBLE_EQ(parse_field("2^-1", c)(pt({0, 0, 0})), 0.5);
  EXPECT_DOUBLE_EQ(parse_field("1 - 2 - 3", c)(pt({0, 0, 0})), -4.0);
  EXPECT_DOUBLE_EQ(parse_field("8 / 4 / 2", c)(pt({0, 0, 0})), 1.0);
  EXPECT_DOUBLE_EQ(parse_field("1.5e1 * log(z)", c)(pt({0, 0, 1})), 0.0);
}

TEST(ParseField, Errors) {
  auto c = make_chart({"q", "p"});
  EXPECT_THROW(parse_field("q + w", c), UnknownVariable);
  EXPECT_THROW(parse_field("q +", c), ParseError);
  EXPECT_THROW(parse_field("tan(q)", c), ParseError);
  EXPECT_THROW(parse_field("q^1.5", c), ParseError);
  EXPECT_THROW(parse_field("(q", c), ParseError);
  EXPECT_THROW(parse_field("const(1, \"P\")", c), ParseError);
  try {
    parse_field("q * * p", c);
    FAIL();
  } catch (const ParseError &e) {
    EXPECT_EQ(e.position, 4u);
  }
}

TEST(ParseField, AnnotatedConstant) {
  auto c = make_chart({"q"});
  auto f = parse_field("const(-2.5, \"P*V\") * q", c, true);
  EXPECT_DOUBLE_EQ(f(pt({2})), -5.0);
  EXPECT_TRUE(f.root()->a->annotated);
  EXPECT_EQ(f.root()->a->annotation, "P*V");
}

TEST(Eval, SquareExample) {
  auto c = make_chart({"q"});
  auto f = parse_field("q^2", c);
  Jet j = f.jet(pt({3}));
  EXPECT_EQ(j.v, 9.0);
  EXPECT_EQ(j.g[0], 6.0);
  EXPECT_EQ(j.h(0, 0), 2.0);
}

TEST(Eval, ConstantHasZeroDerivatives) {
  auto c = qpz();
  auto f = ScalarField::constant(c, 4.0);
  EXPECT_TRUE(f.grad(pt({1, 2, 3})).isZero());
  EXPECT_TRUE(f.hess(pt({1, 2, 3})).isZero());
}

TEST(Eval, DomainErrors) {
  auto c = make_chart({"q"});
  EXPECT_THROW(parse_field("log(q)", c)(pt({0})), DomainError);
  EXPECT_THROW(parse_field("1/q", c)(pt({0})), DomainError);
  EXPECT_THROW(parse_field("1/q", c).jet(pt({0})), DomainError);
  EXPECT_THROW(parse_field("q^-2", c)(pt({0})), DomainError);
  EXPECT_THROW(parse_field("exp(exp(q))", c)(pt({10})), NonFinite);
}

TEST(Eval, DerivativesMatchFiniteDifferences) {
  Rng rng(21);
  for (std::size_t n = 1; n <= 7; ++n) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < n; ++i)
      names.push_back("x" + std::to_string(i));
    auto c = make_chart(names);
    for (int trial = 0; trial < 10; ++trial) {
      auto f = random_poly_trig(c, rng);
      Point x = random_point(cube(n, -2, 2), rng);
      Jet j = f.jet(x);
      const double h = 1e-5;
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        Point xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        EXPECT_NEAR(j.g[i], (f(xp) - f(xm)) / (2 * h), 1e-7);
        Eigen::VectorXd dg = (f.grad(xp) - f.grad(xm)) / (2 * h);
        for (Eigen::Index k = 0; k < x.size(); ++k)
          EXPECT_NEAR(j.h(i, k), dg[k], 1e-4);
      }
    }
  }
}

TEST(Eval, SymbolicDerivativeAgreesWithForwardMode) {
  Rng rng(5);
  auto c = qpz();
  for (int trial = 0; trial < 20; ++trial) {
    auto f = random_poly_trig(c, rng) * random_poly_trig(c, rng) / (3.0 + sin(random_poly(c, rng)));
    Point x = random_point(cube(3, -2, 2), rng);
    Jet j = f.jet(x);
    for (std::size_t i = 0; i < 3; ++i) {
      EXPECT_NEAR(f.diff(i)(x), j.g[static_cast<Eigen::Index>(i)], 1e-12);
      Jet ji = f.diff(i).jet(x);
      for (Eigen::Index k = 0; k < 3; ++k)
        EXPECT_NEAR(ji.g[k], j.h(static_cast<Eigen::Index>(i), k), 1e-11);
    }
  }
}

TEST(Eval, CompositionPropagatesChainRule) {
  Rng rng(8);
  auto src = make_chart({"a", "b"});
  auto dst = qpz();
  for (int trial = 0; trial < 10; ++trial) {
    auto f = random_poly_trig(dst, rng);
    std::vector<ScalarField> subs{random_poly_trig(src, rng), random_poly_trig(src, rng), random_poly_trig(src, rng)};
    auto fc = f.compose(src, subs);
    Point x = random_point(cube(2, -1, 1), rng);
    std::vector<Jet> inner;
    for (auto &s : subs)
      inner.push_back(s.jet(x));
    Jet viaJets = f.jet(inner), direct = fc.jet(x);
    EXPECT_NEAR(viaJets.v, direct.v, 1e-12);
    EXPECT_LE((viaJets.g - direct.g).lpNorm<Eigen::Infinity>(), 1e-11);
    EXPECT_LE((viaJets.h - direct.h).lpNorm<Eigen::Infinity>(), 1e-10);
  }
}

TEST(Eval, Deterministic) {
  Rng rng(3);
  auto c = qpz();
  auto f = random_poly_trig(c, rng);
  Point x = random_point(cube(3, -2, 2), rng);
  Jet a = f.jet(x), b = f.jet(x);
  EXPECT_EQ(a.v, b.v);
  EXPECT_TRUE((a.g.array() == b.g.array()).all());
  EXPECT_TRUE((a.h.array() == b.h.array()).all());
}

TEST(LieBracket, Examples) {
  auto c = make_chart({"q", "p"});
  VectorField X = VectorField::basis(c, 0);
  VectorField Y(c, {ScalarField::constant(c, 0.0), ScalarField::coordinate(c, "q")});
  auto B = lie_bracket(X, Y).value(pt({0.3, -1.2}));
  EXPECT_EQ(B[0], 0.0);
  EXPECT_EQ(B[1], 1.0);
  Rng rng(4);
  auto Z = random_vector_field(c, rng);
  EXPECT_TRUE(lie_bracket(Z, Z).value(pt({0.4, 0.1})).isZero());
  EXPECT_THROW(lie_bracket(X, VectorField::basis(qpz(), 0)), ChartMismatch);
}

TEST(LieBracket, JacobiIdentityAndAntisymmetry) {
  Rng rng(12);
  auto c = qpz();
  for (int trial = 0; trial < 5; ++trial) {
    auto X = random_vector_field(c, rng, false), Y = random_vector_field(c, rng, false),
         Z = random_vector_field(c, rng, false);
    auto J = lie_bracket(X, lie_bracket(Y, Z)) + lie_bracket(Y, lie_bracket(Z, X)) + lie_bracket(Z, lie_bracket(X, Y));
    for (int k = 0; k < 10; ++k) {
      Point x = random_point(cube(3, -2, 2), rng);
      EXPECT_LE(J.value(x).lpNorm<Eigen::Infinity>(), 1e-9);
      EXPECT_LE((lie_bracket(X, Y).value(x) + lie_bracket(Y, X).value(x)).lpNorm<Eigen::Infinity>(), 1e-12);
    }
  }
}

TEST(Tensors, ConstantBivectorHasZeroSchouten) {
  auto c = make_chart({"a", "b", "c", "d"});
  BivectorField P(c);
  P.set(0, 1, ScalarField::constant(c, 2.0));
  P.set(2, 3, ScalarField::constant(c, -1.0));
  P.set(1, 3, ScalarField::constant(c, 0.5));
  EXPECT_EQ(schouten_pi_pi(P, pt({1, 2, 3, 4})).max_abs(), 0.0);
}

TEST(Tensors, TwoDimensionsHaveNoTrivectors) {
  auto c = make_chart({"q", "p"});
  BivectorField P(c);
  P.set(0, 1, parse_field("q*p^2", c));
  auto T = schouten_pi_pi(P, pt({1, 2}));
  EXPECT_TRUE(T.independent().empty());
  EXPECT_EQ(T(0, 1, 0), 0.0);
}

TEST(Tensors, WedgeSingleComponent) {
  auto c = qpz();
  BivectorField P(c);
  P.set(0, 1, ScalarField::constant(c, 1.0));
  auto W = wedge_R_pi(VectorField::basis(c, 2), P, pt({0.2, 0.3, 0.4}));
  ASSERT_EQ(W.independent().size(), 1u);
  EXPECT_EQ(W(0, 1, 2), 1.0);
  EXPECT_EQ(W(1, 0, 2), -1.0);
  EXPECT_EQ(W(2, 0, 1), 1.0);
  EXPECT_EQ(wedge_R_pi(VectorField::zero(c), P, pt({0, 0, 0})).max_abs(), 0.0);
}

TEST(Tensors, LieDerivativeVanishingCases) {
  auto c = qpz();
  BivectorField P(c);
  P.set(0, 1, parse_field("q*p + sin(q)", c));
  P.set(1, 2, parse_field("p", c));
  Point x = pt({0.7, -0.2, 1.1});
  EXPECT_TRUE(lie_derivative_bivector(VectorField::zero(c), P, x).isZero());
  EXPECT_TRUE(lie_derivative_bivector(VectorField::basis(c, 2), P, x).isZero());
  BivectorField K(c);
  K.set(0, 2, ScalarField::constant(c, 3.0));
  VectorField R(c, {ScalarField::constant(c, 1.0), ScalarField::constant(c, -2.0), ScalarField::constant(c, 0.5)});
  EXPECT_TRUE(lie_derivative_bivector(R, K, x).isZero());
}

TEST(Tensors, LieDerivativeMatchesCommutatorOfFlows) {
  // (L_R pi)(df, dg) = R[pi(df,dg)] - pi(d R[f], dg) - pi(df, d R[g]).
  Rng rng(31);
  auto c = qpz();
  for (int trial = 0; trial < 5; ++trial) {
    BivectorField P(c);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = i + 1; j < 3; ++j)
        P.set(i, j, random_poly(c, rng));
    auto R = random_vector_field(c, rng, false);
    auto f = random_poly_trig(c, rng), g = random_poly_trig(c, rng);
    auto pairing = [&](const ScalarField &a, const ScalarField &b) {
      ScalarField acc = ScalarField::constant(c, 0.0);
      for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
          acc = acc + P(i, j) * a.diff(i) * b.diff(j);
      return acc;
    };
    auto rhs = R.apply(pairing(f, g)) - pairing(R.apply(f), g) - pairing(f, R.apply(g));
    Point x = random_point(cube(3, -2, 2), rng);
    Eigen::MatrixXd L = lie_derivative_bivector(R, P, x);
    double lhs = f.grad(x).dot(L * g.grad(x));
    EXPECT_NEAR(lhs, rhs(x), 1e-10);
  }
}

TEST(Tensors, TrivectorStorageIsAntisymmetric) {
  Rng rng(2);
  auto c = make_chart({"a", "b", "c", "d", "e"});
  BivectorField P(c);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = i + 1; j < 5; ++j)
      P.set(i, j, random_poly(c, rng));
  auto T = schouten_pi_pi(P, random_point(cube(5, -1, 1), rng));
  EXPECT_EQ(T.independent().size(), 10u);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j)
      for (std::size_t k = 0; k < 5; ++k) {
        EXPECT_EQ(T(i, j, k), -T(j, i, k));
        EXPECT_EQ(T(i, j, k), T(j, k, i));
      }
}
