#include <dimmech/measurand.hpp>
#include <dimmech/sampling.hpp>

#include <gtest/gtest.h>

using namespace dimmech;

namespace {

const MeasurandSpace PVNT({"P", "V", "N", "T"});

Dimension dim(std::initializer_list<std::int64_t> e) { return {std::vector<std::int64_t>(e)}; }

TypedNumber tn(double m, std::initializer_list<std::int64_t> e) { return {PVNT, m, dim(e)}; }

Dimension random_dim(Rng &rng) {
  Dimension d = Dimension::zero(4);
  for (auto &e : d.exponents)
    e = rng.integer(-3, 3);
  return d;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

} // namespace

TEST(TypedMul, MultipliesMagnitudesAndAddsExponents) {
  auto r = typed_mul(tn(2, {1, 0, 0, 0}), tn(3, {0, 1, 0, 0}));
  EXPECT_EQ(r.magnitude(), 6.0);
  EXPECT_EQ(r.dim(), dim({1, 1, 0, 0}));
}

TEST(TypedMul, UnitIsIdentity) {
  auto q = tn(4.25, {2, -1, 3, 0});
  auto r = typed_mul(q, tn(1, {0, 0, 0, 0}));
  EXPECT_EQ(r.magnitude(), 4.25);
  EXPECT_EQ(r.dim(), q.dim());
}

TEST(TypedMul, EnergyTypeFromPressureVolumePerAmount) {
  auto pv = typed_mul(tn(1, {1, 0, 0, 0}), tn(1, {0, 1, 0, 0}));
  auto u = typed_mul(pv, tn(1, {0, 0, -1, 0}));
  EXPECT_EQ(u.dim(), dim({1, 1, -1, 0}));
}

TEST(TypedMul, RejectsForeignSpace) {
  MeasurandSpace other({"L", "M"});
  TypedNumber a(other, 1.0, Dimension::zero(2));
  EXPECT_THROW(typed_mul(a, tn(1, {0, 0, 0, 0})), MeasurandSpaceMismatch);
}

TEST(TypedMul, ExponentOverflowIsAnError) {
  TypedNumber a(PVNT, 1.0, dim({INT64_MAX, 0, 0, 0}));
  EXPECT_THROW(typed_mul(a, tn(1, {1, 0, 0, 0})), ExponentOverflow);
}

TEST(TypedAdd, SameDimension) {
  MeasurandSpace two({"A", "B"});
  TypedNumber a(two, 2, dim({1, 0})), b(two, 3, dim({1, 0}));
  auto r = typed_add(a, b);
  EXPECT_EQ(r.magnitude(), 5.0);
  EXPECT_EQ(r.dim(), dim({1, 0}));
  EXPECT_EQ(typed_add(a, TypedNumber(two, 0, dim({1, 0}))).magnitude(), 2.0);
}

TEST(TypedAdd, PressurePlusVolumeIsMismatch) {
  EXPECT_THROW(typed_add(tn(1, {1, 0, 0, 0}), tn(1, {0, 1, 0, 0})), DimensionMismatch);
}

TEST(DimensionOf, Projection) {
  EXPECT_EQ(dimension_of(tn(6, {1, 1, -1, 0})), dim({1, 1, -1, 0}));
  auto x = tn(3, {2, 1, 0, -1});
  EXPECT_TRUE(dimension_of(typed_mul(x, typed_inv(x))).is_zero());
}

TEST(InducedUnitScale, ProductFormula) {
  MeasurandSpace two({"A", "B"});
  EXPECT_EQ(induced_unit_scale(UnitSystem(two, {1, 1}), dim({5, -2})), 1.0);
  EXPECT_DOUBLE_EQ(induced_unit_scale(UnitSystem(two, {2, 3}), dim({1, -1})), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(induced_unit_scale(UnitSystem(two, {1.5, 1}), dim({3, 0})), 1.5 * 1.5 * 1.5);
}

TEST(Convert, MetreToCentimetre) {
  MeasurandSpace L({"L"});
  UnitSystem metre(L, {1.0}, {"m"}), centimetre(L, {0.01}, {"cm"});
  EXPECT_DOUBLE_EQ(convert(TypedNumber(L, 3.0, dim({1})), metre, centimetre).magnitude(), 300.0);
  EXPECT_DOUBLE_EQ(convert(TypedNumber(L, 3.0, dim({2})), metre, centimetre).magnitude(), 30000.0);
  EXPECT_EQ(convert(TypedNumber(L, 3.0, dim({0})), metre, centimetre).magnitude(), 3.0);
  EXPECT_EQ(convert(TypedNumber(L, 3.0, dim({1})), metre, metre).magnitude(), 3.0);
}

TEST(Ratio, BasicLaws) {
  auto a = tn(2.5, {1, 0, 0, 0});
  EXPECT_EQ(ratio(a, a), 1.0);
  EXPECT_THROW(ratio(a, tn(0, {1, 0, 0, 0})), ZeroDenominator);
  EXPECT_THROW(ratio(a, tn(1, {0, 1, 0, 0})), DimensionMismatch);
}

TEST(ParseDimension, Grammar) {
  EXPECT_EQ(parse_dimension("P*V/N", PVNT), dim({1, 1, -1, 0}));
  EXPECT_EQ(parse_dimension("", PVNT), dim({0, 0, 0, 0}));
  EXPECT_EQ(parse_dimension("  ", PVNT), dim({0, 0, 0, 0}));
  EXPECT_EQ(parse_dimension("P^2/T^3", PVNT), dim({2, 0, 0, -3}));
  EXPECT_EQ(parse_dimension(" P ^ -1 * P^+2 ", PVNT), dim({1, 0, 0, 0}));
}

TEST(ParseDimension, ErrorsCarryPosition) {
  try {
    parse_dimension("P*Q", PVNT);
    FAIL();
  } catch (const ParseError &e) {
    EXPECT_EQ(e.position, 2u);
  }
  EXPECT_THROW(parse_dimension("P^x", PVNT), ParseError);
  EXPECT_THROW(parse_dimension("P*", PVNT), ParseError);
  EXPECT_THROW(parse_dimension("P V", PVNT), ParseError);
}

TEST(Format, RoundTripsThroughParser) {
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    Dimension d = random_dim(rng);
    EXPECT_EQ(parse_dimension(format_dimension(d, PVNT), PVNT), d);
  }
  EXPECT_EQ(format_typed(tn(6, {1, 1, -1, 0})), "6.0 [P*V/N]");
  EXPECT_EQ(format_typed(tn(0.5, {0, 0, 0, -2})), "0.5 [T^-2]");
}

// ── Properties ──

TEST(Properties, TypedFieldLaws) {
  Rng rng(11);
  for (int i = 0; i < 2000; ++i) {
    TypedNumber a(PVNT, rng.uniform(-10, 10), random_dim(rng));
    TypedNumber b(PVNT, rng.uniform(-10, 10), random_dim(rng));
    TypedNumber c(PVNT, rng.uniform(-10, 10), random_dim(rng));
    auto l = typed_mul(typed_mul(a, b), c), r = typed_mul(a, typed_mul(b, c));
    EXPECT_EQ(l.dim(), r.dim());
    EXPECT_LE(rel(l.magnitude(), r.magnitude()), 1e-12);
    EXPECT_EQ(typed_mul(a, b).magnitude(), typed_mul(b, a).magnitude());
    TypedNumber b2(PVNT, b.magnitude(), a.dim());
    auto s = typed_add(a, b2);
    EXPECT_EQ(s.magnitude(), typed_add(b2, a).magnitude());
    EXPECT_EQ(typed_add(s, typed_neg(b2)).dim(), a.dim());
  }
}

TEST(Properties, ConversionIsAnInvertibleHomomorphism) {
  Rng rng(13);
  for (int i = 0; i < 1000; ++i) {
    UnitSystem u(PVNT, {rng.uniform(0.1, 10), rng.uniform(0.1, 10), rng.uniform(0.1, 10), rng.uniform(0.1, 10)});
    UnitSystem w(PVNT, {rng.uniform(0.1, 10), rng.uniform(0.1, 10), rng.uniform(0.1, 10), rng.uniform(0.1, 10)});
    TypedNumber a(PVNT, rng.uniform(-10, 10), random_dim(rng));
    TypedNumber b(PVNT, rng.uniform(0.5, 10), a.dim());
    auto back = convert(convert(a, u, w), w, u);
    EXPECT_LE(rel(back.magnitude(), a.magnitude()), 1e-12);
    auto lhs = convert(typed_mul(a, b), u, w);
    auto rhs = typed_mul(convert(a, u, w), convert(b, u, w));
    EXPECT_LE(rel(lhs.magnitude(), rhs.magnitude()), 1e-12);
    EXPECT_LE(rel(ratio(convert(a, u, w), convert(b, u, w)), ratio(a, b)), 1e-12);
  }
}
