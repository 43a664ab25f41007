#include "support.hpp"

#include <dimmech/dynamics.hpp>

#include <gtest/gtest.h>

#include <sstream>

using namespace dimmech;
using testsupport::damped_oscillator_q;

namespace {

struct Damped {
  CanonicalContact cc = canonical_contact(make_chart({"q"}));
  ScalarField H;

  explicit Damped(double gamma) : H(hamiltonian(gamma)) {}

  ScalarField hamiltonian(double gamma) const {
    auto q = cc.jet.q(0), p = cc.jet.p(0), z = cc.jet.z();
    return 0.5 * (p * p + q * q) + gamma * z;
  }

  FlowProblem problem(double step, double t1 = 10.0) const {
    Point x0(3);
    x0 << 1.0, 0.0, 0.0;
    return {cc.pair, H, x0, 0.0, t1, step};
  }
};

/// R = 0, pi^{pq} = 1 on (q, p): X_H = (dH/dp, -dH/dq).
LichnerowiczPair poisson_plane(const Chart &c) {
  BivectorField P(c);
  P.set(1, 0, ScalarField::constant(c, 1.0));
  LichnerowiczPair J(P, VectorField::zero(c));
  certify(J);
  return J;
}

double max_q_error(const Trajectory &tr, double gamma) {
  double e = 0.0;
  for (std::size_t k = 0; k < tr.size(); ++k)
    e = std::max(e, std::abs(tr.states[k][0] - damped_oscillator_q(gamma, tr.times[k])));
  return e;
}

} // namespace

TEST(Flow, ZeroHamiltonianKeepsInitialState) {
  auto cc = canonical_contact(make_chart({"q"}));
  Point x0(3);
  x0 << 0.3, -0.7, 1.1;
  auto tr = integrate_flow({cc.pair, ScalarField::constant(cc.jet.chart(), 0.0), x0, 0.0, 1.0, 0.1});
  ASSERT_EQ(tr.size(), 11u);
  for (const auto &x : tr.states)
    EXPECT_EQ(x, x0);
  EXPECT_DOUBLE_EQ(tr.times.back(), 1.0);
}

TEST(Flow, PoissonOscillatorConservesEnergyAndFollowsCircles) {
  Chart c = make_chart({"q", "p"});
  auto J = poisson_plane(c);
  auto q = ScalarField::coordinate(c, 0), p = ScalarField::coordinate(c, 1);
  ScalarField H = 0.5 * (p * p + q * q);
  Point x0(2);
  x0 << 1.0, 0.0;
  auto tr = integrate_flow({J, H, x0, 0.0, 10.0, 1e-3});
  auto s = monitor_energy(tr, J, H);
  EXPECT_LT(s.max_energy_change, 1e-6);
  EXPECT_LT(s.max_drift_residual, 1e-6);
  EXPECT_LT(s.max_pointwise_residual, 1e-12);
  for (std::size_t k = 0; k < tr.size(); k += 250) {
    EXPECT_NEAR(tr.states[k][0], std::cos(tr.times[k]), 1e-9);
    EXPECT_NEAR(tr.states[k][1], -std::sin(tr.times[k]), 1e-9);
  }
}

TEST(Flow, DampedOscillatorMatchesClosedForm) {
  Damped d(0.1);
  auto tr = integrate_flow(d.problem(1e-3));
  EXPECT_EQ(tr.size(), 10001u);
  EXPECT_LT(max_q_error(tr, 0.1), 1e-6);
  auto s = monitor_energy(tr, d.cc.pair, d.H);
  EXPECT_LT(s.max_pointwise_residual, 1e-12);
  EXPECT_LT(s.max_drift_residual, 1e-5);
}

TEST(Flow, EnergyFollowsDampingLaw) {
  // H R[H] = -gamma H, so H(t) = H(0) e^{-gamma t}
  Damped d(0.1);
  auto tr = integrate_flow(d.problem(1e-2));
  for (std::size_t k = 0; k < tr.size(); k += 100)
    EXPECT_NEAR(tr.H_values[k], 0.5 * std::exp(-0.1 * tr.times[k]), 1e-8);
}

TEST(Flow, UndampedContactLimitConservesEnergy) {
  Damped d(0.0);
  auto tr = integrate_flow(d.problem(1e-3));
  EXPECT_LT(monitor_energy(tr, d.cc.pair, d.H).max_energy_change, 1e-6);
}

TEST(Flow, RK4ConvergesAtFourthOrder) {
  Damped d(0.1);
  double e1 = max_q_error(integrate_flow(d.problem(0.1)), 0.1);
  double e2 = max_q_error(integrate_flow(d.problem(0.05)), 0.1);
  double e3 = max_q_error(integrate_flow(d.problem(0.025)), 0.1);
  EXPECT_GE(e1 / e2, 12.0);
  EXPECT_GE(e2 / e3, 12.0);
}

TEST(Flow, TimeReversalReturnsToStart) {
  Damped d(0.1);
  auto fwd = integrate_flow(d.problem(1e-3, 1.0));
  FlowProblem back{d.cc.pair, -1.0 * d.H, fwd.states.back(), 0.0, 1.0, 1e-3};
  auto bwd = integrate_flow(back);
  EXPECT_LT((bwd.states.back() - fwd.states.front()).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Flow, AdaptiveMethodMatchesClosedForm) {
  Damped d(0.1);
  FlowProblem p = d.problem(0.1);
  p.method = Method::RK45;
  auto tr = integrate_flow(p);
  EXPECT_DOUBLE_EQ(tr.times.back(), 10.0);
  EXPECT_LT(tr.size(), 2000u);
  EXPECT_LT(max_q_error(tr, 0.1), 1e-6);
  for (std::size_t k = 1; k < tr.size(); ++k)
    EXPECT_GT(tr.times[k], tr.times[k - 1]);
}

TEST(Flow, LeavingTheChartIsAnError) {
  Chart base = make_chart({"q"}, {Interval{-1.5, 1.5}});
  auto cc = canonical_contact(base);
  auto p = cc.jet.p(0);
  Point x0(3);
  x0 << 0.0, 1.0, 0.0;
  // X_H = (1, 0, p) for H = p: q moves right at unit speed
  EXPECT_THROW(integrate_flow({cc.pair, p, x0, 0.0, 3.0, 1e-2}), LeftDomain);
  x0[0] = 2.0;
  EXPECT_THROW(integrate_flow({cc.pair, p, x0, 0.0, 1.0, 1e-2}), LeftDomain);
}

TEST(Flow, BlowUpIsReported) {
  Chart c = make_chart({"q", "p"});
  auto J = poisson_plane(c);
  auto q = ScalarField::coordinate(c, 0), p = ScalarField::coordinate(c, 1);
  // dq/dt = q^2 blows up at t = 1 from q = 1
  Point x0(2);
  x0 << 1.0, 0.0;
  FlowProblem prob{J, q * q * p, x0, 0.0, 2.0, 0.05};
  EXPECT_THROW(integrate_flow(prob), NonFinite);
  prob.method = Method::RK45;
  EXPECT_THROW(integrate_flow(prob), StepUnderflow);
}

TEST(Flow, RequiresCertifiedPairAndValidSpan) {
  Chart c = make_chart({"q", "p"});
  BivectorField P(c);
  P.set(1, 0, ScalarField::constant(c, 1.0));
  LichnerowiczPair raw(P, VectorField::zero(c));
  Point x0 = Point::Zero(2);
  ScalarField H = ScalarField::coordinate(c, 0);
  EXPECT_THROW(integrate_flow({raw, H, x0, 0.0, 1.0, 0.1}), UncertifiedInput);
  auto J = poisson_plane(c);
  EXPECT_THROW(integrate_flow({J, H, x0, 1.0, 1.0, 0.1}), Error);
  EXPECT_THROW(integrate_flow({J, H, x0, 0.0, 1.0, 0.0}), Error);
}

TEST(Monitor, InconsistentInputsRejected) {
  Damped d(0.1);
  auto tr = integrate_flow(d.problem(0.1, 1.0));
  Chart c = make_chart({"q", "p"});
  auto J = poisson_plane(c);
  EXPECT_THROW(monitor_energy(tr, J, d.H), InconsistentInputs);
  EXPECT_THROW(monitor_energy(tr, J, ScalarField::coordinate(c, 0)), InconsistentInputs);
  Trajectory broken = tr;
  broken.H_values.pop_back();
  EXPECT_THROW(monitor_energy(broken, d.cc.pair, d.H), InconsistentInputs);
  EXPECT_THROW(monitor_energy(tr, d.cc.pair, d.hamiltonian(0.2)), InconsistentInputs);
}

TEST(Csv, HeaderAndSeventeenDigits) {
  Damped d(0.1);
  auto tr = integrate_flow(d.problem(0.5, 1.0));
  std::ostringstream os;
  write_csv(os, tr, *d.cc.jet.chart());
  std::string s = os.str();
  EXPECT_EQ(s.substr(0, s.find('\n')), "t,q,p,z,H,drift_residual");
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 4);
  EXPECT_EQ(s.find('\r'), std::string::npos);
  std::istringstream is(s);
  std::string line;
  std::getline(is, line);
  std::getline(is, line);
  EXPECT_EQ(line, "0,1,0,0,0.5,0");
  std::getline(is, line);
  double t, q;
  ASSERT_EQ(std::sscanf(line.c_str(), "%lf,%lf", &t, &q), 2);
  EXPECT_EQ(t, 0.5);
  EXPECT_EQ(q, tr.states[1][0]);
}

TEST(Csv, DeterministicAcrossRuns) {
  Damped d(0.1);
  std::ostringstream a, b;
  write_csv(a, integrate_flow(d.problem(0.01, 2.0)), *d.cc.jet.chart());
  write_csv(b, integrate_flow(d.problem(0.01, 2.0)), *d.cc.jet.chart());
  EXPECT_EQ(a.str(), b.str());
}
