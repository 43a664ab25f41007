#pragma once

/// @file dynamics.hpp
/// Integral curves of Hamiltonian vector fields X_H of a certified pair,
/// with monitoring of the energy law dH/dt = H R[H].

#include <dimmech/jacobi.hpp>

#include <cstdio>
#include <ostream>

namespace dimmech {

enum class Method { RK4, RK45 };

struct FlowProblem {
  LichnerowiczPair pair;
  ScalarField H;
  Point x0;
  double t0 = 0.0, t1 = 1.0;
  double step = 1e-3;
  Method method = Method::RK4;
  double rtol = 1e-8, atol = 1e-10;
};

/// Accepted states of an integration. `energy_rate` holds H R[H],
/// `pointwise_residuals` |X_H[H] - H R[H]| and `drift_residuals` the discrete
/// |(H_{k+1} - H_k)/dt - (HR[H]_k + HR[H]_{k+1})/2| (0 on the first row).
struct Trajectory {
  std::vector<double> times;
  std::vector<Point> states;
  std::vector<double> H_values;
  std::vector<double> energy_rate;
  std::vector<double> pointwise_residuals;
  std::vector<double> drift_residuals;

  std::size_t size() const { return times.size(); }
};

namespace detail {

struct EnergySample {
  double H, rate, pointwise;
};

inline EnergySample energy_sample(const LichnerowiczPair &J, const ScalarField &H, const Point &x) {
  LocalPair L = J.local(x, false);
  Jet h = H.jet(x, 1);
  double XH = hamiltonian_value(L, h).dot(h.g);
  double rate = h.v * L.R.dot(h.g);
  return {h.v, rate, std::abs(XH - rate)};
}

inline std::string describe(double t, const Point &x) {
  std::string s = "t = " + Report::num(t) + ", state = (";
  for (Eigen::Index i = 0; i < x.size(); ++i)
    s += (i ? ", " : "") + Report::num(x[i]);
  return s + ")";
}

inline void push_state(Trajectory &tr, const LichnerowiczPair &J, const ScalarField &H, double t, const Point &x) {
  if (!x.allFinite())
    throw NonFinite("flow state is not finite at " + describe(t, x));
  if (!J.chart()->contains(x))
    throw LeftDomain("flow left the chart at " + describe(t, x));
  EnergySample e = energy_sample(J, H, x);
  double drift = 0.0;
  if (!tr.times.empty()) {
    double dt = t - tr.times.back();
    drift = std::abs((e.H - tr.H_values.back()) / dt - 0.5 * (e.rate + tr.energy_rate.back()));
  }
  tr.times.push_back(t);
  tr.states.push_back(x);
  tr.H_values.push_back(e.H);
  tr.energy_rate.push_back(e.rate);
  tr.pointwise_residuals.push_back(e.pointwise);
  tr.drift_residuals.push_back(drift);
}

} // namespace detail

/// Integrates X_H from x0 over [t0, t1]. RK4 takes fixed steps (the last one
/// shortened to land on t1); RK45 is Dormand-Prince with step control.
/// Throws LeftDomain when an accepted state leaves the chart, StepUnderflow
/// when the adaptive step collapses, NonFinite on overflow.
inline Trajectory integrate_flow(const FlowProblem &prob) {
  require_certified(prob.pair, "integrate_flow");
  require_same_chart(prob.H.chart(), prob.pair.chart(), "integrate_flow");
  if (!(prob.t1 > prob.t0))
    throw Error("integrate_flow needs t1 > t0");
  if (!(prob.step > 0.0))
    throw Error("integrate_flow needs a positive step");
  if (!prob.pair.chart()->contains(prob.x0))
    throw LeftDomain("initial state is outside the chart: " + detail::describe(prob.t0, prob.x0));

  HamiltonianField X(prob.pair, prob.H);
  auto f = [&](const Point &x) { return X.value(x); };
  Trajectory tr;
  detail::push_state(tr, prob.pair, prob.H, prob.t0, prob.x0);

  if (prob.method == Method::RK4) {
    double span = prob.t1 - prob.t0;
    auto n = static_cast<std::size_t>(std::ceil(span / prob.step - 1e-9));
    Point x = prob.x0;
    double t = prob.t0;
    for (std::size_t k = 1; k <= n; ++k) {
      double tn = k == n ? prob.t1 : prob.t0 + static_cast<double>(k) * prob.step;
      double h = tn - t;
      Eigen::VectorXd k1 = f(x);
      Eigen::VectorXd k2 = f(x + 0.5 * h * k1);
      Eigen::VectorXd k3 = f(x + 0.5 * h * k2);
      Eigen::VectorXd k4 = f(x + h * k3);
      x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      t = tn;
      detail::push_state(tr, prob.pair, prob.H, t, x);
    }
    return tr;
  }

  // Dormand-Prince 5(4); the field is autonomous, so stage times are not needed
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                          b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;

  Point x = prob.x0;
  double t = prob.t0, h = prob.step;
  Eigen::VectorXd k1 = f(x);
  while (t < prob.t1) {
    if (t + h > prob.t1)
      h = prob.t1 - t;
    if (h < 1e-14 * std::max(1.0, std::abs(t)))
      throw StepUnderflow("adaptive step underflow at " + detail::describe(t, x));
    Eigen::VectorXd k2 = f(x + h * a21 * k1);
    Eigen::VectorXd k3 = f(x + h * (a31 * k1 + a32 * k2));
    Eigen::VectorXd k4 = f(x + h * (a41 * k1 + a42 * k2 + a43 * k3));
    Eigen::VectorXd k5 = f(x + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    Eigen::VectorXd k6 = f(x + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    Point xn = x + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    Eigen::VectorXd k7 = f(xn);
    Eigen::VectorXd err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double en = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i)
      en = std::max(en, std::abs(err[i]) / (prob.atol + prob.rtol * std::max(std::abs(x[i]), std::abs(xn[i]))));
    if (!std::isfinite(en))
      throw NonFinite("adaptive step error estimate at " + detail::describe(t, x));
    if (en <= 1.0) {
      t = (prob.t1 - (t + h) < 1e-14 * std::max(1.0, std::abs(prob.t1))) ? prob.t1 : t + h;
      x = xn;
      k1 = k7;
      detail::push_state(tr, prob.pair, prob.H, t, x);
    }
    double fac = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
    h *= fac;
  }
  return tr;
}

struct EnergySummary {
  double max_pointwise_residual = 0.0;
  double max_drift_residual = 0.0;
  double max_energy_change = 0.0;
};

/// Recomputes the pointwise identity residual from (pair, H) at every state
/// and summarizes the discrete drift.
inline EnergySummary monitor_energy(const Trajectory &tr, const LichnerowiczPair &J, const ScalarField &H) {
  if (!same_chart(H.chart(), J.chart()))
    throw InconsistentInputs("monitor_energy: H and the pair live on different charts");
  std::size_t n = tr.times.size();
  if (tr.states.size() != n || tr.H_values.size() != n || tr.drift_residuals.size() != n)
    throw InconsistentInputs("monitor_energy: trajectory columns have different lengths");
  EnergySummary s;
  for (std::size_t k = 0; k < n; ++k) {
    if (static_cast<std::size_t>(tr.states[k].size()) != J.chart()->n())
      throw InconsistentInputs("monitor_energy: state dimension does not match the pair's chart");
    auto e = detail::energy_sample(J, H, tr.states[k]);
    if (std::abs(e.H - tr.H_values[k]) > 1e-12 * std::max(1.0, std::abs(e.H)))
      throw InconsistentInputs("monitor_energy: recorded H values do not match H on the states");
    s.max_pointwise_residual = std::max(s.max_pointwise_residual, e.pointwise);
    s.max_drift_residual = std::max(s.max_drift_residual, tr.drift_residuals[k]);
    s.max_energy_change = std::max(s.max_energy_change, std::abs(e.H - tr.H_values.front()));
  }
  return s;
}

/// CSV with header t,<coords>,H,drift_residual and 17 significant digits.
inline void write_csv(std::ostream &os, const Trajectory &tr, const ChartDomain &chart) {
  os << "t";
  for (const auto &nm : chart.names())
    os << ',' << nm;
  os << ",H,drift_residual\n";
  char buf[40];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
  };
  for (std::size_t k = 0; k < tr.size(); ++k) {
    put(tr.times[k]);
    for (Eigen::Index i = 0; i < tr.states[k].size(); ++i) {
      os << ',';
      put(tr.states[k][i]);
    }
    os << ',';
    put(tr.H_values[k]);
    os << ',';
    put(tr.drift_residuals[k]);
    os << '\n';
  }
}

} // namespace dimmech
