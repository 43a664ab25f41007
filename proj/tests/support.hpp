#pragma once

// Random field generators shared by the test binaries.

#include <dimmech/field.hpp>
#include <dimmech/sampling.hpp>

#include <cmath>

namespace testsupport {

using namespace dimmech;

/// Sum of a few monomials of degree <= 2 plus a sine or cosine of a random
/// linear form. Coefficients stay in [-1, 1].
inline ScalarField random_poly_trig(const Chart &c, Rng &rng, bool trig = true) {
  std::size_t n = c->n();
  auto coord = [&](std::size_t i) { return ScalarField::coordinate(c, i); };
  ScalarField f = ScalarField::constant(c, rng.uniform(-1, 1));
  for (int t = 0; t < 3; ++t) {
    auto i = static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(n) - 1));
    auto j = static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(n) - 1));
    f = f + rng.uniform(-1, 1) * coord(i) + rng.uniform(-1, 1) * (coord(i) * coord(j));
  }
  if (trig) {
    ScalarField lin = ScalarField::constant(c, rng.uniform(-1, 1));
    for (std::size_t i = 0; i < n; ++i)
      lin = lin + rng.uniform(-0.7, 0.7) * coord(i);
    f = f + rng.uniform(-1, 1) * (rng.uniform() < 0.5 ? sin(lin) : cos(lin));
  }
  return f;
}

inline ScalarField random_poly(const Chart &c, Rng &rng) { return random_poly_trig(c, rng, false); }

inline VectorField random_vector_field(const Chart &c, Rng &rng, bool trig = true) {
  std::vector<ScalarField> comps;
  for (std::size_t i = 0; i < c->n(); ++i)
    comps.push_back(random_poly_trig(c, rng, trig));
  return {c, comps};
}

inline Point random_point(const Box &box, Rng &rng) {
  Point x(static_cast<Eigen::Index>(box.size()));
  for (std::size_t i = 0; i < box.size(); ++i)
    x[static_cast<Eigen::Index>(i)] = rng.uniform(box[i].first, box[i].second);
  return x;
}

/// Closed-form position of q'' + gamma q' + q = 0 with q(0) = 1, q'(0) = 0,
/// for 0 <= gamma < 2.
inline double damped_oscillator_q(double gamma, double t) {
  double w = std::sqrt(1.0 - 0.25 * gamma * gamma);
  return std::exp(-0.5 * gamma * t) * (std::cos(w * t) + 0.5 * gamma / w * std::sin(w * t));
}

} // namespace testsupport
