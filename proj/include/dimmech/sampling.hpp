#pragma once

/// @file sampling.hpp
/// Seeded low-discrepancy point sets and a portable uniform generator.

#include <dimmech/chart.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

namespace dimmech {

/// mt19937_64 with a uniform mapping that does not depend on the standard
/// library's distribution implementations, so sample sets are reproducible
/// across toolchains.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t bits() { return eng_(); }

  /// Integer in [lo, hi].
  std::int64_t integer(std::int64_t lo, std::int64_t hi) {
    auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(eng_() % span);
  }

private:
  std::mt19937_64 eng_;
};

namespace detail {
inline double radical_inverse(std::uint64_t i, std::uint64_t base) {
  double inv = 1.0 / static_cast<double>(base), f = inv, r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

inline std::uint64_t nth_prime(std::size_t k) {
  static const std::uint64_t p[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41,
                                    43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97};
  if (k >= sizeof p / sizeof p[0])
    throw Error("quasi-random sampling supports at most 25 dimensions");
  return p[k];
}
} // namespace detail

/// Halton points in `box` with a seed-derived Cranley-Patterson shift. Points
/// stay strictly inside the box so open chart bounds are respected.
inline std::vector<Point> quasi_random(const Box &box, std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> shift(box.size());
  for (auto &s : shift)
    s = rng.uniform();
  std::vector<Point> pts;
  pts.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Point x(static_cast<Eigen::Index>(box.size()));
    for (std::size_t d = 0; d < box.size(); ++d) {
      double u = detail::radical_inverse(i + 1, detail::nth_prime(d)) + shift[d];
      u -= std::floor(u);
      u = std::clamp(u, 1e-9, 1.0 - 1e-9);
      x[static_cast<Eigen::Index>(d)] = box[d].first + (box[d].second - box[d].first) * u;
    }
    pts.push_back(std::move(x));
  }
  return pts;
}

inline std::vector<Point> quasi_random(const ChartDomain &chart, std::size_t count,
                                       std::uint64_t seed) {
  return quasi_random(chart.sampling_box(), count, seed);
}

inline Box cube(std::size_t n, double lo, double hi) { return Box(n, {lo, hi}); }

} // namespace dimmech
