#pragma once

#include <dimmech/errors.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dimmech {

using Point = Eigen::VectorXd;

/// Open interval (lo, hi); either end may be infinite.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool contains(double x) const { return x > lo && x < hi; }
  friend bool operator==(const Interval &, const Interval &) = default;
};

/// Axis-aligned sampling box, one closed range per coordinate.
using Box = std::vector<std::pair<double, double>>;

class ChartDomain {
public:
  explicit ChartDomain(std::vector<std::string> names,
                       std::vector<std::optional<Interval>> bounds = {})
      : names_(std::move(names)), bounds_(std::move(bounds)) {
    if (names_.empty())
      throw Error("chart needs at least one coordinate");
    if (bounds_.empty())
      bounds_.resize(names_.size());
    if (bounds_.size() != names_.size())
      throw Error("chart bounds must match the number of coordinates");
    for (std::size_t i = 0; i < names_.size(); ++i) {
      for (std::size_t j = 0; j < i; ++j)
        if (names_[i] == names_[j])
          throw CoordinateNameClash("coordinate '" + names_[i] + "' repeated");
      if (bounds_[i] && !(bounds_[i]->lo < bounds_[i]->hi))
        throw Error("empty bound interval for '" + names_[i] + "'");
    }
  }

  std::size_t n() const { return names_.size(); }
  const std::vector<std::string> &names() const { return names_; }
  const std::string &name(std::size_t i) const { return names_.at(i); }
  const std::vector<std::optional<Interval>> &bounds() const { return bounds_; }

  std::optional<std::size_t> index_of(std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
      if (names_[i] == name)
        return i;
    return std::nullopt;
  }

  bool contains(const Point &x) const {
    if (static_cast<std::size_t>(x.size()) != n())
      return false;
    for (std::size_t i = 0; i < n(); ++i) {
      if (!std::isfinite(x[i]))
        return false;
      if (bounds_[i] && !bounds_[i]->contains(x[i]))
        return false;
    }
    return true;
  }

  /// Finite box used for quasi-random sampling: declared bounds where finite,
  /// [-2, 2] for unbounded coordinates, and a width-4 slab for half-lines.
  Box sampling_box() const {
    Box box;
    for (const auto &b : bounds_) {
      double lo = -2.0, hi = 2.0;
      if (b) {
        bool flo = std::isfinite(b->lo), fhi = std::isfinite(b->hi);
        if (flo && fhi) {
          lo = b->lo;
          hi = b->hi;
        } else if (flo) {
          lo = b->lo;
          hi = b->lo + 4.0;
        } else if (fhi) {
          lo = b->hi - 4.0;
          hi = b->hi;
        }
      }
      box.emplace_back(lo, hi);
    }
    return box;
  }

  friend bool operator==(const ChartDomain &, const ChartDomain &) = default;

private:
  std::vector<std::string> names_;
  std::vector<std::optional<Interval>> bounds_;
};

using Chart = std::shared_ptr<const ChartDomain>;

inline Chart make_chart(std::vector<std::string> names,
                        std::vector<std::optional<Interval>> bounds = {}) {
  return std::make_shared<const ChartDomain>(std::move(names), std::move(bounds));
}

inline bool same_chart(const Chart &a, const Chart &b) {
  return a == b || (a && b && *a == *b);
}

inline void require_same_chart(const Chart &a, const Chart &b, const char *where) {
  if (!same_chart(a, b))
    throw ChartMismatch(std::string(where) + ": operands live on different charts");
}

} // namespace dimmech
