#pragma once

/// @file measurand.hpp
/// Dimensioned numbers over a measurand space.
///
/// A MeasurandSpace names k base measurands. A Dimension is an integer
/// exponent vector over those names, and a TypedNumber pairs a magnitude with
/// a Dimension. Magnitudes are coordinates with respect to a hidden reference
/// unit per base measurand; a UnitSystem records the scale of its chosen units
/// relative to that reference.

#include <dimmech/errors.hpp>

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dimmech {

class MeasurandSpace {
public:
  explicit MeasurandSpace(std::vector<std::string> base_names)
      : names_(std::make_shared<const std::vector<std::string>>(
            std::move(base_names))) {
    if (names_->empty())
      throw Error("MeasurandSpace needs at least one base measurand");
    for (std::size_t i = 0; i < names_->size(); ++i) {
      if (!valid_name((*names_)[i]))
        throw Error("invalid measurand name '" + (*names_)[i] + "'");
      for (std::size_t j = 0; j < i; ++j)
        if ((*names_)[i] == (*names_)[j])
          throw Error("duplicate measurand name '" + (*names_)[i] + "'");
    }
  }

  std::size_t k() const { return names_->size(); }
  const std::vector<std::string> &names() const { return *names_; }

  std::optional<std::size_t> index_of(std::string_view name) const {
    for (std::size_t i = 0; i < names_->size(); ++i)
      if ((*names_)[i] == name)
        return i;
    return std::nullopt;
  }

  friend bool operator==(const MeasurandSpace &a, const MeasurandSpace &b) {
    return a.names_ == b.names_ || *a.names_ == *b.names_;
  }

  static bool valid_name(std::string_view s) {
    if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_'))
      return false;
    for (char c : s)
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_'))
        return false;
    return true;
  }

private:
  std::shared_ptr<const std::vector<std::string>> names_;
};

struct Dimension {
  std::vector<std::int64_t> exponents;

  static Dimension zero(std::size_t k) { return {std::vector<std::int64_t>(k, 0)}; }

  static Dimension unit(std::size_t k, std::size_t i, std::int64_t n = 1) {
    Dimension d = zero(k);
    d.exponents.at(i) = n;
    return d;
  }

  std::size_t size() const { return exponents.size(); }

  bool is_zero() const {
    for (auto e : exponents)
      if (e != 0)
        return false;
    return true;
  }

  friend bool operator==(const Dimension &, const Dimension &) = default;
};

inline Dimension operator+(const Dimension &a, const Dimension &b) {
  if (a.size() != b.size())
    throw MeasurandSpaceMismatch("exponent vectors of different length");
  Dimension r = a;
  for (std::size_t i = 0; i < r.size(); ++i)
    if (__builtin_add_overflow(a.exponents[i], b.exponents[i], &r.exponents[i]))
      throw ExponentOverflow("exponent addition overflows");
  return r;
}

inline Dimension operator-(const Dimension &a) {
  Dimension r = a;
  for (auto &e : r.exponents) {
    if (e == INT64_MIN)
      throw ExponentOverflow("exponent negation overflows");
    e = -e;
  }
  return r;
}

inline Dimension operator-(const Dimension &a, const Dimension &b) { return a + (-b); }

inline Dimension operator*(std::int64_t n, const Dimension &a) {
  Dimension r = a;
  for (auto &e : r.exponents)
    if (__builtin_mul_overflow(e, n, &e))
      throw ExponentOverflow("exponent scaling overflows");
  return r;
}

/// Renders a dimension in the grammar accepted by parse_dimension, numerator
/// atoms first: (1,1,-1,0) over (P,V,N,T) gives "P*V/N". Zero gives "".
inline std::string format_dimension(const Dimension &d, const MeasurandSpace &space) {
  if (d.size() != space.k())
    throw MeasurandSpaceMismatch("dimension length does not match space");
  std::string out;
  auto atom = [&](std::size_t i, std::int64_t e) {
    std::string s = space.names()[i];
    if (e != 1)
      s += "^" + std::to_string(e);
    return s;
  };
  for (std::size_t i = 0; i < d.size(); ++i)
    if (d.exponents[i] > 0)
      out += (out.empty() ? "" : "*") + atom(i, d.exponents[i]);
  for (std::size_t i = 0; i < d.size(); ++i)
    if (d.exponents[i] < 0) {
      if (out.empty())
        out = atom(i, d.exponents[i]);
      else
        out += "/" + atom(i, -d.exponents[i]);
    }
  return out;
}

/// Parses `expr := atom (('*'|'/') atom)*`, `atom := NAME ('^' SIGNED_INT)?`.
/// Whitespace is ignored and the empty string is dimensionless.
inline Dimension parse_dimension(std::string_view src, const MeasurandSpace &space) {
  std::size_t pos = 0;
  auto skip = [&] {
    while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos])))
      ++pos;
  };
  Dimension acc = Dimension::zero(space.k());
  skip();
  if (pos == src.size())
    return acc;

  bool negate = false;
  while (true) {
    skip();
    std::size_t start = pos;
    while (pos < src.size() &&
           (std::isalnum(static_cast<unsigned char>(src[pos])) || src[pos] == '_'))
      ++pos;
    if (start == pos)
      throw ParseError(start, "expected a measurand name");
    std::string_view name = src.substr(start, pos - start);
    auto idx = space.index_of(name);
    if (!idx)
      throw ParseError(start, "unknown measurand '" + std::string(name) + "'");

    std::int64_t e = 1;
    skip();
    if (pos < src.size() && src[pos] == '^') {
      ++pos;
      skip();
      std::size_t estart = pos;
      if (pos < src.size() && (src[pos] == '+' || src[pos] == '-'))
        ++pos;
      while (pos < src.size() && std::isdigit(static_cast<unsigned char>(src[pos])))
        ++pos;
      std::string_view digits = src.substr(estart, pos - estart);
      if (!digits.empty() && digits[0] == '+')
        digits.remove_prefix(1);
      auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), e);
      if (digits.empty() || ec != std::errc() || ptr != digits.data() + digits.size())
        throw ParseError(estart, "malformed exponent");
    }
    Dimension term = e * Dimension::unit(space.k(), *idx);
    acc = acc + (negate ? -term : term);

    skip();
    if (pos == src.size())
      return acc;
    if (src[pos] == '*')
      negate = false;
    else if (src[pos] == '/')
      negate = true;
    else
      throw ParseError(pos, std::string("unexpected character '") + src[pos] + "'");
    ++pos;
  }
}

class TypedNumber {
public:
  TypedNumber(MeasurandSpace space, double magnitude, Dimension dim)
      : space_(std::move(space)), magnitude_(magnitude), dim_(std::move(dim)) {
    if (dim_.size() != space_.k())
      throw MeasurandSpaceMismatch("dimension length does not match space");
    if (!std::isfinite(magnitude_))
      throw NonFinite("typed number magnitude");
  }

  const MeasurandSpace &space() const { return space_; }
  double magnitude() const { return magnitude_; }
  const Dimension &dim() const { return dim_; }

private:
  MeasurandSpace space_;
  double magnitude_;
  Dimension dim_;
};

namespace detail {
inline void require_same_space(const TypedNumber &a, const TypedNumber &b) {
  if (!(a.space() == b.space()))
    throw MeasurandSpaceMismatch("operands live in different measurand spaces");
}
} // namespace detail

inline TypedNumber typed_mul(const TypedNumber &a, const TypedNumber &b) {
  detail::require_same_space(a, b);
  return {a.space(), a.magnitude() * b.magnitude(), a.dim() + b.dim()};
}

inline TypedNumber typed_add(const TypedNumber &a, const TypedNumber &b) {
  detail::require_same_space(a, b);
  if (a.dim() != b.dim())
    throw DimensionMismatch("typed_add", format_dimension(a.dim(), a.space()),
                            format_dimension(b.dim(), b.space()));
  return {a.space(), a.magnitude() + b.magnitude(), a.dim()};
}

inline TypedNumber typed_neg(const TypedNumber &a) {
  return {a.space(), -a.magnitude(), a.dim()};
}

inline TypedNumber typed_inv(const TypedNumber &a) {
  if (a.magnitude() == 0.0)
    throw ZeroDenominator("inverse of zero");
  return {a.space(), 1.0 / a.magnitude(), -a.dim()};
}

inline TypedNumber typed_pow(const TypedNumber &a, std::int64_t n) {
  if (n < 0 && a.magnitude() == 0.0)
    throw ZeroDenominator("negative power of zero");
  return {a.space(), std::pow(a.magnitude(), static_cast<double>(n)), n * a.dim()};
}

inline const Dimension &dimension_of(const TypedNumber &a) { return a.dim(); }

/// The unique real l with a = l * b in the shared fiber.
inline double ratio(const TypedNumber &a, const TypedNumber &b) {
  detail::require_same_space(a, b);
  if (a.dim() != b.dim())
    throw DimensionMismatch("ratio", format_dimension(a.dim(), a.space()),
                            format_dimension(b.dim(), b.space()));
  if (b.magnitude() == 0.0)
    throw ZeroDenominator("ratio with zero denominator");
  return a.magnitude() / b.magnitude();
}

/// Formats as `<magnitude> [<dimension-expr>]`, e.g. `6.0 [P*V/N]`.
inline std::string format_typed(double magnitude, const Dimension &d,
                                const MeasurandSpace &space) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, magnitude);
  std::string m(buf, ptr);
  if (m.find_first_of(".eEn") == std::string::npos)
    m += ".0";
  return m + " [" + format_dimension(d, space) + "]";
}

inline std::string format_typed(const TypedNumber &a) {
  return format_typed(a.magnitude(), a.dim(), a.space());
}

class UnitSystem {
public:
  UnitSystem(MeasurandSpace space, std::vector<double> scales,
             std::vector<std::string> unit_names = {})
      : space_(std::move(space)), scales_(std::move(scales)),
        unit_names_(std::move(unit_names)) {
    if (scales_.size() != space_.k())
      throw MeasurandSpaceMismatch("unit system needs one scale per base measurand");
    for (double s : scales_)
      if (s == 0.0 || !std::isfinite(s))
        throw Error("unit scales must be finite and nonzero");
    if (unit_names_.empty())
      unit_names_ = space_.names();
    if (unit_names_.size() != space_.k())
      throw MeasurandSpaceMismatch("unit system needs one unit name per base measurand");
  }

  const MeasurandSpace &space() const { return space_; }
  const std::vector<double> &scales() const { return scales_; }
  const std::vector<std::string> &unit_names() const { return unit_names_; }

private:
  MeasurandSpace space_;
  std::vector<double> scales_;
  std::vector<std::string> unit_names_;
};

/// Scale of the induced unit of dimension d relative to the reference basis.
inline double induced_unit_scale(const UnitSystem &u, const Dimension &d) {
  if (d.size() != u.space().k())
    throw MeasurandSpaceMismatch("dimension does not belong to the unit system's space");
  double s = 1.0;
  for (std::size_t i = 0; i < d.size(); ++i)
    s *= std::pow(u.scales()[i], static_cast<double>(d.exponents[i]));
  return s;
}

/// Re-expresses a reading taken in `from` units as a reading in `to` units.
inline TypedNumber convert(const TypedNumber &a, const UnitSystem &from, const UnitSystem &to) {
  if (!(a.space() == from.space()) || !(from.space() == to.space()))
    throw MeasurandSpaceMismatch("conversion across measurand spaces");
  double factor = 1.0;
  for (std::size_t i = 0; i < a.dim().size(); ++i)
    factor *= std::pow(from.scales()[i] / to.scales()[i],
                       static_cast<double>(a.dim().exponents[i]));
  return {a.space(), a.magnitude() * factor, a.dim()};
}

} // namespace dimmech
