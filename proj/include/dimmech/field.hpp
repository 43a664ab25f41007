#pragma once

/// @file field.hpp
/// Scalar, vector and bivector fields on a chart, backed by expression DAGs.

#include <dimmech/chart.hpp>
#include <dimmech/expr.hpp>

#include <charconv>
#include <cctype>
#include <string_view>

namespace dimmech {

using Covector = Eigen::VectorXd;

class ScalarField {
public:
  ScalarField(Chart chart, NodePtr root)
      : chart_(std::move(chart)), tape_(std::make_shared<const Tape>(std::move(root))) {
    if (!chart_)
      throw Error("scalar field without a chart");
  }

  static ScalarField constant(Chart chart, double c) { return {std::move(chart), ex::constant(c)}; }

  static ScalarField coordinate(Chart chart, std::size_t i) {
    if (i >= chart->n())
      throw UnknownVariable("coordinate index " + std::to_string(i));
    return {std::move(chart), ex::var(i)};
  }

  static ScalarField coordinate(Chart chart, std::string_view name) {
    auto i = chart->index_of(name);
    if (!i)
      throw UnknownVariable("'" + std::string(name) + "' is not a chart coordinate");
    return coordinate(std::move(chart), *i);
  }

  const Chart &chart() const { return chart_; }
  const NodePtr &root() const { return tape_->root(); }
  const Tape &tape() const { return *tape_; }

  double operator()(const Point &x) const { return value(x); }

  double value(const Point &x) const {
    check_point(x);
    return tape_->value(x);
  }

  Covector grad(const Point &x) const { return jet(x, 1).g; }
  Eigen::MatrixXd hess(const Point &x) const { return jet(x, 2).h; }

  Jet jet(const Point &x, int order = 2) const {
    check_point(x);
    return tape_->eval(x, order);
  }

  /// Evaluates on input jets, for composite maps.
  Jet jet(const std::vector<Jet> &inputs) const { return tape_->eval(inputs); }

  ScalarField diff(std::size_t i) const { return {chart_, ex::diff(root(), i)}; }

  /// f(subs_1(y), ..., subs_n(y)) as a field on the substitutes' chart.
  ScalarField compose(const Chart &target, const std::vector<ScalarField> &subs) const {
    if (subs.size() != chart_->n())
      throw LengthMismatch("composition needs one substitute per coordinate");
    std::vector<NodePtr> roots;
    for (const auto &s : subs) {
      require_same_chart(s.chart(), target, "compose");
      roots.push_back(s.root());
    }
    return {target, ex::substitute(root(), roots)};
  }

  /// The same expression on another chart of equal coordinate count.
  ScalarField rechart(const Chart &target) const {
    if (target->n() != chart_->n())
      throw ChartMismatch("rechart needs equal dimension");
    return {target, root()};
  }

  bool is_zero() const { return root()->is_const(0.0); }

  std::string str() const { return ex::to_string(root(), chart_->names()); }

private:
  void check_point(const Point &x) const {
    if (static_cast<std::size_t>(x.size()) != chart_->n())
      throw ChartMismatch("point dimension does not match chart");
  }

  Chart chart_;
  std::shared_ptr<const Tape> tape_;
};

inline ScalarField operator+(const ScalarField &a, const ScalarField &b) {
  require_same_chart(a.chart(), b.chart(), "+");
  return {a.chart(), ex::add(a.root(), b.root())};
}
inline ScalarField operator-(const ScalarField &a, const ScalarField &b) {
  require_same_chart(a.chart(), b.chart(), "-");
  return {a.chart(), ex::sub(a.root(), b.root())};
}
inline ScalarField operator*(const ScalarField &a, const ScalarField &b) {
  require_same_chart(a.chart(), b.chart(), "*");
  return {a.chart(), ex::mul(a.root(), b.root())};
}
inline ScalarField operator/(const ScalarField &a, const ScalarField &b) {
  require_same_chart(a.chart(), b.chart(), "/");
  return {a.chart(), ex::div(a.root(), b.root())};
}
inline ScalarField operator-(const ScalarField &a) { return {a.chart(), ex::neg(a.root())}; }
inline ScalarField operator*(double c, const ScalarField &a) {
  return {a.chart(), ex::mul(ex::constant(c), a.root())};
}
inline ScalarField operator+(double c, const ScalarField &a) {
  return {a.chart(), ex::add(ex::constant(c), a.root())};
}
inline ScalarField operator+(const ScalarField &a, double c) { return c + a; }
inline ScalarField operator-(const ScalarField &a, double c) { return (-c) + a; }
inline ScalarField operator*(const ScalarField &a, double c) { return c * a; }
inline ScalarField pow(const ScalarField &a, std::int64_t k) { return {a.chart(), ex::powi(a.root(), k)}; }
inline ScalarField sin(const ScalarField &a) { return {a.chart(), ex::fn(Op::Sin, a.root())}; }
inline ScalarField cos(const ScalarField &a) { return {a.chart(), ex::fn(Op::Cos, a.root())}; }
inline ScalarField exp(const ScalarField &a) { return {a.chart(), ex::fn(Op::Exp, a.root())}; }
inline ScalarField log(const ScalarField &a) { return {a.chart(), ex::fn(Op::Log, a.root())}; }

/// Parses `expr := term (('+'|'-') term)*`, `term := factor (('*'|'/') factor)*`,
/// `factor := base ('^' SIGNED_INT)?`,
/// `base := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')' | '-' factor`,
/// with functions sin, cos, exp, log. When `allow_const` is set the form
/// `const(<number>, "<dim-expr>")` yields an annotated constant.
class FieldParser {
public:
  FieldParser(std::string_view src, const Chart &chart, bool allow_const)
      : src_(src), chart_(chart), allow_const_(allow_const) {}

  NodePtr parse() {
    NodePtr r = expr();
    skip();
    if (pos_ != src_.size())
      throw ParseError(pos_, std::string("unexpected '") + src_[pos_] + "'");
    return r;
  }

private:
  void skip() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_])))
      ++pos_;
  }

  bool eat(char c) {
    skip();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!eat(c))
      throw ParseError(pos_, std::string("expected '") + c + "'");
  }

  NodePtr expr() {
    NodePtr lhs = term();
    while (true) {
      skip();
      std::size_t at = pos_;
      if (eat('+'))
        lhs = ex::make(Op::Add, lhs, term(), at);
      else if (eat('-'))
        lhs = ex::make(Op::Sub, lhs, term(), at);
      else
        return lhs;
    }
  }

  NodePtr term() {
    NodePtr lhs = factor();
    while (true) {
      skip();
      std::size_t at = pos_;
      if (eat('*'))
        lhs = ex::make(Op::Mul, lhs, factor(), at);
      else if (eat('/'))
        lhs = ex::make(Op::Div, lhs, factor(), at);
      else
        return lhs;
    }
  }

  NodePtr factor() {
    NodePtr b = base();
    skip();
    std::size_t at = pos_;
    if (eat('^'))
      return ex::pow(b, signed_int(), at);
    return b;
  }

  std::int64_t signed_int() {
    skip();
    std::size_t start = pos_;
    if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-'))
      ++pos_;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
      ++pos_;
    std::string_view t = src_.substr(start, pos_ - start);
    if (!t.empty() && t[0] == '+')
      t.remove_prefix(1);
    std::int64_t k = 0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), k);
    if (t.empty() || ec != std::errc() || p != t.data() + t.size())
      throw ParseError(start, "expected an integer exponent");
    return k;
  }

  double number() {
    std::size_t start = pos_;
    while (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.'))
      ++pos_;
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t save = pos_++;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-'))
        ++pos_;
      if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
          ++pos_;
      else
        pos_ = save;
    }
    double v = 0.0;
    auto [p, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, v);
    if (ec != std::errc() || p != src_.data() + pos_)
      throw ParseError(start, "malformed number");
    return v;
  }

  NodePtr base() {
    skip();
    if (pos_ >= src_.size())
      throw ParseError(pos_, "unexpected end of expression");
    std::size_t at = pos_;
    char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr e = expr();
      expect(')');
      return e;
    }
    if (c == '-') {
      ++pos_;
      return ex::make(Op::Neg, factor(), nullptr, at);
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
      return ex::constant(number(), at);
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
        ++pos_;
      std::string name(src_.substr(at, pos_ - at));
      skip();
      if (pos_ < src_.size() && src_[pos_] == '(') {
        ++pos_;
        if (name == "const" && allow_const_)
          return annotated_const(at);
        Op op;
        if (name == "sin") op = Op::Sin;
        else if (name == "cos") op = Op::Cos;
        else if (name == "exp") op = Op::Exp;
        else if (name == "log") op = Op::Log;
        else
          throw ParseError(at, "unknown function '" + name + "'");
        NodePtr arg = expr();
        expect(')');
        return ex::make(op, arg, nullptr, at);
      }
      auto idx = chart_->index_of(name);
      if (!idx)
        throw UnknownVariable("'" + name + "' at position " + std::to_string(at) +
                              " is not a chart coordinate");
      return ex::var(*idx, at);
    }
    throw ParseError(at, std::string("unexpected '") + c + "'");
  }

  NodePtr annotated_const(std::size_t at) {
    skip();
    bool negative = eat('-');
    skip();
    double v = number();
    expect(',');
    skip();
    if (pos_ >= src_.size() || src_[pos_] != '"')
      throw ParseError(pos_, "expected a quoted dimension expression");
    std::size_t close = src_.find('"', pos_ + 1);
    if (close == std::string_view::npos)
      throw ParseError(pos_, "unterminated dimension string");
    auto n = std::make_shared<Node>();
    n->value = negative ? -v : v;
    n->annotated = true;
    n->annotation = std::string(src_.substr(pos_ + 1, close - pos_ - 1));
    n->pos = at;
    pos_ = close + 1;
    expect(')');
    return n;
  }

  std::string_view src_;
  const Chart &chart_;
  bool allow_const_;
  std::size_t pos_ = 0;
};

inline ScalarField parse_field(std::string_view src, const Chart &chart, bool allow_const = false) {
  return {chart, FieldParser(src, chart, allow_const).parse()};
}

class VectorField {
public:
  VectorField(Chart chart, std::vector<ScalarField> components)
      : chart_(std::move(chart)), comps_(std::move(components)) {
    if (comps_.size() != chart_->n())
      throw LengthMismatch("vector field needs one component per coordinate");
    for (const auto &c : comps_)
      require_same_chart(c.chart(), chart_, "VectorField");
  }

  static VectorField zero(const Chart &chart) {
    return {chart, std::vector<ScalarField>(chart->n(), ScalarField::constant(chart, 0.0))};
  }

  /// Coordinate vector field d/dx_i.
  static VectorField basis(const Chart &chart, std::size_t i) {
    std::vector<ScalarField> c(chart->n(), ScalarField::constant(chart, 0.0));
    c.at(i) = ScalarField::constant(chart, 1.0);
    return {chart, c};
  }

  const Chart &chart() const { return chart_; }
  std::size_t n() const { return comps_.size(); }
  const ScalarField &operator[](std::size_t i) const { return comps_[i]; }
  const std::vector<ScalarField> &components() const { return comps_; }

  Eigen::VectorXd value(const Point &x) const {
    Eigen::VectorXd v(static_cast<Eigen::Index>(n()));
    for (std::size_t i = 0; i < n(); ++i)
      v[static_cast<Eigen::Index>(i)] = comps_[i].value(x);
    return v;
  }

  /// Jacobian J(i, l) = d_l X^i.
  Eigen::MatrixXd jacobian(const Point &x) const {
    auto n_ = static_cast<Eigen::Index>(n());
    Eigen::MatrixXd J(n_, n_);
    for (Eigen::Index i = 0; i < n_; ++i)
      J.row(i) = comps_[static_cast<std::size_t>(i)].grad(x).transpose();
    return J;
  }

  /// X[f] = X^i d_i f, built symbolically.
  ScalarField apply(const ScalarField &f) const {
    require_same_chart(f.chart(), chart_, "VectorField::apply");
    ScalarField acc = ScalarField::constant(chart_, 0.0);
    for (std::size_t i = 0; i < n(); ++i)
      acc = acc + comps_[i] * f.diff(i);
    return acc;
  }

private:
  Chart chart_;
  std::vector<ScalarField> comps_;
};

inline VectorField operator+(const VectorField &a, const VectorField &b) {
  require_same_chart(a.chart(), b.chart(), "VectorField +");
  std::vector<ScalarField> c;
  for (std::size_t i = 0; i < a.n(); ++i)
    c.push_back(a[i] + b[i]);
  return {a.chart(), c};
}

inline VectorField operator*(const ScalarField &f, const VectorField &a) {
  std::vector<ScalarField> c;
  for (std::size_t i = 0; i < a.n(); ++i)
    c.push_back(f * a[i]);
  return {a.chart(), c};
}

/// [X,Y]^i = X^j d_j Y^i - Y^j d_j X^i.
inline VectorField lie_bracket(const VectorField &X, const VectorField &Y) {
  require_same_chart(X.chart(), Y.chart(), "lie_bracket");
  std::vector<ScalarField> c;
  for (std::size_t i = 0; i < X.n(); ++i)
    c.push_back(X.apply(Y[i]) - Y.apply(X[i]));
  return {X.chart(), c};
}

/// Bivector field stored as its strict upper triangle pi^{ij}, i < j.
class BivectorField {
public:
  explicit BivectorField(Chart chart)
      : chart_(std::move(chart)),
        upper_(chart_->n() * (chart_->n() - 1) / 2, ScalarField::constant(chart_, 0.0)) {}

  const Chart &chart() const { return chart_; }
  std::size_t n() const { return chart_->n(); }

  /// Sets pi^{ij}; i > j stores the negated field in the upper slot.
  void set(std::size_t i, std::size_t j, const ScalarField &f) {
    require_same_chart(f.chart(), chart_, "BivectorField::set");
    if (i == j || i >= n() || j >= n())
      throw Error("bivector component index out of range or diagonal");
    if (i < j)
      upper_[slot(i, j)] = f;
    else
      upper_[slot(j, i)] = -f;
  }

  ScalarField operator()(std::size_t i, std::size_t j) const {
    if (i == j)
      return ScalarField::constant(chart_, 0.0);
    return i < j ? upper_[slot(i, j)] : -upper_[slot(j, i)];
  }

  Eigen::MatrixXd value(const Point &x) const {
    auto n_ = static_cast<Eigen::Index>(n());
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n_, n_);
    for (std::size_t i = 0; i < n(); ++i)
      for (std::size_t j = i + 1; j < n(); ++j) {
        double v = upper_[slot(i, j)].value(x);
        P(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
        P(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = -v;
      }
    return P;
  }

private:
  std::size_t slot(std::size_t i, std::size_t j) const {
    return i * n() - i * (i + 1) / 2 + (j - i - 1);
  }

  Chart chart_;
  std::vector<ScalarField> upper_;

  friend struct LocalBivector;
};

} // namespace dimmech
