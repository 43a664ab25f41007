#pragma once

/// @file expr.hpp
/// Expression DAGs over chart coordinates, compiled to a linear tape and
/// evaluated either for values or for (value, gradient, Hessian) jets.

#include <dimmech/errors.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <memory>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

namespace dimmech {

enum class Op { Const, Var, Add, Sub, Mul, Div, Neg, Pow, Sin, Cos, Exp, Log };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  Op op = Op::Const;
  double value = 0.0;        // Const
  std::int64_t ipar = 0;     // Var index, Pow exponent
  NodePtr a, b;
  std::size_t pos = npos;    // source offset when parsed
  bool annotated = false;    // Const carrying an explicit dimension
  std::string annotation;    // dimension expression text

  bool is_const(double c) const { return op == Op::Const && !annotated && value == c; }
};

namespace ex {

inline NodePtr make(Op op, NodePtr a = nullptr, NodePtr b = nullptr, std::size_t pos = Node::npos) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  n->pos = pos;
  return n;
}

inline NodePtr constant(double c, std::size_t pos = Node::npos) {
  auto n = std::make_shared<Node>();
  n->value = c;
  n->pos = pos;
  return n;
}

inline NodePtr var(std::size_t i, std::size_t pos = Node::npos) {
  auto n = std::make_shared<Node>();
  n->op = Op::Var;
  n->ipar = static_cast<std::int64_t>(i);
  n->pos = pos;
  return n;
}

inline NodePtr pow(NodePtr a, std::int64_t k, std::size_t pos = Node::npos) {
  auto n = std::make_shared<Node>();
  n->op = Op::Pow;
  n->a = std::move(a);
  n->ipar = k;
  n->pos = pos;
  return n;
}

inline bool is_c(const NodePtr &n) { return n->op == Op::Const && !n->annotated; }

// Builders below fold trivial constants; parsed trees are built raw.

inline NodePtr add(NodePtr a, NodePtr b) {
  if (is_c(a) && is_c(b))
    return constant(a->value + b->value);
  if (a->is_const(0))
    return b;
  if (b->is_const(0))
    return a;
  return make(Op::Add, std::move(a), std::move(b));
}

inline NodePtr neg(NodePtr a) {
  if (is_c(a))
    return constant(-a->value);
  if (a->op == Op::Neg)
    return a->a;
  return make(Op::Neg, std::move(a));
}

inline NodePtr sub(NodePtr a, NodePtr b) {
  if (is_c(a) && is_c(b))
    return constant(a->value - b->value);
  if (b->is_const(0))
    return a;
  if (a->is_const(0))
    return neg(std::move(b));
  return make(Op::Sub, std::move(a), std::move(b));
}

inline NodePtr mul(NodePtr a, NodePtr b) {
  if (is_c(a) && is_c(b))
    return constant(a->value * b->value);
  if (a->is_const(0) || b->is_const(0))
    return constant(0.0);
  if (a->is_const(1))
    return b;
  if (b->is_const(1))
    return a;
  if (a->is_const(-1))
    return neg(std::move(b));
  if (b->is_const(-1))
    return neg(std::move(a));
  return make(Op::Mul, std::move(a), std::move(b));
}

inline NodePtr div(NodePtr a, NodePtr b) {
  if (b->is_const(1))
    return a;
  if (a->is_const(0) && !b->is_const(0))
    return constant(0.0);
  if (is_c(a) && is_c(b) && b->value != 0.0)
    return constant(a->value / b->value);
  return make(Op::Div, std::move(a), std::move(b));
}

inline NodePtr powi(NodePtr a, std::int64_t k) {
  if (k == 0)
    return constant(1.0);
  if (k == 1)
    return a;
  if (is_c(a) && (k > 0 || a->value != 0.0))
    return constant(std::pow(a->value, static_cast<double>(k)));
  return pow(std::move(a), k);
}

inline NodePtr fn(Op op, NodePtr a) {
  if (is_c(a)) {
    double v = a->value;
    switch (op) {
    case Op::Sin: return constant(std::sin(v));
    case Op::Cos: return constant(std::cos(v));
    case Op::Exp: return constant(std::exp(v));
    case Op::Log:
      if (v > 0)
        return constant(std::log(v));
      break;
    default: break;
    }
  }
  return make(op, std::move(a));
}

/// Symbolic partial derivative with respect to coordinate k.
inline NodePtr diff(const NodePtr &root, std::size_t k) {
  std::unordered_map<const Node *, NodePtr> memo;
  auto rec = [&](auto &&self, const NodePtr &n) -> NodePtr {
    if (auto it = memo.find(n.get()); it != memo.end())
      return it->second;
    NodePtr r;
    switch (n->op) {
    case Op::Const: r = constant(0.0); break;
    case Op::Var: r = constant(static_cast<std::size_t>(n->ipar) == k ? 1.0 : 0.0); break;
    case Op::Add: r = add(self(self, n->a), self(self, n->b)); break;
    case Op::Sub: r = sub(self(self, n->a), self(self, n->b)); break;
    case Op::Neg: r = neg(self(self, n->a)); break;
    case Op::Mul:
      r = add(mul(self(self, n->a), n->b), mul(n->a, self(self, n->b)));
      break;
    case Op::Div: {
      NodePtr da = self(self, n->a), db = self(self, n->b);
      r = sub(div(da, n->b), div(mul(n->a, db), mul(n->b, n->b)));
      break;
    }
    case Op::Pow:
      r = mul(mul(constant(static_cast<double>(n->ipar)), powi(n->a, n->ipar - 1)),
              self(self, n->a));
      break;
    case Op::Sin: r = mul(fn(Op::Cos, n->a), self(self, n->a)); break;
    case Op::Cos: r = neg(mul(fn(Op::Sin, n->a), self(self, n->a))); break;
    case Op::Exp: r = mul(n, self(self, n->a)); break;
    case Op::Log: r = div(self(self, n->a), n->a); break;
    }
    memo.emplace(n.get(), r);
    return r;
  };
  return rec(rec, root);
}

/// Replaces every Var i by subs[i].
inline NodePtr substitute(const NodePtr &root, const std::vector<NodePtr> &subs) {
  std::unordered_map<const Node *, NodePtr> memo;
  auto rec = [&](auto &&self, const NodePtr &n) -> NodePtr {
    if (auto it = memo.find(n.get()); it != memo.end())
      return it->second;
    NodePtr r;
    switch (n->op) {
    case Op::Const: r = n; break;
    case Op::Var: r = subs.at(static_cast<std::size_t>(n->ipar)); break;
    case Op::Add: r = add(self(self, n->a), self(self, n->b)); break;
    case Op::Sub: r = sub(self(self, n->a), self(self, n->b)); break;
    case Op::Mul: r = mul(self(self, n->a), self(self, n->b)); break;
    case Op::Div: r = div(self(self, n->a), self(self, n->b)); break;
    case Op::Neg: r = neg(self(self, n->a)); break;
    case Op::Pow: r = powi(self(self, n->a), n->ipar); break;
    default: r = fn(n->op, self(self, n->a)); break;
    }
    memo.emplace(n.get(), r);
    return r;
  };
  return rec(rec, root);
}

inline std::string to_string(const NodePtr &n, const std::vector<std::string> &names) {
  std::ostringstream os;
  os.precision(17);
  auto rec = [&](auto &&self, const NodePtr &m) -> void {
    switch (m->op) {
    case Op::Const:
      if (m->annotated)
        os << "const(" << m->value << ", \"" << m->annotation << "\")";
      else if (m->value < 0)
        os << "(" << m->value << ")";
      else
        os << m->value;
      return;
    case Op::Var: os << names.at(static_cast<std::size_t>(m->ipar)); return;
    case Op::Neg: os << "(-"; self(self, m->a); os << ")"; return;
    case Op::Pow: os << "("; self(self, m->a); os << ")^" << m->ipar; return;
    case Op::Sin: case Op::Cos: case Op::Exp: case Op::Log: {
      const char *f = m->op == Op::Sin ? "sin" : m->op == Op::Cos ? "cos" : m->op == Op::Exp ? "exp" : "log";
      os << f << "(";
      self(self, m->a);
      os << ")";
      return;
    }
    default: {
      const char *s = m->op == Op::Add ? " + " : m->op == Op::Sub ? " - " : m->op == Op::Mul ? "*" : "/";
      os << "(";
      self(self, m->a);
      os << s;
      self(self, m->b);
      os << ")";
    }
    }
  };
  rec(rec, n);
  return os.str();
}

} // namespace ex

/// Truncated Taylor data of a scalar at a point. `order` is 0, 1 or 2; the
/// gradient and Hessian are empty above the carried order.
struct Jet {
  double v = 0.0;
  Eigen::VectorXd g;
  Eigen::MatrixXd h;

  int order() const { return h.size() ? 2 : (g.size() ? 1 : 0); }

  static Jet constant(double c, Eigen::Index n, int order) {
    Jet j;
    j.v = c;
    if (order >= 1)
      j.g = Eigen::VectorXd::Zero(n);
    if (order >= 2)
      j.h = Eigen::MatrixXd::Zero(n, n);
    return j;
  }

  static Jet seed(double x, Eigen::Index i, Eigen::Index n, int order) {
    Jet j = constant(x, n, order);
    if (order >= 1)
      j.g[i] = 1.0;
    return j;
  }
};

namespace jet {

/// phi(u) given phi, phi', phi'' at u.v.
inline Jet chain(const Jet &u, double f0, double f1, double f2) {
  Jet r;
  r.v = f0;
  if (u.g.size())
    r.g = f1 * u.g;
  if (u.h.size())
    r.h = f1 * u.h + f2 * (u.g * u.g.transpose());
  return r;
}

inline Jet add(const Jet &a, const Jet &b) {
  Jet r;
  r.v = a.v + b.v;
  if (a.g.size())
    r.g = a.g + b.g;
  if (a.h.size())
    r.h = a.h + b.h;
  return r;
}

inline Jet sub(const Jet &a, const Jet &b) {
  Jet r;
  r.v = a.v - b.v;
  if (a.g.size())
    r.g = a.g - b.g;
  if (a.h.size())
    r.h = a.h - b.h;
  return r;
}

inline Jet neg(const Jet &a) { return chain(a, -a.v, -1.0, 0.0); }

inline Jet mul(const Jet &a, const Jet &b) {
  Jet r;
  r.v = a.v * b.v;
  if (a.g.size())
    r.g = a.v * b.g + b.v * a.g;
  if (a.h.size()) {
    Eigen::MatrixXd cross = a.g * b.g.transpose();
    r.h = a.v * b.h + b.v * a.h + cross + cross.transpose();
  }
  return r;
}

inline Jet recip(const Jet &a) {
  double i = 1.0 / a.v;
  return chain(a, i, -i * i, 2.0 * i * i * i);
}

inline Jet powi(const Jet &a, std::int64_t k) {
  double kd = static_cast<double>(k);
  double f0 = std::pow(a.v, kd);
  double f1 = k == 0 ? 0.0 : kd * std::pow(a.v, kd - 1.0);
  double f2 = (k == 0 || k == 1) ? 0.0 : kd * (kd - 1.0) * std::pow(a.v, kd - 2.0);
  return chain(a, f0, f1, f2);
}

} // namespace jet

/// Topologically ordered instruction list of an expression DAG. Shared
/// subexpressions are evaluated once.
class Tape {
public:
  explicit Tape(NodePtr root) : root_(std::move(root)) {
    std::unordered_map<const Node *, int> slot;
    auto visit = [&](auto &&self, const Node *n) -> int {
      if (auto it = slot.find(n); it != slot.end())
        return it->second;
      Instr in{n->op, n->value, n->ipar, -1, -1};
      if (n->a)
        in.a = self(self, n->a.get());
      if (n->b)
        in.b = self(self, n->b.get());
      if (n->op == Op::Var)
        max_var_ = std::max(max_var_, n->ipar);
      code_.push_back(in);
      int s = static_cast<int>(code_.size()) - 1;
      slot.emplace(n, s);
      return s;
    };
    visit(visit, root_.get());
  }

  const NodePtr &root() const { return root_; }
  std::size_t size() const { return code_.size(); }

  double value(const Eigen::VectorXd &x) const {
    check_arity(x.size());
    std::vector<double> s(code_.size());
    for (std::size_t k = 0; k < code_.size(); ++k) {
      const Instr &in = code_[k];
      switch (in.op) {
      case Op::Const: s[k] = in.value; break;
      case Op::Var: s[k] = x[in.ipar]; break;
      case Op::Add: s[k] = s[in.a] + s[in.b]; break;
      case Op::Sub: s[k] = s[in.a] - s[in.b]; break;
      case Op::Mul: s[k] = s[in.a] * s[in.b]; break;
      case Op::Div:
        if (s[in.b] == 0.0)
          throw DomainError("division by zero");
        s[k] = s[in.a] / s[in.b];
        break;
      case Op::Neg: s[k] = -s[in.a]; break;
      case Op::Pow:
        if (in.ipar < 0 && s[in.a] == 0.0)
          throw DomainError("negative power of zero");
        s[k] = std::pow(s[in.a], static_cast<double>(in.ipar));
        break;
      case Op::Sin: s[k] = std::sin(s[in.a]); break;
      case Op::Cos: s[k] = std::cos(s[in.a]); break;
      case Op::Exp: s[k] = std::exp(s[in.a]); break;
      case Op::Log:
        if (!(s[in.a] > 0.0))
          throw DomainError("log of a non-positive argument");
        s[k] = std::log(s[in.a]);
        break;
      }
    }
    double r = s.back();
    if (!std::isfinite(r))
      throw NonFinite("expression value");
    return r;
  }

  /// Evaluates with the given input jets, so composite maps propagate
  /// derivatives by the chain rule.
  Jet eval(const std::vector<Jet> &inputs) const {
    check_arity(static_cast<Eigen::Index>(inputs.size()));
    Eigen::Index n = inputs.empty() ? 0 : inputs[0].g.size();
    int order = inputs.empty() ? 0 : inputs[0].order();
    std::vector<Jet> s(code_.size());
    for (std::size_t k = 0; k < code_.size(); ++k) {
      const Instr &in = code_[k];
      switch (in.op) {
      case Op::Const: s[k] = Jet::constant(in.value, n, order); break;
      case Op::Var: s[k] = inputs[static_cast<std::size_t>(in.ipar)]; break;
      case Op::Add: s[k] = jet::add(s[in.a], s[in.b]); break;
      case Op::Sub: s[k] = jet::sub(s[in.a], s[in.b]); break;
      case Op::Mul: s[k] = jet::mul(s[in.a], s[in.b]); break;
      case Op::Div:
        if (s[in.b].v == 0.0)
          throw DomainError("division by zero");
        s[k] = jet::mul(s[in.a], jet::recip(s[in.b]));
        break;
      case Op::Neg: s[k] = jet::neg(s[in.a]); break;
      case Op::Pow:
        if (in.ipar < 0 && s[in.a].v == 0.0)
          throw DomainError("negative power of zero");
        s[k] = jet::powi(s[in.a], in.ipar);
        break;
      case Op::Sin: {
        double sv = std::sin(s[in.a].v), cv = std::cos(s[in.a].v);
        s[k] = jet::chain(s[in.a], sv, cv, -sv);
        break;
      }
      case Op::Cos: {
        double sv = std::sin(s[in.a].v), cv = std::cos(s[in.a].v);
        s[k] = jet::chain(s[in.a], cv, -sv, -cv);
        break;
      }
      case Op::Exp: {
        double e = std::exp(s[in.a].v);
        s[k] = jet::chain(s[in.a], e, e, e);
        break;
      }
      case Op::Log: {
        double u = s[in.a].v;
        if (!(u > 0.0))
          throw DomainError("log of a non-positive argument");
        s[k] = jet::chain(s[in.a], std::log(u), 1.0 / u, -1.0 / (u * u));
        break;
      }
      }
    }
    Jet r = std::move(s.back());
    if (!std::isfinite(r.v) || (r.g.size() && !r.g.allFinite()) ||
        (r.h.size() && !r.h.allFinite()))
      throw NonFinite("expression jet");
    return r;
  }

  Jet eval(const Eigen::VectorXd &x, int order) const {
    std::vector<Jet> in;
    in.reserve(static_cast<std::size_t>(x.size()));
    for (Eigen::Index i = 0; i < x.size(); ++i)
      in.push_back(Jet::seed(x[i], i, x.size(), order));
    return eval(in);
  }

private:
  struct Instr {
    Op op;
    double value;
    std::int64_t ipar;
    int a, b;
  };

  void check_arity(Eigen::Index n) const {
    if (max_var_ >= n)
      throw Error("expression references coordinate " + std::to_string(max_var_) +
                  " but only " + std::to_string(n) + " inputs were given");
  }

  NodePtr root_;
  std::vector<Instr> code_;
  std::int64_t max_var_ = -1;
};

} // namespace dimmech
