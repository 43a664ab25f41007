#pragma once

/// @file scenario.hpp
/// Scenario files: loading (JSON), dimensional validation of observables,
/// and execution of the requested checks and flows. The schema is described
/// in README.md.

#include <dimmech/dynamics.hpp>
#include <dimmech/measurand.hpp>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace dimmech {

using Json = nlohmann::json;

struct ObservableDecl {
  std::string name;
  std::string expr;
  std::string dim_text;
  Dimension dim;
  NodePtr tree; // raw parse tree, with positions and annotations
  ScalarField field;
};

/// A structure source resolved to a chart, per-coordinate dimensions and a
/// pair. `jet` is set for canonical contact structures.
struct StructureDecl {
  std::string kind;
  Chart chart;
  std::vector<Dimension> coordinate_dims;
  LichnerowiczPair pair;
  std::optional<JetSpace> jet;
};

struct IntegrationDecl {
  Point x0;
  double t0 = 0.0, t1 = 1.0, step = 1e-3;
  Method method = Method::RK4;
  double rtol = 1e-8, atol = 1e-10;
};

struct CheckDecl {
  std::string kind;
  std::size_t samples = 100;
  double tol = 1e-9;
  std::vector<ScalarField> constraints, tests;
  std::optional<Derivation> a, b;
  std::optional<ScalarField> s, r;
  std::optional<Factor> factor;
  std::size_t pairs = 4;
};

struct BracketDecl {
  std::string f, g;
  Point at;
};

struct Scenario {
  std::string name;
  std::uint64_t seed = kDefaultSeed;
  MeasurandSpace space;
  std::vector<std::pair<std::string, UnitSystem>> unit_systems;
  StructureDecl structure;
  std::vector<ObservableDecl> observables;
  std::string hamiltonian;
  std::optional<IntegrationDecl> integration;
  std::vector<CheckDecl> checks;
  std::vector<BracketDecl> brackets;
  std::string csv_name, report_name;

  const ObservableDecl &observable(const std::string &n) const {
    for (const auto &o : observables)
      if (o.name == n)
        return o;
    throw UnresolvedReference("observable '" + n + "' is not declared");
  }
};

inline std::string dimension_text(const Dimension &d, const MeasurandSpace &s) {
  std::string t = format_dimension(d, s);
  return t.empty() ? "1" : t;
}

// ---------------------------------------------------------------------------
// Dimension synthesis

namespace detail {

inline Dimension parse_dim_text(const std::string &text, const MeasurandSpace &space) {
  auto first = text.find_first_not_of(" \t");
  if (first != std::string::npos && text.substr(first, text.find_last_not_of(" \t") - first + 1) == "1")
    return Dimension::zero(space.k());
  return parse_dimension(text, space);
}

inline const char *op_symbol(Op op) {
  switch (op) {
  case Op::Add: return "+";
  case Op::Sub: return "-";
  case Op::Mul: return "*";
  case Op::Div: return "/";
  case Op::Neg: return "unary -";
  case Op::Pow: return "^";
  case Op::Sin: return "sin";
  case Op::Cos: return "cos";
  case Op::Exp: return "exp";
  case Op::Log: return "log";
  default: return "?";
  }
}

inline std::string node_path(const std::string &where, const Node &n) {
  std::string s = where + ": '" + op_symbol(n.op) + "'";
  if (n.pos != Node::npos)
    s += " at offset " + std::to_string(n.pos);
  return s;
}

/// Synthesizes the dimension of a raw parse tree bottom-up.
inline Dimension synthesize(const NodePtr &n, const std::vector<Dimension> &coord_dims,
                            const MeasurandSpace &space, const std::string &where) {
  auto fmt = [&](const Dimension &d) { return dimension_text(d, space); };
  switch (n->op) {
  case Op::Const:
    if (n->annotated) {
      try {
        return parse_dim_text(n->annotation, space);
      } catch (const ParseError &e) {
        throw ParseError(n->pos, where + ": dimension annotation: " + e.message);
      }
    }
    return Dimension::zero(space.k());
  case Op::Var:
    return coord_dims.at(static_cast<std::size_t>(n->ipar));
  case Op::Add:
  case Op::Sub: {
    Dimension a = synthesize(n->a, coord_dims, space, where), b = synthesize(n->b, coord_dims, space, where);
    if (a != b)
      throw DimensionMismatch(node_path(where, *n), fmt(a), fmt(b));
    return a;
  }
  case Op::Mul:
    return synthesize(n->a, coord_dims, space, where) + synthesize(n->b, coord_dims, space, where);
  case Op::Div:
    return synthesize(n->a, coord_dims, space, where) - synthesize(n->b, coord_dims, space, where);
  case Op::Neg:
    return synthesize(n->a, coord_dims, space, where);
  case Op::Pow:
    return n->ipar * synthesize(n->a, coord_dims, space, where);
  case Op::Sin:
  case Op::Cos:
  case Op::Exp:
  case Op::Log: {
    Dimension a = synthesize(n->a, coord_dims, space, where);
    if (!a.is_zero())
      throw DimensionMismatch(node_path(where, *n), "1", fmt(a));
    return a;
  }
  }
  throw Error("unknown node");
}

} // namespace detail

struct DimensionReport {
  std::vector<std::pair<std::string, std::string>> observables; // name, dimension

  std::string text() const {
    std::string out = "[dimensions]\n";
    for (const auto &[n, d] : observables)
      out += n + " = " + d + "\n";
    return out;
  }
};

/// Checks every observable for additive homogeneity and against its
/// declared dimension. Throws DimensionMismatch with the offending node.
inline DimensionReport validate_dimensions(const Scenario &s) {
  DimensionReport rep;
  for (const auto &o : s.observables) {
    std::string where = "observables." + o.name + ".expr";
    Dimension d = detail::synthesize(o.tree, s.structure.coordinate_dims, s.space, where);
    if (d != o.dim)
      throw DimensionMismatch(where, dimension_text(o.dim, s.space), dimension_text(d, s.space));
    rep.observables.emplace_back(o.name, dimension_text(d, s.space));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Loading

namespace detail {

class Loader {
public:
  explicit Loader(const MeasurandSpace &space) : space_(space) {}

  [[noreturn]] static void fail(const std::string &path, const std::string &msg) {
    throw ParseError(0, path + ": " + msg);
  }

  static const Json &member(const Json &j, const std::string &key, const std::string &path) {
    if (!j.is_object())
      fail(path, "expected an object");
    auto it = j.find(key);
    if (it == j.end())
      fail(path, "missing key '" + key + "'");
    return *it;
  }

  static std::string str(const Json &j, const std::string &path) {
    if (!j.is_string())
      fail(path, "expected a string");
    return j.get<std::string>();
  }

  static double num(const Json &j, const std::string &path) {
    if (!j.is_number())
      fail(path, "expected a number");
    return j.get<double>();
  }

  static double num_or(const Json &j, const std::string &key, double def, const std::string &path) {
    auto it = j.find(key);
    return it == j.end() ? def : num(*it, path + "." + key);
  }

  static std::size_t count_or(const Json &j, const std::string &key, std::size_t def, const std::string &path) {
    auto it = j.find(key);
    if (it == j.end())
      return def;
    if (!it->is_number_unsigned() || it->get<std::size_t>() == 0)
      fail(path + "." + key, "expected a positive integer");
    return it->get<std::size_t>();
  }

  ScalarField field(const Json &j, const Chart &chart, const std::string &path) const {
    if (j.is_number())
      return ScalarField::constant(chart, j.get<double>());
    std::string src = str(j, path);
    try {
      return parse_field(src, chart, true);
    } catch (const ParseError &e) {
      throw ParseError(e.position, path + " ('" + src + "'): " + e.message);
    } catch (const UnknownVariable &e) {
      throw UnresolvedReference(path + ": " + e.what());
    }
  }

  /// Component lists are arrays in chart order or objects keyed by
  /// coordinate name (missing names are zero).
  std::vector<ScalarField> components(const Json &j, const Chart &chart, const std::string &path) const {
    std::vector<ScalarField> out(chart->n(), ScalarField::constant(chart, 0.0));
    if (j.is_array()) {
      if (j.size() != chart->n())
        fail(path, "expected " + std::to_string(chart->n()) + " components");
      for (std::size_t i = 0; i < j.size(); ++i)
        out[i] = field(j[i], chart, path + "[" + std::to_string(i) + "]");
    } else if (j.is_object()) {
      for (const auto &[k, v] : j.items()) {
        auto idx = chart->index_of(k);
        if (!idx)
          throw UnresolvedReference(path + ": '" + k + "' is not a chart coordinate");
        out[*idx] = field(v, chart, path + "." + k);
      }
    } else {
      fail(path, "expected an array or an object");
    }
    return out;
  }

  std::vector<ScalarField> field_list(const Json &j, const Chart &chart, const std::string &path) const {
    if (!j.is_array())
      fail(path, "expected an array");
    std::vector<ScalarField> out;
    for (std::size_t i = 0; i < j.size(); ++i)
      out.push_back(field(j[i], chart, path + "[" + std::to_string(i) + "]"));
    return out;
  }

  Point point(const Json &j, const Chart &chart, const std::string &path) const {
    Point x(static_cast<Eigen::Index>(chart->n()));
    if (j.is_array()) {
      if (j.size() != chart->n())
        fail(path, "expected " + std::to_string(chart->n()) + " coordinates");
      for (std::size_t i = 0; i < j.size(); ++i)
        x[static_cast<Eigen::Index>(i)] = num(j[i], path);
    } else if (j.is_object()) {
      for (std::size_t i = 0; i < chart->n(); ++i) {
        auto it = j.find(chart->name(i));
        if (it == j.end())
          throw UnresolvedReference(path + ": no value for coordinate '" + chart->name(i) + "'");
        x[static_cast<Eigen::Index>(i)] = num(*it, path + "." + chart->name(i));
      }
      for (const auto &[k, v] : j.items())
        if (!chart->index_of(k))
          throw UnresolvedReference(path + ": '" + k + "' is not a chart coordinate");
    } else {
      fail(path, "expected an array or an object");
    }
    return x;
  }

  Dimension dim(const Json &j, const std::string &path) const {
    std::string t = str(j, path);
    try {
      return parse_dim_text(t, space_);
    } catch (const ParseError &e) {
      throw ParseError(e.position, path + " ('" + t + "'): " + e.message);
    }
  }

  /// [{"name", "dim", "bounds": [lo, hi]}]; null bounds entries are infinite.
  void coordinates(const Json &j, const std::string &path, std::vector<std::string> &names,
                   std::vector<std::optional<Interval>> &bounds, std::vector<Dimension> &dims) const {
    if (!j.is_array() || j.empty())
      fail(path, "expected a non-empty array of coordinates");
    for (std::size_t i = 0; i < j.size(); ++i) {
      std::string p = path + "[" + std::to_string(i) + "]";
      const Json &c = j[i];
      names.push_back(str(member(c, "name", p), p + ".name"));
      dims.push_back(c.contains("dim") ? dim(c["dim"], p + ".dim") : Dimension::zero(space_.k()));
      if (c.contains("bounds")) {
        const Json &b = c["bounds"];
        if (!b.is_array() || b.size() != 2)
          fail(p + ".bounds", "expected [lo, hi]");
        Interval iv;
        if (!b[0].is_null())
          iv.lo = num(b[0], p + ".bounds");
        if (!b[1].is_null())
          iv.hi = num(b[1], p + ".bounds");
        bounds.emplace_back(iv);
      } else {
        bounds.emplace_back();
      }
    }
  }

  StructureDecl structure(const Json &j, const std::string &path) const {
    std::string kind = str(member(j, "kind", path), path + ".kind");
    if (kind == "canonical_contact") {
      std::vector<std::string> names;
      std::vector<std::optional<Interval>> bounds;
      std::vector<Dimension> base_dims;
      coordinates(member(j, "base", path), path + ".base", names, bounds, base_dims);
      Dimension fibre = j.contains("fibre_dim") ? dim(j["fibre_dim"], path + ".fibre_dim")
                                                : Dimension::zero(space_.k());
      JetSpace jet(make_chart(names, bounds));
      std::vector<Dimension> dims = base_dims;
      for (const auto &d : base_dims)
        dims.push_back(fibre - d);
      dims.push_back(fibre);
      return {kind, jet.chart(), dims, jet.canonical_pair(), jet};
    }
    if (kind == "explicit" || kind == "contact_form") {
      std::vector<std::string> names;
      std::vector<std::optional<Interval>> bounds;
      std::vector<Dimension> dims;
      coordinates(member(j, "coordinates", path), path + ".coordinates", names, bounds, dims);
      Chart chart = make_chart(names, bounds);
      if (kind == "contact_form") {
        ContactForm th(chart, components(member(j, "theta", path), chart, path + ".theta"));
        LichnerowiczPair J(chart, std::make_shared<detail::ContactSource>(th), "contact");
        return {kind, chart, dims, J, std::nullopt};
      }
      BivectorField P(chart);
      if (j.contains("pi")) {
        const Json &pj = j["pi"];
        if (!pj.is_array())
          fail(path + ".pi", "expected an array of [i, j, expr] entries");
        for (std::size_t e = 0; e < pj.size(); ++e) {
          std::string p = path + ".pi[" + std::to_string(e) + "]";
          if (!pj[e].is_array() || pj[e].size() != 3)
            fail(p, "expected [i, j, expr]");
          auto idx = [&](const Json &n) {
            std::string s = str(n, p);
            auto k = chart->index_of(s);
            if (!k)
              throw UnresolvedReference(p + ": '" + s + "' is not a chart coordinate");
            return *k;
          };
          std::size_t a = idx(pj[e][0]), b = idx(pj[e][1]);
          if (a == b)
            fail(p, "diagonal bivector component");
          P.set(a, b, field(pj[e][2], chart, p + "[2]"));
        }
      }
      VectorField R = j.contains("R") ? VectorField(chart, components(j["R"], chart, path + ".R"))
                                      : VectorField::zero(chart);
      return {kind, chart, dims, LichnerowiczPair(P, R), std::nullopt};
    }
    if (kind == "product") {
      StructureDecl L = structure(member(j, "left", path), path + ".left");
      StructureDecl R = structure(member(j, "right", path), path + ".right");
      ProductOptions opt;
      opt.left_prefix = j.value("left_prefix", std::string("l."));
      opt.right_prefix = j.value("right_prefix", std::string("r."));
      opt.ratio_name = j.value("ratio", std::string("b"));
      opt.negative_branch = j.value("negative_branch", false);
      LichnerowiczPair right = j.value("opposite_right", false) ? opposite(R.pair) : R.pair;
      // the factors are certified here so the product can be formed
      CertificationReport r1 = certify(L.pair), r2 = certify(right);
      if (!r1.passed || !r2.passed)
        throw UncertifiedInput(path + ": a product factor fails certification");
      ProductPair PP = product_jacobi(L.pair, right, opt);
      std::vector<Dimension> dims = L.coordinate_dims;
      dims.insert(dims.end(), R.coordinate_dims.begin(), R.coordinate_dims.end());
      dims.push_back(j.contains("ratio_dim") ? dim(j["ratio_dim"], path + ".ratio_dim")
                                             : Dimension::zero(space_.k()));
      return {kind, PP.base.chart, dims, PP.pair, std::nullopt};
    }
    fail(path + ".kind", "unknown structure kind '" + kind + "'");
  }

  Factor factor_on(const Json &j, const Chart &src, const Chart &dst, const std::string &path) const {
    auto b = field_list(member(j, "b", path), src, path + ".b");
    if (b.size() != dst->n())
      fail(path + ".b", "expected one component per target coordinate");
    ScalarField beta = field(member(j, "beta", path), src, path + ".beta");
    std::optional<std::vector<ScalarField>> inv;
    if (j.contains("inverse")) {
      inv = field_list(j["inverse"], dst, path + ".inverse");
      if (inv->size() != src->n())
        fail(path + ".inverse", "expected one component per source coordinate");
    }
    return {src, dst, b, beta, inv};
  }

  Chart name_chart(const Json &j, const std::string &path) const {
    if (!j.is_array() || j.empty())
      fail(path, "expected a non-empty array of coordinate names");
    std::vector<std::string> names;
    for (const auto &n : j)
      names.push_back(str(n, path));
    return make_chart(names);
  }

  Derivation derivation(const Json &j, const Chart &c, const std::string &path) const {
    VectorField X(c, components(member(j, "X", path), c, path + ".X"));
    ScalarField f = j.contains("f") ? field(j["f"], c, path + ".f") : ScalarField::constant(c, 0.0);
    return {X, f};
  }

  CheckDecl check(const Json &j, const StructureDecl &S, const std::string &path) const {
    CheckDecl c;
    c.kind = str(member(j, "kind", path), path + ".kind");
    c.samples = count_or(j, "samples", 100, path);
    c.tol = num_or(j, "tol", 1e-9, path);
    if (c.kind == "jacobi_pair") {
    } else if (c.kind == "bracket_relations") {
      if (!S.jet)
        fail(path, "bracket_relations needs a canonical_contact structure");
      const Chart &B = S.jet->base();
      c.a = derivation(member(j, "a", path), B, path + ".a");
      c.b = derivation(member(j, "b", path), B, path + ".b");
      c.s = field(member(j, "s", path), B, path + ".s");
      c.r = field(member(j, "r", path), B, path + ".r");
    } else if (c.kind == "coisotropic") {
      c.constraints = field_list(member(j, "constraints", path), S.chart, path + ".constraints");
      if (c.constraints.empty())
        fail(path + ".constraints", "expected at least one constraint");
      if (j.contains("test_sections"))
        c.tests = field_list(j["test_sections"], S.chart, path + ".test_sections");
    } else if (c.kind == "jacobi_map") {
      c.factor = factor_on(member(j, "factor", path), S.chart, S.chart, path + ".factor");
      c.pairs = count_or(j, "pairs", 4, path);
    } else if (c.kind == "jet_lift_graph") {
      const Json &fj = member(j, "factor", path);
      Chart src = name_chart(member(fj, "source", path + ".factor"), path + ".factor.source");
      Chart dst = name_chart(member(fj, "target", path + ".factor"), path + ".factor.target");
      c.factor = factor_on(fj, src, dst, path + ".factor");
      if (!c.factor->has_inverse())
        throw NoInverseDeclared(path + ".factor: jet lifts need a declared inverse");
    } else {
      fail(path + ".kind", "unknown check kind '" + c.kind + "'");
    }
    return c;
  }

private:
  MeasurandSpace space_;
};

} // namespace detail

/// Parses a scenario document. Throws ParseError (JSON syntax, schema, or
/// expression errors, with location) and UnresolvedReference (missing
/// hamiltonian, unknown observable or coordinate names).
inline Scenario parse_scenario(const std::string &text, const std::string &fallback_name = "scenario") {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error &e) {
    throw ParseError(e.byte, std::string("malformed JSON: ") + e.what());
  }
  using L = detail::Loader;
  if (!j.is_object())
    L::fail("$", "expected an object");
  std::string name = j.contains("name") ? L::str(j["name"], "name") : fallback_name;

  const Json &mj = L::member(j, "measurands", "$");
  if (!mj.is_array() || mj.empty())
    L::fail("measurands", "expected a non-empty array of names");
  std::vector<std::string> mnames;
  for (const auto &m : mj)
    mnames.push_back(L::str(m, "measurands"));
  MeasurandSpace space = [&] {
    try {
      return MeasurandSpace(mnames);
    } catch (const Error &e) {
      throw ParseError(0, std::string("measurands: ") + e.what());
    }
  }();
  L loader(space);

  std::vector<std::pair<std::string, UnitSystem>> units;
  if (j.contains("unit_systems")) {
    const Json &uj = j["unit_systems"];
    if (!uj.is_object())
      L::fail("unit_systems", "expected an object of unit systems");
    for (const auto &[un, decl] : uj.items()) {
      std::string p = "unit_systems." + un;
      std::vector<double> scales;
      for (const auto &m : mnames)
        scales.push_back(L::num(L::member(decl, m, p), p + "." + m));
      for (const auto &[k, v] : decl.items())
        if (!space.index_of(k))
          throw UnresolvedReference(p + ": '" + k + "' is not a declared measurand");
      try {
        units.emplace_back(un, UnitSystem(space, scales));
      } catch (const Error &e) {
        throw ParseError(0, p + ": " + e.what());
      }
    }
  }

  StructureDecl S = loader.structure(L::member(j, "structure", "$"), "structure");

  std::vector<ObservableDecl> obs;
  const Json &oj = L::member(j, "observables", "$");
  if (!oj.is_object())
    L::fail("observables", "expected an object");
  for (const auto &[on, decl] : oj.items()) {
    std::string p = "observables." + on;
    ObservableDecl o{on, L::str(L::member(decl, "expr", p), p + ".expr"),
                     L::str(L::member(decl, "dim", p), p + ".dim"), Dimension::zero(space.k()), nullptr,
                     ScalarField::constant(S.chart, 0.0)};
    try {
      o.dim = detail::parse_dim_text(o.dim_text, space);
    } catch (const ParseError &e) {
      throw ParseError(e.position, "observable '" + on + "': malformed dimension '" + o.dim_text + "': " + e.message);
    }
    try {
      o.tree = FieldParser(o.expr, S.chart, true).parse();
    } catch (const ParseError &e) {
      throw ParseError(e.position, "observable '" + on + "': " + e.message);
    } catch (const UnknownVariable &e) {
      throw UnresolvedReference("observable '" + on + "': " + e.what());
    }
    o.field = ScalarField(S.chart, o.tree);
    obs.push_back(std::move(o));
  }

  if (!j.contains("hamiltonian"))
    throw UnresolvedReference("scenario has no 'hamiltonian' key");
  std::string ham = L::str(j["hamiltonian"], "hamiltonian");

  std::optional<IntegrationDecl> integ;
  if (j.contains("integration")) {
    const Json &ij = j["integration"];
    IntegrationDecl d;
    d.x0 = loader.point(L::member(ij, "x0", "integration"), S.chart, "integration.x0");
    d.t0 = L::num_or(ij, "t0", 0.0, "integration");
    d.t1 = L::num(L::member(ij, "t1", "integration"), "integration.t1");
    d.step = L::num_or(ij, "step", 1e-3, "integration");
    std::string m = ij.value("method", std::string("rk4"));
    if (m == "rk4")
      d.method = Method::RK4;
    else if (m == "rk45")
      d.method = Method::RK45;
    else
      L::fail("integration.method", "expected 'rk4' or 'rk45'");
    d.rtol = L::num_or(ij, "rtol", 1e-8, "integration");
    d.atol = L::num_or(ij, "atol", 1e-10, "integration");
    if (!(d.t1 > d.t0))
      L::fail("integration", "t1 must exceed t0");
    if (!(d.step > 0.0))
      L::fail("integration.step", "must be positive");
    integ = d;
  }

  std::vector<CheckDecl> checks;
  if (j.contains("checks")) {
    if (!j["checks"].is_array())
      L::fail("checks", "expected an array");
    for (std::size_t i = 0; i < j["checks"].size(); ++i)
      checks.push_back(loader.check(j["checks"][i], S, "checks[" + std::to_string(i) + "]"));
  }

  std::vector<BracketDecl> brackets;
  if (j.contains("brackets")) {
    if (!j["brackets"].is_array())
      L::fail("brackets", "expected an array");
    for (std::size_t i = 0; i < j["brackets"].size(); ++i) {
      std::string p = "brackets[" + std::to_string(i) + "]";
      const Json &bj = j["brackets"][i];
      brackets.push_back({L::str(L::member(bj, "f", p), p + ".f"), L::str(L::member(bj, "g", p), p + ".g"),
                          loader.point(L::member(bj, "at", p), S.chart, p + ".at")});
    }
  }

  std::string csv = name + ".csv", report = name + ".report";
  if (j.contains("outputs")) {
    const Json &outj = j["outputs"];
    if (outj.contains("csv"))
      csv = L::str(outj["csv"], "outputs.csv");
    if (outj.contains("report"))
      report = L::str(outj["report"], "outputs.report");
  }

  std::uint64_t seed = kDefaultSeed;
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned())
      L::fail("seed", "expected an unsigned integer");
    seed = j["seed"].get<std::uint64_t>();
  }

  Scenario s{name, seed, space, units, S, obs, ham, integ, checks, brackets, csv, report};
  s.observable(ham); // UnresolvedReference if the hamiltonian is not declared
  for (const auto &b : s.brackets) {
    s.observable(b.f);
    s.observable(b.g);
  }
  return s;
}

inline Scenario load_scenario(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ParseError(0, "cannot open scenario file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path.stem().string());
}

// ---------------------------------------------------------------------------
// Running

struct RunOptions {
  bool dry_run = false;
  bool write_files = true;
  std::filesystem::path out_dir = ".";
  std::optional<std::uint64_t> seed;
};

struct RunResult {
  int exit_code = 0;
  std::string report;
  std::string csv;
};

namespace detail {

inline Report run_check(const Scenario &s, const CheckDecl &c, std::size_t index, std::uint64_t seed,
                        LichnerowiczPair &pair) {
  const StructureDecl &S = s.structure;
  Report rep;
  if (c.kind == "jacobi_pair") {
    rep = check_jacobi_pair(pair, sample_points(S.chart, c.samples, seed), c.tol);
  } else if (c.kind == "bracket_relations") {
    rep = check_bracket_relations(pair, *S.jet, *c.a, *c.b, *c.s, *c.r, sample_points(S.chart, c.samples, seed),
                                  c.tol);
  } else if (c.kind == "coisotropic") {
    auto pts = surface_samples(c.constraints, c.samples, seed);
    rep = coisotropic_check(pair, c.constraints, pts, c.tests, c.tol);
  } else if (c.kind == "jacobi_map") {
    rep = jacobi_map_check(*c.factor, pair, pair, battery_pairs(S.chart, c.pairs),
                           sample_points(S.chart, c.samples, seed), c.tol);
  } else if (c.kind == "jet_lift_graph") {
    JetLiftGraph G(*c.factor, seed);
    rep = jet_lift_graph_check(G, G.samples(c.samples, seed), c.tol);
  }
  rep.check = "checks[" + std::to_string(index) + "] " + rep.check;
  return rep;
}

inline std::string failure_block(const std::string &title, const std::exception &e) {
  return "[" + title + "]\nerror = " + std::string(e.what()) + "\nresult = fail\n";
}

} // namespace detail

/// Validates, runs the checks, evaluates requested brackets and integrates
/// the Hamiltonian flow. Exit code 0 when every check passes and the flow
/// completes, 1 otherwise. Configuration errors are thrown.
inline RunResult run_scenario(const Scenario &s, const RunOptions &opt = {}) {
  std::uint64_t seed = opt.seed.value_or(s.seed);
  DimensionReport dims = validate_dimensions(s);
  const ObservableDecl &H = s.observable(s.hamiltonian);
  for (const auto &b : s.brackets) {
    const auto &f = s.observable(b.f), &g = s.observable(b.g);
    if (f.dim != g.dim)
      throw DimensionMismatch("brackets: {" + b.f + ", " + b.g + "}", dimension_text(f.dim, s.space),
                              dimension_text(g.dim, s.space));
  }

  RunResult res;
  std::string &out = res.report;
  out += "[scenario]\nname = " + s.name + "\nseed = " + std::to_string(seed) + "\nstructure = " +
         s.structure.kind + "\nchart = ";
  for (std::size_t i = 0; i < s.structure.chart->n(); ++i)
    out += (i ? "," : "") + s.structure.chart->name(i);
  out += "\nhamiltonian = " + s.hamiltonian + "\nhamiltonian_dimension = " + dimension_text(H.dim, s.space) + "\n";
  for (const auto &[un, us] : s.unit_systems)
    out += "hamiltonian_unit_scale." + un + " = " + Report::num(induced_unit_scale(us, H.dim)) + "\n";
  out += dims.text();

  LichnerowiczPair pair = s.structure.pair;
  bool ok = true;
  for (std::size_t i = 0; i < s.checks.size(); ++i) {
    try {
      Report rep = detail::run_check(s, s.checks[i], i, seed, pair);
      ok = ok && rep.passed;
      out += rep.text();
    } catch (const Error &e) {
      ok = false;
      out += detail::failure_block("checks[" + std::to_string(i) + "] " + s.checks[i].kind, e);
    }
  }

  for (const auto &b : s.brackets) {
    const auto &f = s.observable(b.f), &g = s.observable(b.g);
    out += "[bracket]\nf = " + b.f + "\ng = " + b.g + "\n";
    try {
      out += "value = " + Report::num(jacobi_bracket(pair, f.field, g.field, b.at)) + "\nresult = pass\n";
    } catch (const Error &e) {
      ok = false;
      out += "error = " + std::string(e.what()) + "\nresult = fail\n";
    }
  }

  if (s.integration && !opt.dry_run) {
    const IntegrationDecl &d = *s.integration;
    if (!pair.certified()) {
      Report cert = certify(pair, 100, 1e-9, seed);
      cert.check = "flow_certification " + cert.check;
      out += cert.text();
    }
    out += "[flow]\nmethod = ";
    out += d.method == Method::RK4 ? "rk4" : "rk45";
    out += "\nt0 = " + Report::num(d.t0) + "\nt1 = " + Report::num(d.t1) + "\nstep = " + Report::num(d.step) + "\n";
    try {
      FlowProblem prob{pair, H.field, d.x0, d.t0, d.t1, d.step, d.method, d.rtol, d.atol};
      Trajectory tr = integrate_flow(prob);
      EnergySummary e = monitor_energy(tr, pair, H.field);
      std::ostringstream csv;
      write_csv(csv, tr, *s.structure.chart);
      res.csv = csv.str();
      out += "accepted_steps = " + std::to_string(tr.size() - 1) + "\n";
      out += "H_initial = " + Report::num(tr.H_values.front()) + "\nH_final = " + Report::num(tr.H_values.back()) + "\n";
      out += "max_pointwise_residual = " + Report::num(e.max_pointwise_residual) + "\n";
      out += "max_drift_residual = " + Report::num(e.max_drift_residual) + "\n";
      out += "max_energy_change = " + Report::num(e.max_energy_change) + "\n";
      out += "csv = " + s.csv_name + "\nresult = pass\n";
    } catch (const Error &e) {
      ok = false;
      out += "error = " + std::string(e.what()) + "\nresult = fail\n";
    }
  }

  res.exit_code = ok ? 0 : 1;
  out += "[summary]\nresult = " + std::string(ok ? "pass" : "fail") + "\n";

  if (opt.write_files) {
    std::filesystem::create_directories(opt.out_dir);
    std::ofstream(opt.out_dir / s.report_name, std::ios::binary) << res.report;
    if (!res.csv.empty())
      std::ofstream(opt.out_dir / s.csv_name, std::ios::binary) << res.csv;
  }
  return res;
}

} // namespace dimmech
