#include "motforge/json_io.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <limits>

namespace motforge {

namespace {

const ojson& require(const ojson& j, const char* key, const std::string& ptr) {
  if (!j.is_object() || !j.contains(key))
    throw SchemaError(std::string("missing field '") + key + "'", ptr);
  return j.at(key);
}

double require_number(const ojson& j, const std::string& ptr) {
  if (!j.is_number()) throw SchemaError("expected a number", ptr);
  return j.get<double>();
}

}  // namespace

ojson to_json(const DiscreteMeasure& m) {
  ojson atoms = ojson::array();
  for (const Atom& a : m.atoms()) atoms.push_back({a.position, a.mass});
  return ojson{{"atoms", std::move(atoms)}};
}

ojson to_json(const Coupling& q) {
  ojson entries = ojson::array();
  for (const CouplingEntry& e : q.entries()) entries.push_back({e.x, e.y, e.mass});
  return ojson{{"entries", std::move(entries)}};
}

DiscreteMeasure measure_from_json(const ojson& j, const std::string& ptr) {
  const ojson& atoms = require(j, "atoms", ptr);
  if (!atoms.is_array()) throw SchemaError("'atoms' must be an array", ptr + "/atoms");
  std::vector<double> pos, mass;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const std::string aptr = ptr + "/atoms/" + std::to_string(i);
    const ojson& a = atoms[i];
    if (!a.is_array() || a.size() != 2)
      throw SchemaError("atom must be [position, mass]", aptr);
    pos.push_back(require_number(a[0], aptr + "/0"));
    const double m = require_number(a[1], aptr + "/1");
    if (m < 0.0) throw SchemaError("negative mass", aptr + "/1");
    mass.push_back(m);
  }
  try {
    return make_measure(pos, mass);
  } catch (const std::invalid_argument& e) {
    throw SchemaError(e.what(), ptr + "/atoms");
  }
}

Coupling coupling_from_json(const ojson& j, const std::string& ptr) {
  const ojson& entries = require(j, "entries", ptr);
  if (!entries.is_array())
    throw SchemaError("'entries' must be an array", ptr + "/entries");
  std::vector<CouplingEntry> es;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const std::string eptr = ptr + "/entries/" + std::to_string(i);
    const ojson& e = entries[i];
    if (!e.is_array() || e.size() != 3)
      throw SchemaError("entry must be [x, y, mass]", eptr);
    const double x = require_number(e[0], eptr + "/0");
    const double y = require_number(e[1], eptr + "/1");
    const double m = require_number(e[2], eptr + "/2");
    if (m < 0.0) throw SchemaError("negative mass", eptr + "/2");
    es.push_back({x, y, m});
  }
  try {
    return Coupling(std::move(es));
  } catch (const std::invalid_argument& e) {
    throw SchemaError(e.what(), ptr + "/entries");
  }
}

ojson to_json(const CostFunction& c) {
  ojson params = ojson::object();
  if (c.family() == CostFamily::composite)
    throw std::invalid_argument("composite costs are programmatic only");
  if (c.family() == CostFamily::tabulated) {
    const CostFunction::Table* t = c.table();
    params["x_grid"] = t->x_grid;
    params["y_grid"] = t->y_grid;
    params["values"] = t->values;
  }
  return ojson{{"family", to_string(c.family())}, {"params", std::move(params)}};
}

CostFunction cost_from_json(const ojson& j, const std::string& ptr) {
  const std::string family =
      require(j, "family", ptr).is_string()
          ? j.at("family").get<std::string>()
          : throw SchemaError("'family' must be a string", ptr + "/family");
  if (family == "tabulated") {
    const ojson& params = require(j, "params", ptr);
    auto vec = [&](const char* key) {
      const ojson& arr = require(params, key, ptr + "/params");
      if (!arr.is_array())
        throw SchemaError(std::string(key) + " must be an array",
                          ptr + "/params/" + key);
      return arr.get<std::vector<double>>();
    };
    try {
      return CostFunction::tabulated(vec("x_grid"), vec("y_grid"), vec("values"));
    } catch (const std::invalid_argument& e) {
      throw SchemaError(e.what(), ptr + "/params");
    }
  }
  for (CostFamily f :
       {CostFamily::abs_diff_neg, CostFamily::abs_diff, CostFamily::sm_neg,
        CostFamily::sm_pos, CostFamily::cubic, CostFamily::numeraire_abs,
        CostFamily::mirrored_abs}) {
    if (family == to_string(f)) return CostFunction::from_family(f);
  }
  throw SchemaError("unknown cost family '" + family + "'", ptr + "/family");
}

ojson to_json(const TransformSpec& t) {
  ojson params = ojson::object();
  switch (t.kind()) {
    case TransformSpec::Kind::affine:
      params["a"] = t.a();
      params["b"] = t.b();
      return ojson{{"variant", "affine"}, {"params", std::move(params)}};
    case TransformSpec::Kind::numeraire:
      params["a"] = t.a();
      params["b"] = t.b();
      params["c"] = t.c();
      return ojson{{"variant", "numeraire"}, {"params", std::move(params)}};
    case TransformSpec::Kind::mirror:
      params["flip_x"] = t.flips_x();
      params["flip_y"] = t.flips_y();
      return ojson{{"variant", "mirror"}, {"params", std::move(params)}};
    case TransformSpec::Kind::custom:
      throw std::invalid_argument("custom transforms are programmatic only");
  }
  throw std::logic_error("unreachable");
}

TransformSpec transform_from_json(const ojson& j, const std::string& ptr) {
  const ojson& v = require(j, "variant", ptr);
  if (!v.is_string()) throw SchemaError("'variant' must be a string", ptr + "/variant");
  const std::string variant = v.get<std::string>();
  const ojson& params = require(j, "params", ptr);
  const std::string pptr = ptr + "/params";
  try {
    if (variant == "affine")
      return TransformSpec::affine(require_number(require(params, "a", pptr), pptr + "/a"),
                                   require_number(require(params, "b", pptr), pptr + "/b"));
    if (variant == "numeraire")
      return TransformSpec::numeraire(
          require_number(require(params, "a", pptr), pptr + "/a"),
          require_number(require(params, "b", pptr), pptr + "/b"),
          require_number(require(params, "c", pptr), pptr + "/c"));
    if (variant == "mirror") {
      const ojson& fx = require(params, "flip_x", pptr);
      const ojson& fy = require(params, "flip_y", pptr);
      if (!fx.is_boolean() || !fy.is_boolean())
        throw SchemaError("flip flags must be booleans", pptr);
      return TransformSpec::mirror(fx.get<bool>(), fy.get<bool>());
    }
  } catch (const std::invalid_argument& e) {
    throw SchemaError(e.what(), pptr);
  }
  throw SchemaError("unknown transform variant '" + variant + "'", ptr + "/variant");
}

ojson to_json(const Barrier& b) {
  ojson psi = ojson::array(), psi2 = ojson::array();
  for (std::size_t i = 0; i < b.grid.size(); ++i) {
    if (std::isfinite(b.psi[i])) psi.push_back({b.grid[i], b.psi[i]});
    if (!b.psi2.empty() && std::isfinite(b.psi2[i]))
      psi2.push_back({b.grid[i], b.psi2[i]});
  }
  ojson out{{"kind", to_string(b.kind)},
            {"phase", to_string(b.phase)},
            {"delta", b.delta},
            {"grid_lo", b.grid.empty() ? 0.0 : b.grid.front()},
            {"grid_hi", b.grid.empty() ? 0.0 : b.grid.back()},
            {"psi", std::move(psi)},
            {"exclude_time_zero", b.exclude_time_zero}};
  if (!b.psi2.empty()) out["psi2"] = std::move(psi2);
  return out;
}

Barrier barrier_from_json(const ojson& j, const std::string& ptr) {
  Barrier b;
  const std::string kind =
      require(j, "kind", ptr).is_string()
          ? j.at("kind").get<std::string>()
          : throw SchemaError("'kind' must be a string", ptr + "/kind");
  if (kind == "right")
    b.kind = BarrierKind::right;
  else if (kind == "left")
    b.kind = BarrierKind::left;
  else if (kind == "two_sided_inner")
    b.kind = BarrierKind::two_sided_inner;
  else if (kind == "two_sided_outer")
    b.kind = BarrierKind::two_sided_outer;
  else
    throw SchemaError("unknown barrier kind '" + kind + "'", ptr + "/kind");

  if (j.contains("phase")) {
    const std::string phase = j.at("phase").get<std::string>();
    if (phase == "d_minus")
      b.phase = Phase::d_minus;
    else if (phase == "d_plus")
      b.phase = Phase::d_plus;
    else
      throw SchemaError("unknown phase '" + phase + "'", ptr + "/phase");
  }
  b.delta = require_number(require(j, "delta", ptr), ptr + "/delta");
  if (b.delta <= 0) throw SchemaError("delta must be positive", ptr + "/delta");
  const double lo = require_number(require(j, "grid_lo", ptr), ptr + "/grid_lo");
  const double hi = require_number(require(j, "grid_hi", ptr), ptr + "/grid_hi");
  const long long ilo = std::llround(lo / b.delta);
  const long long ihi = std::llround(hi / b.delta);
  if (ihi < ilo) throw SchemaError("empty grid window", ptr + "/grid_hi");
  const int n = static_cast<int>(ihi - ilo + 1);
  b.grid.resize(n);
  for (int i = 0; i < n; ++i) b.grid[i] = static_cast<double>(ilo + i) * b.delta;

  const double inf = std::numeric_limits<double>::infinity();
  const bool two_sided =
      b.kind == BarrierKind::two_sided_inner || b.kind == BarrierKind::two_sided_outer;
  const bool outer = b.kind == BarrierKind::two_sided_outer;
  b.psi.assign(n, b.kind == BarrierKind::right ? inf
               : b.kind == BarrierKind::left   ? -inf
               : outer                         ? 0.0
                                               : -inf);
  if (two_sided) b.psi2.assign(n, outer ? 0.0 : inf);

  auto fill = [&](const char* key, std::vector<double>& dst) {
    if (!j.contains(key)) return;
    const ojson& arr = j.at(key);
    if (!arr.is_array()) throw SchemaError("threshold list must be an array",
                                           ptr + "/" + key);
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string eptr = ptr + "/" + key + "/" + std::to_string(i);
      const ojson& e = arr[i];
      if (!e.is_array() || e.size() != 2)
        throw SchemaError("threshold must be [y, d]", eptr);
      const double y = require_number(e[0], eptr + "/0");
      const double d = require_number(e[1], eptr + "/1");
      const long long iy = std::llround(y / b.delta) - ilo;
      if (iy < 0 || iy >= n) throw SchemaError("threshold y outside grid", eptr + "/0");
      dst[static_cast<std::size_t>(iy)] = d;
    }
  };
  fill("psi", b.psi);
  if (two_sided) fill("psi2", b.psi2);
  if (j.contains("exclude_time_zero"))
    b.exclude_time_zero = j.at("exclude_time_zero").get<bool>();
  b.validate();
  return b;
}

std::string format17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

void dump_rec(const ojson& j, std::string& out, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent) * depth, ' ');
  const std::string pad_in(static_cast<std::size_t>(indent) * (depth + 1), ' ');
  switch (j.type()) {
    case ojson::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad_in + ojson(it.key()).dump() + ": ";
        dump_rec(it.value(), out, indent, depth + 1);
      }
      out += "\n" + pad + "}";
      return;
    }
    case ojson::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      bool first = true;
      for (const auto& v : j) {
        if (!first) out += ",\n";
        first = false;
        out += pad_in;
        dump_rec(v, out, indent, depth + 1);
      }
      out += "\n" + pad + "]";
      return;
    }
    case ojson::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v))
        throw std::invalid_argument("dump17: non-finite number in report");
      out += format17(v);
      return;
    }
    default:
      out += j.dump();
      return;
  }
}

}  // namespace

std::string dump17(const ojson& j) {
  std::string out;
  dump_rec(j, out, 2, 0);
  out += "\n";
  return out;
}

}  // namespace motforge
