#include "nnrk/config.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "nnrk/errors.hpp"

namespace nnrk {

using json = nlohmann::ordered_json;

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string index_path(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

/// Object reader that records consumed keys so that leftovers can be rejected.
class Obj {
 public:
  Obj(const json& j, std::string path, const Expression::Variables* vars)
      : j_(j), path_(std::move(path)), vars_(vars) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  const json* find(const std::string& key) {
    used_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  const json& need(const std::string& key) {
    const json* v = find(key);
    if (!v) throw ConfigError(join(path_, key), "required key is missing");
    return *v;
  }
  std::string path(const std::string& key) const { return join(path_, key); }

  double num(const std::string& key, std::optional<double> def = std::nullopt) {
    const json* v = find(key);
    if (!v) {
      if (!def) throw ConfigError(path(key), "required key is missing");
      return *def;
    }
    return to_num(*v, path(key), vars_);
  }
  int integer(const std::string& key, std::optional<int> def = std::nullopt) {
    const json* v = find(key);
    if (!v) {
      if (!def) throw ConfigError(path(key), "required key is missing");
      return *def;
    }
    if (!v->is_number_integer()) throw ConfigError(path(key), "expected an integer");
    return v->get<int>();
  }
  bool boolean(const std::string& key, bool def) {
    const json* v = find(key);
    if (!v) return def;
    if (!v->is_boolean()) throw ConfigError(path(key), "expected true or false");
    return v->get<bool>();
  }
  std::string str(const std::string& key, std::optional<std::string> def = std::nullopt) {
    const json* v = find(key);
    if (!v) {
      if (!def) throw ConfigError(path(key), "required key is missing");
      return *def;
    }
    if (!v->is_string()) throw ConfigError(path(key), "expected a string");
    return v->get<std::string>();
  }
  Expression expr(const std::string& key, std::optional<double> def = std::nullopt) {
    const json* v = find(key);
    if (!v) {
      if (!def) throw ConfigError(path(key), "required key is missing");
      return Expression(*def);
    }
    return to_expr(*v, path(key));
  }
  Vec2 point(const std::string& key) { return to_point(need(key), path(key), vars_); }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw ConfigError(join(path_, it.key()), "unknown key");
  }

  static double to_num(const json& v, const std::string& path, const Expression::Variables* vars) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
      try {
        return Expression(v.get<std::string>()).eval(vars ? *vars : Expression::Variables{});
      } catch (const ConfigError&) {
        throw;
      } catch (const std::exception& e) {
        throw ConfigError(path, e.what());
      }
    }
    throw ConfigError(path, "expected a number or an expression string");
  }
  static Expression to_expr(const json& v, const std::string& path) {
    if (v.is_number()) return Expression(v.get<double>());
    if (v.is_string()) {
      try {
        return Expression(v.get<std::string>());
      } catch (const std::exception& e) {
        throw ConfigError(path, e.what());
      }
    }
    throw ConfigError(path, "expected a number or an expression string");
  }
  static Vec2 to_point(const json& v, const std::string& path, const Expression::Variables* vars) {
    if (!v.is_array() || v.size() != 2) throw ConfigError(path, "expected [x, y]");
    return Vec2(to_num(v[0], index_path(path, 0), vars), to_num(v[1], index_path(path, 1), vars));
  }
  static Polygon to_polygon(const json& v, const std::string& path, const Expression::Variables* vars) {
    if (!v.is_array() || v.size() < 3) throw ConfigError(path, "expected a list of at least three [x, y] points");
    Polygon p;
    for (std::size_t i = 0; i < v.size(); ++i) p.push_back(to_point(v[i], index_path(path, i), vars));
    return p;
  }

 private:
  const json& j_;
  std::string path_;
  const Expression::Variables* vars_;
  std::set<std::string> used_;
};

const json& array_at(Obj& o, const std::string& key) {
  const json& a = o.need(key);
  if (!a.is_array()) throw ConfigError(o.path(key), "expected a list");
  return a;
}

Expression::Variables eval_constants(const std::vector<std::pair<std::string, Expression>>& constants) {
  Expression::Variables vars;
  for (const auto& [name, e] : constants) {
    try {
      vars[name] = e.eval(vars);
    } catch (const std::exception& ex) {
      throw ConfigError("constants." + name, ex.what());
    }
  }
  return vars;
}

void parse_domain(Obj o, RunConfig& c, const Expression::Variables& vars) {
  if (o.has("rectangle")) {
    Obj r(o.need("rectangle"), o.path("rectangle"), &vars);
    const Vec2 lo = r.point("lo"), hi = r.point("hi");
    r.finish();
    c.domain = Domain2D::rectangle(lo, hi);
    if (o.has("outer")) throw ConfigError(o.path("outer"), "give either outer or rectangle");
  } else {
    c.domain.outer = Obj::to_polygon(o.need("outer"), o.path("outer"), &vars);
  }
  if (const json* h = o.find("holes")) {
    if (!h->is_array()) throw ConfigError(o.path("holes"), "expected a list");
    for (std::size_t i = 0; i < h->size(); ++i) {
      Obj ho((*h)[i], index_path(o.path("holes"), i), &vars);
      Hole hole;
      hole.a = ho.point("a");
      hole.b = ho.point("b");
      hole.width = ho.num("width");
      ho.finish();
      c.domain.holes.push_back(hole);
    }
  }
  if (const json* r = o.find("regions")) {
    if (!r->is_array()) throw ConfigError(o.path("regions"), "expected a list");
    for (std::size_t i = 0; i < r->size(); ++i) {
      Obj ro((*r)[i], index_path(o.path("regions"), i), &vars);
      BoundaryRegion reg;
      reg.name = ro.str("name");
      reg.lo = ro.point("lo");
      reg.hi = ro.point("hi");
      ro.finish();
      c.domain.regions.push_back(reg);
    }
  }
  o.finish();
}

void parse_discretization(Obj o, RunConfig& c, const Expression::Variables& vars) {
  c.discretization.nx = o.integer("nx");
  c.discretization.ny = o.integer("ny");
  if (const json* r = o.find("refine")) {
    if (!r->is_array()) throw ConfigError(o.path("refine"), "expected a list");
    for (std::size_t i = 0; i < r->size(); ++i) {
      Obj ro((*r)[i], index_path(o.path("refine"), i), &vars);
      RefineRegion reg;
      reg.polygon = Obj::to_polygon(ro.need("polygon"), ro.path("polygon"), &vars);
      reg.level = ro.integer("level", 1);
      ro.finish();
      c.discretization.refine.push_back(reg);
    }
  }
  o.finish();
}

void parse_rk(Obj o, RunConfig& c) {
  c.rk.order = o.integer("order", 1);
  c.rk.normalized_support = o.num("normalized_support", 2.0);
  o.finish();
}

void parse_material(Obj o, RunConfig& c, const Expression::Variables& vars) {
  auto& m = c.material;
  m.E = o.num("E");
  m.nu = o.num("nu");
  m.Gc_I = o.num("Gc_I");
  m.Gc_II = o.num("Gc_II", m.Gc_I);
  m.length_scale = o.num("length_scale");
  if (o.has("ft")) m.ft = o.num("ft");
  if (o.has("psi_c")) m.psi_c_override = o.num("psi_c");
  m.plane_stress = o.boolean("plane_stress", false);
  m.damage = o.boolean("damage", true);
  if (const json* z = o.find("zones")) {
    if (!z->is_array()) throw ConfigError(o.path("zones"), "expected a list");
    for (std::size_t i = 0; i < z->size(); ++i) {
      Obj zo((*z)[i], index_path(o.path("zones"), i), &vars);
      Zone zone;
      zone.polygon = Obj::to_polygon(zo.need("polygon"), zo.path("polygon"), &vars);
      zone.modulus_factor = zo.num("modulus_factor", 1.0);
      zone.eta = zo.num("eta", 0.0);
      zo.finish();
      c.zones.push_back(zone);
    }
  }
  o.finish();
}

void parse_nn(Obj o, RunConfig& c, const Expression::Variables& vars) {
  auto& n = c.nn;
  n.blocks = o.integer("blocks", n.blocks);
  n.kernels = o.integer("kernels", n.kernels);
  n.hidden_layers = o.integer("hidden_layers", n.hidden_layers);
  n.neurons = o.integer("neurons", n.neurons);
  n.length_scale = o.num("length_scale", n.length_scale);
  n.beta_min = o.num("beta_min", n.beta_min);
  n.beta_max = o.num("beta_max", n.beta_max);
  n.beta_init = o.num("beta_init", n.beta_init);
  n.rho_init = o.num("rho_init", n.rho_init);
  n.kappa_reg = o.num("kappa_reg", n.kappa_reg);
  n.enrich_kappa = o.num("enrich_kappa", n.enrich_kappa);
  n.enrich_threshold = o.num("enrich_threshold", n.enrich_threshold);
  if (const json* f = o.find("force_region")) n.force_region = Obj::to_polygon(*f, o.path("force_region"), &vars);
  if (const json* s = o.find("seed")) {
    if (!s->is_number_unsigned()) throw ConfigError(o.path("seed"), "expected a non-negative integer");
    n.seed = s->get<std::uint64_t>();
  }
  o.finish();
}

void parse_optimizer(Obj o, RunConfig& c) {
  auto& s = c.optimizer;
  s.adam.epochs = o.integer("adam_epochs", s.adam.epochs);
  s.adam.lr = o.num("adam_lr", s.adam.lr);
  s.adam.beta1 = o.num("adam_beta1", s.adam.beta1);
  s.adam.beta2 = o.num("adam_beta2", s.adam.beta2);
  s.adam.eps = o.num("adam_eps", s.adam.eps);
  s.lbfgs.memory = o.integer("lbfgs_memory", s.lbfgs.memory);
  s.lbfgs.max_iter = o.integer("lbfgs_max_iter", s.lbfgs.max_iter);
  s.lbfgs.grad_tol = o.num("grad_tol", s.lbfgs.grad_tol);
  s.lbfgs.c1 = o.num("wolfe_c1", s.lbfgs.c1);
  s.lbfgs.c2 = o.num("wolfe_c2", s.lbfgs.c2);
  s.stage_a.max_newton = o.integer("newton_max_iter", s.stage_a.max_newton);
  s.stage_a.max_multiplier_updates = o.integer("multiplier_updates", s.stage_a.max_multiplier_updates);
  s.kappa_bc = o.num("kappa_bc", s.kappa_bc);
  s.stage_b = o.boolean("stage_b", s.stage_b);
  s.stage_b_without_network = o.boolean("stage_b_without_network", s.stage_b_without_network);
  o.finish();
}

void parse_load(Obj o, RunConfig& c) {
  auto& l = c.load;
  l.steps = o.integer("steps", 1);
  if (const json* d = o.find("dirichlet")) {
    if (!d->is_array()) throw ConfigError(o.path("dirichlet"), "expected a list");
    for (std::size_t i = 0; i < d->size(); ++i) {
      Obj dobj((*d)[i], index_path(o.path("dirichlet"), i), nullptr);
      DirichletSpec s;
      s.region = dobj.str("region");
      if (dobj.has("u1")) s.u1 = dobj.expr("u1");
      if (dobj.has("u2")) s.u2 = dobj.expr("u2");
      s.driven = dobj.boolean("driven", false);
      dobj.finish();
      if (!s.u1 && !s.u2) throw ConfigError(index_path(o.path("dirichlet"), i), "needs u1 and/or u2");
      l.dirichlet.push_back(std::move(s));
    }
  }
  if (const json* t = o.find("traction")) {
    if (!t->is_array()) throw ConfigError(o.path("traction"), "expected a list");
    for (std::size_t i = 0; i < t->size(); ++i) {
      Obj tobj((*t)[i], index_path(o.path("traction"), i), nullptr);
      TractionSpec s;
      s.region = tobj.str("region");
      s.t1 = tobj.expr("t1", 0.0);
      s.t2 = tobj.expr("t2", 0.0);
      tobj.finish();
      l.traction.push_back(std::move(s));
    }
  }
  if (const json* b = o.find("body_force")) {
    Obj bo(*b, o.path("body_force"), nullptr);
    l.body_force = std::array<Expression, 2>{bo.expr("b1", 0.0), bo.expr("b2", 0.0)};
    bo.finish();
  }
  o.finish();
}

void parse_exact(Obj o, RunConfig& c) {
  ExactSolution e;
  e.u1 = o.expr("u1");
  e.u2 = o.expr("u2");
  const bool any = o.has("du1dx") || o.has("du1dy") || o.has("du2dx") || o.has("du2dy");
  if (any) e.grad = std::array<Expression, 4>{o.expr("du1dx"), o.expr("du1dy"), o.expr("du2dx"), o.expr("du2dy")};
  o.finish();
  c.exact = std::move(e);
}

void parse_output(Obj o, RunConfig& c, const Expression::Variables& vars) {
  auto& out = c.output;
  out.directory = o.str("directory", out.directory);
  out.cadence = o.integer("cadence", out.cadence);
  out.fields = o.boolean("fields", out.fields);
  out.vtk = o.boolean("vtk", out.vtk);
  if (const json* t = o.find("transect")) {
    Obj to(*t, o.path("transect"), &vars);
    Transect tr;
    tr.from = to.point("from");
    tr.to = to.point("to");
    tr.points = to.integer("points", tr.points);
    to.finish();
    out.transect = tr;
  }
  o.finish();
}

void parse_study(Obj o, RunConfig& c) {
  StudySpec s;
  s.parameter = o.str("parameter");
  const json& v = array_at(o, "values");
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string p = index_path(o.path("values"), i);
    if (s.parameter == "mesh") {
      if (!v[i].is_array() || v[i].size() != 2 || !v[i][0].is_number_integer() || !v[i][1].is_number_integer())
        throw ConfigError(p, "expected [nx, ny]");
      s.meshes.push_back({v[i][0].get<int>(), v[i][1].get<int>()});
    } else if (s.parameter == "neurons") {
      if (!v[i].is_number_integer()) throw ConfigError(p, "expected an integer");
      s.neurons.push_back(v[i].get<int>());
    } else {
      throw ConfigError(o.path("parameter"), "must be \"mesh\" or \"neurons\"");
    }
  }
  o.finish();
  c.study = std::move(s);
}

json point_json(const Vec2& p) { return json::array({p.x(), p.y()}); }
json polygon_json(const Polygon& poly) {
  json a = json::array();
  for (const auto& p : poly) a.push_back(point_json(p));
  return a;
}
json expr_json(const Expression& e) { return e.source(); }

}  // namespace

Expression::Variables RunConfig::variables() const { return eval_constants(constants); }

void RunConfig::validate() const {
  auto wrap = [](const std::string& path, auto&& fn) {
    try {
      fn();
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(path, e.what());
    }
  };
  wrap("domain", [&] { domain.validate(); });
  wrap("material", [&] { material.validate(); });
  wrap("nn", [&] { nn.validate(); });
  if (discretization.nx < 2) throw ConfigError("discretization.nx", "must be >= 2");
  if (discretization.ny < 2) throw ConfigError("discretization.ny", "must be >= 2");
  for (std::size_t i = 0; i < discretization.refine.size(); ++i) {
    const auto& r = discretization.refine[i];
    if (r.level < 1) throw ConfigError(index_path("discretization.refine", i) + ".level", "must be >= 1");
    if (!is_ccw(r.polygon) || !is_convex(r.polygon))
      throw ConfigError(index_path("discretization.refine", i) + ".polygon", "must be convex and counter-clockwise");
  }
  if (rk.order < 0 || rk.order > 2) throw ConfigError("rk.order", "must be 0, 1 or 2");
  if (!(rk.normalized_support > 0.0)) throw ConfigError("rk.normalized_support", "must be positive");
  for (std::size_t i = 0; i < zones.size(); ++i) {
    const auto& z = zones[i];
    const std::string p = index_path("material.zones", i);
    if (!is_ccw(z.polygon) || !is_convex(z.polygon))
      throw ConfigError(p + ".polygon", "must be convex and counter-clockwise");
    if (!(z.modulus_factor > 0.0)) throw ConfigError(p + ".modulus_factor", "must be positive");
    if (!(z.eta >= 0.0 && z.eta < 1.0)) throw ConfigError(p + ".eta", "must lie in [0, 1)");
  }
  if (nn.blocks > 0 && material.damage && !(material.psi_c() > 0.0) && !(nn.enrich_threshold > 0.0) &&
      !nn.force_region)
    throw ConfigError("nn.enrich_threshold",
                      "material has no tensile strength (ft/psi_c); an absolute enrichment threshold is required");
  if (!(optimizer.kappa_bc > 0.0)) throw ConfigError("optimizer.kappa_bc", "must be positive");
  if (optimizer.adam.epochs < 0) throw ConfigError("optimizer.adam_epochs", "must be >= 0");
  if (!(optimizer.adam.lr > 0.0)) throw ConfigError("optimizer.adam_lr", "must be positive");
  if (optimizer.lbfgs.memory < 1) throw ConfigError("optimizer.lbfgs_memory", "must be >= 1");
  if (optimizer.lbfgs.max_iter < 0) throw ConfigError("optimizer.lbfgs_max_iter", "must be >= 0");
  if (!(optimizer.lbfgs.c1 > 0.0 && optimizer.lbfgs.c1 < optimizer.lbfgs.c2 && optimizer.lbfgs.c2 < 1.0))
    throw ConfigError("optimizer.wolfe_c2", "need 0 < wolfe_c1 < wolfe_c2 < 1");
  if (load.steps < 1) throw ConfigError("load.steps", "must be >= 1");
  if (load.dirichlet.empty()) throw ConfigError("load.dirichlet", "at least one Dirichlet region is required");
  for (std::size_t i = 0; i < load.dirichlet.size(); ++i)
    if (!domain.find_region(load.dirichlet[i].region))
      throw ConfigError(index_path("load.dirichlet", i) + ".region",
                        "unknown boundary region '" + load.dirichlet[i].region + "'");
  for (std::size_t i = 0; i < load.traction.size(); ++i)
    if (!domain.find_region(load.traction[i].region))
      throw ConfigError(index_path("load.traction", i) + ".region",
                        "unknown boundary region '" + load.traction[i].region + "'");
  if (output.cadence < 1) throw ConfigError("output.cadence", "must be >= 1");
  if (output.transect && output.transect->points < 2) throw ConfigError("output.transect.points", "must be >= 2");
  if (study) {
    const std::size_t n = study->parameter == "mesh" ? study->meshes.size() : study->neurons.size();
    if (n < 3) throw ConfigError("study.values", "at least three entries are needed for a slope");
    if (!exact) throw ConfigError("exact_solution", "required by the convergence study");
  }
  // Expressions must evaluate with the documented variables.
  Expression::Variables v = variables();
  v["x"] = 0.0;
  v["y"] = 0.0;
  v["step"] = 1.0;
  v["steps"] = load.steps;
  v["t"] = 1.0 / load.steps;
  auto check = [&](const Expression& e, const std::string& path) {
    try {
      (void)e.eval(v);
    } catch (const std::exception& ex) {
      throw ConfigError(path, ex.what());
    }
  };
  for (std::size_t i = 0; i < load.dirichlet.size(); ++i) {
    const auto& d = load.dirichlet[i];
    if (d.u1) check(*d.u1, index_path("load.dirichlet", i) + ".u1");
    if (d.u2) check(*d.u2, index_path("load.dirichlet", i) + ".u2");
  }
  for (std::size_t i = 0; i < load.traction.size(); ++i) {
    check(load.traction[i].t1, index_path("load.traction", i) + ".t1");
    check(load.traction[i].t2, index_path("load.traction", i) + ".t2");
  }
  if (load.body_force) {
    check((*load.body_force)[0], "load.body_force.b1");
    check((*load.body_force)[1], "load.body_force.b2");
  }
  if (exact) {
    check(exact->u1, "exact_solution.u1");
    check(exact->u2, "exact_solution.u2");
    if (exact->grad) {
      const char* names[] = {"du1dx", "du1dy", "du2dx", "du2dy"};
      for (int k = 0; k < 4; ++k) check((*exact->grad)[k], std::string("exact_solution.") + names[k]);
    }
  }
}

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("invalid JSON: ") + e.what());
  }
  RunConfig c;
  Obj root(j, "", nullptr);
  c.name = root.str("name", c.name);
  if (const json* k = root.find("constants")) {
    if (!k->is_object()) throw ConfigError("constants", "expected an object");
    for (auto it = k->begin(); it != k->end(); ++it)
      c.constants.emplace_back(it.key(), Obj::to_expr(it.value(), "constants." + it.key()));
  }
  const Expression::Variables vars = eval_constants(c.constants);
  parse_domain(Obj(root.need("domain"), "domain", &vars), c, vars);
  parse_discretization(Obj(root.need("discretization"), "discretization", &vars), c, vars);
  if (const json* r = root.find("rk")) parse_rk(Obj(*r, "rk", &vars), c);
  parse_material(Obj(root.need("material"), "material", &vars), c, vars);
  if (const json* n = root.find("nn")) parse_nn(Obj(*n, "nn", &vars), c, vars);
  if (const json* o = root.find("optimizer")) parse_optimizer(Obj(*o, "optimizer", &vars), c);
  parse_load(Obj(root.need("load"), "load", &vars), c);
  if (const json* e = root.find("exact_solution")) parse_exact(Obj(*e, "exact_solution", &vars), c);
  if (const json* o = root.find("output")) parse_output(Obj(*o, "output", &vars), c, vars);
  if (const json* s = root.find("study")) parse_study(Obj(*s, "study", &vars), c);
  root.finish();
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& c) {
  json j;
  j["name"] = c.name;
  if (!c.constants.empty()) {
    json k = json::object();
    for (const auto& [name, e] : c.constants) k[name] = expr_json(e);
    j["constants"] = k;
  }
  json d;
  d["outer"] = polygon_json(c.domain.outer);
  if (!c.domain.holes.empty()) {
    json h = json::array();
    for (const auto& hole : c.domain.holes)
      h.push_back({{"a", point_json(hole.a)}, {"b", point_json(hole.b)}, {"width", hole.width}});
    d["holes"] = h;
  }
  json regs = json::array();
  for (const auto& r : c.domain.regions)
    regs.push_back({{"name", r.name}, {"lo", point_json(r.lo)}, {"hi", point_json(r.hi)}});
  d["regions"] = regs;
  j["domain"] = d;

  json disc{{"nx", c.discretization.nx}, {"ny", c.discretization.ny}};
  if (!c.discretization.refine.empty()) {
    json r = json::array();
    for (const auto& reg : c.discretization.refine)
      r.push_back({{"polygon", polygon_json(reg.polygon)}, {"level", reg.level}});
    disc["refine"] = r;
  }
  j["discretization"] = disc;
  j["rk"] = {{"order", c.rk.order}, {"normalized_support", c.rk.normalized_support}};

  const auto& m = c.material;
  json mat{{"E", m.E},
           {"nu", m.nu},
           {"Gc_I", m.Gc_I},
           {"Gc_II", m.Gc_II},
           {"length_scale", m.length_scale},
           {"plane_stress", m.plane_stress},
           {"damage", m.damage}};
  if (m.ft) mat["ft"] = *m.ft;
  if (m.psi_c_override) mat["psi_c"] = *m.psi_c_override;
  if (!c.zones.empty()) {
    json z = json::array();
    for (const auto& zone : c.zones)
      z.push_back({{"polygon", polygon_json(zone.polygon)},
                   {"modulus_factor", zone.modulus_factor},
                   {"eta", zone.eta}});
    mat["zones"] = z;
  }
  j["material"] = mat;

  const auto& n = c.nn;
  json nn{{"blocks", n.blocks},
          {"kernels", n.kernels},
          {"hidden_layers", n.hidden_layers},
          {"neurons", n.neurons},
          {"length_scale", n.length_scale},
          {"beta_min", n.beta_min},
          {"beta_max", n.beta_max},
          {"beta_init", n.beta_init},
          {"rho_init", n.rho_init},
          {"kappa_reg", n.kappa_reg},
          {"enrich_kappa", n.enrich_kappa},
          {"enrich_threshold", n.enrich_threshold},
          {"seed", n.seed}};
  if (n.force_region) nn["force_region"] = polygon_json(*n.force_region);
  j["nn"] = nn;

  const auto& o = c.optimizer;
  j["optimizer"] = {{"adam_epochs", o.adam.epochs},
                    {"adam_lr", o.adam.lr},
                    {"adam_beta1", o.adam.beta1},
                    {"adam_beta2", o.adam.beta2},
                    {"adam_eps", o.adam.eps},
                    {"lbfgs_memory", o.lbfgs.memory},
                    {"lbfgs_max_iter", o.lbfgs.max_iter},
                    {"grad_tol", o.lbfgs.grad_tol},
                    {"wolfe_c1", o.lbfgs.c1},
                    {"wolfe_c2", o.lbfgs.c2},
                    {"newton_max_iter", o.stage_a.max_newton},
                    {"multiplier_updates", o.stage_a.max_multiplier_updates},
                    {"kappa_bc", o.kappa_bc},
                    {"stage_b", o.stage_b},
                    {"stage_b_without_network", o.stage_b_without_network}};

  json load{{"steps", c.load.steps}};
  json dir = json::array();
  for (const auto& s : c.load.dirichlet) {
    json e{{"region", s.region}};
    if (s.u1) e["u1"] = expr_json(*s.u1);
    if (s.u2) e["u2"] = expr_json(*s.u2);
    e["driven"] = s.driven;
    dir.push_back(e);
  }
  load["dirichlet"] = dir;
  if (!c.load.traction.empty()) {
    json t = json::array();
    for (const auto& s : c.load.traction)
      t.push_back({{"region", s.region}, {"t1", expr_json(s.t1)}, {"t2", expr_json(s.t2)}});
    load["traction"] = t;
  }
  if (c.load.body_force)
    load["body_force"] = {{"b1", expr_json((*c.load.body_force)[0])}, {"b2", expr_json((*c.load.body_force)[1])}};
  j["load"] = load;

  if (c.exact) {
    json e{{"u1", expr_json(c.exact->u1)}, {"u2", expr_json(c.exact->u2)}};
    if (c.exact->grad) {
      const char* names[] = {"du1dx", "du1dy", "du2dx", "du2dy"};
      for (int k = 0; k < 4; ++k) e[names[k]] = expr_json((*c.exact->grad)[k]);
    }
    j["exact_solution"] = e;
  }
  json out{{"directory", c.output.directory},
           {"cadence", c.output.cadence},
           {"fields", c.output.fields},
           {"vtk", c.output.vtk}};
  if (c.output.transect)
    out["transect"] = {{"from", point_json(c.output.transect->from)},
                       {"to", point_json(c.output.transect->to)},
                       {"points", c.output.transect->points}};
  j["output"] = out;
  if (c.study) {
    json v = json::array();
    if (c.study->parameter == "mesh")
      for (const auto& mesh : c.study->meshes) v.push_back({mesh[0], mesh[1]});
    else
      for (int k : c.study->neurons) v.push_back(k);
    j["study"] = {{"parameter", c.study->parameter}, {"values", v}};
  }
  return j.dump(2) + "\n";
}

ProblemSetup make_setup(const RunConfig& cfg) {
  ProblemSetup s;
  s.domain = cfg.domain;
  s.nodes = build_uniform_grid(cfg.discretization.nx, cfg.discretization.ny, cfg.domain, cfg.rk.normalized_support);
  s.rk = cfg.rk;
  s.refine = cfg.discretization.refine;
  s.zones = cfg.zones;
  s.material = cfg.material;
  s.nn = cfg.nn;
  s.kappa_bc = cfg.optimizer.kappa_bc;
  return s;
}

void apply_load_step(const RunConfig& cfg, int step, Problem& problem) {
  Expression::Variables v = cfg.variables();
  v["step"] = step;
  v["steps"] = cfg.load.steps;
  v["t"] = static_cast<double>(step) / cfg.load.steps;

  std::map<int, DirichletSegment> segs;
  for (const auto& d : problem.dirichlet) segs[d.boundary].multiplier = d.multiplier;
  std::map<int, DirichletSegment> next;
  for (const auto& spec : cfg.load.dirichlet) {
    const BoundaryRegion* region = cfg.domain.find_region(spec.region);
    for (int b : problem.mesh.boundary_in_region(*region)) {
      const auto& bs = problem.mesh.boundary[b];
      v["x"] = bs.midpoint.x();
      v["y"] = bs.midpoint.y();
      DirichletSegment& d = next[b];
      d.boundary = b;
      if (auto it = segs.find(b); it != segs.end()) d.multiplier = it->second.multiplier;
      if (spec.u1) {
        d.fixed[0] = true;
        d.g(0) = spec.u1->eval(v);
      }
      if (spec.u2) {
        d.fixed[1] = true;
        d.g(1) = spec.u2->eval(v);
      }
      d.driven = d.driven || spec.driven;
    }
  }
  problem.dirichlet.clear();
  for (auto& [b, d] : next) {
    for (int c = 0; c < 2; ++c)
      if (!d.fixed[c]) d.multiplier(c) = 0.0;
    problem.dirichlet.push_back(d);
  }

  problem.traction.clear();
  for (const auto& spec : cfg.load.traction) {
    const BoundaryRegion* region = cfg.domain.find_region(spec.region);
    for (int b : problem.mesh.boundary_in_region(*region)) {
      const auto& bs = problem.mesh.boundary[b];
      v["x"] = bs.midpoint.x();
      v["y"] = bs.midpoint.y();
      TractionSegment t;
      t.boundary = b;
      t.t = n_per_mm2 * Vec2(spec.t1.eval(v), spec.t2.eval(v));
      problem.traction.push_back(t);
    }
  }

  problem.body.resize(0, 2);
  if (cfg.load.body_force) {
    problem.body.resize(problem.num_cells(), 2);
    for (Eigen::Index L = 0; L < problem.num_cells(); ++L) {
      const Vec2 c = problem.mesh.cells[L].centroid;
      v["x"] = c.x();
      v["y"] = c.y();
      problem.body(L, 0) = n_per_mm2 * (*cfg.load.body_force)[0].eval(v);
      problem.body(L, 1) = n_per_mm2 * (*cfg.load.body_force)[1].eval(v);
    }
  }
}

}  // namespace nnrk
