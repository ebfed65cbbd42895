#include "motforge/scenario.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>

#include "motforge/mot.hpp"
#include "motforge/sep.hpp"

namespace motforge {

namespace fs = std::filesystem;

const char* to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::mot_solve: return "mot_solve";
    case ScenarioKind::monotone_check: return "monotone_check";
    case ScenarioKind::transform_apply: return "transform_apply";
    case ScenarioKind::transform_classify: return "transform_classify";
    case ScenarioKind::sep_fit: return "sep_fit";
    case ScenarioKind::sep_compare: return "sep_compare";
    case ScenarioKind::stop_go: return "stop_go";
    case ScenarioKind::symmetry_suite: return "symmetry_suite";
  }
  return "?";
}

int log_level() {
  static const int level = [] {
    const char* env = std::getenv("MOTFORGE_LOG");
    if (!env) return 0;
    const std::string v = env;
    if (v == "debug") return 2;
    if (v == "info") return 1;
    return 0;
  }();
  return level;
}

bool Report::all_passed() const {
  return std::all_of(assertions.begin(), assertions.end(),
                     [](const Assertion& a) { return a.pass; });
}

ojson Report::to_json() const {
  ojson j = ojson::object();
  j["scenario"] = scenario;
  j["passed"] = all_passed();
  ojson as = ojson::array();
  for (const Assertion& a : assertions)
    as.push_back(ojson{{"name", a.name}, {"pass", a.pass}, {"detail", a.detail}});
  j["assertions"] = std::move(as);
  j["report"] = body;
  return j;
}

namespace {

ojson read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  ojson j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("invalid JSON in " + path.string() + ": " + e.what());
  }
  return j;
}

// Inputs given as strings are file references, resolved against the scenario
// directory so reproduction scripts stay one-liners.
void resolve_references(ojson& body, const fs::path& base_dir) {
  for (const char* key :
       {"mu", "nu", "cost", "cost2", "transform", "coupling", "barrier"}) {
    if (body.contains(key) && body.at(key).is_string()) {
      const fs::path ref = base_dir / body.at(key).get<std::string>();
      body[key] = read_json_file(ref);
    }
  }
}

ScenarioKind kind_from_string(const std::string& s) {
  for (ScenarioKind k :
       {ScenarioKind::mot_solve, ScenarioKind::monotone_check,
        ScenarioKind::transform_apply, ScenarioKind::transform_classify,
        ScenarioKind::sep_fit, ScenarioKind::sep_compare, ScenarioKind::stop_go,
        ScenarioKind::symmetry_suite}) {
    if (s == to_string(k)) return k;
  }
  throw SchemaError("unknown scenario kind '" + s + "'", "/kind");
}

bool kind_is_stochastic(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::mot_solve:
    case ScenarioKind::transform_apply:
    case ScenarioKind::sep_fit:
      return false;
    default:
      return true;
  }
}

double number_or(const ojson& j, const char* key, double fallback) {
  return j.contains(key) ? j.at(key).get<double>() : fallback;
}

long long int_or(const ojson& j, const char* key, long long fallback) {
  return j.contains(key) ? j.at(key).get<long long>() : fallback;
}

std::string string_or(const ojson& j, const char* key, const std::string& fallback) {
  return j.contains(key) ? j.at(key).get<std::string>() : fallback;
}

Sense sense_from(const ojson& body) {
  const std::string s = string_or(body, "sense", "min");
  if (s == "min") return Sense::min;
  if (s == "max") return Sense::max;
  throw SchemaError("sense must be 'min' or 'max'", "/sense");
}

std::vector<double> grid_from(const ojson& j, const std::string& ptr) {
  if (j.is_array()) return j.get<std::vector<double>>();
  if (j.is_object() && j.contains("lo") && j.contains("hi") && j.contains("n")) {
    const double lo = j.at("lo").get<double>();
    const double hi = j.at("hi").get<double>();
    const int n = j.at("n").get<int>();
    if (n < 2 || hi <= lo) throw SchemaError("bad grid spec", ptr);
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) g[i] = lo + (hi - lo) * i / (n - 1);
    return g;
  }
  throw SchemaError("grid must be an array or {lo, hi, n}", ptr);
}

void add_coupling_table(Report& rep, const std::string& name, const Coupling& q) {
  Table t;
  t.name = name;
  t.columns = {"x", "y", "mass"};
  for (const CouplingEntry& e : q.entries()) t.rows.push_back({e.x, e.y, e.mass});
  rep.tables.push_back(std::move(t));
}

void add_measure_table(Report& rep, const std::string& name, const DiscreteMeasure& m) {
  Table t;
  t.name = name;
  t.columns = {"position", "mass"};
  for (const Atom& a : m.atoms()) t.rows.push_back({a.position, a.mass});
  rep.tables.push_back(std::move(t));
}

void assert_that(Report& rep, const std::string& name, bool pass,
                 const std::string& detail) {
  rep.assertions.push_back({name, pass, detail});
}

ojson support_to_json(const SupportSet& s) {
  ojson arr = ojson::array();
  for (const auto& [x, y] : s.points) arr.push_back({x, y});
  return arr;
}

SupportSet support_from_body(const ojson& body) {
  if (body.contains("support")) {
    std::vector<std::pair<double, double>> pts;
    const ojson& arr = body.at("support");
    if (!arr.is_array()) throw SchemaError("'support' must be an array", "/support");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const ojson& p = arr[i];
      if (!p.is_array() || p.size() != 2)
        throw SchemaError("support point must be [x, y]",
                          "/support/" + std::to_string(i));
      pts.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
    return SupportSet::of(std::move(pts));
  }
  if (body.contains("coupling"))
    return support(coupling_from_json(body.at("coupling"), "/coupling"));
  throw SchemaError("need 'support' or 'coupling'", "");
}

// ---------------------------------------------------------------------------
// Per-kind runners.

Report run_mot_solve(const Scenario& s) {
  Report rep;
  const DiscreteMeasure mu = measure_from_json(s.body.at("mu"), "/mu");
  const DiscreteMeasure nu = measure_from_json(s.body.at("nu"), "/nu");
  const CostFunction cost = cost_from_json(s.body.at("cost"), "/cost");
  const Sense sense = sense_from(s.body);

  const MotSolution sol = solve_mot(mu, nu, cost, sense);
  rep.body["status"] = to_string(sol.status);
  if (sol.status == LpStatus::optimal) {
    rep.body["value"] = sol.value;
    const auto [m0, m1] = marginals(sol.coupling);
    const double err0 = wasserstein1(m0, mu);
    const double err1 = wasserstein1(m1, nu);
    const MartingaleCheck mc = is_martingale(sol.coupling, 1e-9);
    rep.body["marginal_error_mu"] = err0;
    rep.body["marginal_error_nu"] = err1;
    assert_that(rep, "marginals_reproduced", err0 <= 1e-9 && err1 <= 1e-9,
                "W1 errors " + format17(err0) + ", " + format17(err1));
    assert_that(rep, "martingale", mc.ok,
                "worst conditional-mean deviation " + format17(mc.worst_violation));
    add_coupling_table(rep, "coupling", sol.coupling);
  }
  const bool expect_infeasible = s.body.contains("expect") &&
                                 s.body.at("expect").get<std::string>() == "infeasible";
  assert_that(rep, "status",
              expect_infeasible ? sol.status == LpStatus::infeasible
                                : sol.status == LpStatus::optimal,
              to_string(sol.status));
  if (s.body.contains("expect_value") && sol.status == LpStatus::optimal) {
    const double want = s.body.at("expect_value").get<double>();
    const double tol = number_or(s.body, "value_tol", 1e-9);
    assert_that(rep, "value", std::abs(sol.value - want) <= tol,
                format17(sol.value) + " vs " + format17(want));
  }
  return rep;
}

Report run_monotone_check(const Scenario& s) {
  Report rep;
  const SupportSet xi = support_from_body(s.body);
  const CostFunction cost = cost_from_json(s.body.at("cost"), "/cost");
  const int max_support = static_cast<int>(int_or(s.body, "max_support", 4));
  const int trials = static_cast<int>(int_or(s.body, "trials", 200));

  const auto left = check_left_monotone(xi);
  const auto right = check_right_monotone(xi);
  rep.body["left_monotone"] = !left.has_value();
  rep.body["right_monotone"] = !right.has_value();

  const MonotoneReport mr = is_finitely_monotone(xi, cost, max_support, trials, s.seed);
  rep.body["monotone"] = mr.monotone;
  rep.body["budget"] = ojson{{"subsets", mr.subsets},
                             {"lp_solves", mr.lp_solves},
                             {"random_trials", mr.random_trials},
                             {"max_support", max_support},
                             {"trials", trials}};
  if (mr.certificate) {
    rep.body["certificate"] =
        ojson{{"alpha", to_json(mr.certificate->alpha)},
              {"beta", to_json(mr.certificate->beta)},
              {"gap", mr.certificate->gap}};
  }
  const std::string expect = string_or(s.body, "expect", "monotone");
  assert_that(rep, "verdict",
              expect == "monotone" ? mr.monotone : !mr.monotone,
              expect + " expected, " + (mr.monotone ? "monotone" : "not monotone") +
                  " under the tested budget");
  return rep;
}

Report run_transform_apply(const Scenario& s) {
  Report rep;
  const TransformSpec spec = transform_from_json(s.body.at("transform"), "/transform");
  const Coupling pi = coupling_from_json(s.body.at("coupling"), "/coupling");

  const Coupling image = transform_measure(spec, pi);
  const Coupling back = inverse_transform_measure(spec, image);
  rep.body["image_mass"] = image.total_mass();

  // Round trip per-atom mass error.
  double rt = std::abs(back.total_mass() - pi.total_mass());
  const C123Result same = verify_C123(pi, back, 1e-10);
  rt = std::max(rt, same.ok ? 0.0 : 1.0);
  rep.body["round_trip_error"] = rt;
  assert_that(rep, "round_trip", rt <= 1e-10, format17(rt));

  if (s.body.contains("cost")) {
    const CostFunction cost = cost_from_json(s.body.at("cost"), "/cost");
    const CostFunction cost_p = transform_cost(spec, cost);
    double before = 0.0, after = 0.0;
    for (const auto& e : pi.entries()) before += cost(e.x, e.y) * e.mass;
    for (const auto& e : image.entries()) after += cost_p(e.x, e.y) * e.mass;
    rep.body["cost_original"] = before;
    rep.body["cost_transformed"] = after;
    assert_that(rep, "cost_consistency", std::abs(before - after) <= 1e-10,
                format17(before - after));
  }
  if (spec.kind() == TransformSpec::Kind::numeraire) {
    const MassCheck mc = numeraire_mass_check(pi, spec);
    rep.body["numeraire_mass"] = mc.total_mass;
    rep.body["numeraire_is_probability"] = mc.is_probability;
  }
  const MartingaleCheck src = is_martingale(pi, 1e-9);
  const MartingaleCheck dst = is_martingale(image, 1e-9);
  rep.body["source_martingale"] = src.ok;
  rep.body["image_martingale"] = dst.ok;
  add_coupling_table(rep, "image", image);
  return rep;
}

Report run_transform_classify(const Scenario& s) {
  Report rep;
  const TransformSpec spec = transform_from_json(s.body.at("transform"), "/transform");
  const std::vector<double> xg = grid_from(s.body.at("x_grid"), "/x_grid");
  const std::vector<double> yg = grid_from(s.body.at("y_grid"), "/y_grid");
  const int trials = static_cast<int>(int_or(s.body, "trials", 1000));

  const Classification cl = classify(spec, xg, yg, trials, s.seed);
  rep.body["case"] = to_string(cl.kind);
  rep.body["a"] = cl.a;
  rep.body["b"] = cl.b;
  if (cl.kind == TransformCase::numeraire_case) rep.body["c"] = cl.c;
  if (!cl.witness.empty()) rep.body["witness"] = cl.witness;
  if (cl.counterexample) {
    rep.body["counterexample"] = ojson{
        {"alpha", to_json(cl.counterexample->first)},
        {"beta", to_json(cl.counterexample->second)},
        {"failed_condition", cl.failure.failed ? to_string(*cl.failure.failed) : ""}};
  }
  if (s.body.contains("expect")) {
    const std::string expect = s.body.at("expect").get<std::string>();
    assert_that(rep, "case", expect == to_string(cl.kind),
                "expected " + expect + ", got " + to_string(cl.kind));
  }
  return rep;
}

Lattice lattice_from(const ojson& body, const DiscreteMeasure& mu,
                     const DiscreteMeasure& nu, std::uint64_t seed) {
  const ojson& l = body.at("lattice");
  const double delta = l.at("delta").get<double>();
  const int margin = static_cast<int>(int_or(l, "margin", 8));
  const long long horizon = int_or(l, "horizon", 0);
  return Lattice::cover(mu, nu, delta, margin, horizon,
                        l.contains("seed") ? l.at("seed").get<std::uint64_t>() : seed);
}

Report run_sep_fit(const Scenario& s) {
  Report rep;
  const DiscreteMeasure mu = measure_from_json(s.body.at("mu"), "/mu");
  const DiscreteMeasure nu = measure_from_json(s.body.at("nu"), "/nu");
  const Lattice lattice = lattice_from(s.body, mu, nu, s.seed);
  const std::string kind = string_or(s.body, "barrier_kind", "right");

  FitResult fit;
  if (kind == "right")
    fit = fit_right_barrier(mu, nu, lattice);
  else if (kind == "inner")
    fit = fit_two_sided(mu, nu, lattice, TwoSidedKind::inner);
  else if (kind == "outer")
    fit = fit_two_sided(mu, nu, lattice, TwoSidedKind::outer);
  else
    throw SchemaError("barrier_kind must be right|inner|outer", "/barrier_kind");

  const EmbedResult embed = embedded_law(fit.barrier, mu, lattice);
  const InducedCouplingResult ic = induced_coupling(fit.barrier, mu, lattice);
  const DiscreteMeasure nu_s = lattice.snap(nu);
  const double w1 = wasserstein1(embed.law, nu_s);

  rep.body["barrier"] = to_json(fit.barrier);
  rep.body["sweeps"] = fit.sweeps;
  rep.body["w1_error"] = w1;
  rep.body["truncated_mass"] = embed.truncated_mass;
  rep.body["max_snap"] = fit.max_snap;
  if (kind == "outer") rep.body["dispersion_ok"] = fit.dispersion_ok;

  assert_that(rep, "embedding_w1", w1 <= 2.0 * lattice.delta(),
              format17(w1) + " vs 2*delta " + format17(2.0 * lattice.delta()));
  assert_that(rep, "truncation", embed.truncated_mass <= 1e-6,
              format17(embed.truncated_mass));

  const double mass_tol = number_or(s.body, "structure_mass_tol", 0.01);
  double structure_frac = 0.0;
  if (kind == "right") {
    structure_frac = mass_to_pass(ic.coupling, [](const SupportSet& ss) {
      return !check_left_monotone(ss).has_value();
    });
    assert_that(rep, "left_monotone_structure", structure_frac <= mass_tol,
                "dropped mass fraction " + format17(structure_frac));
  } else {
    const Direction dir =
        kind == "inner" ? Direction::increasing : Direction::decreasing;
    structure_frac = mass_to_pass(ic.coupling, [dir](const SupportSet& ss) {
      return check_monotone_graphs(ss, dir).ok;
    });
    assert_that(rep, "two_graph_structure", structure_frac <= mass_tol,
                "dropped mass fraction " + format17(structure_frac));
  }
  rep.body["structure_dropped_mass"] = structure_frac;

  add_measure_table(rep, "embedded", embed.law);
  add_coupling_table(rep, "coupling", ic.coupling);
  return rep;
}

Barrier barrier_from_family(const ojson& fam, const Lattice& lattice) {
  const std::string type = fam.at("type").get<std::string>();
  Barrier b;
  b.kind = BarrierKind::right;
  b.phase = Phase::d_minus;
  b.delta = lattice.delta();
  b.exclude_time_zero = false;
  b.grid.resize(lattice.size());
  b.psi.resize(lattice.size());
  for (int i = 0; i < lattice.size(); ++i) b.grid[i] = lattice.value(i);
  if (type == "affine") {
    // psi(y) = slope * y + intercept
    const double slope = fam.at("slope").get<double>();
    const double icept = fam.at("intercept").get<double>();
    for (int i = 0; i < lattice.size(); ++i)
      b.psi[i] = slope * b.grid[i] + icept;
  } else if (type == "flat_pocket") {
    // psi(y) - y has a flat local minimum at -level over [lo, hi]: walks
    // started exactly at `level` ride the boundary there.
    const double level = fam.at("level").get<double>();
    const double lo = fam.at("lo").get<double>();
    const double hi = fam.at("hi").get<double>();
    const double pad = number_or(fam, "pad", 1.0);
    for (int i = 0; i < lattice.size(); ++i) {
      const double y = b.grid[i];
      b.psi[i] = y - level + (y >= lo && y <= hi ? 0.0 : pad);
    }
  } else {
    throw SchemaError("unknown psi family '" + type + "'", "/psi_family/type");
  }
  return b;
}

Report run_sep_compare(const Scenario& s) {
  Report rep;
  const DiscreteMeasure mu = measure_from_json(s.body.at("mu"), "/mu");
  const int n_paths = static_cast<int>(int_or(s.body, "n_paths", 4000));
  const double eps_mult = number_or(s.body, "epsilon_mult", 4.0);

  std::vector<double> deltas;
  if (s.body.contains("deltas"))
    deltas = s.body.at("deltas").get<std::vector<double>>();
  else
    deltas.push_back(s.body.at("lattice").at("delta").get<double>());

  Table t;
  t.name = "refinement";
  t.columns = {"delta", "fraction", "stderr"};
  double prev = 1.0;
  bool non_increasing = true;
  double last_fraction = 0.0;
  for (double delta : deltas) {
    // A fixed window keeps refinement levels comparable; otherwise the
    // covering window scales with delta.
    const Lattice lattice =
        s.body.contains("window")
            ? Lattice(delta, s.body.at("window").at("lo").get<double>(),
                      s.body.at("window").at("hi").get<double>(),
                      int_or(s.body, "horizon", 0), s.seed)
            : Lattice::cover(mu, mu, delta,
                             static_cast<int>(int_or(s.body, "margin", 40)), 0,
                             s.seed);
    Barrier barrier;
    if (s.body.contains("barrier"))
      barrier = barrier_from_json(s.body.at("barrier"), "/barrier");
    else
      barrier = barrier_from_family(s.body.at("psi_family"), lattice);
    const OpenClosedResult oc =
        compare_open_closed(barrier, mu, lattice, n_paths, eps_mult * delta);
    t.rows.push_back({delta, oc.fraction, oc.standard_error});
    non_increasing = non_increasing && oc.fraction <= prev + 1e-12;
    prev = oc.fraction;
    last_fraction = oc.fraction;
  }
  rep.body["final_fraction"] = last_fraction;
  rep.tables.push_back(std::move(t));

  if (s.body.contains("expect_non_increasing") &&
      s.body.at("expect_non_increasing").get<bool>())
    assert_that(rep, "non_increasing", non_increasing, "");
  if (s.body.contains("expect_final_below"))
    assert_that(rep, "final_below",
                last_fraction <= s.body.at("expect_final_below").get<double>(),
                format17(last_fraction));
  if (s.body.contains("expect_all_above")) {
    const double floor_frac = s.body.at("expect_all_above").get<double>();
    bool all_above = true;
    for (const auto& row : rep.tables.back().rows)
      all_above = all_above && row[1] >= floor_frac;
    assert_that(rep, "all_above", all_above, format17(floor_frac));
  }
  return rep;
}

PathFunctional functional_from(const ojson& j, const std::string& ptr) {
  const std::string fam = j.at("family").get<std::string>();
  if (fam == "terminal")
    return PathFunctional::terminal(cost_from_json(j.at("cost"), ptr + "/cost"));
  if (fam == "abs_diff_neg") return PathFunctional::abs_diff_neg();
  if (fam == "abs_cubed") return PathFunctional::abs_cubed();
  throw SchemaError("unknown path functional '" + fam + "'", ptr + "/family");
}

Report run_stop_go(const Scenario& s) {
  Report rep;
  const StoppedPath f{s.body.at("f").at("start").get<double>(),
                      s.body.at("f").at("end").get<double>()};
  const StoppedPath g{s.body.at("g").at("start").get<double>(),
                      s.body.at("g").at("end").get<double>()};
  const PathFunctional gamma = functional_from(s.body.at("gamma"), "/gamma");
  std::optional<PathFunctional> gamma2;
  if (s.body.contains("gamma2"))
    gamma2 = functional_from(s.body.at("gamma2"), "/gamma2");

  const ojson& sj = s.body.at("sigma");
  SigmaSpec sigma;
  const std::string sk = sj.at("kind").get<std::string>();
  if (sk == "fixed_steps")
    sigma = SigmaSpec::fixed_steps(sj.at("value").get<long long>());
  else if (sk == "exit_radius")
    sigma = SigmaSpec::exit_radius(sj.at("value").get<double>());
  else
    throw SchemaError("sigma kind must be fixed_steps|exit_radius", "/sigma/kind");

  const ojson& lj = s.body.at("lattice");
  const double delta = lj.at("delta").get<double>();
  const double span = std::max({std::abs(f.start), std::abs(g.start),
                                std::abs(f.end), 1.0});
  const Lattice lattice(delta, -4 * span, 4 * span, 0, s.seed);
  const int n_samples = static_cast<int>(int_or(s.body, "n_samples", 10000));

  const StopGoReport sg = check_stop_go(f, g, gamma, gamma2, sigma, lattice, n_samples);
  rep.body["verdict"] = to_string(sg.verdict);
  rep.body["gap"] = sg.gap;
  rep.body["stderr"] = sg.standard_error;
  rep.body["mean_sigma_time"] = sg.mean_sigma_time;
  rep.body["samples"] = sg.samples;
  if (sg.exact_gap) {
    rep.body["exact_gap"] = *sg.exact_gap;
    assert_that(rep, "closed_form_within_3se",
                std::abs(sg.gap - *sg.exact_gap) <= 3.0 * sg.standard_error + 1e-12,
                "mc " + format17(sg.gap) + " exact " + format17(*sg.exact_gap));
  }
  if (sg.verdict == StopGoVerdict::SG2) {
    rep.body["gap2"] = sg.gap2;
    rep.body["stderr2"] = sg.standard_error2;
  }
  if (s.body.contains("expect"))
    assert_that(rep, "verdict_expected",
                s.body.at("expect").get<std::string>() == to_string(sg.verdict),
                to_string(sg.verdict));
  return rep;
}

// The paired pipeline: solve, transform the optimizer and the cost, compare
// against a direct solve of the transformed problem. The numeraire variant
// preserves martingales, so values and supports must match. The mirror
// variant does not preserve the martingale property; there the testable
// claims are the change-of-variables value identity, monotonicity of the
// transformed support for the transformed cost, and the orientation flip of
// the two-graph structure.
Report run_symmetry_suite(const Scenario& s) {
  Report rep;
  const DiscreteMeasure mu = measure_from_json(s.body.at("mu"), "/mu");
  const DiscreteMeasure nu = measure_from_json(s.body.at("nu"), "/nu");
  const std::string variant = string_or(s.body, "variant", "mirror");
  const CostFunction cost = s.body.contains("cost")
                                ? cost_from_json(s.body.at("cost"), "/cost")
                                : CostFunction::abs_diff_neg();

  const MotSolution sol = solve_mot(mu, nu, cost, Sense::min);
  if (sol.status != LpStatus::optimal)
    throw std::runtime_error("symmetry_suite: base problem not solvable");
  rep.body["value"] = sol.value;

  const TransformSpec spec =
      variant == "numeraire"
          ? TransformSpec::numeraire(1.0, 0.0, 1.0)
          : TransformSpec::mirror(true, false);
  const Coupling image = transform_measure(spec, thresholded(sol.coupling, 1e-11));
  const CostFunction cost_p = transform_cost(spec, cost);

  double image_value = 0.0;
  for (const auto& e : image.entries()) image_value += cost_p(e.x, e.y) * e.mass;
  rep.body["transformed_value"] = image_value;
  assert_that(rep, "value_invariance", std::abs(image_value - sol.value) <= 1e-9,
              format17(image_value - sol.value));

  const SupportSet xi = support(sol.coupling);
  const SupportSet xi_p = transform_support(spec, xi);
  const SupportSet xi_img = support(image);
  const bool support_image_matches = xi_p.points == xi_img.points;
  assert_that(rep, "support_image", support_image_matches, "");

  if (variant == "numeraire") {
    const MartingaleCheck mc = is_martingale(image, 1e-9);
    assert_that(rep, "image_martingale", mc.ok, format17(mc.worst_violation));
    const auto [mu_p, nu_p] = marginals(image);
    const MotSolution direct = solve_mot(mu_p, nu_p, cost_p, Sense::min);
    rep.body["direct_value"] = direct.value;
    assert_that(rep, "direct_status", direct.status == LpStatus::optimal,
                to_string(direct.status));
    assert_that(rep, "value_match",
                direct.status == LpStatus::optimal &&
                    std::abs(direct.value - image_value) <= 1e-9,
                format17(direct.value - image_value));
    if (direct.status == LpStatus::optimal) {
      const SupportSet direct_supp = support(direct.coupling);
      assert_that(rep, "support_bijection", direct_supp.points == xi_p.points,
                  std::to_string(direct_supp.size()) + " vs " +
                      std::to_string(xi_p.size()) + " points");
      add_coupling_table(rep, "direct", direct.coupling);
    }
  } else {
    const int trials = static_cast<int>(int_or(s.body, "trials", 60));
    const int max_support = static_cast<int>(int_or(s.body, "max_support", 3));
    const MonotoneReport mr =
        is_finitely_monotone(xi_p, cost_p, max_support, trials, s.seed);
    assert_that(rep, "image_monotone_for_transformed_cost", mr.monotone,
                "budget: " + std::to_string(mr.subsets) + " subsets");
    const TwoGraphResult before = check_monotone_graphs(xi, Direction::increasing);
    const TwoGraphResult after = check_monotone_graphs(xi_p, Direction::decreasing);
    rep.body["two_graph_increasing_before"] = before.ok;
    rep.body["two_graph_decreasing_after"] = after.ok;
  }
  add_coupling_table(rep, "optimizer", sol.coupling);
  add_coupling_table(rep, "transformed", image);
  return rep;
}

}  // namespace

Scenario parse_scenario(ojson j, const std::string& default_name,
                        const fs::path& base_dir) {
  if (!j.is_object()) throw SchemaError("scenario must be an object", "");
  if (!j.contains("kind")) throw SchemaError("missing field 'kind'", "/kind");
  Scenario s;
  s.kind = kind_from_string(j.at("kind").get<std::string>());
  s.name = string_or(j, "name", default_name);
  if (j.contains("seed"))
    s.seed = j.at("seed").get<std::uint64_t>();
  else if (kind_is_stochastic(s.kind))
    throw SchemaError("seed is mandatory for stochastic scenarios", "/seed");
  resolve_references(j, base_dir);
  s.body = std::move(j);

  // Kind-specific validation that should fail at load time.
  switch (s.kind) {
    case ScenarioKind::mot_solve:
    case ScenarioKind::symmetry_suite: {
      const DiscreteMeasure mu = measure_from_json(s.body.at("mu"), "/mu");
      const DiscreteMeasure nu = measure_from_json(s.body.at("nu"), "/nu");
      const bool expect_infeasible =
          s.body.contains("expect") &&
          s.body.at("expect").get<std::string>() == "infeasible";
      const ConvexOrderResult order = convex_order_leq(mu, nu);
      if (!order.ordered && !expect_infeasible) {
        std::ostringstream msg;
        msg << "marginals not in convex order (" << order.reason;
        if (order.witness) msg << " at x = " << *order.witness;
        msg << ")";
        throw SchemaError(msg.str(), "/nu");
      }
      if (!s.body.contains("cost") && s.kind == ScenarioKind::mot_solve)
        throw SchemaError("missing field 'cost'", "/cost");
      break;
    }
    case ScenarioKind::sep_fit: {
      const DiscreteMeasure mu = measure_from_json(s.body.at("mu"), "/mu");
      const DiscreteMeasure nu = measure_from_json(s.body.at("nu"), "/nu");
      const ConvexOrderResult order = convex_order_leq(mu, nu);
      if (!order.ordered)
        throw SchemaError("marginals not in convex order (" + order.reason + ")",
                          "/nu");
      if (!s.body.contains("lattice"))
        throw SchemaError("missing field 'lattice'", "/lattice");
      break;
    }
    case ScenarioKind::monotone_check:
      support_from_body(s.body);
      if (!s.body.contains("cost")) throw SchemaError("missing field 'cost'", "/cost");
      break;
    case ScenarioKind::transform_apply:
    case ScenarioKind::transform_classify:
      if (!s.body.contains("transform"))
        throw SchemaError("missing field 'transform'", "/transform");
      break;
    case ScenarioKind::sep_compare:
      if (!s.body.contains("barrier") && !s.body.contains("psi_family"))
        throw SchemaError("need 'barrier' or 'psi_family'", "/barrier");
      break;
    case ScenarioKind::stop_go: {
      const double fe = s.body.at("f").at("end").get<double>();
      const double ge = s.body.at("g").at("end").get<double>();
      if (std::abs(fe - ge) > 1e-12)
        throw SchemaError("stop-go paths must share the endpoint", "/g/end");
      break;
    }
  }
  return s;
}

Scenario load_problem(const fs::path& path) {
  ojson j = read_json_file(path);
  return parse_scenario(std::move(j), path.stem().string(), path.parent_path());
}

Report run_scenario(const Scenario& s) {
  Report rep;
  switch (s.kind) {
    case ScenarioKind::mot_solve: rep = run_mot_solve(s); break;
    case ScenarioKind::monotone_check: rep = run_monotone_check(s); break;
    case ScenarioKind::transform_apply: rep = run_transform_apply(s); break;
    case ScenarioKind::transform_classify: rep = run_transform_classify(s); break;
    case ScenarioKind::sep_fit: rep = run_sep_fit(s); break;
    case ScenarioKind::sep_compare: rep = run_sep_compare(s); break;
    case ScenarioKind::stop_go: rep = run_stop_go(s); break;
    case ScenarioKind::symmetry_suite: rep = run_symmetry_suite(s); break;
  }
  rep.scenario = s.name;
  ojson meta = ojson::object();
  meta["kind"] = to_string(s.kind);
  meta["seed"] = s.seed;
  rep.body["meta"] = std::move(meta);
  return rep;
}

std::vector<fs::path> emit_report(const Report& report, const fs::path& out_dir,
                                  ReportFormat format) {
  std::vector<fs::path> written;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (format == ReportFormat::json) {
    const fs::path p = out_dir / (report.scenario + ".json");
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << dump17(report.to_json());
    written.push_back(p);
  } else {
    for (const Table& t : report.tables) {
      const fs::path p = out_dir / (report.scenario + "_" + t.name + ".csv");
      std::ofstream out(p);
      if (!out) throw std::runtime_error("cannot write " + p.string());
      for (std::size_t c = 0; c < t.columns.size(); ++c)
        out << (c ? "," : "") << t.columns[c];
      out << "\n";
      for (const auto& row : t.rows) {
        for (std::size_t c = 0; c < row.size(); ++c)
          out << (c ? "," : "") << format17(row[c]);
        out << "\n";
      }
      written.push_back(p);
    }
  }
  return written;
}

}  // namespace motforge
