#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "motforge/monotone.hpp"
#include "motforge/mot.hpp"
#include "motforge/sep.hpp"
#include "motforge/transform.hpp"

namespace py = pybind11;
using namespace motforge;

namespace {

std::vector<std::pair<double, double>> measure_atoms(const DiscreteMeasure& m) {
  std::vector<std::pair<double, double>> out;
  for (const Atom& a : m.atoms()) out.emplace_back(a.position, a.mass);
  return out;
}

std::vector<std::tuple<double, double, double>> coupling_entries(const Coupling& q) {
  std::vector<std::tuple<double, double, double>> out;
  for (const CouplingEntry& e : q.entries()) out.emplace_back(e.x, e.y, e.mass);
  return out;
}

Coupling coupling_from(const std::vector<std::tuple<double, double, double>>& es) {
  std::vector<CouplingEntry> v;
  v.reserve(es.size());
  for (const auto& [x, y, m] : es) v.push_back({x, y, m});
  return Coupling(std::move(v));
}

SupportSet support_from(const std::vector<std::pair<double, double>>& pts) {
  return SupportSet::of(pts);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Discrete martingale optimal transport, competitor calculus, "
            "monotone transformations and lattice Skorokhod embeddings";

  py::class_<DiscreteMeasure>(m, "DiscreteMeasure")
      .def(py::init([](const std::vector<double>& p, const std::vector<double>& w) {
             return make_measure(p, w);
           }),
           py::arg("points"), py::arg("weights"))
      .def_property_readonly("atoms", &measure_atoms)
      .def_property_readonly("total_mass", &DiscreteMeasure::total_mass)
      .def("__len__", &DiscreteMeasure::size);

  py::class_<Coupling>(m, "Coupling")
      .def(py::init(&coupling_from), py::arg("entries"))
      .def_property_readonly("entries", &coupling_entries)
      .def_property_readonly("total_mass", &Coupling::total_mass)
      .def("__len__", &Coupling::size);

  py::class_<CostFunction>(m, "CostFunction")
      .def_static("abs_diff_neg", &CostFunction::abs_diff_neg)
      .def_static("abs_diff", &CostFunction::abs_diff)
      .def_static("sm_neg", &CostFunction::sm_neg)
      .def_static("sm_pos", &CostFunction::sm_pos)
      .def_static("cubic", &CostFunction::cubic)
      .def_static("numeraire_abs", &CostFunction::numeraire_abs)
      .def_static("mirrored_abs", &CostFunction::mirrored_abs)
      .def_static("tabulated", &CostFunction::tabulated, py::arg("x_grid"),
                  py::arg("y_grid"), py::arg("values"))
      .def_static(
          "from_callable",
          [](const std::string& name, std::function<double(double, double)> f) {
            return CostFunction::composite(name, std::move(f));
          },
          py::arg("name"), py::arg("f"))
      .def("__call__", &CostFunction::operator())
      .def_property_readonly("name", &CostFunction::name);

  m.def("barycenter", &barycenter);
  m.def("potential", &potential, py::arg("measure"), py::arg("x"));
  m.def(
      "convex_order_leq",
      [](const DiscreteMeasure& mu, const DiscreteMeasure& nu, double tol) {
        const ConvexOrderResult r = convex_order_leq(mu, nu, tol);
        return py::make_tuple(r.ordered, r.witness, r.reason);
      },
      py::arg("mu"), py::arg("nu"), py::arg("tol") = 1e-9);
  m.def("wasserstein1", &wasserstein1);
  m.def("marginals", [](const Coupling& q) { return marginals(q); });
  m.def(
      "is_martingale",
      [](const Coupling& q, double tol) {
        const MartingaleCheck r = is_martingale(q, tol);
        return py::make_tuple(r.ok, r.witness_x);
      },
      py::arg("coupling"), py::arg("tol") = 1e-9);

  m.def(
      "solve_mot",
      [](const DiscreteMeasure& mu, const DiscreteMeasure& nu,
         const CostFunction& cost, const std::string& sense) {
        const MotSolution s =
            solve_mot(mu, nu, cost, sense == "max" ? Sense::max : Sense::min);
        py::dict out;
        out["status"] = to_string(s.status);
        out["value"] = s.value;
        out["coupling"] = s.coupling;
        return out;
      },
      py::arg("mu"), py::arg("nu"), py::arg("cost"), py::arg("sense") = "min");

  m.def(
      "check_left_monotone",
      [](const std::vector<std::pair<double, double>>& pts) -> py::object {
        const auto v = check_left_monotone(support_from(pts));
        if (!v) return py::none();
        return py::make_tuple(v->p1, v->p2, v->p3);
      },
      py::arg("support"));
  m.def(
      "check_monotone_graphs",
      [](const std::vector<std::pair<double, double>>& pts,
         const std::string& direction) {
        const TwoGraphResult r = check_monotone_graphs(
            support_from(pts),
            direction == "decreasing" ? Direction::decreasing : Direction::increasing);
        return py::make_tuple(r.ok, r.offending_column);
      },
      py::arg("support"), py::arg("direction") = "increasing");

  m.def("min_over_competitors", [](const Coupling& alpha, const CostFunction& c) {
    const CompetitorMinimum r = min_over_competitors(alpha, c);
    return py::make_tuple(r.value, r.beta);
  });
  m.def(
      "is_finitely_monotone",
      [](const std::vector<std::pair<double, double>>& pts, const CostFunction& c,
         int max_support, int trials, std::uint64_t seed) {
        const MonotoneReport r =
            is_finitely_monotone(support_from(pts), c, max_support, trials, seed);
        py::dict out;
        out["monotone"] = r.monotone;
        out["subsets"] = r.subsets;
        out["lp_solves"] = r.lp_solves;
        if (r.certificate) {
          out["gap"] = r.certificate->gap;
          out["alpha"] = r.certificate->alpha;
          out["beta"] = r.certificate->beta;
        }
        return out;
      },
      py::arg("support"), py::arg("cost"), py::arg("max_support") = 4,
      py::arg("trials") = 200, py::arg("seed") = 1);
  m.def(
      "is_competitorblind",
      [](const CostFunction& f, const std::vector<double>& xs,
         const std::vector<double>& ys, double tol) -> py::object {
        const auto w = is_competitorblind(f, xs, ys, tol);
        if (!w) return py::none();
        return py::make_tuple(w->x1, w->x2, w->y1, w->y_mid, w->y2);
      },
      py::arg("f"), py::arg("x_grid"), py::arg("y_grid"), py::arg("tol") = 1e-9);
  m.def("decompose_competitorblind",
        [](const CostFunction& f, const std::vector<double>& xs,
           const std::vector<double>& ys) {
          const BlindDecomposition d = decompose_competitorblind(f, xs, ys);
          py::dict out;
          out["phi"] = d.phi;
          out["psi"] = d.psi;
          out["k"] = d.k;
          out["residual"] = d.residual;
          return out;
        });
  m.def(
      "verify_c123",
      [](const Coupling& a, const Coupling& b, double tol) {
        const C123Result r = verify_C123(a, b, tol);
        return py::make_tuple(r.ok, r.failed ? to_string(*r.failed) : "");
      },
      py::arg("alpha"), py::arg("beta"), py::arg("tol") = 1e-9);

  py::class_<TransformSpec>(m, "TransformSpec")
      .def_static("affine",
                  [](double a, double b) { return TransformSpec::affine(a, b); })
      .def_static("numeraire",
                  [](double a, double b, double c) {
                    return TransformSpec::numeraire(a, b, c);
                  })
      .def_static("mirror", &TransformSpec::mirror, py::arg("flip_x"),
                  py::arg("flip_y") = false)
      .def("apply", &TransformSpec::apply)
      .def("invert", &TransformSpec::invert)
      .def("weight", &TransformSpec::weight)
      .def_property_readonly("label", &TransformSpec::label);

  m.def("transform_measure", &transform_measure);
  m.def("inverse_transform_measure", &inverse_transform_measure);
  m.def("transform_cost", &transform_cost);
  m.def(
      "transform_support",
      [](const TransformSpec& t, const std::vector<std::pair<double, double>>& pts) {
        return transform_support(t, support_from(pts)).points;
      });
  m.def(
      "numeraire_mass_check",
      [](const Coupling& pi, const TransformSpec& t) {
        const MassCheck r = numeraire_mass_check(pi, t);
        return py::make_tuple(r.total_mass, r.is_probability);
      });
  m.def(
      "classify",
      [](const TransformSpec& t, const std::vector<double>& xs,
         const std::vector<double>& ys, int trials, std::uint64_t seed) {
        const Classification cl = classify(t, xs, ys, trials, seed);
        py::dict out;
        out["case"] = to_string(cl.kind);
        out["a"] = cl.a;
        out["b"] = cl.b;
        out["c"] = cl.c;
        out["witness"] = cl.witness;
        return out;
      },
      py::arg("transform"), py::arg("x_grid"), py::arg("y_grid"),
      py::arg("trials") = 500, py::arg("seed") = 1);

  py::class_<Lattice>(m, "Lattice")
      .def(py::init<double, double, double, long long, std::uint64_t>(),
           py::arg("delta"), py::arg("y_lo"), py::arg("y_hi"),
           py::arg("horizon") = 0, py::arg("seed") = 1)
      .def_static("cover", &Lattice::cover, py::arg("mu"), py::arg("nu"),
                  py::arg("delta"), py::arg("margin") = 8, py::arg("horizon") = 0,
                  py::arg("seed") = 1)
      .def_property_readonly("delta", &Lattice::delta)
      .def_property_readonly("horizon", &Lattice::horizon)
      .def("__len__", &Lattice::size);

  py::class_<Barrier>(m, "Barrier")
      .def_property_readonly("kind", [](const Barrier& b) { return to_string(b.kind); })
      .def_readonly("grid", &Barrier::grid)
      .def_readonly("psi", &Barrier::psi)
      .def_readonly("psi2", &Barrier::psi2)
      .def_readwrite("exclude_time_zero", &Barrier::exclude_time_zero);

  m.def(
      "fit_right_barrier",
      [](const DiscreteMeasure& mu, const DiscreteMeasure& nu, const Lattice& lat) {
        const FitResult r = fit_right_barrier(mu, nu, lat);
        py::dict out;
        out["barrier"] = r.barrier;
        out["sweeps"] = r.sweeps;
        out["w1_residual"] = r.w1_residual;
        return out;
      });
  m.def(
      "fit_two_sided",
      [](const DiscreteMeasure& mu, const DiscreteMeasure& nu, const Lattice& lat,
         const std::string& kind) {
        const FitResult r = fit_two_sided(
            mu, nu, lat, kind == "outer" ? TwoSidedKind::outer : TwoSidedKind::inner);
        py::dict out;
        out["barrier"] = r.barrier;
        out["sweeps"] = r.sweeps;
        out["w1_residual"] = r.w1_residual;
        return out;
      },
      py::arg("mu"), py::arg("nu"), py::arg("lattice"), py::arg("kind") = "inner");
  m.def("embedded_law", [](const Barrier& b, const DiscreteMeasure& mu,
                           const Lattice& lat) {
    const EmbedResult r = embedded_law(b, mu, lat);
    return py::make_tuple(r.law, r.truncated_mass);
  });
  m.def("induced_coupling", [](const Barrier& b, const DiscreteMeasure& mu,
                               const Lattice& lat) {
    const InducedCouplingResult r = induced_coupling(b, mu, lat);
    return py::make_tuple(r.coupling, r.truncated_mass);
  });
  m.def(
      "compare_open_closed",
      [](const Barrier& b, const DiscreteMeasure& mu, const Lattice& lat,
         int n_paths, double epsilon) {
        const OpenClosedResult r = compare_open_closed(b, mu, lat, n_paths, epsilon);
        return py::make_tuple(r.fraction, r.standard_error);
      },
      py::arg("barrier"), py::arg("mu"), py::arg("lattice"), py::arg("n_paths"),
      py::arg("epsilon"));
  m.def(
      "check_stop_go",
      [](double f_start, double f_end, double g_start, double g_end,
         const std::string& gamma, const std::string& sigma_kind, double sigma_value,
         double delta, int n_samples, std::uint64_t seed) {
        const PathFunctional gam =
            gamma == "abs_diff_neg" ? PathFunctional::abs_diff_neg()
            : gamma == "abs_cubed"
                ? PathFunctional::abs_cubed()
                : PathFunctional::terminal(CostFunction::sm_neg());
        std::optional<PathFunctional> gam2;
        if (gamma == "abs_diff_neg") gam2 = PathFunctional::abs_cubed();
        const SigmaSpec sig = sigma_kind == "exit_radius"
                                  ? SigmaSpec::exit_radius(sigma_value)
                                  : SigmaSpec::fixed_steps(
                                        static_cast<long long>(sigma_value));
        const double span = std::max({std::abs(f_start), std::abs(g_start),
                                      std::abs(f_end), 1.0});
        const Lattice lat(delta, -4 * span, 4 * span, 0, seed);
        const StopGoReport r = check_stop_go({f_start, f_end}, {g_start, g_end},
                                             gam, gam2, sig, lat, n_samples);
        py::dict out;
        out["verdict"] = to_string(r.verdict);
        out["gap"] = r.gap;
        out["stderr"] = r.standard_error;
        if (r.exact_gap) out["exact_gap"] = *r.exact_gap;
        return out;
      },
      py::arg("f_start"), py::arg("f_end"), py::arg("g_start"), py::arg("g_end"),
      py::arg("gamma") = "terminal_sm_neg", py::arg("sigma_kind") = "fixed_steps",
      py::arg("sigma_value") = 25, py::arg("delta") = 0.02,
      py::arg("n_samples") = 10000, py::arg("seed") = 1);
  m.def("transform_barrier", &transform_barrier);

  m.attr("__version__") = "0.1.0";
}
