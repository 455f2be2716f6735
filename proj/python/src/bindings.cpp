#include <limits>
#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nlmob/cli.hpp"
#include "nlmob/config.hpp"
#include "nlmob/errors.hpp"
#include "nlmob/study.hpp"

namespace py = pybind11;
using namespace nlmob;

namespace {

RhoStarRule make_rule(const std::string& name, const Mobility& mob)
{
    return rho_star_kind_from_string(name) == RhoStarKind::LookBack ? RhoStarRule::look_back()
                                                                    : RhoStarRule::const_argmax_theta(mob);
}

SolverOptions make_options(int K, const std::string& state_rule, double tol)
{
    SolverOptions o;
    o.K = K;
    o.state_rule = state_rule_from_string(state_rule);
    o.tol = tol;
    return o;
}

}  // namespace

PYBIND11_MODULE(_nlmob, m)
{
    m.doc() = "Particle discretisations of transport with nonlinear mobility";
    m.attr("__version__") = version_string();

    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<ConeViolation>(m, "ConeViolation", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<NonConvergence>(m, "NonConvergence", PyExc_RuntimeError);
    py::register_exception<StepFailure>(m, "StepFailure", PyExc_RuntimeError);

    py::class_<Mobility>(m, "Mobility")
        .def_static("linear", &Mobility::linear, py::arg("M") = 1.0)
        .def_static("logistic", &Mobility::logistic, py::arg("M") = 1.0)
        .def_static("table", &Mobility::table, py::arg("rho"), py::arg("m"))
        .def("__call__", &Mobility::operator(), py::arg("rho"))
        .def("theta", &Mobility::theta, py::arg("rho"))
        .def_property_readonly("max_density", &Mobility::max_density)
        .def("__repr__", [](const Mobility& mob) {
            return "<Mobility " + to_string(mob.kind()) + " M=" + format_double(mob.max_density()) + ">";
        });

    py::class_<Measure1D>(m, "Measure1D")
        .def_static("uniform", &Measure1D::uniform, py::arg("a"), py::arg("b"))
        .def_static("gaussian", &Measure1D::gaussian, py::arg("mean"), py::arg("sigma"),
                    py::arg("lo") = -std::numeric_limits<double>::infinity(),
                    py::arg("hi") = std::numeric_limits<double>::infinity())
        .def_static("empirical", &Measure1D::empirical, py::arg("atoms"))
        .def_static("piecewise_constant", &Measure1D::piecewise_constant, py::arg("breaks"), py::arg("heights"))
        .def("quantile", &Measure1D::quantile, py::arg("z"))
        .def("cdf", &Measure1D::cdf, py::arg("x"))
        .def("moment", &Measure1D::moment, py::arg("p"), py::arg("center") = 0.0)
        .def("shifted", &Measure1D::shifted, py::arg("c"))
        .def_property_readonly("support", &Measure1D::support);

    m.def("wasserstein", [](const Measure1D& a, const Measure1D& b, double p) { return wasserstein_p(a, b, p); },
          py::arg("mu"), py::arg("nu"), py::arg("p") = 2.0);

    m.def(
        "sample",
        [](const Measure1D& mu, int N, const Mobility& mob) {
            return sample_from_quantile(mu, N, mob).positions();
        },
        py::arg("mu"), py::arg("N"), py::arg("mobility"),
        "Particle positions x_i = X(i/N), with finite endpoints taken from the support.");

    m.def(
        "geodesic",
        [](const std::vector<double>& x0, const std::vector<double>& x1, const Mobility& mob, double p,
           const std::string& rho_star, int K, const std::string& state_rule, double tol) {
            const double M = mob.max_density();
            const auto g = solve_geodesic_best(ParticleConfig(x0, M), ParticleConfig(x1, M), ActionDensity(p, mob),
                                               make_rule(rho_star, mob), make_options(K, state_rule, tol));
            std::vector<std::vector<double>> path;
            for (const auto& s : g.path.states())
                path.push_back(s.positions());
            py::dict out;
            out["distance"] = g.distance;
            out["lower_bound"] = g.lower_bound;
            out["upper_bound"] = g.upper_bound;
            out["converged"] = g.solver_report.converged;
            out["action_profile"] = g.action_profile;
            out["path"] = path;
            return out;
        },
        py::arg("x0"), py::arg("x1"), py::arg("mobility"), py::arg("p") = 2.0,
        py::arg("rho_star") = "const_argmax_theta", py::arg("K") = 32, py::arg("state_rule") = "left",
        py::arg("tol") = 1e-9);

    m.def(
        "jko",
        [](const std::vector<double>& x0, const std::string& energy, double tau, int n_steps, const Mobility& mob,
           const std::string& rho_star) {
            EnergyFunctional F = energy == "linear"      ? EnergyFunctional::linear()
                                 : energy == "quadratic" ? EnergyFunctional::quadratic()
                                 : energy == "zero"      ? EnergyFunctional::zero()
                                                         : throw DomainError("energy must be linear, quadratic or zero");
            const auto traj = jko_run(ParticleConfig(x0, mob.max_density()), F, tau, n_steps, ActionDensity(2.0, mob),
                                      make_rule(rho_star, mob));
            py::list steps;
            for (const auto& s : traj.steps) {
                py::dict d;
                d["x"] = s.config.positions();
                d["energy"] = s.energy;
                d["transport_cost"] = s.transport_cost;
                d["J"] = s.J;
                steps.append(d);
            }
            py::dict out;
            out["steps"] = steps;
            out["failure"] = traj.failure;
            out["descent"] = descent_holds(traj);
            return out;
        },
        py::arg("x0"), py::arg("energy"), py::arg("tau"), py::arg("n_steps"), py::arg("mobility"),
        py::arg("rho_star") = "const_argmax_theta");

    m.def(
        "ftl_l1_error",
        [](double rho_L, double rho_R, int N, double t, double M) {
            return ftl_vs_entropy(rho_L, rho_R, VelocityLaw::traffic(M), N, t);
        },
        py::arg("rho_L"), py::arg("rho_R"), py::arg("N"), py::arg("t"), py::arg("M") = 1.0,
        "L1 distance between FTL and the exact traffic Riemann solution on the comparison window.");

    m.def(
        "run",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            const int code = run_subcommand(args, out, err);
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs a command line subcommand in process; returns (exit code, stdout, stderr).");
}
