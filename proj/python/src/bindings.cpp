#include "peakon/diagnostics.hpp"
#include "peakon/dynamics.hpp"
#include "peakon/experiments.hpp"
#include "peakon/functionals.hpp"
#include "peakon/states.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace peakon;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const Array& a)
{
    if (a.ndim() != 1) throw py::value_error("expected a 1-d array");
    return {a.data(), a.data() + a.size()};
}

Array to_array(const std::vector<double>& v) { return Array(static_cast<py::ssize_t>(v.size()), v.data()); }

py::dict series_dict(const TimeSeries& s)
{
    py::dict d;
    for (std::size_t c = 0; c < s.columns.size(); ++c) d[py::str(s.columns[c])] = to_array(s.column(s.columns[c]));
    return d;
}

py::dict result_dict(const RunResult& r)
{
    py::list checks;
    for (const auto& c : r.checks)
        checks.append(py::dict(py::arg("name") = c.name, py::arg("value") = c.value, py::arg("relation") = c.relation,
                               py::arg("threshold") = c.threshold, py::arg("pass") = c.pass));
    py::dict series;
    for (const auto& [k, s] : r.series) series[py::str(k)] = series_dict(s);
    return py::dict(py::arg("command") = r.command, py::arg("name") = r.name, py::arg("exit_code") = r.exit_code(),
                    py::arg("checks") = checks, py::arg("summary") = r.summary, py::arg("series") = series,
                    py::arg("aborted") = r.stats.aborted, py::arg("abort_reason") = r.stats.abort_reason);
}

}  // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Peakon dynamics for the b-family: multipeakon and pseudospectral solvers, functionals, diagnostics.";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<SolverAbort>(m, "SolverAbort", PyExc_RuntimeError);

    py::class_<PeakonState>(m, "PeakonState")
        .def(py::init([](const Array& q, const Array& p) { return make_state(to_vector(q), to_vector(p)); }), py::arg("q"),
             py::arg("p"))
        .def_property_readonly("q", [](const PeakonState& s) { return to_array(s.q); })
        .def_property_readonly("p", [](const PeakonState& s) { return to_array(s.p); })
        .def("__len__", &PeakonState::size)
        .def("field", [](const PeakonState& s, const Array& x) { return to_array(peakon_field(s, to_vector(x))); },
             py::arg("x"), "u at the points x");

    m.def("single_peakon", &single_peakon, py::arg("c"), py::arg("x0") = 0.0);

    m.def("rho", &rho, py::arg("x"));
    m.def("psi", &psi, py::arg("x"));
    m.def("psi_prime", &psi_prime, py::arg("x"));

    m.def("mass", py::overload_cast<const PeakonState&>(&mass_M));
    m.def("energy_ch", py::overload_cast<const PeakonState&>(&energy_CH));
    m.def("energy_dp", py::overload_cast<const PeakonState&>(&energy_DP));
    m.def("cubic_dp", py::overload_cast<const PeakonState&>(&cubic_DP));
    m.def("grid_energy_dp", [](const Array& u, double L) {
        const auto v = to_vector(u);
        return energy_DP(GridFn(make_grid(L, v.size()), v));
    }, py::arg("u"), py::arg("L"));

    m.def(
        "evolve_particles",
        [](const PeakonState& s0, double b, double T, double dt, double output_every) {
            ParticleTrajectory traj;
            {
                py::gil_scoped_release release;
                traj = evolve_particles(s0, {b, 0.0, 0.5}, T, dt, output_every);
            }
            return py::dict(py::arg("times") = to_array(traj.times), py::arg("states") = traj.states,
                            py::arg("aborted") = traj.stats.aborted, py::arg("abort_reason") = traj.stats.abort_reason);
        },
        py::arg("state"), py::arg("b") = 3.0, py::arg("T"), py::arg("dt") = 0.01, py::arg("output_every") = 1.0);

    m.def(
        "evolve_grid",
        [](const Array& u0, double L, double b, double T, double dt, double output_every) {
            const auto v = to_vector(u0);
            GridTrajectory traj;
            {
                py::gil_scoped_release release;
                traj = evolve_grid(GridFn(make_grid(L, v.size()), v), {b, 0.0, 0.5}, T, dt, output_every);
            }
            Array states({static_cast<py::ssize_t>(traj.size()), static_cast<py::ssize_t>(v.size())});
            auto w = states.mutable_unchecked<2>();
            for (std::size_t k = 0; k < traj.size(); ++k)
                for (std::size_t j = 0; j < v.size(); ++j) w(k, j) = traj.states[k][j];
            return py::dict(py::arg("times") = to_array(traj.times), py::arg("u") = states,
                            py::arg("aborted") = traj.stats.aborted, py::arg("abort_reason") = traj.stats.abort_reason);
        },
        py::arg("u0"), py::arg("L"), py::arg("b") = 3.0, py::arg("T"), py::arg("dt") = 0.01, py::arg("output_every") = 1.0);

    m.def("experiment_names", &experiment_names);
    m.def("verify_suites", &verify_suites);

    m.def(
        "run",
        [](const std::string& command, const std::string& name, const std::vector<std::string>& overrides,
           std::optional<std::uint64_t> seed, std::optional<std::filesystem::path> out) {
            const RunConfig cfg = resolve_config(command, name, "", overrides, seed);
            RunResult r;
            {
                py::gil_scoped_release release;
                if (command == "simulate")
                    r = run_simulate(cfg);
                else if (command == "verify")
                    r = run_verify(cfg);
                else if (command == "experiment")
                    r = run_experiment(cfg);
                else
                    throw ConfigError("run supports simulate, verify and experiment");
                if (out) write_run(*out, r, 0.0);
            }
            return result_dict(r);
        },
        py::arg("command"), py::arg("name") = "", py::arg("overrides") = std::vector<std::string>{},
        py::arg("seed") = py::none(), py::arg("out") = py::none(),
        "Runs a command in-process. Returns checks, summary and series; writes the run directory when out is given.");
}
