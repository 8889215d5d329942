#include "ir/cli.hpp"
#include "ir/cones.hpp"
#include "ir/diagnostics.hpp"
#include "ir/map_core.hpp"
#include "ir/response.hpp"
#include "ir/transfer.hpp"

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include <nlohmann/json.hpp>

namespace py = pybind11;
using namespace ir;

namespace {

py::object to_py(const nlohmann::json& j) {
    switch (j.type()) {
    case nlohmann::json::value_t::null: return py::none();
    case nlohmann::json::value_t::boolean: return py::bool_(j.get<bool>());
    case nlohmann::json::value_t::number_integer: return py::int_(j.get<std::int64_t>());
    case nlohmann::json::value_t::number_unsigned: return py::int_(j.get<std::uint64_t>());
    case nlohmann::json::value_t::number_float: return py::float_(j.get<double>());
    case nlohmann::json::value_t::string: return py::str(j.get<std::string>());
    case nlohmann::json::value_t::array: {
        py::list l;
        for (const auto& v : j) l.append(to_py(v));
        return std::move(l);
    }
    case nlohmann::json::value_t::object: {
        py::dict d;
        for (const auto& [k, v] : j.items()) d[py::str(k)] = to_py(v);
        return std::move(d);
    }
    default: return py::none();
    }
}

py::array_t<double> as_array(std::span<const double> v) {
    return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

py::array_t<double> nodes_of(const GradedMesh& m) {
    std::vector<double> n(static_cast<std::size_t>(m.cells()) + 1);
    for (int i = 0; i <= m.cells(); ++i) n[static_cast<std::size_t>(i)] = m.node(i);
    return as_array(n);
}

ParamPoint point(double alpha, double beta) { return ParamPoint(alpha, beta); }

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Intermittent maps with a critical point: transfer operators, invariant densities and linear response";

    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<cli::ConfigError>(m, "ConfigError", PyExc_ValueError);

    m.def("admissible", &ParamPoint::admissible, py::arg("alpha"), py::arg("beta"));

    m.def("map_eval", [](double a, double b, double x) { return map_eval(point(a, b), x); },
          py::arg("alpha"), py::arg("beta"), py::arg("x"));
    m.def("map_deriv", [](double a, double b, double x) { return map_deriv(point(a, b), x); },
          py::arg("alpha"), py::arg("beta"), py::arg("x"));
    m.def("inverse_branch", [](double a, double b, int i, double x) { return inverse_branch(point(a, b), i, x); },
          py::arg("alpha"), py::arg("beta"), py::arg("branch"), py::arg("x"));
    m.def("a0", [](double a, double b) { return a0(point(a, b)); }, py::arg("alpha"), py::arg("beta"));

    m.def(
        "preimage_ladder",
        [](double a, double b, int count) {
            const auto L = preimage_ladder(point(a, b), count);
            py::dict d;
            d["b"] = as_array(L.b);
            d["bhat"] = as_array(L.bhat);
            d["bhat_minus_half"] = as_array(L.bhat_offset);
            d["lower_env"] = as_array(L.lower_env);
            d["upper_env"] = as_array(L.upper_env);
            d["monotone"] = L.monotone;
            d["lower_violations"] = L.stated.lower_violations;
            d["upper_violations"] = L.stated.upper_violations;
            return d;
        },
        py::arg("alpha"), py::arg("beta"), py::arg("count"));

    m.def("mesh_nodes", [](int cells, double grading) { return nodes_of(*build_mesh(cells, grading)); },
          py::arg("cells"), py::arg("grading") = 3.0);

    m.def(
        "invariant_density",
        [](double a, double b, int cells, double grading, const std::string& method) {
            DensityOptions o;
            if (method == "power") o.method = DensityMethod::power;
            else if (method != "direct") throw py::value_error("method must be 'direct' or 'power'");
            const auto mesh = build_mesh(cells, grading);
            DensityResult r = [&] {
                py::gil_scoped_release release;
                return invariant_density(point(a, b), mesh, o);
            }();
            py::dict d;
            d["nodes"] = nodes_of(*mesh);
            d["density"] = as_array(r.density.values());
            d["report"] = to_py(to_json(r.report));
            return d;
        },
        py::arg("alpha"), py::arg("beta"), py::arg("cells") = 1 << 14, py::arg("grading") = 3.0,
        py::arg("method") = "direct");

    m.def(
        "apply_transfer",
        [](double a, double b, const std::function<double(double)>& phi, double x) {
            return apply_pointwise(point(a, b), phi, x);
        },
        py::arg("alpha"), py::arg("beta"), py::arg("phi"), py::arg("x"));

    m.def(
        "partial_L",
        [](double a, double b, int i, const std::function<double(double)>& phi,
           const std::function<double(double)>& dphi, double x) { return partial_L_pointwise(point(a, b), i, phi, dphi, x); },
        py::arg("alpha"), py::arg("beta"), py::arg("i"), py::arg("phi"), py::arg("dphi"), py::arg("x"));

    m.def(
        "response",
        [](double a, double b, const std::string& obs, int cells, double grading, int k_max, double tol) {
            ResponseOptions o;
            o.k_max = k_max;
            o.tol = tol;
            const auto phi = Observable::parse(obs);
            const auto mesh = build_mesh(cells, grading);
            ResponseEstimate e = [&] {
                py::gil_scoped_release release;
                return response_series(point(a, b), phi, mesh, o);
            }();
            return to_py(to_json(e));
        },
        py::arg("alpha"), py::arg("beta"), py::arg("observable") = "x", py::arg("cells") = 1 << 14,
        py::arg("grading") = 3.0, py::arg("k_max") = 100000, py::arg("tol") = 1e-12);

    m.def(
        "response_fd",
        [](double a, double b, const std::string& obs, double delta, int cells, double grading) {
            const auto phi = Observable::parse(obs);
            const auto mesh = build_mesh(cells, grading);
            FdResult r = [&] {
                py::gil_scoped_release release;
                return response_fd(point(a, b), phi, delta, mesh);
            }();
            return py::make_tuple(r.d1, r.d2);
        },
        py::arg("alpha"), py::arg("beta"), py::arg("observable") = "x", py::arg("delta") = 1e-3,
        py::arg("cells") = 1 << 14, py::arg("grading") = 3.0);

    m.def(
        "simulate",
        [](double a, double b, std::optional<double> x0, std::int64_t n_steps, std::uint64_t seed) {
            const auto r = simulate(point(a, b), x0, n_steps, seed);
            return as_array(r.points);
        },
        py::arg("alpha"), py::arg("beta"), py::arg("x0") = py::none(), py::arg("n_steps") = 10000,
        py::arg("seed") = 1);

    m.def(
        "return_time_tail",
        [](double a, double b, std::int64_t samples, int n_max, std::uint64_t seed) {
            TailResult r = [&] {
                py::gil_scoped_release release;
                return return_time_tail(point(a, b), samples, n_max, seed);
            }();
            py::dict d = to_py(to_json(r));
            std::vector<double> s(r.survival.size());
            for (std::size_t n = 0; n < s.size(); ++n) s[n] = r.survival_fraction(static_cast<int>(n));
            d["survival_fraction"] = as_array(s);
            return d;
        },
        py::arg("alpha"), py::arg("beta"), py::arg("samples") = 1000000, py::arg("n_max") = 10000,
        py::arg("seed") = 1);

    m.def(
        "cone_invariance",
        [](double a, double b, double au, double bu, int cells, int trials, std::uint64_t seed) {
            const ParamPoint gu = point(au, bu);
            const auto U = assemble_ulam(point(a, b), build_mesh(cells, 3.0));
            return to_py(to_json(verify_cone_invariance(ConeParams(a0(gu), gu), U, trials, seed)));
        },
        py::arg("alpha"), py::arg("beta"), py::arg("alpha_u"), py::arg("beta_u"), py::arg("cells") = 4096,
        py::arg("trials") = 100, py::arg("seed") = 1);

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::vector<std::string> full{"ir"};
            full.insert(full.end(), args.begin(), args.end());
            std::vector<const char*> argv;
            for (const auto& s : full) argv.push_back(s.c_str());
            std::ostringstream out, err;
            const int status = cli::main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
            return py::make_tuple(status, out.str(), err.str());
        },
        py::arg("args"), "Runs the command-line tool in-process; returns (status, stdout, stderr).");
}
