#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "mfsmp/experiment.hpp"
#include "mfsmp/forward.hpp"
#include "mfsmp/parallel.hpp"

namespace py = pybind11;
using namespace mfsmp;

namespace {

// Round-trips through text so nested objects come back as plain dicts and lists.
py::object to_python(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

ConfigOverrides make_overrides(std::optional<std::string> output_dir, std::optional<std::uint64_t> seed,
                               std::optional<int> particles, std::optional<int> steps) {
    ConfigOverrides ov;
    ov.output_dir = std::move(output_dir);
    ov.seed = seed;
    ov.particles = particles;
    ov.steps = steps;
    return ov;
}

py::dict report_dict(const ExperimentReport& r) {
    py::dict d;
    d["report"] = to_python(r.to_json());
    d["pass"] = r.pass();
    d["wall_clock_seconds"] = r.wall_clock_seconds;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.attr("__version__") = kLibraryVersion;
    m.attr("SCHEMA_VERSION") = kSchemaVersion;

    static py::exception<ConfigError> config_error(m, "ConfigError", PyExc_ValueError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const ConfigError& e) {
            // args are (message, code) so the Python layer can expose the code
            const py::tuple args = py::make_tuple(std::string(e.what()), std::string(to_string(e.code())));
            PyErr_SetObject(config_error.ptr(), args.ptr());
        } catch (const ModelError& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        } catch (const SimulationError& e) {
            PyErr_SetString(PyExc_ArithmeticError, e.what());
        }
    });

    m.def("builtin_models", &builtin_models);
    m.def("worker_count", &worker_count);
    m.def("set_worker_count", &set_worker_count, py::arg("workers"));

    m.def(
        "validate_text",
        [](const std::string& text, std::optional<std::uint64_t> seed, std::optional<int> particles,
           std::optional<int> steps) {
            return to_python(parse_config_text(text, make_overrides(std::nullopt, seed, particles, steps)).echo());
        },
        py::arg("text"), py::arg("seed") = py::none(), py::arg("particles") = py::none(), py::arg("steps") = py::none());

    m.def(
        "run_text",
        [](const std::string& text, std::optional<std::string> output_dir, std::optional<std::uint64_t> seed,
           std::optional<int> particles, std::optional<int> steps) {
            const ExperimentConfig cfg = parse_config_text(text, make_overrides(output_dir, seed, particles, steps));
            ExperimentReport r;
            {
                py::gil_scoped_release release;
                r = run_experiment(cfg);
            }
            py::dict d = report_dict(r);
            if (output_dir) {
                py::list files;
                for (const auto& e : write_report(r, *output_dir)) {
                    py::dict f;
                    f["name"] = e.name;
                    f["sha256"] = e.sha256;
                    f["bytes"] = e.bytes;
                    files.append(f);
                }
                d["manifest"] = files;
            }
            return d;
        },
        py::arg("text"), py::arg("output_dir") = py::none(), py::arg("seed") = py::none(),
        py::arg("particles") = py::none(), py::arg("steps") = py::none());

    m.def(
        "simulate",
        [](const std::string& model_name, const std::map<std::string, double>& params, double control, int steps,
           int particles, std::uint64_t seed) {
            const ModelSpec model = build_model(model_name, params);
            const TimeGrid grid(model.s, model.T, steps);
            ParticleEnsemble e;
            CostEstimate c;
            {
                py::gil_scoped_release release;
                e = simulate_particles(model, ControlProcess::constant(control), grid, particles, RngStreams(seed));
                c = evaluate_cost(model, e);
            }
            py::array_t<double> x({steps + 1, particles});
            std::copy(e.x.begin(), e.x.end(), x.mutable_data());
            py::dict d;
            std::vector<double> nodes(steps + 1);
            for (int i = 0; i <= steps; ++i) nodes[i] = e.grid.node(i);
            d["t"] = py::array_t<double>(nodes.size(), nodes.data());
            d["x"] = x;
            d["mean"] = py::array_t<double>(e.mean.size(), e.mean.data());
            d["cost"] = c.value;
            d["cost_std_error"] = c.std_error;
            return d;
        },
        py::arg("model"), py::arg("params") = std::map<std::string, double>{}, py::arg("control") = 0.0,
        py::arg("steps") = 100, py::arg("particles") = 1000, py::arg("seed") = 42);

    m.def("sha256_hex", [](const py::bytes& b) { return sha256_hex(std::string(b)); });
}
