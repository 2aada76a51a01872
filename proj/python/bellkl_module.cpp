#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "bellkl/cli.hpp"
#include "bellkl/error.hpp"
#include "bellkl/experiment.hpp"
#include "bellkl/optimizer.hpp"

namespace py = pybind11;
using namespace bellkl;

namespace {

std::vector<double> to_vector(const SchmidtState &s) { return {s.coefficients().begin(), s.coefficients().end()}; }

py::dict strength_dict(const StrengthResult &r) {
    py::dict out;
    out["divergence_bits"] = r.divergence_bits;
    out["certificate_gap"] = r.certificate_gap;
    out["iterations"] = r.iterations;
    out["local_probs"] = r.local_probs;
    return out;
}

py::dict report_dict(const OptimizationReport &r) {
    py::dict out;
    out["d"] = r.dim;
    out["mode"] = to_string(r.mode);
    out["schmidt"] = to_vector(r.best_state);
    out["divergence_bits"] = r.divergence_bits;
    out["entanglement_bits"] = r.entanglement_bits;
    out["parameter"] = r.parameter;
    out["certificate_gap"] = r.certificate_gap;
    out["consistency_residual"] = r.consistency_residual;
    out["converged"] = r.converged;
    return out;
}

Behavior cglmp_behavior(const std::vector<double> &schmidt) {
    const auto state = SchmidtState::from_coefficients(schmidt);
    const int d = state.dim();
    return quantum_behavior(state, cglmp_measurements(d, Party::alice), cglmp_measurements(d, Party::bob),
                            SettingsDistribution::uniform(2));
}

}  // namespace

PYBIND11_MODULE(bellkl, m) {
    m.doc() = "Statistical strength of Bell tests";

    static py::exception<Error> error(m, "Error", PyExc_ValueError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) {
                std::rethrow_exception(p);
            }
        } catch (const Error &e) {
            py::set_error(error, (std::string(to_string(e.code())) + ": " + e.what()).c_str());
        }
    });

    py::class_<Behavior>(m, "Behavior")
        .def(py::init([](int m_settings, int n, std::vector<double> probs, std::vector<double> settings) {
                 auto pm = settings.empty() ? SettingsDistribution::uniform(m_settings)
                                            : SettingsDistribution::from_probs(m_settings, std::move(settings));
                 return Behavior::from_probs(m_settings, n, std::move(probs), std::move(pm));
             }),
             py::arg("num_settings"), py::arg("num_outcomes"), py::arg("probs"),
             py::arg("settings") = std::vector<double>{})
        .def_property_readonly("num_settings", &Behavior::num_settings)
        .def_property_readonly("num_outcomes", &Behavior::num_outcomes)
        .def_property_readonly("probs",
                               [](const Behavior &b) { return std::vector<double>(b.probs().begin(), b.probs().end()); })
        .def("at", &Behavior::at, py::arg("x"), py::arg("y"), py::arg("a"), py::arg("b"))
        .def("signaling", [](const Behavior &b) { return no_signaling_violation(b); });

    m.def("maximally_entangled", [](int d) { return to_vector(maximally_entangled(d)); }, py::arg("d"));
    m.def("three_level_state", [](double gamma) { return to_vector(three_level_state(gamma)); }, py::arg("gamma"));
    m.def(
        "entropy_bits",
        [](const std::vector<double> &schmidt) {
            return entropy_of_entanglement(SchmidtState::from_coefficients(schmidt));
        },
        py::arg("schmidt"));
    m.def("cglmp_behavior", &cglmp_behavior, py::arg("schmidt"),
          "Behavior of a Schmidt state under the CGLMP measurements with uniform settings.");
    m.def(
        "kl_divergence", [](const Behavior &q, const Behavior &p) { return kl_divergence(q, p); }, py::arg("q"),
        py::arg("p"));
    m.def(
        "min_kl_local",
        [](const Behavior &q, double tol) { return strength_dict(min_kl_local(q, StrengthOptions{.tol = tol})); },
        py::arg("q"), py::arg("tol") = 1e-9);
    m.def(
        "cglmp_strength",
        [](const std::vector<double> &schmidt, double tol) {
            return strength_dict(
                cglmp_strength(SchmidtState::from_coefficients(schmidt), StrengthOptions{.tol = tol}));
        },
        py::arg("schmidt"), py::arg("tol") = 1e-9);
    m.def(
        "cglmp_functional_value",
        [](const Behavior &q) { return functional_value(cglmp_functional(q.num_outcomes()), q); }, py::arg("q"));

    m.def(
        "optimize_exact",
        [](int d) {
            py::gil_scoped_release release;
            return optimize_state_exact(d, cglmp_measurements(d, Party::alice), cglmp_measurements(d, Party::bob),
                                        SettingsDistribution::uniform(2));
        },
        py::arg("d"));
    m.def(
        "conjectured_optimum",
        [](int d) {
            py::gil_scoped_release release;
            return conjectured_optimum(d);
        },
        py::arg("d"));
    py::class_<OptimizationReport>(m, "OptimizationReport")
        .def("as_dict", &report_dict)
        .def_property_readonly("divergence_bits", [](const OptimizationReport &r) { return r.divergence_bits; })
        .def_property_readonly("entanglement_bits", [](const OptimizationReport &r) { return r.entanglement_bits; })
        .def_property_readonly("schmidt", [](const OptimizationReport &r) { return to_vector(r.best_state); });

    m.def(
        "additivity",
        [](int d, int copies) {
            const auto r = [&] {
                py::gil_scoped_release release;
                return additivity_comparison(d, copies);
            }();
            py::dict out;
            out["single_bits"] = r.single_bits;
            out["product_bits"] = r.product_bits;
            out["product_form_bits"] = r.product_form_bits;
            out["verified_product_bits"] = r.verified_product_bits;
            out["compare_dim"] = r.compare_dim;
            out["compare_bits"] = r.compare_bits;
            out["product_wins"] = r.product_wins;
            return out;
        },
        py::arg("d"), py::arg("copies") = 2);

    m.def(
        "sample_counts",
        [](const Behavior &q, std::uint64_t trials, std::uint64_t seed, unsigned blocks) {
            return sample_trials(q, trials, seed, blocks).counts;
        },
        py::arg("q"), py::arg("trials"), py::arg("seed"), py::arg("blocks") = 1);
    m.def(
        "empirical_strength",
        [](const Behavior &q, std::uint64_t trials, std::uint64_t seed) {
            return strength_dict(empirical_strength(sample_trials(q, trials, seed)));
        },
        py::arg("q"), py::arg("trials"), py::arg("seed"));

    m.def(
        "run",
        [](const std::string &command, const py::kwargs &kwargs) {
            cli::RunConfig c;
            c.command = command;
            for (const auto &[key, value] : kwargs) {
                const auto k = py::cast<std::string>(key);
                if (k == "d") {
                    c.d = py::cast<int>(value);
                } else if (k == "d_max") {
                    c.d_max = py::cast<int>(value);
                } else if (k == "tol") {
                    c.tol = py::cast<double>(value);
                } else if (k == "mode") {
                    c.mode = py::cast<std::string>(value);
                } else if (k == "copies") {
                    c.copies = py::cast<int>(value);
                } else if (k == "seed") {
                    c.seed = py::cast<std::uint64_t>(value);
                } else if (k == "repeats") {
                    c.repeats = py::cast<int>(value);
                } else if (k == "trials") {
                    c.trials = py::cast<std::vector<std::uint64_t>>(value);
                } else if (k == "format") {
                    c.format = cli::parse_format(py::cast<std::string>(value));
                } else {
                    throw Error(ErrorCode::invalid_parameter, "unknown option " + k);
                }
            }
            cli::CommandResult result;
            {
                py::gil_scoped_release release;
                result = cli::run_command(c);
            }
            return py::make_tuple(cli::render(result.table, c.format), result.all_ok);
        },
        py::arg("command"), "Runs a CLI command and returns (rendered table, all rows ok).");
}
