#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "crnnn/compiler.hpp"
#include "crnnn/integrator.hpp"
#include "crnnn/mnist.hpp"
#include "crnnn/neural_net.hpp"
#include "crnnn/reaction_net.hpp"
#include "crnnn/rng.hpp"
#include "crnnn/verify.hpp"

namespace py = pybind11;
using namespace crnnn;

namespace {

ActivationSpec make_spec(const std::string& kind, double h, int q) {
    if (kind == "sigmoid") return ActivationSpec::sigmoid();
    if (kind == "relu") return ActivationSpec::relu();
    if (kind == "smoothed_relu") return ActivationSpec::smoothed_relu(h);
    if (kind == "implicit_root") return ActivationSpec::implicit_root(h, q);
    throw ParseError("unknown activation '" + kind + "'");
}

Eigen::VectorXd to_vec(const std::vector<double>& v) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) x[static_cast<Eigen::Index>(i)] = v[i];
    return x;
}

std::vector<double> from_vec(const Eigen::VectorXd& x) {
    return {x.data(), x.data() + x.size()};
}

}  // namespace

PYBIND11_MODULE(_crnnn, m) {
    m.doc() = "neural networks as mass-action chemical reaction networks";

    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<StructureError>(m, "StructureError", PyExc_ValueError);
    py::register_exception<AmbiguityError>(m, "AmbiguityError", PyExc_ValueError);
    py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

    m.def(
        "activate",
        [](const std::string& kind, double y, double h, int q) {
            return activate(make_spec(kind, h, q), y);
        },
        py::arg("kind"), py::arg("y"), py::arg("h") = 1.0, py::arg("q") = 2);
    m.def(
        "activate_derivative",
        [](const std::string& kind, double y, double h, int q) {
            return activate_derivative(make_spec(kind, h, q), y);
        },
        py::arg("kind"), py::arg("y"), py::arg("h") = 1.0, py::arg("q") = 2);

    m.def(
        "random_params_json",
        [](const std::vector<int>& layer_sizes, const std::string& kind, double h, int q,
           std::uint64_t seed) {
            Rng rng(seed);
            return params_to_json_string(
                random_network(Architecture(layer_sizes), make_spec(kind, h, q), rng));
        },
        py::arg("layer_sizes"), py::arg("kind") = "smoothed_relu", py::arg("h") = 1.0,
        py::arg("q") = 2, py::arg("seed") = 0);

    m.def(
        "forward_output",
        [](const std::string& params_json, const std::vector<double>& d) {
            return from_vec(forward(params_from_json(params_json), to_vec(d)).output());
        },
        py::arg("params_json"), py::arg("d"));

    m.def(
        "gradients",
        [](const std::string& params_json, const std::vector<double>& d,
           const std::vector<double>& target) {
            const HardwiredNetwork net = params_from_json(params_json);
            const Gradients g = backprop(net, to_vec(d), to_vec(target));
            py::dict out;
            py::list gw, gb;
            for (const auto& w : g.grad_weights) {
                py::list rows;
                for (Eigen::Index i = 0; i < w.rows(); ++i) {
                    py::list row;
                    for (Eigen::Index j = 0; j < w.cols(); ++j) row.append(w(i, j));
                    rows.append(row);
                }
                gw.append(rows);
            }
            for (const auto& b : g.grad_biases) gb.append(from_vec(b));
            out["weights"] = gw;
            out["biases"] = gb;
            return out;
        },
        py::arg("params_json"), py::arg("d"), py::arg("target"));

    m.def(
        "compile_to_text",
        [](const std::string& params_json) {
            return to_text(compile_network(params_from_json(params_json)).system);
        },
        py::arg("params_json"));
    m.def(
        "compile_to_json",
        [](const std::string& params_json) {
            return to_json_string(compile_network(params_from_json(params_json)).system);
        },
        py::arg("params_json"));
    m.def(
        "validate_compilation",
        [](const std::string& params_json, int trials, std::uint64_t seed) {
            const HardwiredNetwork net = params_from_json(params_json);
            return validate_compilation(compile_network(net), net, trials, seed);
        },
        py::arg("params_json"), py::arg("trials") = 10, py::arg("seed") = 0);

    m.def(
        "simulate",
        [](const std::string& network_text, const std::vector<double>& inputs,
           const std::vector<double>& x0, double t_end, double rel_tol, double abs_tol,
           bool detect_steady_state) {
            MassActionSystem sys = system_from_text(network_text);
            if (!inputs.empty()) {
                std::map<SpeciesId, double> overrides;
                for (std::size_t j = 0; j < inputs.size(); ++j)
                    overrides[node_species_name(0, static_cast<int>(j))] = inputs[j];
                sys = sys.with_enzymes(overrides);
            }
            const int n = static_cast<int>(sys.dynamic_order().size());
            Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
            if (!x0.empty()) {
                if (static_cast<int>(x0.size()) != n)
                    throw DimensionError("x0 has wrong dimension");
                x = to_vec(x0);
            }
            IntegratorConfig cfg;
            cfg.t_end = t_end;
            cfg.rel_tol = rel_tol;
            cfg.abs_tol = abs_tol;
            cfg.detect_steady_state = detect_steady_state;
            cfg.enforce_nonnegative = true;
            const Trajectory traj = integrate(
                [&](const Eigen::VectorXd& v) { return sys.rhs_unchecked(v); }, x, cfg);
            py::dict out;
            out["species"] = sys.dynamic_order();
            out["times"] = traj.times;
            py::list states;
            for (const auto& s : traj.states) states.append(from_vec(s));
            out["states"] = states;
            out["steady_state"] = traj.steady_state.has_value();
            out["final_state"] = from_vec(traj.final_state());
            return out;
        },
        py::arg("network_text"), py::arg("inputs") = std::vector<double>{},
        py::arg("x0") = std::vector<double>{}, py::arg("t_end") = 5.0,
        py::arg("rel_tol") = 1e-9, py::arg("abs_tol") = 1e-12,
        py::arg("detect_steady_state") = true);

    m.def(
        "verify_equivalence_json",
        [](const std::string& params_json, const std::vector<double>& d,
           const std::vector<double>& x0, double t_final, double tol) {
            return to_json_string(verify_implementation(params_from_json(params_json),
                                                        to_vec(d), to_vec(x0), t_final, tol));
        },
        py::arg("params_json"), py::arg("d"), py::arg("x0"), py::arg("t_final") = 50.0,
        py::arg("tol") = 1e-6);

    m.def(
        "verify_from_infinity_json",
        [](const std::string& params_json, const std::vector<double>& d,
           const std::vector<double>& scales, double box_bound, double t_end,
           std::uint64_t seed) {
            return to_json_string(verify_convergence_from_infinity(
                params_from_json(params_json), to_vec(d), scales, box_bound, t_end, seed));
        },
        py::arg("params_json"), py::arg("d"), py::arg("scales"), py::arg("box_bound"),
        py::arg("t_end") = 20.0, py::arg("seed") = 0);

    m.def(
        "verify_exponential_rate_json",
        [](const std::string& params_json, const std::vector<double>& d,
           const std::vector<double>& x0, double tail_fraction) {
            return to_json_string(verify_exponential_reliability(
                params_from_json(params_json), to_vec(d), to_vec(x0), tail_fraction));
        },
        py::arg("params_json"), py::arg("d"), py::arg("x0"), py::arg("tail_fraction") = 0.5);

    m.def("counterexample_json",
          [] { return to_json_string(demo_non_feedforward_counterexample()); });

    m.def(
        "train_idx",
        [](const std::string& images_path, const std::string& labels_path,
           const std::string& params_json, double learning_rate, int batch_size,
           int iterations, int sample_pool, std::uint64_t seed) {
            const MnistDataset data = load_idx(images_path, labels_path);
            TrainingConfig cfg;
            cfg.learning_rate = learning_rate;
            cfg.batch_size = batch_size;
            cfg.iterations = iterations;
            cfg.sample_pool = sample_pool;
            cfg.rng_seed = seed;
            const TrainingMetrics metrics = train(data, params_from_json(params_json), cfg);
            py::dict out;
            py::list cost, acc;
            for (const auto& rec : metrics.per_iteration) {
                cost.append(rec.cost);
                acc.append(rec.accuracy);
            }
            out["cost"] = cost;
            out["accuracy"] = acc;
            out["final_params_json"] = params_to_json_string(metrics.final_network);
            return out;
        },
        py::arg("images_path"), py::arg("labels_path"), py::arg("params_json"),
        py::arg("learning_rate") = 0.1, py::arg("batch_size") = 300,
        py::arg("iterations") = 1000, py::arg("sample_pool") = 60000, py::arg("seed") = 0);
}
