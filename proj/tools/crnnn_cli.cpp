// crnnn: compile neural networks to mass-action reaction networks, simulate
// the resulting ODEs, train on MNIST, and verify the implementation and
// convergence properties. Subcommands: compile, simulate, train, verify.
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "crnnn/compiler.hpp"
#include "crnnn/integrator.hpp"
#include "crnnn/mnist.hpp"
#include "crnnn/neural_net.hpp"
#include "crnnn/reaction_net.hpp"
#include "crnnn/rng.hpp"
#include "crnnn/verify.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace crnnn;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerifyFail = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string read_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open '" + path + "'");
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

// write-temp-then-rename so no partial outputs survive a failure
void atomic_write(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp);
        if (!f) throw Error("cannot write '" + tmp.string() + "'");
        f << content;
    }
    fs::rename(tmp, path);
}

std::vector<double> parse_vector(const std::string& text) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) v.push_back(std::stod(tok));
    }
    return v;
}

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) x[static_cast<Eigen::Index>(i)] = v[i];
    return x;
}

// Configuration resolution: flags > config file > defaults. The fully
// resolved config is echoed to a sidecar and hashed into every artifact.
struct RunConfig {
    json resolved = json::object();
    std::string hash_hex;

    void set(const std::string& key, const json& v) { resolved[key] = v; }
    void finalize() {
        std::ostringstream os;
        os << std::hex << fnv1a(resolved.dump());
        hash_hex = os.str();
    }
    void write_sidecar(const fs::path& primary_output) const {
        json j = resolved;
        j["config_hash"] = hash_hex;
        atomic_write(primary_output.string() + ".config.json", j.dump(2) + "\n");
    }
};

template <typename T>
T resolve(const CLI::Option* opt, const T& flag_value, const json& file_cfg,
          const std::string& key, const T& fallback) {
    if (opt && opt->count() > 0) return flag_value;
    if (file_cfg.contains(key)) return file_cfg.at(key).get<T>();
    return fallback;
}

ActivationSpec parse_activation(const std::string& kind, double h, int q) {
    if (kind == "sigmoid") return ActivationSpec::sigmoid();
    if (kind == "relu") return ActivationSpec::relu();
    if (kind == "smoothed_relu") return ActivationSpec::smoothed_relu(h);
    if (kind == "implicit_root") return ActivationSpec::implicit_root(h, q);
    throw ParseError("unknown activation '" + kind + "'");
}

HardwiredNetwork load_or_make_network(const std::string& params_path, const std::string& arch,
                                      const std::string& activation, double h, int q,
                                      std::uint64_t seed) {
    if (!params_path.empty()) return params_from_json(read_file(params_path));
    if (arch.empty())
        throw ParseError("either --params or --arch must be given");
    std::vector<int> sizes;
    for (double v : parse_vector(arch)) sizes.push_back(static_cast<int>(v));
    Rng rng(seed);
    return random_network(Architecture(sizes), parse_activation(activation, h, q), rng);
}

int run(int argc, char** argv) {
    CLI::App app{"neural networks as mass-action chemical reaction networks"};
    app.require_subcommand(1);
    app.fallthrough();  // allow global flags after the subcommand name

    std::string config_path, out_dir = ".";
    std::uint64_t seed = 0;
    app.add_option("--config", config_path, "JSON config file (flags take precedence)");
    auto* seed_opt = app.add_option("--seed", seed, "PRNG seed");
    auto* outdir_opt = app.add_option("--out-dir", out_dir, "output directory");

    // compile
    auto* cmd_compile = app.add_subcommand("compile", "compile network params to a CRN");
    std::string c_params, c_out, c_emit = "text";
    std::string c_arch, c_activation = "smoothed_relu", c_save_params;
    double c_h = 1.0;
    int c_q = 2;
    auto* c_params_opt = cmd_compile->add_option("--params", c_params, "network parameter JSON");
    auto* c_arch_opt = cmd_compile->add_option("--arch", c_arch,
                                               "random net layer sizes (alternative to --params)");
    auto* c_act_opt = cmd_compile->add_option("--activation", c_activation, "activation kind");
    auto* c_h_opt = cmd_compile->add_option("--act-h", c_h, "activation smoothing parameter");
    auto* c_q_opt = cmd_compile->add_option("--act-q", c_q, "decay order");
    auto* c_save_opt = cmd_compile->add_option("--save-params", c_save_params,
                                               "also write the (generated) parameters here");
    auto* c_out_opt = cmd_compile->add_option("--out", c_out, "output file");
    auto* c_emit_opt = cmd_compile->add_option("--emit", c_emit, "text|json");

    // simulate
    auto* cmd_simulate = app.add_subcommand("simulate", "integrate a compiled CRN");
    std::string s_network, s_inputs, s_x0 = "zero", s_out;
    double s_tend = 5.0, s_rtol = 1e-9, s_atol = 1e-12, s_maxstep = 0.0;
    bool s_no_ss = false;
    auto* s_network_opt = cmd_simulate->add_option("--network", s_network, "network file (text or json)");
    auto* s_inputs_opt = cmd_simulate->add_option("--inputs", s_inputs,
                                                  "comma list or @file; bound to species X_0_*");
    auto* s_x0_opt = cmd_simulate->add_option("--x0", s_x0, "zero | scale:S | comma list");
    auto* s_tend_opt = cmd_simulate->add_option("--t-end", s_tend, "integration horizon");
    auto* s_rtol_opt = cmd_simulate->add_option("--rel-tol", s_rtol, "relative tolerance");
    auto* s_atol_opt = cmd_simulate->add_option("--abs-tol", s_atol, "absolute tolerance");
    auto* s_maxstep_opt = cmd_simulate->add_option("--max-step", s_maxstep, "max step (0 = unbounded)");
    auto* s_noss_opt = cmd_simulate->add_flag("--no-steady-state", s_no_ss,
                                              "disable steady-state termination");
    auto* s_out_opt = cmd_simulate->add_option("--out", s_out, "trajectory CSV path");

    // train
    auto* cmd_train = app.add_subcommand("train", "SGD training on MNIST IDX data");
    std::string t_mnist_dir, t_params, t_arch = "784,40,10", t_activation = "smoothed_relu";
    std::string t_out_metrics, t_out_params;
    double t_h = 1.0, t_eta = 0.1;
    int t_q = 2, t_batch = 300, t_iters = 1000, t_pool = 60000, t_snapshot = 0;
    auto* t_mnist_opt = cmd_train->add_option("--mnist-dir", t_mnist_dir, "directory with IDX files");
    auto* t_params_opt = cmd_train->add_option("--params", t_params, "initial parameters (JSON)");
    auto* t_arch_opt = cmd_train->add_option("--arch", t_arch, "layer sizes, e.g. 784,40,10");
    auto* t_act_opt = cmd_train->add_option("--activation", t_activation,
                                            "sigmoid|relu|smoothed_relu|implicit_root");
    auto* t_h_opt = cmd_train->add_option("--act-h", t_h, "activation smoothing parameter");
    auto* t_q_opt = cmd_train->add_option("--act-q", t_q, "decay order");
    auto* t_eta_opt = cmd_train->add_option("--eta", t_eta, "learning rate");
    auto* t_batch_opt = cmd_train->add_option("--batch-size", t_batch, "SGD batch size");
    auto* t_iters_opt = cmd_train->add_option("--iterations", t_iters, "SGD iterations");
    auto* t_pool_opt = cmd_train->add_option("--pool", t_pool, "sample pool size");
    auto* t_snap_opt = cmd_train->add_option("--snapshot-every", t_snapshot,
                                             "parameter snapshot interval (0 = none)");
    auto* t_outm_opt = cmd_train->add_option("--out-metrics", t_out_metrics, "metrics CSV path");
    auto* t_outp_opt = cmd_train->add_option("--out-params", t_out_params, "final parameter path");

    // verify
    auto* cmd_verify = app.add_subcommand("verify", "empirical property verification");
    std::string v_mode = "equivalence", v_params, v_arch, v_activation = "smoothed_relu";
    std::string v_input = "rand", v_scales = "10,1000", v_out;
    double v_h = 1.0, v_tfinal = 50.0, v_tol = 1e-6, v_box = 0.0, v_tail = 0.5, v_x0scale = 10.0;
    int v_q = 2;
    auto* v_mode_opt = cmd_verify->add_option(
        "--mode", v_mode, "equivalence|from-infinity|exponential-rate|counterexample");
    auto* v_params_opt = cmd_verify->add_option("--params", v_params, "network parameter JSON");
    auto* v_arch_opt = cmd_verify->add_option("--arch", v_arch, "random net layer sizes");
    auto* v_act_opt = cmd_verify->add_option("--activation", v_activation, "activation kind");
    auto* v_h_opt = cmd_verify->add_option("--act-h", v_h, "activation smoothing parameter");
    auto* v_q_opt = cmd_verify->add_option("--act-q", v_q, "decay order");
    auto* v_input_opt = cmd_verify->add_option("--input", v_input, "rand | comma list");
    auto* v_tf_opt = cmd_verify->add_option("--t-final", v_tfinal, "horizon");
    auto* v_tol_opt = cmd_verify->add_option("--tol", v_tol, "equivalence tolerance");
    auto* v_scales_opt = cmd_verify->add_option("--scales", v_scales, "initial-condition scales");
    auto* v_box_opt = cmd_verify->add_option("--box-bound", v_box, "box bound (0 = auto)");
    auto* v_tail_opt = cmd_verify->add_option("--tail-fraction", v_tail, "rate-fit tail fraction");
    auto* v_x0_opt = cmd_verify->add_option("--x0-scale", v_x0scale, "x0 draw scale");
    auto* v_out_opt = cmd_verify->add_option("--out", v_out, "report JSON path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    json file_cfg = json::object();
    if (!config_path.empty()) file_cfg = json::parse(read_file(config_path));
    seed = resolve(seed_opt, seed, file_cfg, "seed", std::uint64_t{0});
    out_dir = resolve(outdir_opt, out_dir, file_cfg, "out_dir", std::string{"."});

    RunConfig rc;
    rc.set("seed", seed);
    rc.set("out_dir", out_dir);

    if (*cmd_compile) {
        c_params = resolve(c_params_opt, c_params, file_cfg, "params", std::string{});
        c_arch = resolve(c_arch_opt, c_arch, file_cfg, "arch", c_arch);
        c_activation = resolve(c_act_opt, c_activation, file_cfg, "activation", c_activation);
        c_h = resolve(c_h_opt, c_h, file_cfg, "h", c_h);
        c_q = resolve(c_q_opt, c_q, file_cfg, "q", c_q);
        c_save_params = resolve(c_save_opt, c_save_params, file_cfg, "save_params", c_save_params);
        c_emit = resolve(c_emit_opt, c_emit, file_cfg, "emit", c_emit);
        c_out = resolve(c_out_opt, c_out, file_cfg, "out",
                        (fs::path(out_dir) / ("network." + std::string(c_emit == "json" ? "json" : "txt"))).string());
        rc.set("subcommand", "compile");
        rc.set("params", c_params);
        rc.set("arch", c_arch);
        rc.set("activation", c_activation);
        rc.set("h", c_h);
        rc.set("q", c_q);
        rc.set("save_params", c_save_params);
        rc.set("emit", c_emit);
        rc.set("out", c_out);
        rc.finalize();

        const HardwiredNetwork net =
            load_or_make_network(c_params, c_arch, c_activation, c_h, c_q, seed);
        if (!c_save_params.empty())
            atomic_write(c_save_params, params_to_json_string(net) + "\n");
        const CompilationResult result = compile_network(net);
        std::string body;
        if (c_emit == "json") {
            json j = json::parse(to_json_string(result.system));
            j["config_hash"] = rc.hash_hex;
            body = j.dump(2) + "\n";
        } else if (c_emit == "text") {
            body = "# config_hash = " + rc.hash_hex + "\n" + to_text(result.system);
        } else {
            std::cerr << "compile: --emit must be text or json\n";
            return kExitUsage;
        }
        atomic_write(c_out, body);
        rc.write_sidecar(c_out);

        const auto kinds = classify_species(result.network);
        int dyn = 0;
        for (const auto& [id, k] : kinds)
            if (k == SpeciesKind::Dynamic) ++dyn;
        std::cout << "species: " << result.network.species().size() << "\n"
                  << "reactions: " << result.network.reactions().size() << "\n"
                  << "dynamic: " << dyn << "\n"
                  << "enzymatic: " << result.network.species().size() - dyn << "\n"
                  << "wrote: " << c_out << "\n";
        return kExitOk;
    }

    if (*cmd_simulate) {
        s_network = resolve(s_network_opt, s_network, file_cfg, "network", s_network);
        s_inputs = resolve(s_inputs_opt, s_inputs, file_cfg, "inputs", s_inputs);
        s_x0 = resolve(s_x0_opt, s_x0, file_cfg, "x0", s_x0);
        s_tend = resolve(s_tend_opt, s_tend, file_cfg, "t_end", s_tend);
        s_rtol = resolve(s_rtol_opt, s_rtol, file_cfg, "rel_tol", s_rtol);
        s_atol = resolve(s_atol_opt, s_atol, file_cfg, "abs_tol", s_atol);
        s_maxstep = resolve(s_maxstep_opt, s_maxstep, file_cfg, "max_step", s_maxstep);
        s_no_ss = resolve(s_noss_opt, s_no_ss, file_cfg, "no_steady_state", s_no_ss);
        s_out = resolve(s_out_opt, s_out, file_cfg, "out",
                        (fs::path(out_dir) / "trajectory.csv").string());
        if (s_network.empty()) {
            std::cerr << "simulate: --network is required\n";
            return kExitUsage;
        }
        rc.set("subcommand", "simulate");
        rc.set("network", s_network);
        rc.set("inputs", s_inputs);
        rc.set("x0", s_x0);
        rc.set("t_end", s_tend);
        rc.set("rel_tol", s_rtol);
        rc.set("abs_tol", s_atol);
        rc.set("max_step", s_maxstep);
        rc.set("no_steady_state", s_no_ss);
        rc.set("out", s_out);
        rc.finalize();

        const std::string text = read_file(s_network);
        MassActionSystem sys = (s_network.size() > 5 &&
                                s_network.substr(s_network.size() - 5) == ".json")
                                   ? system_from_json(text)
                                   : system_from_text(text);
        if (!s_inputs.empty()) {
            std::vector<double> inputs =
                s_inputs[0] == '@' ? parse_vector(read_file(s_inputs.substr(1)))
                                   : parse_vector(s_inputs);
            std::map<SpeciesId, double> overrides;
            for (std::size_t j = 0; j < inputs.size(); ++j)
                overrides[node_species_name(0, static_cast<int>(j))] = inputs[j];
            sys = sys.with_enzymes(overrides);
        }

        const int n = static_cast<int>(sys.dynamic_order().size());
        Eigen::VectorXd x0 = Eigen::VectorXd::Zero(n);
        if (s_x0.rfind("scale:", 0) == 0) {
            const double scale = std::stod(s_x0.substr(6));
            Rng rng(seed);
            for (int i = 0; i < n; ++i) x0[i] = scale * rng.uniform();
        } else if (s_x0 != "zero") {
            x0 = to_eigen(parse_vector(s_x0));
            if (x0.size() != n) {
                std::cerr << "simulate: --x0 has wrong dimension\n";
                return kExitUsage;
            }
        }

        IntegratorConfig cfg;
        cfg.t_end = s_tend;
        cfg.rel_tol = s_rtol;
        cfg.abs_tol = s_atol;
        if (s_maxstep > 0.0) cfg.max_step = s_maxstep;
        cfg.detect_steady_state = !s_no_ss;
        cfg.enforce_nonnegative = true;
        const Trajectory traj =
            integrate([&](const Eigen::VectorXd& x) { return sys.rhs_unchecked(x); }, x0, cfg);

        std::ostringstream os;
        os << "# config_hash = " << rc.hash_hex << "\n";
        write_trajectory_csv(os, traj, sys.dynamic_order());
        if (traj.terminal_reason == TerminalReason::StepFailure) {
            os << "# step_failure\n";
            atomic_write(s_out, os.str());
            rc.write_sidecar(s_out);
            std::cerr << "simulate: integrator step failure (partial CSV written)\n";
            return kExitNumeric;
        }
        atomic_write(s_out, os.str());
        rc.write_sidecar(s_out);
        std::cout << "wrote: " << s_out << "\n";
        return kExitOk;
    }

    if (*cmd_train) {
        t_mnist_dir = resolve(t_mnist_opt, t_mnist_dir, file_cfg, "mnist_dir", t_mnist_dir);
        t_params = resolve(t_params_opt, t_params, file_cfg, "params", t_params);
        t_arch = resolve(t_arch_opt, t_arch, file_cfg, "arch", t_arch);
        t_activation = resolve(t_act_opt, t_activation, file_cfg, "activation", t_activation);
        t_h = resolve(t_h_opt, t_h, file_cfg, "h", t_h);
        t_q = resolve(t_q_opt, t_q, file_cfg, "q", t_q);
        t_eta = resolve(t_eta_opt, t_eta, file_cfg, "eta", t_eta);
        t_batch = resolve(t_batch_opt, t_batch, file_cfg, "batch_size", t_batch);
        t_iters = resolve(t_iters_opt, t_iters, file_cfg, "iterations", t_iters);
        t_pool = resolve(t_pool_opt, t_pool, file_cfg, "pool", t_pool);
        t_snapshot = resolve(t_snap_opt, t_snapshot, file_cfg, "snapshot_every", t_snapshot);
        t_out_metrics = resolve(t_outm_opt, t_out_metrics, file_cfg, "out_metrics",
                                (fs::path(out_dir) / "metrics.csv").string());
        t_out_params = resolve(t_outp_opt, t_out_params, file_cfg, "out_params",
                               (fs::path(out_dir) / "trained_params.json").string());
        if (t_mnist_dir.empty()) {
            std::cerr << "train: --mnist-dir is required\n";
            return kExitUsage;
        }
        rc.set("subcommand", "train");
        rc.set("mnist_dir", t_mnist_dir);
        rc.set("params", t_params);
        rc.set("arch", t_arch);
        rc.set("activation", t_activation);
        rc.set("h", t_h);
        rc.set("q", t_q);
        rc.set("eta", t_eta);
        rc.set("batch_size", t_batch);
        rc.set("iterations", t_iters);
        rc.set("pool", t_pool);
        rc.set("snapshot_every", t_snapshot);
        rc.set("out_metrics", t_out_metrics);
        rc.set("out_params", t_out_params);
        rc.finalize();

        const fs::path dir(t_mnist_dir);
        const MnistDataset data = load_idx((dir / "train-images-idx3-ubyte").string(),
                                           (dir / "train-labels-idx1-ubyte").string());
        // the init draw and the batch draws share one seeded stream
        const HardwiredNetwork initial =
            load_or_make_network(t_params, t_arch, t_activation, t_h, t_q, seed);
        TrainingConfig cfg;
        cfg.learning_rate = t_eta;
        cfg.batch_size = t_batch;
        cfg.iterations = t_iters;
        cfg.rng_seed = seed + 1;
        cfg.sample_pool = t_pool;

        TrainingMetrics metrics{{}, initial};
        if (t_snapshot > 0) {
            // run in chunks so parameter snapshots land every t_snapshot iters
            HardwiredNetwork net = initial;
            TrainingConfig chunk = cfg;
            int done = 0, part = 0;
            while (done < t_iters) {
                chunk.iterations = std::min(t_snapshot, t_iters - done);
                chunk.rng_seed = cfg.rng_seed + static_cast<std::uint64_t>(part++);
                TrainingMetrics mm = train(data, net, chunk);
                metrics.per_iteration.insert(metrics.per_iteration.end(),
                                             mm.per_iteration.begin(), mm.per_iteration.end());
                net = mm.final_network;
                done += chunk.iterations;
                atomic_write((fs::path(out_dir) / ("params_iter" + std::to_string(done) + ".json")),
                             params_to_json_string(net) + "\n");
            }
            metrics.final_network = net;
        } else {
            metrics = train(data, initial, cfg);
        }

        std::ostringstream os;
        os << "# config_hash = " << rc.hash_hex << "\n";
        write_metrics_csv(os, metrics);
        atomic_write(t_out_metrics, os.str());
        atomic_write(t_out_params, params_to_json_string(metrics.final_network) + "\n");
        rc.write_sidecar(t_out_metrics);

        double tail_acc = 0.0;
        const std::size_t n_tail = std::min<std::size_t>(100, metrics.per_iteration.size());
        for (std::size_t i = metrics.per_iteration.size() - n_tail;
             i < metrics.per_iteration.size(); ++i)
            tail_acc += metrics.per_iteration[i].accuracy;
        if (n_tail) tail_acc /= static_cast<double>(n_tail);
        std::cout << "final-" << n_tail << "-iteration mean batch accuracy: " << tail_acc << "\n"
                  << "wrote: " << t_out_metrics << ", " << t_out_params << "\n";
        return kExitOk;
    }

    if (*cmd_verify) {
        v_mode = resolve(v_mode_opt, v_mode, file_cfg, "mode", v_mode);
        v_params = resolve(v_params_opt, v_params, file_cfg, "params", v_params);
        v_arch = resolve(v_arch_opt, v_arch, file_cfg, "arch", v_arch);
        v_activation = resolve(v_act_opt, v_activation, file_cfg, "activation", v_activation);
        v_h = resolve(v_h_opt, v_h, file_cfg, "h", v_h);
        v_q = resolve(v_q_opt, v_q, file_cfg, "q", v_q);
        v_input = resolve(v_input_opt, v_input, file_cfg, "input", v_input);
        v_tfinal = resolve(v_tf_opt, v_tfinal, file_cfg, "t_final", v_tfinal);
        v_tol = resolve(v_tol_opt, v_tol, file_cfg, "tol", v_tol);
        v_scales = resolve(v_scales_opt, v_scales, file_cfg, "scales", v_scales);
        v_box = resolve(v_box_opt, v_box, file_cfg, "box_bound", v_box);
        v_tail = resolve(v_tail_opt, v_tail, file_cfg, "tail_fraction", v_tail);
        v_x0scale = resolve(v_x0_opt, v_x0scale, file_cfg, "x0_scale", v_x0scale);
        v_out = resolve(v_out_opt, v_out, file_cfg, "out",
                        (fs::path(out_dir) / "report.json").string());
        rc.set("subcommand", "verify");
        rc.set("mode", v_mode);
        rc.set("params", v_params);
        rc.set("arch", v_arch);
        rc.set("activation", v_activation);
        rc.set("h", v_h);
        rc.set("q", v_q);
        rc.set("input", v_input);
        rc.set("t_final", v_tfinal);
        rc.set("tol", v_tol);
        rc.set("scales", v_scales);
        rc.set("box_bound", v_box);
        rc.set("tail_fraction", v_tail);
        rc.set("x0_scale", v_x0scale);
        rc.set("out", v_out);
        rc.finalize();

        if (v_mode == "counterexample") {
            const CounterexampleWitness w = demo_non_feedforward_counterexample();
            json j = json::parse(to_json_string(w));
            j["config_hash"] = rc.hash_hex;
            atomic_write(v_out, j.dump(2) + "\n");
            rc.write_sidecar(v_out);
            std::cout << "x(" << w.t_end << ") = " << w.x_final
                      << ", slope = " << w.linear_slope << " (expected-fail by design)\n";
            return kExitOk;
        }

        const HardwiredNetwork net =
            load_or_make_network(v_params, v_arch, v_activation, v_h, v_q, seed);
        Rng rng(seed + 1);
        Eigen::VectorXd d(net.arch.input_size());
        if (v_input == "rand") {
            for (Eigen::Index i = 0; i < d.size(); ++i) d[i] = rng.uniform();
        } else {
            d = to_eigen(parse_vector(v_input));
            if (d.size() != net.arch.input_size()) {
                std::cerr << "verify: --input has wrong dimension\n";
                return kExitUsage;
            }
        }
        int n = 0;
        for (int l = 1; l <= net.arch.depth(); ++l) n += net.arch.layer_sizes[l];

        bool passed = false;
        std::string body;
        if (v_mode == "equivalence") {
            Eigen::VectorXd x0(n);
            for (int i = 0; i < n; ++i) x0[i] = v_x0scale * rng.uniform();
            const EquivalenceReport r = verify_implementation(net, d, x0, v_tfinal, v_tol);
            passed = r.passed;
            body = to_json_string(r);
        } else if (v_mode == "from-infinity") {
            const std::vector<double> scales = parse_vector(v_scales);
            double box = v_box;
            if (box <= 0.0) {
                // default box: just above the largest fixed point, so the
                // hitting times are dominated by the scale-independent tail
                double max_act = 0.0;
                const ForwardResult fwd = forward(net, d);
                for (std::size_t l = 1; l < fwd.activations.size(); ++l)
                    max_act = std::max(max_act, fwd.activations[l].maxCoeff());
                box = 1.3 * std::max(max_act, 1e-3);
            }
            const ReliabilityReport r =
                verify_convergence_from_infinity(net, d, scales, box, v_tfinal, seed + 2);
            passed = r.passed && r.hitting_time_spread <= 1.25;
            body = to_json_string(r);
        } else if (v_mode == "exponential-rate") {
            Eigen::VectorXd x0(n);
            for (int i = 0; i < n; ++i) x0[i] = v_x0scale * rng.uniform();
            const ReliabilityReport r = verify_exponential_reliability(net, d, x0, v_tail);
            passed = r.passed;
            body = to_json_string(r);
        } else {
            std::cerr << "verify: unknown --mode '" << v_mode << "'\n";
            return kExitUsage;
        }

        json j = json::parse(body);
        j["config_hash"] = rc.hash_hex;
        atomic_write(v_out, j.dump(2) + "\n");
        rc.write_sidecar(v_out);
        std::cout << (passed ? "PASS" : "FAIL") << " (" << v_mode << "), report: " << v_out
                  << "\n";
        return passed ? kExitOk : kExitVerifyFail;
    }

    return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}
