#include "crnnn/verify.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>

#include "crnnn/rng.hpp"
#include "json.hpp"

namespace crnnn {

namespace {

IntegratorConfig verify_config(double t_end) {
    IntegratorConfig cfg;
    cfg.t_end = t_end;
    cfg.rel_tol = 1e-9;
    cfg.abs_tol = 1e-12;
    cfg.enforce_nonnegative = true;
    return cfg;
}

RhsFn system_rhs(const MassActionSystem& sys) {
    return [sys](const Eigen::VectorXd& x) { return sys.rhs_unchecked(x); };
}

}  // namespace

EquivalenceReport verify_implementation(const HardwiredNetwork& net, const Eigen::VectorXd& d,
                                        const Eigen::VectorXd& x0, double t_final, double tol) {
    const CompilationResult compiled = compile_network(net);
    const MassActionSystem sys = bind_inputs(compiled, d);
    if (x0.size() != static_cast<Eigen::Index>(sys.dynamic_order().size()))
        throw DimensionError("x0 has wrong length for the compiled system");

    EquivalenceReport report;
    report.t_final = t_final;
    report.tolerance = tol;
    report.initial_condition_scale = x0.size() ? x0.cwiseAbs().maxCoeff() : 0.0;

    const Trajectory traj = integrate(system_rhs(sys), x0, verify_config(t_final));
    if (traj.terminal_reason == TerminalReason::StepFailure) {
        report.integration_failed = true;
        report.diagnostics = "integrator step failure at t = " + std::to_string(traj.final_time());
        return report;
    }

    const ForwardResult fwd = forward(net, d);
    const Eigen::VectorXd& terminal = traj.final_state();
    for (const auto& [key, id] : compiled.node_species) {
        const auto [layer, node] = key;
        const int idx = *sys.dynamic_index(id);
        NodeComparison cmp;
        cmp.ode_value = terminal[idx];
        cmp.nn_value = fwd.activations[layer][node];
        cmp.abs_diff = std::abs(cmp.ode_value - cmp.nn_value);
        report.max_abs_diff = std::max(report.max_abs_diff, cmp.abs_diff);
        report.per_node[key] = cmp;
    }
    report.passed = report.max_abs_diff <= tol;
    return report;
}

ReliabilityReport verify_convergence_from_infinity(const HardwiredNetwork& net,
                                                   const Eigen::VectorXd& d,
                                                   const std::vector<double>& scales,
                                                   double box_bound, double t_end,
                                                   std::uint64_t seed) {
    const CompilationResult compiled = compile_network(net);
    const MassActionSystem sys = bind_inputs(compiled, d);
    const int n = static_cast<int>(sys.dynamic_order().size());

    ReliabilityReport report;
    report.passed = true;
    Rng rng(seed);
    // one base point scaled per run, so the scales are directly comparable
    Eigen::VectorXd base(n);
    for (int i = 0; i < n; ++i) base[i] = 0.5 + 0.5 * rng.uniform();
    std::vector<Eigen::VectorXd> terminals;
    for (const double s : scales) {
        if (s < 1.0) throw StructureError("scales must be >= 1");
        const Eigen::VectorXd x0 = s * base;
        IntegratorConfig cfg = verify_config(t_end);
        cfg.detect_steady_state = false;  // terminal states compared at a common time
        const Trajectory traj = integrate(system_rhs(sys), x0, cfg);
        if (traj.terminal_reason == TerminalReason::StepFailure) {
            report.passed = false;
            report.diagnostics += "step failure at scale " + std::to_string(s) + "; ";
            continue;
        }
        const auto ht = hitting_time(traj, box_bound);
        if (!ht) {
            report.passed = false;
            report.diagnostics += "never entered the box at scale " + std::to_string(s) + "; ";
            continue;
        }
        report.hitting_times[s] = *ht;
        terminals.push_back(traj.final_state());
    }

    double tmin = std::numeric_limits<double>::infinity(), tmax = 0.0;
    for (const auto& [s, t] : report.hitting_times) {
        if (t > 0.0) {
            tmin = std::min(tmin, t);
            tmax = std::max(tmax, t);
        }
    }
    report.hitting_time_spread = (tmax > 0.0 && std::isfinite(tmin)) ? tmax / tmin : 1.0;

    for (std::size_t a = 0; a < terminals.size(); ++a)
        for (std::size_t b = a + 1; b < terminals.size(); ++b)
            report.steady_state_agreement =
                std::max(report.steady_state_agreement,
                         (terminals[a] - terminals[b]).cwiseAbs().maxCoeff());
    return report;
}

ReliabilityReport verify_exponential_reliability(const HardwiredNetwork& net,
                                                 const Eigen::VectorXd& d,
                                                 const Eigen::VectorXd& x0,
                                                 double tail_fraction) {
    const CompilationResult compiled = compile_network(net);
    const MassActionSystem sys = bind_inputs(compiled, d);

    IntegratorConfig cfg = verify_config(200.0);
    cfg.max_step = 0.25;  // keep enough accepted samples for the tail fit
    const Trajectory traj = integrate(system_rhs(sys), x0, cfg);

    ReliabilityReport report;
    if (traj.terminal_reason == TerminalReason::StepFailure) {
        report.diagnostics = "integrator step failure";
        return report;
    }
    const Eigen::VectorXd limit =
        traj.steady_state ? *traj.steady_state : traj.final_state();
    if ((x0 - limit).norm() < 1e-3)
        throw NumericError("x0 must be displaced from the steady state by at least 1e-3");

    const RateFit fit = exponential_rate_fit(traj, limit, tail_fraction, cfg.abs_tol);
    report.lambda_fit = fit.lambda;
    report.r_squared = fit.r_squared;
    report.passed = fit.lambda > 0.0 && fit.r_squared >= 0.99;
    return report;
}

CounterexampleWitness demo_non_feedforward_counterexample(double x0, double t_end,
                                                          bool force_constant_y) {
    // dx = 1 if y > 1 else -x, with y(t) = 1 + e^{-t} (or forced to 1)
    const double dt = 1e-3;
    double x = x0;
    double st = 0, sx = 0, stt = 0, stx = 0;
    const int steps = static_cast<int>(std::llround(t_end / dt));
    for (int k = 0; k <= steps; ++k) {
        const double t = k * dt;
        st += t;
        sx += x;
        stt += t * t;
        stx += t * x;
        if (k == steps) break;
        auto f = [&](double tt, double xx) {
            const double y = force_constant_y ? 1.0 : 1.0 + std::exp(-tt);
            return y > 1.0 ? 1.0 : -xx;
        };
        // classic RK4 with fixed steps; the rhs is discontinuous in y
        const double k1 = f(t, x);
        const double k2 = f(t + dt / 2, x + dt / 2 * k1);
        const double k3 = f(t + dt / 2, x + dt / 2 * k2);
        const double k4 = f(t + dt, x + dt * k3);
        x += dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    const double n = steps + 1.0;
    const double slope = (n * stx - st * sx) / (n * stt - st * st);
    return {x0, t_end, x, slope, force_constant_y};
}

namespace {
using nlohmann::json;
}

std::string to_json_string(const EquivalenceReport& r) {
    json per_node = json::array();
    for (const auto& [key, cmp] : r.per_node) {
        per_node.push_back({{"layer", key.first},
                            {"node", key.second},
                            {"ode_value", cmp.ode_value},
                            {"nn_value", cmp.nn_value},
                            {"abs_diff", cmp.abs_diff}});
    }
    json j{{"per_node", std::move(per_node)},
           {"max_abs_diff", r.max_abs_diff},
           {"t_final", r.t_final},
           {"initial_condition_scale", r.initial_condition_scale},
           {"tolerance", r.tolerance},
           {"passed", r.passed},
           {"integration_failed", r.integration_failed},
           {"diagnostics", r.diagnostics}};
    return j.dump(2);
}

std::string to_json_string(const ReliabilityReport& r) {
    json hits = json::object();
    for (const auto& [s, t] : r.hitting_times) {
        std::ostringstream key;
        key << s;
        hits[key.str()] = t;
    }
    json j{{"lambda_fit", r.lambda_fit},
           {"r_squared", r.r_squared},
           {"hitting_times", std::move(hits)},
           {"hitting_time_spread", r.hitting_time_spread},
           {"steady_state_agreement", r.steady_state_agreement},
           {"passed", r.passed},
           {"diagnostics", r.diagnostics}};
    return j.dump(2);
}

std::string to_json_string(const CounterexampleWitness& w) {
    json j{{"x0", w.x0},
           {"t_end", w.t_end},
           {"x_final", w.x_final},
           {"linear_slope", w.linear_slope},
           {"forced_constant", w.forced_constant},
           {"expected_fail_by_design", !w.forced_constant}};
    return j.dump(2);
}

void write_equivalence_csv(std::ostream& os, const EquivalenceReport& r) {
    os << "node,ode_value,nn_value,abs_diff\n" << std::setprecision(17);
    for (const auto& [key, cmp] : r.per_node) {
        os << node_species_name(key.first, key.second) << "," << cmp.ode_value << ","
           << cmp.nn_value << "," << cmp.abs_diff << "\n";
    }
}

}  // namespace crnnn
