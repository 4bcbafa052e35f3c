#pragma once

#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "crnnn/compiler.hpp"
#include "crnnn/integrator.hpp"
#include "crnnn/neural_net.hpp"

namespace crnnn {

struct NodeComparison {
    double ode_value;
    double nn_value;
    double abs_diff;
};

// Per-node comparison of the ODE limiting values against the direct
// network activations; covers hidden nodes as well as outputs.
struct EquivalenceReport {
    std::map<std::pair<int, int>, NodeComparison> per_node;  // (layer, node)
    double max_abs_diff = 0.0;
    double t_final = 0.0;
    double initial_condition_scale = 0.0;
    double tolerance = 0.0;
    bool passed = false;
    bool integration_failed = false;
    std::string diagnostics;
};

struct ReliabilityReport {
    double lambda_fit = 0.0;
    double r_squared = 0.0;
    std::map<double, double> hitting_times;  // initial scale -> time
    double hitting_time_spread = 0.0;        // max/min ratio
    double steady_state_agreement = 0.0;     // max abs diff across scales
    bool passed = false;
    std::string diagnostics;
};

// Compiles net, binds d to the input enzymes, integrates from x0 until
// steady state or t_final, and compares every node's terminal concentration
// against the forward pass.
EquivalenceReport verify_implementation(const HardwiredNetwork& net, const Eigen::VectorXd& d,
                                        const Eigen::VectorXd& x0, double t_final, double tol);

// For each scale s integrates from s * uniform[0,1]^n and records the box
// hitting time plus the terminal-state agreement across scales.
ReliabilityReport verify_convergence_from_infinity(const HardwiredNetwork& net,
                                                   const Eigen::VectorXd& d,
                                                   const std::vector<double>& scales,
                                                   double box_bound, double t_end,
                                                   std::uint64_t seed);

// Integrates to steady state and fits the exponential decay rate of
// ||x(t) - limit||_2 over the trajectory tail.
ReliabilityReport verify_exponential_reliability(const HardwiredNetwork& net,
                                                 const Eigen::VectorXd& d,
                                                 const Eigen::VectorXd& x0,
                                                 double tail_fraction);

// The discontinuous forcing system whose state grows linearly even though
// the forcing converges exponentially; a fixture demonstrating why the
// exponentially-feed-forward property matters. Integrated with fixed small
// steps since the rhs is discontinuous.
struct CounterexampleWitness {
    double x0;
    double t_end;
    double x_final;
    double linear_slope;  // least-squares slope of x against t
    bool forced_constant;
};

CounterexampleWitness demo_non_feedforward_counterexample(double x0 = 0.0, double t_end = 10.0,
                                                          bool force_constant_y = false);

std::string to_json_string(const EquivalenceReport& r);
std::string to_json_string(const ReliabilityReport& r);
std::string to_json_string(const CounterexampleWitness& w);
// `node,ode_value,nn_value,abs_diff` rows
void write_equivalence_csv(std::ostream& os, const EquivalenceReport& r);

}  // namespace crnnn
