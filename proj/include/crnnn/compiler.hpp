#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "crnnn/neural_net.hpp"
#include "crnnn/reaction_net.hpp"

namespace crnnn {

// Species naming: X_l_i for node species (layer l, node i, 0-based; layer 0
// are the input species), Wp_l_i_j / Wm_l_i_j for split weight enzymes,
// Bp_l_i / Bm_l_i for split bias enzymes, one shared H.
std::string node_species_name(int layer, int node);

// Reactions implementing a single directed edge (node j of layer l-1 ->
// node i of layer l) with canonical sign split w+ = max(w,0), w- = max(-w,0);
// zero-rate halves are omitted. All rate constants are 1.
struct EdgeGadget {
    std::vector<Reaction> reactions;
    std::map<SpeciesId, double> enzyme_assignments;
};

EdgeGadget compile_edge(double w, std::optional<double> bias, double h, int q,
                        int layer, int node, int input);

struct CompiledFragment {
    ReactionNetwork network;
    std::map<SpeciesId, double> enzymes;
};

// Union of the edge gadgets over all inputs of one node; the bias and the
// H-production and decay reactions appear exactly once.
CompiledFragment compile_node(const HardwiredNetwork& net, int layer, int node);

struct CompilationResult {
    ReactionNetwork network;
    MassActionSystem system;  // input enzymes default to 0 until data is bound
    std::map<std::pair<int, int>, SpeciesId> node_species;  // (layer, node) -> id
    std::map<int, SpeciesId> input_species;                 // input index -> id
};

CompilationResult compile_network(const HardwiredNetwork& net);

// System with the input species' enzyme concentrations set to the data d.
MassActionSystem bind_inputs(const CompilationResult& result, const Eigen::VectorXd& d);

// The analytic block-triangular rhs over the compiled dynamic ordering:
// dx_i^l = h + rho_i^l(x^{l-1}) x_i^l - (q-1) (x_i^l)^q with x^0 = d.
// Independent of the reaction-network path; used as its oracle.
Eigen::VectorXd layered_ode_rhs(const HardwiredNetwork& net, const Eigen::VectorXd& d,
                                const Eigen::VectorXd& x);

// Max |mass-action rhs - layered rhs| over `trials` random states and data
// drawn uniformly from [0, 10].
double validate_compilation(const CompilationResult& result, const HardwiredNetwork& net,
                            int trials, std::uint64_t seed);

}  // namespace crnnn
