#include "crnnn/compiler.hpp"

#include <cmath>

#include "crnnn/rng.hpp"

namespace crnnn {

std::string node_species_name(int layer, int node) {
    return "X_" + std::to_string(layer) + "_" + std::to_string(node);
}

namespace {

const SpeciesId kH = "H";

std::string weight_enzyme_name(bool positive, int layer, int node, int input) {
    return std::string(positive ? "Wp_" : "Wm_") + std::to_string(layer) + "_" +
           std::to_string(node) + "_" + std::to_string(input);
}

std::string bias_enzyme_name(bool positive, int layer, int node) {
    return std::string(positive ? "Bp_" : "Bm_") + std::to_string(layer) + "_" +
           std::to_string(node);
}

}  // namespace

EdgeGadget compile_edge(double w, std::optional<double> bias, double h, int q,
                        int layer, int node, int input) {
    if (!(h > 0.0)) throw StructureError("edge compilation requires h > 0");
    if (q < 2) throw StructureError("edge compilation requires q >= 2");

    const SpeciesId x = node_species_name(layer, node);
    const SpeciesId xprev = node_species_name(layer - 1, input);

    EdgeGadget g;
    // closeness to ReLU: H -> H + X
    g.reactions.emplace_back(Complex{{kH, 1}}, Complex{{kH, 1}, {x, 1}});
    g.enzyme_assignments[kH] = h;
    g.enzyme_assignments[xprev] = 0.0;  // bound to data / previous layer later

    if (w > 0.0) {
        const SpeciesId wp = weight_enzyme_name(true, layer, node, input);
        g.reactions.emplace_back(Complex{{xprev, 1}, {wp, 1}, {x, 1}},
                                 Complex{{xprev, 1}, {wp, 1}, {x, 2}});
        g.enzyme_assignments[wp] = w;
    } else if (w < 0.0) {
        const SpeciesId wm = weight_enzyme_name(false, layer, node, input);
        g.reactions.emplace_back(Complex{{xprev, 1}, {wm, 1}, {x, 1}},
                                 Complex{{xprev, 1}, {wm, 1}});
        g.enzyme_assignments[wm] = -w;
    }

    if (bias && *bias > 0.0) {
        const SpeciesId bp = bias_enzyme_name(true, layer, node);
        g.reactions.emplace_back(Complex{{bp, 1}, {x, 1}}, Complex{{bp, 1}, {x, 2}});
        g.enzyme_assignments[bp] = *bias;
    } else if (bias && *bias < 0.0) {
        const SpeciesId bm = bias_enzyme_name(false, layer, node);
        g.reactions.emplace_back(Complex{{bm, 1}, {x, 1}}, Complex{{bm, 1}});
        g.enzyme_assignments[bm] = -*bias;
    }

    // q-polynomial decay: qX -> X
    g.reactions.emplace_back(Complex{{x, q}}, Complex{{x, 1}});
    return g;
}

CompiledFragment compile_node(const HardwiredNetwork& net, int layer, int node) {
    if (layer < 1 || layer > net.arch.depth()) throw DimensionError("layer index out of range");
    if (!net.activation.has_ode_form())
        throw StructureError("activation has no reaction-network form (needs h > 0)");
    const double h = net.activation.h();
    const int q = net.activation.q();
    const auto& w = net.params.weights[layer - 1];
    const double b = net.params.biases[layer - 1][node];

    std::vector<Reaction> reactions;
    std::map<SpeciesId, double> enzymes;
    for (int j = 0; j < w.cols(); ++j) {
        // bias reactions attach to the node, emitted with the first edge only
        std::optional<double> bias = (j == 0) ? std::optional<double>(b) : std::nullopt;
        EdgeGadget g = compile_edge(w(node, j), bias, h, q, layer, node, j);
        reactions.insert(reactions.end(), g.reactions.begin(), g.reactions.end());
        enzymes.merge(g.enzyme_assignments);
    }
    return {ReactionNetwork::from_reactions(std::move(reactions)), std::move(enzymes)};
}

CompilationResult compile_network(const HardwiredNetwork& net) {
    std::vector<Reaction> reactions;
    std::map<SpeciesId, double> enzymes;
    std::map<std::pair<int, int>, SpeciesId> node_species;
    for (int l = 1; l <= net.arch.depth(); ++l) {
        for (int i = 0; i < net.arch.layer_sizes[l]; ++i) {
            CompiledFragment frag = compile_node(net, l, i);
            const auto& rs = frag.network.reactions();
            reactions.insert(reactions.end(), rs.begin(), rs.end());
            enzymes.merge(frag.enzymes);
            node_species[{l, i}] = node_species_name(l, i);
        }
    }
    std::map<int, SpeciesId> input_species;
    for (int j = 0; j < net.arch.input_size(); ++j)
        input_species[j] = node_species_name(0, j);

    ReactionNetwork network = ReactionNetwork::from_reactions(std::move(reactions));
    const auto kinds = classify_species(network);
    // keep enzyme entries only for species that are enzymatic in the union;
    // species that dropped out entirely (e.g. inputs whose weights are all
    // zero) are skipped
    std::map<SpeciesId, double> enz;
    for (const auto& [id, v] : enzymes) {
        auto it = kinds.find(id);
        if (it != kinds.end() && it->second == SpeciesKind::Enzymatic) enz[id] = v;
    }
    MassActionSystem system(network, std::move(enz));
    return {std::move(network), std::move(system), std::move(node_species),
            std::move(input_species)};
}

MassActionSystem bind_inputs(const CompilationResult& result, const Eigen::VectorXd& d) {
    if (d.size() != static_cast<Eigen::Index>(result.input_species.size()))
        throw DimensionError("input data has wrong length for this compilation");
    std::map<SpeciesId, double> overrides;
    for (const auto& [j, id] : result.input_species) {
        if (d[j] < 0.0) throw StructureError("input concentrations must be nonnegative");
        // inputs whose outgoing weights are all zero do not appear in the
        // compiled network and have no effect
        if (result.network.has_species(id)) overrides[id] = d[j];
    }
    return result.system.with_enzymes(overrides);
}

Eigen::VectorXd layered_ode_rhs(const HardwiredNetwork& net, const Eigen::VectorXd& d,
                                const Eigen::VectorXd& x) {
    const int m = net.arch.depth();
    const double h = net.activation.h();
    const int q = net.activation.q();
    int total = 0;
    for (int l = 1; l <= m; ++l) total += net.arch.layer_sizes[l];
    if (x.size() != total) throw DimensionError("state vector has wrong length");
    if (d.size() != net.arch.input_size()) throw DimensionError("input has wrong length");

    Eigen::VectorXd dx(total);
    int offset = 0;
    Eigen::VectorXd prev = d;
    for (int l = 1; l <= m; ++l) {
        const int c = net.arch.layer_sizes[l];
        const Eigen::VectorXd cur = x.segment(offset, c);
        const Eigen::VectorXd rho = net.params.weights[l - 1] * prev + net.params.biases[l - 1];
        for (int i = 0; i < c; ++i)
            dx[offset + i] = activation_ode_rhs(h, q, rho[i], cur[i]);
        prev = cur;
        offset += c;
    }
    return dx;
}

double validate_compilation(const CompilationResult& result, const HardwiredNetwork& net,
                            int trials, std::uint64_t seed) {
    const int n = static_cast<int>(result.system.dynamic_order().size());
    // compiled dynamic order must be the layer-major node order
    {
        int k = 0;
        for (int l = 1; l <= net.arch.depth(); ++l)
            for (int i = 0; i < net.arch.layer_sizes[l]; ++i, ++k) {
                if (k >= n || result.system.dynamic_order()[k] != node_species_name(l, i))
                    throw DimensionError("compiled system does not match the network layout");
            }
        if (k != n) throw DimensionError("compiled system does not match the network layout");
    }

    Rng rng(seed);
    double max_diff = 0.0;
    for (int t = 0; t < trials; ++t) {
        Eigen::VectorXd d(net.arch.input_size());
        for (Eigen::Index j = 0; j < d.size(); ++j) d[j] = rng.uniform(0.0, 10.0);
        Eigen::VectorXd x(n);
        for (int i = 0; i < n; ++i) x[i] = rng.uniform(0.0, 10.0);

        const Eigen::VectorXd ma = bind_inputs(result, d).rhs(x);
        const Eigen::VectorXd an = layered_ode_rhs(net, d, x);
        max_diff = std::max(max_diff, (ma - an).cwiseAbs().maxCoeff());
    }
    return max_diff;
}

}  // namespace crnnn
