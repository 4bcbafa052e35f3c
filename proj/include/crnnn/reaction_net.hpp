#pragma once

#include <Eigen/Core>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crnnn/errors.hpp"

namespace crnnn {

using SpeciesId = std::string;

// A vertex of the reaction graph: a formal sum of species over the
// non-negative integers. Zero entries are never stored; the default
// constructed Complex is the empty complex "0".
class Complex {
   public:
    Complex() = default;
    Complex(std::initializer_list<std::pair<const SpeciesId, int>> terms);

    void add(const SpeciesId& id, int count);
    int coefficient(const SpeciesId& id) const;
    const std::map<SpeciesId, int>& coefficients() const { return coeffs_; }
    bool empty() const { return coeffs_.empty(); }
    // total stoichiometric order of the complex
    int order() const;

    friend auto operator<=>(const Complex&, const Complex&) = default;

   private:
    std::map<SpeciesId, int> coeffs_;
};

struct Reaction {
    Complex source;
    Complex target;
    double rate = 1.0;

    Reaction(Complex src, Complex tgt, double rate_constant = 1.0);

    // same directed edge, rate ignored
    bool same_edge(const Reaction& other) const {
        return source == other.source && target == other.target;
    }
    friend bool operator==(const Reaction&, const Reaction&) = default;
};

enum class SpeciesKind { Dynamic, Enzymatic };

class ReactionNetwork {
   public:
    // Species are inferred from the complexes in order of first appearance.
    // Identical reactions are merged; one edge with two distinct rate
    // constants is rejected as ambiguous.
    static ReactionNetwork from_reactions(std::vector<Reaction> reactions);

    const std::vector<SpeciesId>& species() const { return species_; }
    const std::vector<Reaction>& reactions() const { return reactions_; }
    bool has_species(const SpeciesId& id) const;

    friend bool operator==(const ReactionNetwork&, const ReactionNetwork&) = default;

   private:
    ReactionNetwork() = default;
    std::vector<SpeciesId> species_;
    std::vector<Reaction> reactions_;
};

// Net change of one firing of r, as an integer vector over species_order.
std::vector<int> reaction_vector(const Reaction& r,
                                 const std::vector<SpeciesId>& species_order);

// Enzymatic iff the net change is zero in every reaction of the network.
std::map<SpeciesId, SpeciesKind> classify_species(const ReactionNetwork& net);

ReactionNetwork union_networks(const std::vector<ReactionNetwork>& nets);

// A reaction network plus enzyme concentrations, exposing the polynomial
// mass-action right-hand side over the dynamic species. Immutable; rhs()
// is pure and safe to call concurrently.
class MassActionSystem {
   public:
    MassActionSystem(ReactionNetwork net,
                     std::map<SpeciesId, double> enzyme_concentrations);

    const ReactionNetwork& network() const { return net_; }
    const std::map<SpeciesId, double>& enzymes() const { return enzymes_; }
    const std::vector<SpeciesId>& dynamic_order() const { return dynamic_order_; }
    std::optional<int> dynamic_index(const SpeciesId& id) const;

    Eigen::VectorXd rhs(const Eigen::VectorXd& x) const;
    // Polynomial extension without the x >= 0 domain check; integrator
    // stage values may transiently dip below zero.
    Eigen::VectorXd rhs_unchecked(const Eigen::VectorXd& x) const;

    // Copy with some enzyme concentrations replaced (e.g. binding input
    // data to the input species at simulation time).
    MassActionSystem with_enzymes(const std::map<SpeciesId, double>& overrides) const;

   private:
    void build_terms();

    ReactionNetwork net_;
    std::map<SpeciesId, double> enzymes_;
    std::vector<SpeciesId> dynamic_order_;
    std::map<SpeciesId, int> dynamic_index_;

    // rate = coeff * prod x[i]^e over factors; contributes delta to rhs
    struct Term {
        double coeff;
        std::vector<std::pair<int, int>> factors;  // (dynamic index, exponent)
        std::vector<std::pair<int, int>> deltas;   // (dynamic index, net change)
    };
    std::vector<Term> terms_;
};

// v . rhs(x) for each registered left-null candidate v; exact zeros
// indicate conservation laws.
std::vector<double> conservation_residual(
    const MassActionSystem& sys, const Eigen::VectorXd& x,
    const std::vector<std::vector<double>>& invariants);

// Text format: one reaction per line, `A + 2 B -> C @ k`, `0` for the
// empty complex; enzymes as `# enzyme NAME = value` header lines.
std::string to_text(const ReactionNetwork& net);
std::string to_text(const MassActionSystem& sys);
ReactionNetwork network_from_text(const std::string& text);
MassActionSystem system_from_text(const std::string& text);

std::string to_json_string(const ReactionNetwork& net);
std::string to_json_string(const MassActionSystem& sys);
ReactionNetwork network_from_json(const std::string& text);
MassActionSystem system_from_json(const std::string& text);

}  // namespace crnnn
