#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sstream>

#include "crnnn/reaction_net.hpp"
#include "doctest.h"

using namespace crnnn;

TEST_CASE("complex stores positive coefficients only") {
    Complex c;
    CHECK(c.empty());
    CHECK(c.order() == 0);
    c.add("X", 1);
    c.add("X", 1);
    c.add("Y", 2);
    CHECK(c.coefficient("X") == 2);
    CHECK(c.coefficient("Y") == 2);
    CHECK(c.coefficient("Z") == 0);
    CHECK(c.order() == 4);
    CHECK_THROWS_AS(c.add("Z", 0), StructureError);
    CHECK_THROWS_AS(c.add("Z", -1), StructureError);
}

TEST_CASE("complex comparison is by content") {
    const Complex a{{"X", 1}, {"Y", 1}};
    Complex b;
    b.add("Y", 1);
    b.add("X", 1);
    CHECK(a == b);
    CHECK(Complex{{"X", 2}} != Complex{{"X", 1}});
}

TEST_CASE("reaction validation") {
    const Complex src{{"X", 1}};
    const Complex tgt{{"Y", 1}};
    CHECK_THROWS_AS(Reaction(src, src), StructureError);  // self-loop
    CHECK_THROWS_AS(Reaction(src, tgt, 0.0), StructureError);
    CHECK_THROWS_AS(Reaction(src, tgt, -2.0), StructureError);
    const Reaction r(src, tgt, 3.0);
    CHECK(r.rate == 3.0);
}

TEST_CASE("reaction vectors of the two-species protein network") {
    // X1 + X2 -> 2 X2 has zeta = (-1, 1); X2 -> X1 has zeta = (1, -1)
    const Reaction r1(Complex{{"X1", 1}, {"X2", 1}}, Complex{{"X2", 2}});
    const Reaction r2(Complex{{"X2", 1}}, Complex{{"X1", 1}});
    const std::vector<SpeciesId> order{"X1", "X2"};
    CHECK(reaction_vector(r1, order) == std::vector<int>{-1, 1});
    CHECK(reaction_vector(r2, order) == std::vector<int>{1, -1});
}

TEST_CASE("species are collected in order of first appearance") {
    const auto net = ReactionNetwork::from_reactions({
        Reaction(Complex{{"B", 1}}, Complex{{"A", 1}}),
        Reaction(Complex{{"C", 1}}, Complex{{"B", 1}}),
    });
    CHECK(net.species() == std::vector<SpeciesId>{"B", "A", "C"});
    CHECK(net.has_species("C"));
    CHECK_FALSE(net.has_species("D"));
}

TEST_CASE("duplicate edges merge, conflicting rates are ambiguous") {
    const Reaction r(Complex{{"X", 1}}, Complex{{"Y", 1}}, 2.0);
    const auto merged = ReactionNetwork::from_reactions({r, r});
    CHECK(merged.reactions().size() == 1);
    CHECK(merged.reactions()[0].rate == 2.0);

    const Reaction conflicting(Complex{{"X", 1}}, Complex{{"Y", 1}}, 5.0);
    CHECK_THROWS_AS(ReactionNetwork::from_reactions({r, conflicting}), AmbiguityError);
}

TEST_CASE("empty complex round-trips through the text format") {
    // 0 -> X1 + X2, X1 <-> X3, X1 + X3 -> X3
    const auto net = ReactionNetwork::from_reactions({
        Reaction(Complex{}, Complex{{"X1", 1}, {"X2", 1}}),
        Reaction(Complex{{"X1", 1}}, Complex{{"X3", 1}}),
        Reaction(Complex{{"X3", 1}}, Complex{{"X1", 1}}),
        Reaction(Complex{{"X1", 1}, {"X3", 1}}, Complex{{"X3", 1}}),
    });
    CHECK(net.reactions().size() == 4);
    const auto round = network_from_text(to_text(net));
    CHECK(round == net);
}

namespace {

// X + Y + E -> 2Y + E (k1), Y + F -> X + F (k2): the canonical enzyme example
ReactionNetwork enzyme_example(double k1 = 1.0, double k2 = 1.0) {
    return ReactionNetwork::from_reactions({
        Reaction(Complex{{"X", 1}, {"Y", 1}, {"E", 1}}, Complex{{"Y", 2}, {"E", 1}}, k1),
        Reaction(Complex{{"Y", 1}, {"F", 1}}, Complex{{"X", 1}, {"F", 1}}, k2),
    });
}

}  // namespace

TEST_CASE("enzymatic species have zero net change in every reaction") {
    const auto kinds = classify_species(enzyme_example());
    CHECK(kinds.at("X") == SpeciesKind::Dynamic);
    CHECK(kinds.at("Y") == SpeciesKind::Dynamic);
    CHECK(kinds.at("E") == SpeciesKind::Enzymatic);
    CHECK(kinds.at("F") == SpeciesKind::Enzymatic);
}

TEST_CASE("adding Z + F -> Z demotes F to dynamic") {
    auto reactions = enzyme_example().reactions();
    reactions.emplace_back(Complex{{"Z", 1}, {"F", 1}}, Complex{{"Z", 1}});
    const auto kinds = classify_species(ReactionNetwork::from_reactions(reactions));
    CHECK(kinds.at("F") == SpeciesKind::Dynamic);
    CHECK(kinds.at("E") == SpeciesKind::Enzymatic);
    CHECK(kinds.at("Z") == SpeciesKind::Enzymatic);
}

TEST_CASE("union merges duplicates and preserves enzyme demotion") {
    const auto a = enzyme_example();
    const auto b = ReactionNetwork::from_reactions(
        {Reaction(Complex{{"Z", 1}, {"F", 1}}, Complex{{"Z", 1}})});
    const auto u = union_networks({a, b});
    CHECK(u.reactions().size() == 3);
    CHECK(union_networks({a, a}) == a);
    const auto kinds = classify_species(u);
    CHECK(kinds.at("F") == SpeciesKind::Dynamic);
}

TEST_CASE("mass-action rhs of the enzyme example") {
    // xdot = -k1 e x y + k2 f y, ydot = +k1 e x y - k2 f y
    const MassActionSystem sys(enzyme_example(2.0, 3.0), {{"E", 0.5}, {"F", 2.0}});
    CHECK(sys.dynamic_order() == std::vector<SpeciesId>{"X", "Y"});
    Eigen::VectorXd x(2);
    x << 2.0, 1.0;  // x = 2, y = 1
    const Eigen::VectorXd f = sys.rhs(x);
    // -2*0.5*2*1 + 3*2*1 = -2 + 6 = 4
    CHECK(f[0] == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(f[1] == doctest::Approx(-4.0).epsilon(1e-14));
}

TEST_CASE("mass-action kinetics uses the source stoichiometry as exponents") {
    // 3X -> X with rate k: xdot = -2 k x^3
    const MassActionSystem sys(
        ReactionNetwork::from_reactions({Reaction(Complex{{"X", 3}}, Complex{{"X", 1}}, 2.0)}),
        {});
    Eigen::VectorXd x(1);
    x << 1.5;
    CHECK(sys.rhs(x)[0] == doctest::Approx(-2.0 * 2.0 * 1.5 * 1.5 * 1.5).epsilon(1e-14));
}

TEST_CASE("rhs rejects negative state, rhs_unchecked extends it") {
    const MassActionSystem sys(enzyme_example(), {{"E", 1.0}, {"F", 1.0}});
    Eigen::VectorXd x(2);
    x << -0.1, 1.0;
    CHECK_THROWS_AS(sys.rhs(x), NumericError);
    CHECK(std::isfinite(sys.rhs_unchecked(x)[0]));
}

TEST_CASE("enzyme bookkeeping") {
    CHECK_THROWS_AS(MassActionSystem(enzyme_example(), {{"E", 1.0}}), StructureError);
    CHECK_THROWS_AS(MassActionSystem(enzyme_example(), {{"E", 1.0}, {"F", -1.0}}),
                    StructureError);
    // dynamic species cannot be assigned an enzyme concentration
    CHECK_THROWS_AS(MassActionSystem(enzyme_example(), {{"E", 1.0}, {"F", 1.0}, {"X", 1.0}}),
                    StructureError);

    const MassActionSystem sys(enzyme_example(), {{"E", 1.0}, {"F", 1.0}});
    const MassActionSystem overridden = sys.with_enzymes({{"F", 4.0}});
    CHECK(overridden.enzymes().at("F") == 4.0);
    CHECK(overridden.enzymes().at("E") == 1.0);
    CHECK_THROWS_AS(sys.with_enzymes({{"Q", 1.0}}), StructureError);
}

TEST_CASE("x + y is conserved in the enzyme example") {
    const MassActionSystem sys(enzyme_example(2.0, 3.0), {{"E", 0.7}, {"F", 0.9}});
    Eigen::VectorXd x(2);
    x << 1.3, 2.6;
    const auto res = conservation_residual(sys, x, {{1.0, 1.0}, {1.0, 0.0}});
    CHECK(res[0] == 0.0);       // conserved
    CHECK(res[1] != 0.0);       // not conserved
}

TEST_CASE("text and json round trips preserve the system") {
    const MassActionSystem sys(enzyme_example(2.0, 0.25), {{"E", 0.1}, {"F", 1.75}});
    const MassActionSystem from_text = system_from_text(to_text(sys));
    CHECK(from_text.network() == sys.network());
    CHECK(from_text.enzymes() == sys.enzymes());

    const MassActionSystem from_json = system_from_json(to_json_string(sys));
    CHECK(from_json.network() == sys.network());
    CHECK(from_json.enzymes() == sys.enzymes());
}

TEST_CASE("text format is exact for non-representable rates") {
    const auto net = ReactionNetwork::from_reactions(
        {Reaction(Complex{{"X", 1}}, Complex{{"Y", 1}}, 0.1)});
    CHECK(network_from_text(to_text(net)).reactions()[0].rate == 0.1);
}

TEST_CASE("text parser reports bad input") {
    CHECK_THROWS_AS(network_from_text("X -> "), ParseError);
    CHECK_THROWS_AS(network_from_text("X + -> Y @ 1"), ParseError);
    CHECK_THROWS_AS(network_from_text("X -> Y @ zebra"), ParseError);
}
