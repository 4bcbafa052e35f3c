#include "crnnn/reaction_net.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <set>
#include <sstream>

#include "json.hpp"

namespace crnnn {

namespace {

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

Complex::Complex(std::initializer_list<std::pair<const SpeciesId, int>> terms) {
    for (const auto& [id, c] : terms) add(id, c);
}

void Complex::add(const SpeciesId& id, int count) {
    if (count <= 0)
        throw StructureError("complex coefficient must be positive for species '" + id + "'");
    coeffs_[id] += count;
}

int Complex::coefficient(const SpeciesId& id) const {
    auto it = coeffs_.find(id);
    return it == coeffs_.end() ? 0 : it->second;
}

int Complex::order() const {
    int n = 0;
    for (const auto& [id, c] : coeffs_) n += c;
    return n;
}

Reaction::Reaction(Complex src, Complex tgt, double rate_constant)
    : source(std::move(src)), target(std::move(tgt)), rate(rate_constant) {
    if (source == target)
        throw StructureError("reaction source and target complexes are identical (self-loop)");
    if (!(rate > 0.0))
        throw StructureError("rate constant must be positive, got " + format_double(rate));
}

ReactionNetwork ReactionNetwork::from_reactions(std::vector<Reaction> reactions) {
    if (reactions.empty()) throw StructureError("a reaction network needs at least one reaction");

    std::vector<Reaction> merged;
    std::map<std::pair<Complex, Complex>, std::size_t> edge_index;
    for (auto& r : reactions) {
        auto [it, inserted] = edge_index.try_emplace({r.source, r.target}, merged.size());
        if (inserted) {
            merged.push_back(std::move(r));
        } else if (merged[it->second].rate != r.rate) {
            throw AmbiguityError("conflicting rate constants for one reaction edge: " +
                                 format_double(merged[it->second].rate) + " vs " +
                                 format_double(r.rate));
        }
    }

    ReactionNetwork net;
    std::set<SpeciesId> seen;
    for (const auto& r : merged) {
        for (const Complex* c : {&r.source, &r.target}) {
            for (const auto& [id, coef] : c->coefficients()) {
                if (seen.insert(id).second) net.species_.push_back(id);
            }
        }
    }
    net.reactions_ = std::move(merged);
    return net;
}

bool ReactionNetwork::has_species(const SpeciesId& id) const {
    return std::find(species_.begin(), species_.end(), id) != species_.end();
}

std::vector<int> reaction_vector(const Reaction& r,
                                 const std::vector<SpeciesId>& species_order) {
    for (const Complex* c : {&r.source, &r.target}) {
        for (const auto& [id, coef] : c->coefficients()) {
            if (std::find(species_order.begin(), species_order.end(), id) ==
                species_order.end())
                throw StructureError("species '" + id + "' not in the given ordering");
        }
    }
    std::vector<int> zeta(species_order.size());
    for (std::size_t i = 0; i < species_order.size(); ++i)
        zeta[i] = r.target.coefficient(species_order[i]) -
                  r.source.coefficient(species_order[i]);
    return zeta;
}

std::map<SpeciesId, SpeciesKind> classify_species(const ReactionNetwork& net) {
    std::map<SpeciesId, SpeciesKind> kinds;
    for (const auto& id : net.species()) kinds[id] = SpeciesKind::Enzymatic;
    for (const auto& r : net.reactions()) {
        for (const Complex* c : {&r.source, &r.target}) {
            for (const auto& [id, coef] : c->coefficients()) {
                if (r.target.coefficient(id) != r.source.coefficient(id))
                    kinds[id] = SpeciesKind::Dynamic;
            }
        }
    }
    return kinds;
}

ReactionNetwork union_networks(const std::vector<ReactionNetwork>& nets) {
    std::vector<Reaction> all;
    for (const auto& n : nets)
        all.insert(all.end(), n.reactions().begin(), n.reactions().end());
    return ReactionNetwork::from_reactions(std::move(all));
}

MassActionSystem::MassActionSystem(ReactionNetwork net,
                                   std::map<SpeciesId, double> enzyme_concentrations)
    : net_(std::move(net)), enzymes_(std::move(enzyme_concentrations)) {
    const auto kinds = classify_species(net_);
    for (const auto& id : net_.species()) {
        if (kinds.at(id) == SpeciesKind::Dynamic) {
            dynamic_index_[id] = static_cast<int>(dynamic_order_.size());
            dynamic_order_.push_back(id);
        } else {
            auto it = enzymes_.find(id);
            if (it == enzymes_.end())
                throw StructureError("missing concentration for enzymatic species '" + id + "'");
            if (it->second < 0.0)
                throw StructureError("negative concentration for enzyme '" + id + "'");
        }
    }
    for (const auto& [id, v] : enzymes_) {
        auto it = kinds.find(id);
        if (it == kinds.end() || it->second == SpeciesKind::Dynamic)
            throw StructureError("'" + id + "' is not an enzymatic species of this network");
    }
    build_terms();
}

void MassActionSystem::build_terms() {
    terms_.clear();
    for (const auto& r : net_.reactions()) {
        Term t;
        t.coeff = r.rate;
        for (const auto& [id, coef] : r.source.coefficients()) {
            auto it = dynamic_index_.find(id);
            if (it == dynamic_index_.end()) {
                t.coeff *= std::pow(enzymes_.at(id), coef);
            } else {
                t.factors.emplace_back(it->second, coef);
            }
        }
        std::map<int, int> delta;
        for (const auto& [id, coef] : r.target.coefficients()) {
            auto it = dynamic_index_.find(id);
            if (it != dynamic_index_.end()) delta[it->second] += coef;
        }
        for (const auto& [id, coef] : r.source.coefficients()) {
            auto it = dynamic_index_.find(id);
            if (it != dynamic_index_.end()) delta[it->second] -= coef;
        }
        for (const auto& [idx, d] : delta)
            if (d != 0) t.deltas.emplace_back(idx, d);
        if (!t.deltas.empty() && t.coeff != 0.0) terms_.push_back(std::move(t));
    }
}

std::optional<int> MassActionSystem::dynamic_index(const SpeciesId& id) const {
    auto it = dynamic_index_.find(id);
    if (it == dynamic_index_.end()) return std::nullopt;
    return it->second;
}

Eigen::VectorXd MassActionSystem::rhs(const Eigen::VectorXd& x) const {
    if (x.size() != static_cast<Eigen::Index>(dynamic_order_.size()))
        throw DimensionError("state vector has wrong dimension");
    for (Eigen::Index i = 0; i < x.size(); ++i)
        if (x[i] < 0.0)
            throw NumericError("negative concentration in rhs input: " + dynamic_order_[i] +
                        " = " + format_double(x[i]));
    return rhs_unchecked(x);
}

Eigen::VectorXd MassActionSystem::rhs_unchecked(const Eigen::VectorXd& x) const {
    if (x.size() != static_cast<Eigen::Index>(dynamic_order_.size()))
        throw DimensionError("state vector has wrong dimension");
    Eigen::VectorXd dx = Eigen::VectorXd::Zero(x.size());
    for (const auto& t : terms_) {
        double rate = t.coeff;
        for (const auto& [idx, e] : t.factors) {
            double xi = x[idx];
            for (int k = 0; k < e; ++k) rate *= xi;
        }
        for (const auto& [idx, d] : t.deltas) dx[idx] += rate * d;
    }
    return dx;
}

MassActionSystem MassActionSystem::with_enzymes(
    const std::map<SpeciesId, double>& overrides) const {
    auto enz = enzymes_;
    for (const auto& [id, v] : overrides) {
        if (enz.find(id) == enz.end())
            throw StructureError("'" + id + "' is not an enzymatic species of this system");
        enz[id] = v;
    }
    return MassActionSystem(net_, std::move(enz));
}

std::vector<double> conservation_residual(
    const MassActionSystem& sys, const Eigen::VectorXd& x,
    const std::vector<std::vector<double>>& invariants) {
    const Eigen::VectorXd dx = sys.rhs(x);
    std::vector<double> out;
    out.reserve(invariants.size());
    for (const auto& v : invariants) {
        if (v.size() != static_cast<std::size_t>(dx.size()))
            throw DimensionError("invariant vector has wrong dimension");
        double s = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) s += v[i] * dx[static_cast<Eigen::Index>(i)];
        out.push_back(s);
    }
    return out;
}

// ---------------------------------------------------------------------------
// serialization

namespace {

std::string complex_to_text(const Complex& c) {
    if (c.empty()) return "0";
    std::string out;
    bool first = true;
    for (const auto& [id, coef] : c.coefficients()) {
        if (!first) out += " + ";
        first = false;
        if (coef != 1) out += std::to_string(coef) + " ";
        out += id;
    }
    return out;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& text, int lineno) {
    const std::string t = trim(text);
    try {
        std::size_t used = 0;
        const double v = std::stod(t, &used);
        if (used != t.size())
            throw ParseError("line " + std::to_string(lineno) + ": trailing junk in number '" +
                             t + "'");
        return v;
    } catch (const std::invalid_argument&) {
        throw ParseError("line " + std::to_string(lineno) + ": bad number '" + t + "'");
    } catch (const std::out_of_range&) {
        throw ParseError("line " + std::to_string(lineno) + ": number out of range '" + t +
                         "'");
    }
}

Complex complex_from_text(const std::string& text) {
    const std::string t = trim(text);
    if (t.empty()) throw ParseError("empty complex (use '0' for the empty complex)");
    if (t == "0") return Complex{};
    Complex c;
    std::size_t pos = 0;
    while (pos < t.size()) {
        auto plus = t.find('+', pos);
        std::string term = trim(t.substr(pos, plus == std::string::npos ? plus : plus - pos));
        if (term.empty()) throw ParseError("empty term in complex '" + t + "'");
        int coef = 1;
        std::size_t i = 0;
        if (std::isdigit(static_cast<unsigned char>(term[0]))) {
            auto [p, ec] = std::from_chars(term.data(), term.data() + term.size(), coef);
            if (ec != std::errc{}) throw ParseError("bad coefficient in '" + term + "'");
            i = static_cast<std::size_t>(p - term.data());
        }
        std::string name = trim(term.substr(i));
        if (name.empty()) throw ParseError("missing species name in '" + term + "'");
        c.add(name, coef);
        if (plus == std::string::npos) break;
        pos = plus + 1;
        if (trim(t.substr(pos)).empty())
            throw ParseError("dangling '+' in complex '" + t + "'");
    }
    return c;
}

void write_reactions(std::ostringstream& os, const ReactionNetwork& net) {
    for (const auto& r : net.reactions()) {
        os << complex_to_text(r.source) << " -> " << complex_to_text(r.target) << " @ "
           << format_double(r.rate) << "\n";
    }
}

}  // namespace

std::string to_text(const ReactionNetwork& net) {
    std::ostringstream os;
    write_reactions(os, net);
    return os.str();
}

std::string to_text(const MassActionSystem& sys) {
    std::ostringstream os;
    for (const auto& [id, v] : sys.enzymes())
        os << "# enzyme " << id << " = " << format_double(v) << "\n";
    write_reactions(os, sys.network());
    return os.str();
}

namespace {

struct ParsedText {
    std::vector<Reaction> reactions;
    std::map<SpeciesId, double> enzymes;
};

ParsedText parse_text(const std::string& text) {
    ParsedText out;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty()) continue;
        if (t.rfind("# enzyme ", 0) == 0) {
            auto eq = t.find('=');
            if (eq == std::string::npos)
                throw ParseError("line " + std::to_string(lineno) + ": bad enzyme header");
            std::string name = trim(t.substr(9, eq - 9));
            out.enzymes[name] = parse_double(t.substr(eq + 1), lineno);
            continue;
        }
        if (t[0] == '#') continue;
        auto arrow = t.find("->");
        if (arrow == std::string::npos)
            throw ParseError("line " + std::to_string(lineno) + ": missing '->'");
        auto at = t.find('@', arrow);
        double rate = 1.0;
        std::string target_part;
        if (at == std::string::npos) {
            target_part = t.substr(arrow + 2);
        } else {
            target_part = t.substr(arrow + 2, at - arrow - 2);
            rate = parse_double(t.substr(at + 1), lineno);
        }
        out.reactions.emplace_back(complex_from_text(t.substr(0, arrow)),
                                   complex_from_text(target_part), rate);
    }
    return out;
}

}  // namespace

ReactionNetwork network_from_text(const std::string& text) {
    return ReactionNetwork::from_reactions(parse_text(text).reactions);
}

MassActionSystem system_from_text(const std::string& text) {
    auto parsed = parse_text(text);
    return MassActionSystem(ReactionNetwork::from_reactions(std::move(parsed.reactions)),
                            std::move(parsed.enzymes));
}

namespace {

using nlohmann::json;

json complex_to_json(const Complex& c) {
    json j = json::object();
    for (const auto& [id, coef] : c.coefficients()) j[id] = coef;
    return j;
}

Complex complex_from_json(const json& j) {
    Complex c;
    for (auto it = j.begin(); it != j.end(); ++it) c.add(it.key(), it.value().get<int>());
    return c;
}

json network_to_json(const ReactionNetwork& net) {
    json j;
    j["species"] = net.species();
    j["reactions"] = json::array();
    for (const auto& r : net.reactions()) {
        j["reactions"].push_back({{"source", complex_to_json(r.source)},
                                  {"target", complex_to_json(r.target)},
                                  {"rate", r.rate}});
    }
    return j;
}

std::vector<Reaction> reactions_from_json(const json& j) {
    std::vector<Reaction> rs;
    for (const auto& jr : j.at("reactions"))
        rs.emplace_back(complex_from_json(jr.at("source")), complex_from_json(jr.at("target")),
                        jr.at("rate").get<double>());
    return rs;
}

}  // namespace

std::string to_json_string(const ReactionNetwork& net) {
    return network_to_json(net).dump(2);
}

std::string to_json_string(const MassActionSystem& sys) {
    json j = network_to_json(sys.network());
    j["enzymes"] = sys.enzymes();
    return j.dump(2);
}

ReactionNetwork network_from_json(const std::string& text) {
    try {
        return ReactionNetwork::from_reactions(reactions_from_json(json::parse(text)));
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad network JSON: ") + e.what());
    }
}

MassActionSystem system_from_json(const std::string& text) {
    try {
        const json j = json::parse(text);
        std::map<SpeciesId, double> enz;
        if (j.contains("enzymes")) enz = j.at("enzymes").get<std::map<SpeciesId, double>>();
        return MassActionSystem(ReactionNetwork::from_reactions(reactions_from_json(j)),
                                std::move(enz));
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad system JSON: ") + e.what());
    }
}

}  // namespace crnnn
