#include "crnnn/neural_net.hpp"

#include <cmath>
#include <sstream>

#include "json.hpp"

namespace crnnn {

Architecture::Architecture(std::vector<int> sizes) : layer_sizes(std::move(sizes)) {
    if (layer_sizes.size() < 2)
        throw StructureError("architecture needs at least an input and an output layer");
    for (int c : layer_sizes)
        if (c <= 0) throw StructureError("layer sizes must be positive");
}

void Parameters::validate_against(const Architecture& arch) const {
    const int m = arch.depth();
    if (static_cast<int>(weights.size()) != m || static_cast<int>(biases.size()) != m)
        throw DimensionError("parameter count does not match architecture depth");
    for (int l = 0; l < m; ++l) {
        if (weights[l].rows() != arch.layer_sizes[l + 1] ||
            weights[l].cols() != arch.layer_sizes[l])
            throw DimensionError("weight matrix shape mismatch at layer " + std::to_string(l + 1));
        if (biases[l].size() != arch.layer_sizes[l + 1])
            throw DimensionError("bias vector length mismatch at layer " + std::to_string(l + 1));
        if (!weights[l].allFinite() || !biases[l].allFinite())
            throw StructureError("non-finite parameter entry at layer " + std::to_string(l + 1));
    }
}

ActivationSpec ActivationSpec::smoothed_relu(double h) {
    if (h < 0.0) throw StructureError("smoothed ReLU requires h >= 0");
    return {Kind::SmoothedRelu, h, 2};
}

ActivationSpec ActivationSpec::implicit_root(double h, int q) {
    if (!(h > 0.0)) throw StructureError("implicit-root activation requires h > 0");
    if (q < 2) throw StructureError("implicit-root activation requires q >= 2");
    return {Kind::ImplicitRoot, h, q};
}

bool ActivationSpec::has_ode_form() const {
    if (kind_ == Kind::ImplicitRoot) return true;
    return kind_ == Kind::SmoothedRelu && h_ > 0.0;
}

namespace {

// h + y x - (q-1) x^q and its x-derivative, in extended precision
long double root_poly(long double h, long double y, int q, long double x) {
    long double xq = 1.0L;
    for (int k = 0; k < q; ++k) xq *= x;
    return h + y * x - (q - 1) * xq;
}

long double root_poly_deriv(long double y, int q, long double x) {
    long double xq1 = 1.0L;
    for (int k = 0; k < q - 1; ++k) xq1 *= x;
    return y - static_cast<long double>(q) * (q - 1) * xq1;
}

// Unique positive root of h + y x - (q-1) x^q (h > 0): expanding bracket,
// bisection, then Newton polish.
double solve_positive_root(double h, double y, int q) {
    const long double hl = h, yl = y;
    long double lo = 0.0L;
    long double hi = 1.0L;
    int guard = 0;
    while (root_poly(hl, yl, q, hi) > 0.0L) {
        hi *= 2.0L;
        if (++guard > 2200)
            throw NumericError("implicit activation root bracket failed: h=" +
                               std::to_string(h) + " y=" + std::to_string(y) +
                               " q=" + std::to_string(q));
    }
    while (hi - lo > 1e-14L) {
        const long double mid = 0.5L * (lo + hi);
        if (mid == lo || mid == hi) break;
        if (root_poly(hl, yl, q, mid) > 0.0L)
            lo = mid;
        else
            hi = mid;
    }
    long double x = 0.5L * (lo + hi);
    for (int k = 0; k < 3; ++k) {
        const long double dg = root_poly_deriv(yl, q, x);
        if (dg == 0.0L) break;
        x -= root_poly(hl, yl, q, x) / dg;
    }
    if (!(x > 0.0L) || !std::isfinite(static_cast<double>(x)))
        throw NumericError("implicit activation root solve diverged: h=" + std::to_string(h) +
                           " y=" + std::to_string(y) + " q=" + std::to_string(q));
    return static_cast<double>(x);
}

double smoothed_relu(double h, double y) {
    if (h == 0.0) return std::max(0.0, y);
    const double s = std::sqrt(y * y + 4.0 * h);
    // avoid cancellation for y < 0
    return y >= 0.0 ? 0.5 * (y + s) : 2.0 * h / (s - y);
}

}  // namespace

double activate(const ActivationSpec& spec, double y) {
    if (!std::isfinite(y)) throw NumericError("activation input is not finite");
    switch (spec.kind()) {
        case ActivationSpec::Kind::Sigmoid:
            return 1.0 / (1.0 + std::exp(-y));
        case ActivationSpec::Kind::Relu:
            return std::max(0.0, y);
        case ActivationSpec::Kind::SmoothedRelu:
            return smoothed_relu(spec.h(), y);
        case ActivationSpec::Kind::ImplicitRoot:
            return solve_positive_root(spec.h(), y, spec.q());
    }
    throw Error("unreachable");
}

double activate_derivative(const ActivationSpec& spec, double y) {
    if (!std::isfinite(y)) throw NumericError("activation input is not finite");
    switch (spec.kind()) {
        case ActivationSpec::Kind::Sigmoid: {
            const double s = 1.0 / (1.0 + std::exp(-y));
            return s * (1.0 - s);
        }
        case ActivationSpec::Kind::Relu:
            return y > 0.0 ? 1.0 : 0.0;  // subgradient 0 at the kink
        case ActivationSpec::Kind::SmoothedRelu: {
            if (spec.h() == 0.0) return y > 0.0 ? 1.0 : 0.0;
            return 0.5 * (1.0 + y / std::sqrt(y * y + 4.0 * spec.h()));
        }
        case ActivationSpec::Kind::ImplicitRoot: {
            const double phi = solve_positive_root(spec.h(), y, spec.q());
            const int q = spec.q();
            double phi_q1 = 1.0;
            for (int k = 0; k < q - 1; ++k) phi_q1 *= phi;
            return -phi / (y - q * (q - 1) * phi_q1);
        }
    }
    throw Error("unreachable");
}

HardwiredNetwork::HardwiredNetwork(Architecture a, Parameters p, ActivationSpec act)
    : arch(std::move(a)), params(std::move(p)), activation(act) {
    params.validate_against(arch);
}

HardwiredNetwork random_network(const Architecture& arch, const ActivationSpec& act, Rng& rng) {
    Parameters p;
    for (int l = 1; l <= arch.depth(); ++l) {
        const int rows = arch.layer_sizes[l];
        const int cols = arch.layer_sizes[l - 1];
        Eigen::MatrixXd w(rows, cols);
        const double scale = 1.0 / std::sqrt(static_cast<double>(cols));
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) w(i, j) = scale * rng.normal();
        Eigen::VectorXd b(rows);
        for (int i = 0; i < rows; ++i) b[i] = rng.normal();
        p.weights.push_back(std::move(w));
        p.biases.push_back(std::move(b));
    }
    return HardwiredNetwork(arch, std::move(p), act);
}

double pre_activation(const HardwiredNetwork& net, int layer, int node,
                      const Eigen::VectorXd& a_prev) {
    if (layer < 1 || layer > net.arch.depth())
        throw DimensionError("layer index out of range");
    const auto& w = net.params.weights[layer - 1];
    if (a_prev.size() != w.cols()) throw DimensionError("previous-layer vector has wrong length");
    if (node < 0 || node >= w.rows()) throw DimensionError("node index out of range");
    return w.row(node).dot(a_prev) + net.params.biases[layer - 1][node];
}

ForwardResult forward(const HardwiredNetwork& net, const Eigen::VectorXd& d) {
    if (d.size() != net.arch.input_size())
        throw DimensionError("input vector has wrong length");
    ForwardResult r;
    r.activations.push_back(d);
    for (int l = 0; l < net.arch.depth(); ++l) {
        Eigen::VectorXd z = net.params.weights[l] * r.activations.back() + net.params.biases[l];
        Eigen::VectorXd a =
            z.unaryExpr([&](double y) { return activate(net.activation, y); });
        r.pre_activations.push_back(std::move(z));
        r.activations.push_back(std::move(a));
    }
    return r;
}

double quadratic_cost(const Eigen::VectorXd& output, const Eigen::VectorXd& target) {
    if (output.size() != target.size())
        throw DimensionError("output and target have different lengths");
    return 0.5 * (output - target).squaredNorm();
}

Gradients backprop(const HardwiredNetwork& net, const Eigen::VectorXd& d,
                   const Eigen::VectorXd& target) {
    const ForwardResult fwd = forward(net, d);
    const int m = net.arch.depth();
    if (target.size() != net.arch.output_size())
        throw DimensionError("target vector has wrong length");

    Gradients g;
    g.deltas.resize(m);
    g.grad_biases.resize(m);
    g.grad_weights.resize(m);

    // quadratic cost: grad wrt a^m is a^m - tau
    Eigen::VectorXd delta =
        (fwd.activations[m] - target).cwiseProduct(fwd.pre_activations[m - 1].unaryExpr(
            [&](double y) { return activate_derivative(net.activation, y); }));
    for (int l = m - 1; l >= 0; --l) {
        g.deltas[l] = delta;
        g.grad_biases[l] = delta;
        g.grad_weights[l] = delta * fwd.activations[l].transpose();
        if (l > 0) {
            delta = (net.params.weights[l].transpose() * delta)
                        .cwiseProduct(fwd.pre_activations[l - 1].unaryExpr([&](double y) {
                            return activate_derivative(net.activation, y);
                        }));
        }
    }
    return g;
}

double activation_ode_rhs(double h, int q, double rho, double x) {
    double xq = 1.0;
    for (int k = 0; k < q; ++k) xq *= x;
    return h + rho * x - (q - 1) * xq;
}

double activation_ode_rhs(const HardwiredNetwork& net, int layer, int node,
                          const Eigen::VectorXd& a_prev, double x) {
    if (!net.activation.has_ode_form())
        throw Error("activation has no reaction-network ODE form (needs h > 0)");
    return activation_ode_rhs(net.activation.h(), net.activation.q(),
                              pre_activation(net, layer, node, a_prev), x);
}

namespace {

using nlohmann::json;

std::string kind_name(ActivationSpec::Kind k) {
    switch (k) {
        case ActivationSpec::Kind::Sigmoid: return "sigmoid";
        case ActivationSpec::Kind::Relu: return "relu";
        case ActivationSpec::Kind::SmoothedRelu: return "smoothed_relu";
        case ActivationSpec::Kind::ImplicitRoot: return "implicit_root";
    }
    throw Error("unreachable");
}

ActivationSpec spec_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "sigmoid") return ActivationSpec::sigmoid();
    if (kind == "relu") return ActivationSpec::relu();
    if (kind == "smoothed_relu") return ActivationSpec::smoothed_relu(j.at("h").get<double>());
    if (kind == "implicit_root")
        return ActivationSpec::implicit_root(j.at("h").get<double>(), j.at("q").get<int>());
    throw ParseError("unknown activation kind '" + kind + "'");
}

}  // namespace

std::string params_to_json_string(const HardwiredNetwork& net) {
    json j;
    j["layer_sizes"] = net.arch.layer_sizes;
    j["activation"] = {{"kind", kind_name(net.activation.kind())},
                       {"h", net.activation.h()},
                       {"q", net.activation.q()}};
    j["weights"] = json::array();
    j["biases"] = json::array();
    for (std::size_t l = 0; l < net.params.weights.size(); ++l) {
        const auto& w = net.params.weights[l];
        json rows = json::array();
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
            json row = json::array();
            for (Eigen::Index jj = 0; jj < w.cols(); ++jj) row.push_back(w(i, jj));
            rows.push_back(std::move(row));
        }
        j["weights"].push_back(std::move(rows));
        json b = json::array();
        for (Eigen::Index i = 0; i < net.params.biases[l].size(); ++i)
            b.push_back(net.params.biases[l][i]);
        j["biases"].push_back(std::move(b));
    }
    return j.dump(2);
}

HardwiredNetwork params_from_json(const std::string& text) {
    try {
        const json j = json::parse(text);
        Architecture arch(j.at("layer_sizes").get<std::vector<int>>());
        Parameters p;
        for (int l = 0; l < arch.depth(); ++l) {
            const auto& jw = j.at("weights").at(l);
            Eigen::MatrixXd w(arch.layer_sizes[l + 1], arch.layer_sizes[l]);
            for (Eigen::Index i = 0; i < w.rows(); ++i)
                for (Eigen::Index c = 0; c < w.cols(); ++c)
                    w(i, c) = jw.at(i).at(c).get<double>();
            const auto& jb = j.at("biases").at(l);
            Eigen::VectorXd b(arch.layer_sizes[l + 1]);
            for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = jb.at(i).get<double>();
            p.weights.push_back(std::move(w));
            p.biases.push_back(std::move(b));
        }
        return HardwiredNetwork(std::move(arch), std::move(p),
                                spec_from_json(j.at("activation")));
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad network parameter JSON: ") + e.what());
    } catch (const ParseError&) {
        throw;
    } catch (const Error& e) {
        throw ParseError(std::string("bad network parameter JSON: ") + e.what());
    }
}

}  // namespace crnnn
