#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "crnnn/errors.hpp"
#include "crnnn/rng.hpp"

namespace crnnn {

struct Architecture {
    std::vector<int> layer_sizes;  // (c_0, ..., c_m), m >= 1

    explicit Architecture(std::vector<int> sizes);
    int depth() const { return static_cast<int>(layer_sizes.size()) - 1; }
    int input_size() const { return layer_sizes.front(); }
    int output_size() const { return layer_sizes.back(); }
};

struct Parameters {
    std::vector<Eigen::MatrixXd> weights;  // W^l is c_l x c_{l-1}, l = 1..m
    std::vector<Eigen::VectorXd> biases;   // length c_l

    void validate_against(const Architecture& arch) const;
};

// Activation kinds. SmoothedRelu(0) is pointwise the ReLU and
// ImplicitRoot(h, 2) is pointwise SmoothedRelu(h); they are kept distinct
// because only h > 0 activations admit a reaction-network realization.
class ActivationSpec {
   public:
    enum class Kind { Sigmoid, Relu, SmoothedRelu, ImplicitRoot };

    static ActivationSpec sigmoid() { return {Kind::Sigmoid, 0.0, 2}; }
    static ActivationSpec relu() { return {Kind::Relu, 0.0, 2}; }
    static ActivationSpec smoothed_relu(double h);
    static ActivationSpec implicit_root(double h, int q);

    Kind kind() const { return kind_; }
    double h() const { return h_; }
    int q() const { return q_; }
    // true when the activation is the positive root of h + y*x - (q-1)x^q
    // with h > 0, i.e. it has a chemical realization
    bool has_ode_form() const;

    friend bool operator==(const ActivationSpec&, const ActivationSpec&) = default;

   private:
    ActivationSpec(Kind k, double h, int q) : kind_(k), h_(h), q_(q) {}
    Kind kind_;
    double h_;
    int q_;
};

double activate(const ActivationSpec& spec, double y);
double activate_derivative(const ActivationSpec& spec, double y);

struct HardwiredNetwork {
    Architecture arch;
    Parameters params;
    ActivationSpec activation;

    HardwiredNetwork(Architecture a, Parameters p, ActivationSpec act);
};

// Gaussian init: W^l entries scaled by 1/sqrt(c_{l-1}), biases unit normal.
HardwiredNetwork random_network(const Architecture& arch, const ActivationSpec& act, Rng& rng);

struct ForwardResult {
    std::vector<Eigen::VectorXd> pre_activations;  // z^l, l = 1..m (index 0 = layer 1)
    std::vector<Eigen::VectorXd> activations;      // a^l, l = 0..m (index 0 = input)

    const Eigen::VectorXd& output() const { return activations.back(); }
};

// i-th entry of W^l a_prev + beta^l
double pre_activation(const HardwiredNetwork& net, int layer, int node,
                      const Eigen::VectorXd& a_prev);

ForwardResult forward(const HardwiredNetwork& net, const Eigen::VectorXd& d);

double quadratic_cost(const Eigen::VectorXd& output, const Eigen::VectorXd& target);

struct Gradients {
    std::vector<Eigen::VectorXd> deltas;       // delta^l
    std::vector<Eigen::VectorXd> grad_biases;  // == deltas
    std::vector<Eigen::MatrixXd> grad_weights;
};

Gradients backprop(const HardwiredNetwork& net, const Eigen::VectorXd& d,
                   const Eigen::VectorXd& target);

// h + rho * x - (q-1) x^q, the scalar ODE whose positive fixed point is the
// node's activation. Only defined for activations with an ODE form.
double activation_ode_rhs(const HardwiredNetwork& net, int layer, int node,
                          const Eigen::VectorXd& a_prev, double x);
double activation_ode_rhs(double h, int q, double rho, double x);

// Parameter file round-trip (JSON: layer_sizes, weights row-major, biases,
// activation {kind, h, q}).
std::string params_to_json_string(const HardwiredNetwork& net);
HardwiredNetwork params_from_json(const std::string& text);

}  // namespace crnnn
