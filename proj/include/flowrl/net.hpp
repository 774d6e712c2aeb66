#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "flowrl/common.hpp"

namespace flowrl {

enum class Activation { Tanh, Silu };

Activation activation_from_string(const std::string& s);
std::string activation_to_string(Activation a);

// Architecture of the velocity network v(x, t, c): an MLP over
// [x, sinusoidal time embedding, learned condition embedding].
struct NetSpec {
    int input_dim = 2;
    std::vector<int> hidden_widths = {64, 64};
    int time_embed_dim = 16;
    int num_conditions = 1;
    int cond_embed_dim = 8;
    Activation activation = Activation::Silu;

    bool operator==(const NetSpec&) const = default;
};

void validate_spec(const NetSpec& spec);
std::string describe(const NetSpec& spec);

struct ParamLayout {
    struct Dense {
        std::size_t w_off = 0;
        std::size_t b_off = 0;
        int out = 0;
        int in = 0;
    };
    std::size_t embed_off = 0;      // num_conditions x cond_embed_dim, row-major
    std::vector<Dense> layers;      // hidden layers then the output layer
    std::size_t total = 0;
};

ParamLayout make_layout(const NetSpec& spec);
std::size_t param_count(const NetSpec& spec);

// Flat parameter vector. The layout is derived from the embedded spec.
struct ParamVector {
    NetSpec spec;
    Vec values;
};

struct Gradients {
    Vec values;
};

struct AdamState {
    Vec first_moment;
    Vec second_moment;
    long step_count = 0;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

AdamState make_adam_state(std::size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999,
                          double eps = 1e-8);

// Deterministic init: weights N(0, 2/fan_in), biases zero, condition
// embeddings N(0, 1).
ParamVector init_params(const NetSpec& spec, std::uint64_t seed);

Vec time_embedding(double t, int dim);

// Activations and pre-activations kept for the backward pass.
struct ForwardTrace {
    Vec input;
    std::vector<Vec> pre;   // per hidden layer
    std::vector<Vec> post;  // per hidden layer
    Vec output;
    int condition = 0;
};

ForwardTrace forward_trace(const ParamVector& params, const Vec& x, double t, int c);
Vec forward_velocity(const ParamVector& params, const Vec& x, double t, int c);

// d<upstream, v(x,t,c)>/dtheta, reusing a trace from forward_trace.
Gradients backward_from_trace(const ParamVector& params, const ForwardTrace& trace,
                              const Vec& upstream);
void accumulate_backward(const ParamVector& params, const ForwardTrace& trace,
                         const Vec& upstream, Gradients& into);
Gradients backward(const ParamVector& params, const Vec& x, double t, int c, const Vec& upstream);

// Bias-corrected Adam update; inputs are untouched.
std::pair<ParamVector, AdamState> adam_step(const ParamVector& params, const Gradients& grads,
                                            const AdamState& state);

}  // namespace flowrl
