#include "flowrl/net.hpp"

#include <cmath>
#include <sstream>

#include "flowrl/rng.hpp"

namespace flowrl {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

double silu(double x) { return x / (1.0 + std::exp(-x)); }

double act_forward(Activation a, double x) {
    return a == Activation::Tanh ? std::tanh(x) : silu(x);
}

double act_derivative(Activation a, double pre) {
    if (a == Activation::Tanh) {
        const double th = std::tanh(pre);
        return 1.0 - th * th;
    }
    const double s = 1.0 / (1.0 + std::exp(-pre));
    return s * (1.0 + pre * (1.0 - s));
}

int input_width(const NetSpec& spec) {
    return spec.input_dim + spec.time_embed_dim + spec.cond_embed_dim;
}

}  // namespace

Activation activation_from_string(const std::string& s) {
    if (s == "tanh") return Activation::Tanh;
    if (s == "silu") return Activation::Silu;
    throw ConfigError("unknown activation '" + s + "' (expected tanh or silu)");
}

std::string activation_to_string(Activation a) {
    return a == Activation::Tanh ? "tanh" : "silu";
}

void validate_spec(const NetSpec& spec) {
    if (spec.input_dim < 1) throw ConfigError("net: input_dim must be >= 1");
    if (spec.hidden_widths.empty()) throw ConfigError("net: hidden_widths must be non-empty");
    for (int w : spec.hidden_widths) {
        if (w < 1) throw ConfigError("net: hidden widths must be >= 1");
    }
    if (spec.time_embed_dim < 1) throw ConfigError("net: time_embed_dim must be >= 1");
    if (spec.num_conditions < 1) throw ConfigError("net: num_conditions must be >= 1");
    if (spec.cond_embed_dim < 1) throw ConfigError("net: cond_embed_dim must be >= 1");
}

std::string describe(const NetSpec& spec) {
    std::ostringstream os;
    os << "net(input_dim=" << spec.input_dim << ", hidden=[";
    for (std::size_t i = 0; i < spec.hidden_widths.size(); ++i) {
        if (i) os << ",";
        os << spec.hidden_widths[i];
    }
    os << "], time_embed_dim=" << spec.time_embed_dim
       << ", num_conditions=" << spec.num_conditions
       << ", cond_embed_dim=" << spec.cond_embed_dim
       << ", activation=" << activation_to_string(spec.activation) << ")";
    return os.str();
}

ParamLayout make_layout(const NetSpec& spec) {
    validate_spec(spec);
    ParamLayout layout;
    std::size_t off = 0;
    layout.embed_off = off;
    off += static_cast<std::size_t>(spec.num_conditions) * spec.cond_embed_dim;

    int in = input_width(spec);
    for (int w : spec.hidden_widths) {
        ParamLayout::Dense d;
        d.w_off = off;
        off += static_cast<std::size_t>(w) * in;
        d.b_off = off;
        off += static_cast<std::size_t>(w);
        d.out = w;
        d.in = in;
        layout.layers.push_back(d);
        in = w;
    }
    ParamLayout::Dense out_layer;
    out_layer.w_off = off;
    off += static_cast<std::size_t>(spec.input_dim) * in;
    out_layer.b_off = off;
    off += static_cast<std::size_t>(spec.input_dim);
    out_layer.out = spec.input_dim;
    out_layer.in = in;
    layout.layers.push_back(out_layer);

    layout.total = off;
    return layout;
}

std::size_t param_count(const NetSpec& spec) { return make_layout(spec).total; }

AdamState make_adam_state(std::size_t n, double lr, double beta1, double beta2, double eps) {
    if (!(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0)) {
        throw ConfigError("adam: beta1 and beta2 must lie in (0, 1)");
    }
    AdamState s;
    s.first_moment.assign(n, 0.0);
    s.second_moment.assign(n, 0.0);
    s.step_count = 0;
    s.lr = lr;
    s.beta1 = beta1;
    s.beta2 = beta2;
    s.eps = eps;
    return s;
}

ParamVector init_params(const NetSpec& spec, std::uint64_t seed) {
    const ParamLayout layout = make_layout(spec);
    Rng rng(derive_seed(seed, 0x1a17u));

    ParamVector p;
    p.spec = spec;
    p.values.assign(layout.total, 0.0);

    const std::size_t embed_len =
        static_cast<std::size_t>(spec.num_conditions) * spec.cond_embed_dim;
    for (std::size_t i = 0; i < embed_len; ++i) p.values[layout.embed_off + i] = rng.normal();

    for (const auto& layer : layout.layers) {
        const double std_dev = std::sqrt(2.0 / layer.in);
        const std::size_t w_len = static_cast<std::size_t>(layer.out) * layer.in;
        for (std::size_t i = 0; i < w_len; ++i) {
            p.values[layer.w_off + i] = std_dev * rng.normal();
        }
        // biases stay zero, including the output layer
    }
    return p;
}

Vec time_embedding(double t, int dim) {
    Vec emb(static_cast<std::size_t>(dim));
    for (int j = 0; j < dim; ++j) {
        const int k = j / 2;
        const double w = kTwoPi * std::ldexp(1.0, k);
        emb[j] = (j % 2 == 0) ? std::sin(w * t) : std::cos(w * t);
    }
    return emb;
}

ForwardTrace forward_trace(const ParamVector& params, const Vec& x, double t, int c) {
    const NetSpec& spec = params.spec;
    const ParamLayout layout = make_layout(spec);
    if (params.values.size() != layout.total) {
        throw InputError("forward: parameter vector length does not match spec");
    }
    require_dim(x, static_cast<std::size_t>(spec.input_dim), "forward: x");
    require_finite(x, "forward: x");
    if (!(t >= 0.0 && t <= 1.0)) throw InputError("forward: t must lie in [0, 1]");
    if (c < 0 || c >= spec.num_conditions) {
        throw InputError("forward: condition id " + std::to_string(c) + " out of range [0, " +
                         std::to_string(spec.num_conditions) + ")");
    }

    ForwardTrace trace;
    trace.condition = c;
    trace.input.reserve(static_cast<std::size_t>(input_width(spec)));
    trace.input.insert(trace.input.end(), x.begin(), x.end());
    const Vec te = time_embedding(t, spec.time_embed_dim);
    trace.input.insert(trace.input.end(), te.begin(), te.end());
    const std::size_t ce_off =
        layout.embed_off + static_cast<std::size_t>(c) * spec.cond_embed_dim;
    trace.input.insert(trace.input.end(), params.values.begin() + ce_off,
                       params.values.begin() + ce_off + spec.cond_embed_dim);

    const Vec* cur = &trace.input;
    const std::size_t n_hidden = layout.layers.size() - 1;
    trace.pre.resize(n_hidden);
    trace.post.resize(n_hidden);
    for (std::size_t l = 0; l < n_hidden; ++l) {
        const auto& d = layout.layers[l];
        Vec& pre = trace.pre[l];
        pre.assign(static_cast<std::size_t>(d.out), 0.0);
        for (int i = 0; i < d.out; ++i) {
            const double* w = params.values.data() + d.w_off + static_cast<std::size_t>(i) * d.in;
            double s = params.values[d.b_off + i];
            for (int j = 0; j < d.in; ++j) s += w[j] * (*cur)[j];
            pre[i] = s;
        }
        Vec& post = trace.post[l];
        post.resize(pre.size());
        for (std::size_t i = 0; i < pre.size(); ++i) {
            post[i] = act_forward(spec.activation, pre[i]);
        }
        cur = &post;
    }

    const auto& out = layout.layers.back();
    trace.output.assign(static_cast<std::size_t>(out.out), 0.0);
    for (int i = 0; i < out.out; ++i) {
        const double* w = params.values.data() + out.w_off + static_cast<std::size_t>(i) * out.in;
        double s = params.values[out.b_off + i];
        for (int j = 0; j < out.in; ++j) s += w[j] * (*cur)[j];
        trace.output[i] = s;
    }
    return trace;
}

Vec forward_velocity(const ParamVector& params, const Vec& x, double t, int c) {
    return forward_trace(params, x, t, c).output;
}

void accumulate_backward(const ParamVector& params, const ForwardTrace& trace,
                         const Vec& upstream, Gradients& into) {
    const NetSpec& spec = params.spec;
    const ParamLayout layout = make_layout(spec);
    require_dim(upstream, static_cast<std::size_t>(spec.input_dim), "backward: upstream");
    if (into.values.size() != layout.total) {
        throw InputError("backward: gradient buffer length does not match spec");
    }

    const std::size_t n_hidden = layout.layers.size() - 1;
    Vec delta = upstream;  // gradient w.r.t. the current layer's output

    // output layer
    {
        const auto& d = layout.layers.back();
        const Vec& h = n_hidden == 0 ? trace.input : trace.post.back();
        for (int i = 0; i < d.out; ++i) {
            const std::size_t row = d.w_off + static_cast<std::size_t>(i) * d.in;
            for (int j = 0; j < d.in; ++j) into.values[row + j] += delta[i] * h[j];
            into.values[d.b_off + i] += delta[i];
        }
        Vec next(static_cast<std::size_t>(d.in), 0.0);
        for (int i = 0; i < d.out; ++i) {
            const double* w = params.values.data() + d.w_off + static_cast<std::size_t>(i) * d.in;
            for (int j = 0; j < d.in; ++j) next[j] += w[j] * delta[i];
        }
        delta = std::move(next);
    }

    for (std::size_t l = n_hidden; l-- > 0;) {
        const auto& d = layout.layers[l];
        const Vec& pre = trace.pre[l];
        for (int i = 0; i < d.out; ++i) delta[i] *= act_derivative(spec.activation, pre[i]);
        const Vec& h = l == 0 ? trace.input : trace.post[l - 1];
        for (int i = 0; i < d.out; ++i) {
            const std::size_t row = d.w_off + static_cast<std::size_t>(i) * d.in;
            for (int j = 0; j < d.in; ++j) into.values[row + j] += delta[i] * h[j];
            into.values[d.b_off + i] += delta[i];
        }
        Vec next(static_cast<std::size_t>(d.in), 0.0);
        for (int i = 0; i < d.out; ++i) {
            const double* w = params.values.data() + d.w_off + static_cast<std::size_t>(i) * d.in;
            for (int j = 0; j < d.in; ++j) next[j] += w[j] * delta[i];
        }
        delta = std::move(next);
    }

    // delta now spans [x, time embedding, condition embedding]; only the
    // condition-embedding slice maps back onto parameters.
    const std::size_t ce_in_input =
        static_cast<std::size_t>(spec.input_dim) + spec.time_embed_dim;
    const std::size_t ce_off =
        layout.embed_off + static_cast<std::size_t>(trace.condition) * spec.cond_embed_dim;
    for (int j = 0; j < spec.cond_embed_dim; ++j) {
        into.values[ce_off + j] += delta[ce_in_input + j];
    }
}

Gradients backward_from_trace(const ParamVector& params, const ForwardTrace& trace,
                              const Vec& upstream) {
    Gradients g;
    g.values.assign(params.values.size(), 0.0);
    accumulate_backward(params, trace, upstream, g);
    return g;
}

Gradients backward(const ParamVector& params, const Vec& x, double t, int c,
                   const Vec& upstream) {
    const ForwardTrace trace = forward_trace(params, x, t, c);
    return backward_from_trace(params, trace, upstream);
}

std::pair<ParamVector, AdamState> adam_step(const ParamVector& params, const Gradients& grads,
                                            const AdamState& state) {
    const std::size_t n = params.values.size();
    if (grads.values.size() != n || state.first_moment.size() != n ||
        state.second_moment.size() != n) {
        throw InputError("adam_step: length mismatch between params, grads and state");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(grads.values[i])) {
            throw NumericError("adam_step: non-finite gradient at index " + std::to_string(i));
        }
    }

    ParamVector out = params;
    AdamState st = state;
    st.step_count = state.step_count + 1;
    const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step_count));
    const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step_count));
    for (std::size_t i = 0; i < n; ++i) {
        const double g = grads.values[i];
        st.first_moment[i] = st.beta1 * st.first_moment[i] + (1.0 - st.beta1) * g;
        st.second_moment[i] = st.beta2 * st.second_moment[i] + (1.0 - st.beta2) * g * g;
        const double m_hat = st.first_moment[i] / bc1;
        const double v_hat = st.second_moment[i] / bc2;
        out.values[i] -= st.lr * m_hat / (std::sqrt(v_hat) + st.eps);
    }
    return {std::move(out), std::move(st)};
}

}  // namespace flowrl
