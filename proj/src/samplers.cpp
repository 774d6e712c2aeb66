#include "flowrl/samplers.hpp"

#include <cmath>

#include "flowrl/rng.hpp"

namespace flowrl {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

Trajectory sample_impl(const FieldFn& field, int dim, int c, const Schedule& schedule, double a,
                       std::uint64_t seed) {
    validate_schedule(schedule);
    if (dim < 1) throw InputError("sample: dim must be >= 1");
    if (a < 0.0) throw InputError("sample: noise level must be >= 0");

    Rng rng(derive_seed(seed, 0x5a3d));
    Trajectory traj;
    traj.condition = c;
    traj.x_init = rng.normal_vec(static_cast<std::size_t>(dim));

    const int steps = num_steps(schedule);
    traj.transitions.reserve(static_cast<std::size_t>(steps));
    Vec x = traj.x_init;
    Vec zero(static_cast<std::size_t>(dim), 0.0);
    for (int k = 0; k < steps; ++k) {
        const double t = schedule.grid[k];
        const double dt = schedule.grid[k + 1] - schedule.grid[k];
        const double sig = sigma(a, t, schedule.clamp_delta);
        const Vec noise = sig > 0.0 ? rng.normal_vec(static_cast<std::size_t>(dim)) : zero;
        Transition tr = sde_step(field, x, t, dt, a, noise, schedule.clamp_delta);
        if (!all_finite(tr.x_next)) {
            throw NumericError("sample: non-finite state after step " + std::to_string(k) +
                               " (t = " + std::to_string(t) + ")");
        }
        x = tr.x_next;
        traj.transitions.push_back(std::move(tr));
    }
    traj.x_final = x;
    return traj;
}

}  // namespace

Schedule uniform_schedule(int steps, double clamp_delta) {
    if (steps < 1) throw ConfigError("schedule: num_steps must be >= 1");
    Schedule s;
    s.grid.resize(static_cast<std::size_t>(steps) + 1);
    for (int k = 0; k <= steps; ++k) {
        s.grid[k] = static_cast<double>(steps - k) / static_cast<double>(steps);
    }
    s.clamp_delta = clamp_delta;
    validate_schedule(s);
    return s;
}

Schedule uniform_schedule(int steps) {
    if (steps < 1) throw ConfigError("schedule: num_steps must be >= 1");
    return uniform_schedule(steps, 0.5 / static_cast<double>(steps));
}

void validate_schedule(const Schedule& schedule) {
    if (schedule.grid.size() < 2) throw ConfigError("schedule: grid needs at least two points");
    if (schedule.grid.front() != 1.0 || schedule.grid.back() != 0.0) {
        throw ConfigError("schedule: grid must run from 1 to 0");
    }
    for (std::size_t k = 1; k < schedule.grid.size(); ++k) {
        if (!(schedule.grid[k] < schedule.grid[k - 1])) {
            throw ConfigError("schedule: grid must be strictly decreasing");
        }
    }
    if (!(schedule.clamp_delta > 0.0 && schedule.clamp_delta < 0.5)) {
        throw ConfigError("schedule: clamp_delta must lie in (0, 0.5)");
    }
    const double first_step = schedule.grid[0] - schedule.grid[1];
    if (!(schedule.clamp_delta < first_step)) {
        throw ConfigError("schedule: clamp_delta must be smaller than the first step size");
    }
}

int num_steps(const Schedule& schedule) { return static_cast<int>(schedule.grid.size()) - 1; }

double sigma(double a, double t, double delta) {
    if (a < 0.0) throw InputError("sigma: noise level must be >= 0");
    if (!(t >= 0.0 && t <= 1.0)) throw InputError("sigma: t must lie in [0, 1]");
    if (a == 0.0) return 0.0;
    const double tc = std::min(t, 1.0 - delta);
    return a * std::sqrt(tc / (1.0 - tc));
}

bool chains(const Trajectory& traj) {
    if (traj.transitions.empty()) return false;
    if (traj.transitions.front().x_t != traj.x_init) return false;
    for (std::size_t k = 1; k < traj.transitions.size(); ++k) {
        if (traj.transitions[k].x_t != traj.transitions[k - 1].x_next) return false;
    }
    return traj.transitions.back().x_next == traj.x_final;
}

FieldFn bind_field(const ParamVector& params, int c) {
    return [params, c](const Vec& x, double t) { return forward_velocity(params, x, t, c); };
}

Vec sde_mean(const Vec& x_t, const Vec& v, double t, double sig, double dt) {
    require_dim(v, x_t.size(), "sde_mean: v");
    Vec mean(x_t.size());
    if (sig == 0.0) {
        for (std::size_t i = 0; i < x_t.size(); ++i) mean[i] = x_t[i] + v[i] * dt;
        return mean;
    }
    const double corr = sig * sig / (2.0 * t);
    for (std::size_t i = 0; i < x_t.size(); ++i) {
        mean[i] = x_t[i] + (v[i] + corr * (x_t[i] + (1.0 - t) * v[i])) * dt;
    }
    return mean;
}

double sde_mean_velocity_coeff(double t, double sig, double dt) {
    if (sig == 0.0) return dt;
    return dt * (1.0 + sig * sig * (1.0 - t) / (2.0 * t));
}

Transition sde_step(const FieldFn& field, const Vec& x_t, double t, double dt, double a,
                    const Vec& noise, double delta) {
    if (!(t > 0.0 && t <= 1.0)) {
        throw InputError("sde_step: t must lie in (0, 1] (the drift correction divides by t)");
    }
    if (!(dt < 0.0)) throw InputError("sde_step: dt must be negative");
    if (t + dt < 0.0) throw InputError("sde_step: step overshoots t = 0");
    require_dim(noise, x_t.size(), "sde_step: noise");

    Transition tr;
    tr.t = t;
    tr.x_t = x_t;
    tr.dt = dt;
    tr.sigma = sigma(a, t, delta);

    const Vec v = field(x_t, t);
    require_dim(v, x_t.size(), "sde_step: velocity");
    tr.mean = sde_mean(x_t, v, t, tr.sigma, dt);
    if (tr.sigma == 0.0) {
        tr.x_next = tr.mean;
    } else {
        const double scale = tr.sigma * std::sqrt(-dt);
        tr.x_next.resize(x_t.size());
        for (std::size_t i = 0; i < x_t.size(); ++i) {
            tr.x_next[i] = tr.mean[i] + scale * noise[i];
        }
    }
    return tr;
}

Transition sde_step(const ParamVector& params, int c, const Vec& x_t, double t, double dt,
                    double a, const Vec& noise, double delta) {
    return sde_step(bind_field(params, c), x_t, t, dt, a, noise, delta);
}

Trajectory ode_sample(const FieldFn& field, int dim, int c, const Schedule& schedule,
                      std::uint64_t seed) {
    return sample_impl(field, dim, c, schedule, 0.0, seed);
}

Trajectory ode_sample(const ParamVector& params, int c, const Schedule& schedule,
                      std::uint64_t seed) {
    return sample_impl(bind_field(params, c), params.spec.input_dim, c, schedule, 0.0, seed);
}

Trajectory sde_sample(const FieldFn& field, int dim, int c, const Schedule& schedule, double a,
                      std::uint64_t seed) {
    return sample_impl(field, dim, c, schedule, a, seed);
}

Trajectory sde_sample(const ParamVector& params, int c, const Schedule& schedule, double a,
                      std::uint64_t seed) {
    return sample_impl(bind_field(params, c), params.spec.input_dim, c, schedule, a, seed);
}

double transition_logpdf(const Vec& x_next, const Vec& mean, double sig, double dt) {
    require_dim(mean, x_next.size(), "transition_logpdf: mean");
    if (!(sig > 0.0)) {
        throw NumericError("transition_logpdf: degenerate density (sigma must be > 0)");
    }
    if (dt == 0.0) throw InputError("transition_logpdf: dt must be nonzero");
    const double var = sig * sig * std::abs(dt);
    const double d = static_cast<double>(x_next.size());
    return -0.5 * d * (kLogTwoPi + std::log(var)) - squared_distance(x_next, mean) / (2.0 * var);
}

}  // namespace flowrl
