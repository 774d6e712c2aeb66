#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "flowrl/net.hpp"

namespace flowrl {

// Integration grid t_0 = 1 > t_1 > ... > t_T = 0 plus the clamp delta that
// keeps sigma finite at t = 1.
struct Schedule {
    Vec grid;
    double clamp_delta = 0.0;
};

// Uniform grid with T steps; delta defaults to half the step size.
Schedule uniform_schedule(int num_steps);
Schedule uniform_schedule(int num_steps, double clamp_delta);
void validate_schedule(const Schedule& schedule);
int num_steps(const Schedule& schedule);

// sigma_t = a * sqrt(t'/(1-t')) with t' = min(t, 1 - delta).
double sigma(double a, double t, double delta);

// One integration step. sigma == 0 marks a deterministic (ODE) step.
struct Transition {
    double t = 0.0;
    Vec x_t;
    Vec mean;
    double sigma = 0.0;
    double dt = 0.0;  // signed, negative (time runs 1 -> 0)
    Vec x_next;
};

struct Trajectory {
    int condition = 0;
    Vec x_init;   // draw at t = 1
    std::vector<Transition> transitions;
    Vec x_final;  // state at t = 0
    std::optional<double> reward;
};

// True when every transition's x_next equals the next transition's x_t and
// the endpoints match x_init / x_final.
bool chains(const Trajectory& traj);

// Velocity field with the condition already bound: (x, t) -> v.
using FieldFn = std::function<Vec(const Vec& x, double t)>;
FieldFn bind_field(const ParamVector& params, int c);

// Mean of the next state under the stochastic update rule:
//   mean = x_t + [v + (sig^2/(2t)) * (x_t + (1-t)*v)] * dt.
// The raw t appears here; the clamp applies only inside sigma.
Vec sde_mean(const Vec& x_t, const Vec& v, double t, double sig, double dt);

// Derivative of each mean coordinate w.r.t. the same velocity coordinate,
// used when backpropagating through sde_mean.
double sde_mean_velocity_coeff(double t, double sig, double dt);

Transition sde_step(const FieldFn& field, const Vec& x_t, double t, double dt, double a,
                    const Vec& noise, double delta);
Transition sde_step(const ParamVector& params, int c, const Vec& x_t, double t, double dt,
                    double a, const Vec& noise, double delta);

// Euler integration of dx = v dt from t=1 (x ~ N(0, I)) down to t=0.
Trajectory ode_sample(const FieldFn& field, int dim, int c, const Schedule& schedule,
                      std::uint64_t seed);
Trajectory ode_sample(const ParamVector& params, int c, const Schedule& schedule,
                      std::uint64_t seed);

// Stochastic counterpart; a = 0 reproduces ode_sample bit for bit.
Trajectory sde_sample(const FieldFn& field, int dim, int c, const Schedule& schedule, double a,
                      std::uint64_t seed);
Trajectory sde_sample(const ParamVector& params, int c, const Schedule& schedule, double a,
                      std::uint64_t seed);

// Log density of x_next under N(mean, sig^2*|dt|*I).
double transition_logpdf(const Vec& x_next, const Vec& mean, double sig, double dt);

}  // namespace flowrl
