#pragma once

#include <cstdint>
#include <utility>
#include <variant>
#include <vector>

#include "flowrl/common.hpp"
#include "flowrl/linalg.hpp"
#include "flowrl/rng.hpp"

namespace flowrl {

// Conditional Gaussian data: condition c draws from N(mean[c], cov[c]).
struct GaussianTask {
    struct Condition {
        Vec mean;
        Mat cov;
    };
    std::vector<Condition> conditions;
};

// Mixture of Gaussian modes on a circle. Modes sit at angles
// pi/num_modes + 2*pi*k/num_modes; condition c draws uniformly from the
// modes whose center angle falls inside arcs[c].
struct Arc {
    double start = 0.0;  // in [0, 2*pi)
    double width = 0.0;  // in (0, 2*pi]
};

struct RingTask {
    int num_modes = 8;
    double radius = 2.0;
    double mode_std = 0.12;
    std::vector<Arc> arcs;  // one per condition
};

using Task = std::variant<GaussianTask, RingTask>;

void validate_task(const GaussianTask& task);
void validate_task(const RingTask& task);
void validate_task(const Task& task);

int num_conditions(const Task& task);
int task_dim(const Task& task);

double mode_angle(const RingTask& task, int k);
bool arc_contains(const Arc& arc, double angle);
// Mode indices whose center lies in arcs[c].
std::vector<int> modes_in_arc(const RingTask& task, int c);

std::vector<Vec> sample_data(const GaussianTask& task, int c, int n, std::uint64_t seed);
std::vector<Vec> sample_data(const RingTask& task, int c, int n, std::uint64_t seed);
std::vector<Vec> sample_data(const Task& task, int c, int n, std::uint64_t seed);

// Single draw from an external generator, for training loops that own an Rng.
Vec sample_one(const GaussianTask& task, int c, Rng& rng);
Vec sample_one(const RingTask& task, int c, Rng& rng);
Vec sample_one(const Task& task, int c, Rng& rng);

// Mean-square-optimal velocity E[eps - x | x_t] for Gaussian data under the
// linear interpolant x_t = (1-t)x + t*eps:
//   m_t = (1-t)*mu,  C_t = (1-t)^2*Sigma + t^2*I,
//   v*(x_t) = -mu + (t*I - (1-t)*Sigma) * C_t^{-1} * (x_t - m_t).
Vec oracle_velocity(const GaussianTask& task, const Vec& x_t, double t, int c);

// Marginal of x_t: N((1-t)*mu, (1-t)^2*Sigma + t^2*I).
std::pair<Vec, Mat> oracle_marginal(const GaussianTask& task, double t, int c);

}  // namespace flowrl
