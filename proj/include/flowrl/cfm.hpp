#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "flowrl/checkpoint.hpp"
#include "flowrl/net.hpp"
#include "flowrl/tasks.hpp"

namespace flowrl {

// Linear interpolant between data x and noise eps:
//   x_t = (1-t)*x + t*eps,  target velocity v = eps - x.
std::pair<Vec, Vec> interpolate(const Vec& x, const Vec& eps, double t);

struct CfmBatch {
    std::vector<Vec> x;
    std::vector<int> c;
    std::vector<Vec> eps;
    Vec t;
};

void validate_batch(const CfmBatch& batch, const NetSpec& spec);

// Fresh batch for one training step: conditions uniform, x from the task,
// eps standard normal, t uniform on [0,1].
CfmBatch draw_batch(const Task& task, int num_conds, int batch_size, Rng& rng);

struct LossResult {
    double loss = 0.0;
    Gradients grads;
};

// Mean squared residual over the batch plus its parameter gradient.
LossResult cfm_loss(const ParamVector& params, const CfmBatch& batch);

struct TrainConfig {
    int steps = 20000;
    int batch_size = 256;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    int log_every = 1;
    bool deterministic = false;
};

struct TrainLogRow {
    int step = 0;
    double loss = 0.0;
    double wall_ms = 0.0;
};

Checkpoint pretrain(const Task& task, const NetSpec& spec, const TrainConfig& config,
                    std::vector<TrainLogRow>* log = nullptr);

}  // namespace flowrl
