#include "flowrl/cfm.hpp"

#include <chrono>
#include <cmath>

#include "flowrl/textio.hpp"

namespace flowrl {

std::pair<Vec, Vec> interpolate(const Vec& x, const Vec& eps, double t) {
    require_dim(eps, x.size(), "interpolate: eps");
    if (!(t >= 0.0 && t <= 1.0)) throw InputError("interpolate: t must lie in [0, 1]");
    Vec x_t(x.size());
    Vec v(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        x_t[i] = (1.0 - t) * x[i] + t * eps[i];
        v[i] = eps[i] - x[i];
    }
    return {std::move(x_t), std::move(v)};
}

void validate_batch(const CfmBatch& batch, const NetSpec& spec) {
    const std::size_t n = batch.x.size();
    if (n == 0) throw InputError("cfm batch: empty");
    if (batch.c.size() != n || batch.eps.size() != n || batch.t.size() != n) {
        throw InputError("cfm batch: x, c, eps, t must have equal lengths");
    }
    const std::size_t d = static_cast<std::size_t>(spec.input_dim);
    for (std::size_t i = 0; i < n; ++i) {
        require_dim(batch.x[i], d, "cfm batch: x");
        require_dim(batch.eps[i], d, "cfm batch: eps");
        if (!(batch.t[i] >= 0.0 && batch.t[i] <= 1.0)) {
            throw InputError("cfm batch: t must lie in [0, 1]");
        }
        if (batch.c[i] < 0 || batch.c[i] >= spec.num_conditions) {
            throw InputError("cfm batch: condition id out of range");
        }
    }
}

CfmBatch draw_batch(const Task& task, int num_conds, int batch_size, Rng& rng) {
    const std::size_t d = static_cast<std::size_t>(task_dim(task));
    CfmBatch batch;
    batch.x.reserve(static_cast<std::size_t>(batch_size));
    batch.c.reserve(static_cast<std::size_t>(batch_size));
    batch.eps.reserve(static_cast<std::size_t>(batch_size));
    batch.t.reserve(static_cast<std::size_t>(batch_size));
    for (int i = 0; i < batch_size; ++i) {
        const int c = rng.uniform_int(num_conds);
        batch.c.push_back(c);
        batch.x.push_back(sample_one(task, c, rng));
        batch.eps.push_back(rng.normal_vec(d));
        batch.t.push_back(rng.uniform());
    }
    return batch;
}

LossResult cfm_loss(const ParamVector& params, const CfmBatch& batch) {
    validate_batch(batch, params.spec);
    const std::size_t n = batch.x.size();
    const double scale = 2.0 / static_cast<double>(n);

    LossResult res;
    res.grads.values.assign(params.values.size(), 0.0);
    Vec upstream(batch.x[0].size());
    for (std::size_t i = 0; i < n; ++i) {
        const auto [x_t, target] = interpolate(batch.x[i], batch.eps[i], batch.t[i]);
        const ForwardTrace trace = forward_trace(params, x_t, batch.t[i], batch.c[i]);
        double sq = 0.0;
        for (std::size_t k = 0; k < upstream.size(); ++k) {
            const double r = trace.output[k] - target[k];
            sq += r * r;
            upstream[k] = scale * r;
        }
        res.loss += sq / static_cast<double>(n);
        accumulate_backward(params, trace, upstream, res.grads);
    }
    if (!std::isfinite(res.loss)) throw NumericError("cfm_loss: non-finite loss");
    return res;
}

Checkpoint pretrain(const Task& task, const NetSpec& spec, const TrainConfig& config,
                    std::vector<TrainLogRow>* log) {
    validate_task(task);
    validate_spec(spec);
    if (config.steps < 1) throw ConfigError("pretrain: steps must be >= 1");
    if (config.batch_size < 1) throw ConfigError("pretrain: batch_size must be >= 1");
    if (!(config.lr > 0.0)) throw ConfigError("pretrain: lr must be > 0");
    if (config.log_every < 1) throw ConfigError("pretrain: log_every must be >= 1");
    const int conds = num_conditions(task);
    if (spec.num_conditions != conds) {
        throw ConfigError("pretrain: net expects " + std::to_string(spec.num_conditions) +
                          " conditions but the task has " + std::to_string(conds));
    }
    if (spec.input_dim != task_dim(task)) {
        throw ConfigError("pretrain: net input_dim does not match the task dimension");
    }

    ParamVector params = init_params(spec, config.seed);
    AdamState opt = make_adam_state(params.values.size(), config.lr);
    Rng rng(derive_seed(config.seed, 0xba7c4));

    const auto start = std::chrono::steady_clock::now();
    for (int step = 0; step < config.steps; ++step) {
        const CfmBatch batch = draw_batch(task, conds, config.batch_size, rng);
        LossResult res;
        try {
            res = cfm_loss(params, batch);
        } catch (const NumericError&) {
            throw TrainingError("pretrain: non-finite loss at step " + std::to_string(step));
        }
        auto [next, next_opt] = adam_step(params, res.grads, opt);
        params = std::move(next);
        opt = std::move(next_opt);

        if (log && (step % config.log_every == 0 || step + 1 == config.steps)) {
            double wall = 0.0;
            if (!config.deterministic) {
                wall = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - start)
                           .count();
            }
            log->push_back({step, res.loss, wall});
        }
    }

    Checkpoint ck;
    ck.params = std::move(params);
    ck.optimizer = std::move(opt);
    ck.stage = "pretrain";
    ck.created = config.deterministic ? "" : timestamp_utc();
    return ck;
}

}  // namespace flowrl
