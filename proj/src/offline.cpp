#include "flowrl/offline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "flowrl/rng.hpp"
#include "flowrl/textio.hpp"

namespace flowrl {

namespace {

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double logistic(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// Flow-matching error of one sample at a fixed (t, eps) draw; the trace is
// kept so the caller can backpropagate through it.
double cfm_error(const ParamVector& params, const Vec& x, int c, double t, const Vec& eps,
                 ForwardTrace* trace_out, Vec* residual_out) {
    const auto [x_t, target] = interpolate(x, eps, t);
    ForwardTrace trace = forward_trace(params, x_t, t, c);
    double e = 0.0;
    Vec residual(target.size());
    for (std::size_t d = 0; d < target.size(); ++d) {
        residual[d] = trace.output[d] - target[d];
        e += residual[d] * residual[d];
    }
    if (trace_out) *trace_out = std::move(trace);
    if (residual_out) *residual_out = std::move(residual);
    return e;
}

}  // namespace

std::vector<PreferencePair> curate_pairs(const ParamVector& reference_params, const Task& task,
                                         const RewardFn& reward, int num_prompts,
                                         int candidates_per_prompt, const Schedule& schedule,
                                         std::uint64_t seed, std::vector<std::string>* notices) {
    if (num_prompts < 1) throw ConfigError("curate_pairs: num_prompts must be >= 1");
    if (candidates_per_prompt < 2) {
        throw ConfigError("curate_pairs: candidates_per_prompt must be >= 2");
    }
    if (!reward) throw InputError("curate_pairs: reward function is empty");
    validate_schedule(schedule);
    validate_task(task);

    const int conds = num_conditions(task);
    Rng prompt_rng(derive_seed(seed, 0xc07a));
    std::vector<PreferencePair> pairs;
    pairs.reserve(static_cast<std::size_t>(num_prompts));
    int skipped = 0;
    for (int p = 0; p < num_prompts; ++p) {
        const int c = prompt_rng.uniform_int(conds);
        std::vector<Vec> finals;
        Vec rewards;
        finals.reserve(static_cast<std::size_t>(candidates_per_prompt));
        rewards.reserve(static_cast<std::size_t>(candidates_per_prompt));
        for (int k = 0; k < candidates_per_prompt; ++k) {
            Trajectory traj =
                ode_sample(reference_params, c, schedule,
                           derive_seed(seed, static_cast<std::uint64_t>(p),
                                       static_cast<std::uint64_t>(k)));
            rewards.push_back(reward(traj.x_final, c));
            finals.push_back(std::move(traj.x_final));
        }
        const auto best = std::max_element(rewards.begin(), rewards.end()) - rewards.begin();
        const auto worst = std::min_element(rewards.begin(), rewards.end()) - rewards.begin();
        if (rewards[best] == rewards[worst]) {
            ++skipped;
            continue;  // all candidates tied: no preference signal
        }
        PreferencePair pair;
        pair.condition = c;
        pair.winner = std::move(finals[best]);
        pair.loser = std::move(finals[worst]);
        pair.winner_reward = rewards[best];
        pair.loser_reward = rewards[worst];
        pairs.push_back(std::move(pair));
    }
    if (skipped > 0 && notices) {
        notices->push_back("curate_pairs: skipped " + std::to_string(skipped) + "/" +
                           std::to_string(num_prompts) + " prompts with all-tied rewards");
    }
    return pairs;
}

double dpo_margin_loss(double e_cur_w, double e_ref_w, double e_cur_l, double e_ref_l,
                       double beta) {
    if (!(beta > 0.0)) throw InputError("dpo: beta must be > 0");
    const double margin = (e_cur_w - e_ref_w) - (e_cur_l - e_ref_l);
    return softplus(beta * margin);
}

LossResult dpo_loss(const ParamVector& current, const ParamVector& reference,
                    const PreferencePair& pair, double t, const Vec& eps, double beta) {
    if (!(current.spec == reference.spec)) {
        throw CompatibilityError("dpo_loss: current " + describe(current.spec) +
                                 " and reference " + describe(reference.spec) +
                                 " must share one architecture");
    }
    if (!(t > 0.0 && t < 1.0)) throw InputError("dpo_loss: t must lie in (0, 1)");
    if (!(beta > 0.0)) throw InputError("dpo: beta must be > 0");
    if (!(pair.winner_reward > pair.loser_reward)) {
        throw InputError("dpo_loss: pair must have winner_reward > loser_reward");
    }

    ForwardTrace trace_w, trace_l;
    Vec res_w, res_l;
    const double e_cur_w = cfm_error(current, pair.winner, pair.condition, t, eps, &trace_w, &res_w);
    const double e_cur_l = cfm_error(current, pair.loser, pair.condition, t, eps, &trace_l, &res_l);
    const double e_ref_w = cfm_error(reference, pair.winner, pair.condition, t, eps, nullptr, nullptr);
    const double e_ref_l = cfm_error(reference, pair.loser, pair.condition, t, eps, nullptr, nullptr);

    const double margin = (e_cur_w - e_ref_w) - (e_cur_l - e_ref_l);
    LossResult out;
    out.loss = softplus(beta * margin);
    if (!std::isfinite(out.loss)) throw NumericError("dpo_loss: non-finite loss");

    // d loss / d e_cur_w = s*beta, d loss / d e_cur_l = -s*beta, with
    // d e / d v = 2 * residual.
    const double s = logistic(beta * margin);
    out.grads.values.assign(current.values.size(), 0.0);
    Vec upstream(res_w.size());
    for (std::size_t d = 0; d < upstream.size(); ++d) upstream[d] = s * beta * 2.0 * res_w[d];
    accumulate_backward(current, trace_w, upstream, out.grads);
    for (std::size_t d = 0; d < upstream.size(); ++d) upstream[d] = -s * beta * 2.0 * res_l[d];
    accumulate_backward(current, trace_l, upstream, out.grads);
    return out;
}

Checkpoint dpo_finetune(const Checkpoint& reference, const Task& task, const RewardFn& reward,
                        const DpoConfig& config, std::vector<PreferencePair>* pairs_out,
                        std::vector<TrainLogRow>* log, std::vector<std::string>* notices) {
    if (config.steps < 1) throw ConfigError("dpo: steps must be >= 1");
    if (config.batch_size < 1) throw ConfigError("dpo: batch_size must be >= 1");
    if (!(config.lr > 0.0)) throw ConfigError("dpo: lr must be > 0");
    if (!(config.beta > 0.0)) throw ConfigError("dpo: beta must be > 0");
    const NetSpec& spec = reference.params.spec;
    if (spec.num_conditions != num_conditions(task) || spec.input_dim != task_dim(task)) {
        throw CompatibilityError("dpo_finetune: checkpoint " + describe(spec) +
                                 " does not fit the task");
    }

    std::vector<PreferencePair> pairs =
        curate_pairs(reference.params, task, reward, config.num_prompts,
                     config.candidates_per_prompt, config.schedule,
                     derive_seed(config.seed, 0xcu), notices);
    if (pairs.empty()) {
        throw TrainingError("dpo_finetune: curation produced no preference pairs");
    }
    if (pairs_out) *pairs_out = pairs;

    ParamVector current = reference.params;
    AdamState opt = make_adam_state(current.values.size(), config.lr);
    Rng rng(derive_seed(config.seed, 0xd60));
    const std::size_t dim = static_cast<std::size_t>(spec.input_dim);

    const auto start = std::chrono::steady_clock::now();
    for (int step = 0; step < config.steps; ++step) {
        Gradients total;
        total.values.assign(current.values.size(), 0.0);
        double loss_acc = 0.0;
        const double inv_b = 1.0 / static_cast<double>(config.batch_size);
        for (int b = 0; b < config.batch_size; ++b) {
            const auto& pair = pairs[static_cast<std::size_t>(
                rng.uniform_int(static_cast<int>(pairs.size())))];
            double t = rng.uniform();
            while (t == 0.0) t = rng.uniform();
            const Vec eps = rng.normal_vec(dim);
            LossResult res;
            try {
                res = dpo_loss(current, reference.params, pair, t, eps, config.beta);
            } catch (const NumericError& e) {
                throw TrainingError("dpo_finetune: diverged at step " + std::to_string(step) +
                                    ": " + e.what());
            }
            loss_acc += inv_b * res.loss;
            for (std::size_t j = 0; j < total.values.size(); ++j) {
                total.values[j] += inv_b * res.grads.values[j];
            }
        }
        try {
            auto [next, next_opt] = adam_step(current, total, opt);
            current = std::move(next);
            opt = std::move(next_opt);
        } catch (const NumericError& e) {
            throw TrainingError("dpo_finetune: diverged at step " + std::to_string(step) + ": " +
                                e.what());
        }
        if (log) {
            double wall = 0.0;
            if (!config.deterministic) {
                wall = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                                 start)
                           .count();
            }
            log->push_back({step, loss_acc, wall});
        }
    }

    Checkpoint out;
    out.params = std::move(current);
    out.optimizer = std::move(opt);
    out.stage = "dpo";
    out.created = config.deterministic ? "" : timestamp_utc();
    return out;
}

Checkpoint sft_finetune(const Checkpoint& reference,
                        const std::vector<std::pair<Vec, int>>& dataset, const SftConfig& config,
                        std::vector<TrainLogRow>* log) {
    if (dataset.empty()) throw InputError("sft_finetune: dataset is empty");
    if (config.steps < 1) throw ConfigError("sft: steps must be >= 1");
    if (config.batch_size < 1) throw ConfigError("sft: batch_size must be >= 1");
    if (!(config.lr > 0.0)) throw ConfigError("sft: lr must be > 0");
    const NetSpec& spec = reference.params.spec;
    const std::size_t dim = static_cast<std::size_t>(spec.input_dim);
    for (const auto& [x, c] : dataset) {
        require_dim(x, dim, "sft_finetune: sample");
        require_finite(x, "sft_finetune: sample");
        if (c < 0 || c >= spec.num_conditions) {
            throw InputError("sft_finetune: condition id out of range");
        }
    }

    ParamVector current = reference.params;
    AdamState opt = make_adam_state(current.values.size(), config.lr);
    Rng rng(derive_seed(config.seed, 0x5f7));

    const auto start = std::chrono::steady_clock::now();
    for (int step = 0; step < config.steps; ++step) {
        CfmBatch batch;
        for (int b = 0; b < config.batch_size; ++b) {
            const auto& [x, c] =
                dataset[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(dataset.size())))];
            batch.x.push_back(x);
            batch.c.push_back(c);
            batch.eps.push_back(rng.normal_vec(dim));
            batch.t.push_back(rng.uniform());
        }
        LossResult res;
        try {
            res = cfm_loss(current, batch);
        } catch (const NumericError&) {
            throw TrainingError("sft_finetune: non-finite loss at step " + std::to_string(step));
        }
        auto [next, next_opt] = adam_step(current, res.grads, opt);
        current = std::move(next);
        opt = std::move(next_opt);
        if (log) {
            double wall = 0.0;
            if (!config.deterministic) {
                wall = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                                 start)
                           .count();
            }
            log->push_back({step, res.loss, wall});
        }
    }

    Checkpoint out;
    out.params = std::move(current);
    out.optimizer = std::move(opt);
    out.stage = "sft";
    out.created = config.deterministic ? "" : timestamp_utc();
    return out;
}

}  // namespace flowrl
