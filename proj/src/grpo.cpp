#include "flowrl/grpo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "flowrl/rng.hpp"
#include "flowrl/textio.hpp"

namespace flowrl {

void validate_config(const GrpoConfig& config) {
    if (config.group_size < 2) throw ConfigError("grpo: group_size must be >= 2");
    if (config.noise_level < 0.0) throw ConfigError("grpo: noise_level must be >= 0");
    if (config.kl_coeff < 0.0) throw ConfigError("grpo: kl_coeff must be >= 0");
    if (!(config.clip_eps > 0.0)) throw ConfigError("grpo: clip_eps must be > 0");
    if (config.steps < 1) throw ConfigError("grpo: steps must be >= 1");
    if (config.prompts_per_step < 1) throw ConfigError("grpo: prompts_per_step must be >= 1");
    if (config.inner_updates < 1) throw ConfigError("grpo: inner_updates must be >= 1");
    if (!(config.lr > 0.0)) throw ConfigError("grpo: lr must be > 0");
    validate_schedule(config.schedule);
}

Vec advantages(const Vec& rewards) {
    const std::size_t g = rewards.size();
    if (g < 2) throw InputError("advantages: need at least two rewards");
    require_finite(rewards, "advantages: rewards");
    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= static_cast<double>(g);
    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    var /= static_cast<double>(g);
    const double std_dev = std::sqrt(var);

    Vec adv(g, 0.0);
    if (std_dev < 1e-8) return adv;  // degenerate group: no policy gradient
    for (std::size_t i = 0; i < g; ++i) adv[i] = (rewards[i] - mean) / std_dev;
    return adv;
}

double step_kl(const Vec& mean_theta, const Vec& mean_ref, double sig, double dt) {
    require_dim(mean_ref, mean_theta.size(), "step_kl: mean_ref");
    if (!(sig > 0.0)) throw NumericError("step_kl: degenerate transition (sigma must be > 0)");
    if (dt == 0.0) throw InputError("step_kl: dt must be nonzero");
    return squared_distance(mean_theta, mean_ref) / (2.0 * sig * sig * std::abs(dt));
}

double clip_term(double ratio, double advantage, double clip_eps) {
    if (!(clip_eps > 0.0)) throw InputError("clip_term: clip_eps must be > 0");
    const double clipped = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
    return std::min(ratio * advantage, clipped * advantage);
}

RolloutGroup collect_group(const ParamVector& old_params, int c, const GrpoConfig& config,
                           const RewardFn& reward, std::uint64_t seed) {
    validate_config(config);
    if (!reward) throw InputError("collect_group: reward function is empty");

    RolloutGroup group;
    group.condition = c;
    group.trajectories.reserve(static_cast<std::size_t>(config.group_size));
    group.rewards.reserve(static_cast<std::size_t>(config.group_size));
    for (int i = 0; i < config.group_size; ++i) {
        Trajectory traj = sde_sample(old_params, c, config.schedule, config.noise_level,
                                     derive_seed(seed, static_cast<std::uint64_t>(i)));
        double r = 0.0;
        try {
            r = reward(traj.x_final, c);
        } catch (const std::exception& e) {
            throw FlowError("collect_group: reward failed for trajectory " + std::to_string(i) +
                            ": " + e.what());
        }
        if (!std::isfinite(r)) {
            throw NumericError("collect_group: non-finite reward for trajectory " +
                               std::to_string(i));
        }
        traj.reward = r;
        group.rewards.push_back(r);
        group.trajectories.push_back(std::move(traj));
    }
    group.advantages = advantages(group.rewards);
    return group;
}

SurrogateResult surrogate_loss(const PolicyTriple& triple, const RolloutGroup& group,
                               const GrpoConfig& config) {
    if (!(triple.current.spec == triple.old.spec && triple.old.spec == triple.reference.spec)) {
        throw InputError("surrogate_loss: policies must share one architecture");
    }
    const std::size_t g = group.trajectories.size();
    if (g == 0) throw InputError("surrogate_loss: empty group");
    if (group.advantages.size() != g || group.rewards.size() != g) {
        throw InputError("surrogate_loss: group lists must share length");
    }

    SurrogateResult res;
    res.grads.values.assign(triple.current.values.size(), 0.0);
    res.diag.min_ratio = std::numeric_limits<double>::infinity();
    res.diag.max_ratio = -std::numeric_limits<double>::infinity();

    const double inv_g = 1.0 / static_cast<double>(g);
    long total_transitions = 0;
    long clipped_transitions = 0;
    double ratio_sum = 0.0;

    Vec upstream(static_cast<std::size_t>(triple.current.spec.input_dim));
    for (std::size_t i = 0; i < g; ++i) {
        const Trajectory& traj = group.trajectories[i];
        if (traj.transitions.empty()) throw InputError("surrogate_loss: empty trajectory");
        const double adv = group.advantages[i];
        const double w = inv_g / static_cast<double>(traj.transitions.size());
        for (std::size_t k = 0; k < traj.transitions.size(); ++k) {
            const Transition& tr = traj.transitions[k];
            if (!(tr.sigma > 0.0)) {
                throw InputError(
                    "surrogate_loss: transition with sigma = 0 (rollouts need noise_level > 0)");
            }
            const double var = tr.sigma * tr.sigma * std::abs(tr.dt);

            const ForwardTrace trace = forward_trace(triple.current, tr.x_t, tr.t, traj.condition);
            const Vec m_cur = sde_mean(tr.x_t, trace.output, tr.t, tr.sigma, tr.dt);
            const Vec v_old = forward_velocity(triple.old, tr.x_t, tr.t, traj.condition);
            const Vec m_old = sde_mean(tr.x_t, v_old, tr.t, tr.sigma, tr.dt);
            const Vec v_ref = forward_velocity(triple.reference, tr.x_t, tr.t, traj.condition);
            const Vec m_ref = sde_mean(tr.x_t, v_ref, tr.t, tr.sigma, tr.dt);

            const double log_ratio = (squared_distance(tr.x_next, m_old) -
                                      squared_distance(tr.x_next, m_cur)) /
                                     (2.0 * var);
            const double ratio = std::exp(log_ratio);
            if (!std::isfinite(ratio)) {
                throw NumericError("surrogate_loss: non-finite ratio (trajectory " +
                                   std::to_string(i) + ", step " + std::to_string(k) + ")");
            }
            const double unclipped = ratio * adv;
            const double clipped =
                std::clamp(ratio, 1.0 - config.clip_eps, 1.0 + config.clip_eps) * adv;
            const double kl = step_kl(m_cur, m_ref, tr.sigma, tr.dt);
            res.loss -= w * (std::min(unclipped, clipped) - config.kl_coeff * kl);

            const bool grad_flows = unclipped <= clipped;
            const double coeff = sde_mean_velocity_coeff(tr.t, tr.sigma, tr.dt);
            for (std::size_t d = 0; d < upstream.size(); ++d) {
                double du = w * config.kl_coeff * (m_cur[d] - m_ref[d]) / var;
                if (grad_flows) du -= w * adv * ratio * (tr.x_next[d] - m_cur[d]) / var;
                upstream[d] = du * coeff;
            }
            accumulate_backward(triple.current, trace, upstream, res.grads);

            res.diag.mean_kl += w * kl;
            ratio_sum += ratio;
            res.diag.min_ratio = std::min(res.diag.min_ratio, ratio);
            res.diag.max_ratio = std::max(res.diag.max_ratio, ratio);
            ++total_transitions;
            if (clipped < unclipped) ++clipped_transitions;
        }
    }
    if (!std::isfinite(res.loss)) throw NumericError("surrogate_loss: non-finite loss");
    res.diag.mean_ratio = ratio_sum / static_cast<double>(total_transitions);
    res.diag.clip_fraction =
        static_cast<double>(clipped_transitions) / static_cast<double>(total_transitions);
    return res;
}

std::pair<Checkpoint, std::vector<GrpoMetricsRow>> grpo_train(const Checkpoint& reference,
                                                              const Task& task,
                                                              const RewardFn& reward,
                                                              const GrpoConfig& config,
                                                              std::vector<std::string>* notices) {
    validate_config(config);
    validate_task(task);
    if (config.noise_level == 0.0) {
        throw TrainingError(
            "grpo_train: noise_level 0 makes every transition deterministic, so likelihood "
            "ratios are undefined and there is no exploration; use a noise_level > 0");
    }
    const NetSpec& spec = reference.params.spec;
    if (spec.num_conditions != num_conditions(task) || spec.input_dim != task_dim(task)) {
        throw CompatibilityError("grpo_train: checkpoint " + describe(spec) +
                                 " does not fit the task (" + std::to_string(task_dim(task)) +
                                 "-d, " + std::to_string(num_conditions(task)) + " conditions)");
    }

    ParamVector current = reference.params;
    AdamState opt = make_adam_state(current.values.size(), config.lr);
    Rng prompt_rng(derive_seed(config.seed, 0x960a));
    const int conds = num_conditions(task);

    std::vector<GrpoMetricsRow> metrics;
    metrics.reserve(static_cast<std::size_t>(config.steps));
    const auto start = std::chrono::steady_clock::now();

    for (int step = 0; step < config.steps; ++step) {
        const ParamVector old = current;

        std::vector<RolloutGroup> groups;
        groups.reserve(static_cast<std::size_t>(config.prompts_per_step));
        double reward_sum = 0.0;
        long reward_count = 0;
        int degenerate = 0;
        for (int p = 0; p < config.prompts_per_step; ++p) {
            const int c = prompt_rng.uniform_int(conds);
            RolloutGroup group =
                collect_group(old, c, config, reward,
                              derive_seed(config.seed, static_cast<std::uint64_t>(step),
                                          static_cast<std::uint64_t>(p)));
            for (double r : group.rewards) reward_sum += r;
            reward_count += static_cast<long>(group.rewards.size());
            if (std::all_of(group.advantages.begin(), group.advantages.end(),
                            [](double a) { return a == 0.0; })) {
                ++degenerate;
            }
            groups.push_back(std::move(group));
        }
        if (degenerate > 0 && notices) {
            notices->push_back("step " + std::to_string(step) + ": " + std::to_string(degenerate) +
                               "/" + std::to_string(config.prompts_per_step) +
                               " groups degenerate (zero reward std)");
        }

        GrpoMetricsRow row;
        row.step = step;
        row.mean_reward = reward_sum / static_cast<double>(reward_count);
        const double inv_p = 1.0 / static_cast<double>(config.prompts_per_step);
        for (int u = 0; u < config.inner_updates; ++u) {
            const PolicyTriple triple{current, old, reference.params};
            Gradients total;
            total.values.assign(current.values.size(), 0.0);
            double loss_acc = 0.0, kl_acc = 0.0, clip_acc = 0.0;
            for (const RolloutGroup& group : groups) {
                SurrogateResult res;
                try {
                    res = surrogate_loss(triple, group, config);
                } catch (const NumericError& e) {
                    throw TrainingError("grpo_train: diverged at step " + std::to_string(step) +
                                        ": " + e.what());
                }
                loss_acc += inv_p * res.loss;
                kl_acc += inv_p * res.diag.mean_kl;
                clip_acc += inv_p * res.diag.clip_fraction;
                for (std::size_t j = 0; j < total.values.size(); ++j) {
                    total.values[j] += inv_p * res.grads.values[j];
                }
            }
            try {
                auto [next, next_opt] = adam_step(current, total, opt);
                current = std::move(next);
                opt = std::move(next_opt);
            } catch (const NumericError& e) {
                throw TrainingError("grpo_train: diverged at step " + std::to_string(step) + ": " +
                                    e.what());
            }
            if (u == 0) {
                row.surrogate_loss = loss_acc;
                row.mean_kl = kl_acc;
                row.clip_fraction = clip_acc;
            }
        }
        if (!config.deterministic) {
            row.wall_ms =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                    .count();
        }
        metrics.push_back(row);
    }

    Checkpoint out;
    out.params = std::move(current);
    out.optimizer = std::move(opt);
    out.stage = "grpo";
    out.created = config.deterministic ? "" : timestamp_utc();
    return {std::move(out), std::move(metrics)};
}

}  // namespace flowrl
