#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "flowrl/checkpoint.hpp"
#include "flowrl/rewards.hpp"
#include "flowrl/samplers.hpp"
#include "flowrl/tasks.hpp"

namespace flowrl {

// G rollouts sharing one condition, with group-normalized advantages.
struct RolloutGroup {
    int condition = 0;
    std::vector<Trajectory> trajectories;
    Vec rewards;
    Vec advantages;
};

struct GrpoConfig {
    int group_size = 24;
    double noise_level = 0.7;
    double kl_coeff = 0.04;
    double clip_eps = 0.2;
    int steps = 200;
    int prompts_per_step = 8;
    int inner_updates = 1;
    Schedule schedule;
    double lr = 3e-4;
    std::uint64_t seed = 0;
    bool deterministic = false;
};

void validate_config(const GrpoConfig& config);

// current = the policy being optimized; old = rollout-time snapshot (ratio
// denominator); reference = frozen pretrained policy (KL anchor).
struct PolicyTriple {
    ParamVector current;
    ParamVector old;
    ParamVector reference;
};

// (r - mean) / population std; all zero when std < 1e-8.
Vec advantages(const Vec& rewards);

// KL between equal-variance Gaussian transitions N(m, sig^2|dt|I).
double step_kl(const Vec& mean_theta, const Vec& mean_ref, double sig, double dt);

// min(ratio * adv, clamp(ratio, 1-eps, 1+eps) * adv).
double clip_term(double ratio, double advantage, double clip_eps);

RolloutGroup collect_group(const ParamVector& old_params, int c, const GrpoConfig& config,
                           const RewardFn& reward, std::uint64_t seed);

struct SurrogateDiagnostics {
    double mean_kl = 0.0;
    double clip_fraction = 0.0;
    double mean_ratio = 0.0;
    double min_ratio = 0.0;
    double max_ratio = 0.0;
};

struct SurrogateResult {
    double loss = 0.0;
    Gradients grads;
    SurrogateDiagnostics diag;
};

// Negated per-step objective, averaged 1/G over trajectories and 1/T over
// transitions; gradients flow through the current-policy means only.
SurrogateResult surrogate_loss(const PolicyTriple& triple, const RolloutGroup& group,
                               const GrpoConfig& config);

struct GrpoMetricsRow {
    int step = 0;
    double mean_reward = 0.0;
    double surrogate_loss = 0.0;
    double mean_kl = 0.0;
    double clip_fraction = 0.0;
    double wall_ms = 0.0;
};

std::pair<Checkpoint, std::vector<GrpoMetricsRow>> grpo_train(
    const Checkpoint& reference, const Task& task, const RewardFn& reward,
    const GrpoConfig& config, std::vector<std::string>* notices = nullptr);

}  // namespace flowrl
