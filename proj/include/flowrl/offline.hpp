#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "flowrl/cfm.hpp"
#include "flowrl/checkpoint.hpp"
#include "flowrl/rewards.hpp"
#include "flowrl/samplers.hpp"

namespace flowrl {

struct PreferencePair {
    int condition = 0;
    Vec winner;
    Vec loser;
    double winner_reward = 0.0;
    double loser_reward = 0.0;
};

// Per prompt: K deterministic samples from the reference policy, paired as
// (best, worst) by reward. Prompts whose candidates all tie are skipped.
std::vector<PreferencePair> curate_pairs(const ParamVector& reference_params, const Task& task,
                                         const RewardFn& reward, int num_prompts,
                                         int candidates_per_prompt, const Schedule& schedule,
                                         std::uint64_t seed,
                                         std::vector<std::string>* notices = nullptr);

// Preference objective on the error double-difference alone, exposed for
// direct checks: softplus(beta * ((e_cur_w - e_ref_w) - (e_cur_l - e_ref_l))).
double dpo_margin_loss(double e_cur_w, double e_ref_w, double e_cur_l, double e_ref_l,
                       double beta);

// Preference loss at one (t, eps) draw shared by winner and loser, with
// per-sample errors e = ||v(x_t, t, c) - (eps - x)||^2; gradients w.r.t. the
// current parameters only.
LossResult dpo_loss(const ParamVector& current, const ParamVector& reference,
                    const PreferencePair& pair, double t, const Vec& eps, double beta);

struct DpoConfig {
    double beta = 100.0;
    int num_prompts = 256;
    int candidates_per_prompt = 8;
    int steps = 2000;
    int batch_size = 32;
    double lr = 1e-4;
    Schedule schedule;
    std::uint64_t seed = 0;
    bool deterministic = false;
};

Checkpoint dpo_finetune(const Checkpoint& reference, const Task& task, const RewardFn& reward,
                        const DpoConfig& config, std::vector<PreferencePair>* pairs_out = nullptr,
                        std::vector<TrainLogRow>* log = nullptr,
                        std::vector<std::string>* notices = nullptr);

struct SftConfig {
    int steps = 4000;
    int batch_size = 256;
    double lr = 5e-4;
    std::uint64_t seed = 0;
    bool deterministic = false;
};

// Continued flow-matching training from a checkpoint on a fixed dataset.
Checkpoint sft_finetune(const Checkpoint& reference,
                        const std::vector<std::pair<Vec, int>>& dataset, const SftConfig& config,
                        std::vector<TrainLogRow>* log = nullptr);

}  // namespace flowrl
