#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "flowrl/checkpoint.hpp"
#include "flowrl/config.hpp"
#include "flowrl/rewards.hpp"
#include "flowrl/samplers.hpp"
#include "flowrl/tasks.hpp"

namespace flowrl {

// Schedule from config fields; clamp_delta 0 means half the grid spacing.
Schedule schedule_from(int num_steps, double clamp_delta);

// Named reward functions for a task: the configured training reward first,
// plus a similarity column for ring tasks. Empty for Gaussian tasks unless
// the config names a reward explicitly.
std::vector<std::pair<std::string, RewardFn>> reward_suite(const Task& task,
                                                           const std::optional<RewardSpec>& spec);

// The reward used for training; errors if the config defines none that fits.
RewardFn training_reward(const Task& task, const std::optional<RewardSpec>& spec);

struct EvalReport {
    int samples_per_condition = 0;
    std::vector<std::string> reward_names;
    Vec reward_means;
    bool has_oracle = false;    // Gaussian tasks compare against the exact marginal
    double max_mean_err = 0.0;  // worst per-coordinate mean error across conditions
    double max_cov_err = 0.0;   // worst covariance entry error across conditions
};

// Deterministic ODE evaluation of a checkpoint on a task.
EvalReport evaluate(const Checkpoint& ck, const Task& task,
                    const std::vector<std::pair<std::string, RewardFn>>& rewards, int n_samples,
                    const Schedule& schedule, std::uint64_t seed);

// Dispatch one subcommand against a validated config. Writes artifacts under
// cfg.out_dir and prints a one-line summary to stdout.
void run_stage(const std::string& stage, ExperimentConfig cfg);

}  // namespace flowrl
