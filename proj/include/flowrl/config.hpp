#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flowrl/net.hpp"
#include "flowrl/tasks.hpp"

namespace flowrl {

// Reward used for training and reported by eval.
struct RewardSpec {
    std::string type = "qa_region";  // qa_region | similarity
    double steepness = 8.0;
    // Region for qa_region; defaults to the config task when that is a ring.
    std::optional<RingTask> region;
};

struct PretrainSection {
    int steps = 20000;
    int batch_size = 256;
    double lr = 1e-3;
    int log_every = 1;
};

struct GrpoSection {
    std::string checkpoint;
    int group_size = 24;
    double noise_level = 0.7;
    double kl_coeff = 0.04;
    double clip_eps = 0.2;
    int steps = 200;
    int prompts_per_step = 8;
    int inner_updates = 1;
    int num_steps = 25;
    double clamp_delta = 0.0;  // 0 = half the grid spacing
    double lr = 3e-4;
};

struct DpoSection {
    std::string checkpoint;
    double beta = 100.0;
    int num_prompts = 256;
    int candidates_per_prompt = 8;
    int steps = 2000;
    int batch_size = 32;
    double lr = 1e-4;
    int num_steps = 25;
    double clamp_delta = 0.0;
};

struct SftSection {
    std::string checkpoint;
    std::string source = "task";  // task | top_rollouts
    int num_samples = 4096;
    double top_fraction = 0.25;
    double noise_level = 0.7;
    int num_steps = 25;
    double clamp_delta = 0.0;
    int steps = 4000;
    int batch_size = 256;
    double lr = 5e-4;
};

struct SampleSection {
    std::string checkpoint;
    int num_samples = 1000;
    std::string sampler = "ode";  // ode | sde
    double noise_level = 0.7;
    int num_steps = 100;
    double clamp_delta = 0.0;
    int dump_trajectories = 0;
};

struct EvalSection {
    std::string checkpoint;
    int num_samples = 2000;
    int num_steps = 100;
    double clamp_delta = 0.0;
};

struct CalibrateSection {
    std::string input;  // two-column CSV: model_score, reference_score
};

struct SweepSection {
    std::string axis;  // noise_level | group_size
    std::vector<double> values;
};

struct ExperimentConfig {
    std::optional<std::string> stage;
    std::uint64_t seed = 0;
    std::string out_dir = "out";
    bool deterministic = false;
    std::optional<Task> task;
    std::optional<NetSpec> net;
    std::optional<RewardSpec> reward;
    PretrainSection pretrain;
    GrpoSection grpo;
    DpoSection dpo;
    SftSection sft;
    SampleSection sample;
    EvalSection eval;
    CalibrateSection calibrate_section;
    SweepSection sweep;
    std::string config_dir;  // directory of the source file; resolves relative paths
};

// Strict parse: unknown keys anywhere are an error.
ExperimentConfig parse_config(const std::string& json_text, const std::string& origin);
ExperimentConfig load_config(const std::string& path);

// Canonical resolved form (sorted keys, defaults filled in). out_dir and
// config_dir are excluded so the fingerprint tracks the experiment itself.
std::string dump_config(const ExperimentConfig& cfg);
std::uint64_t config_fingerprint(const ExperimentConfig& cfg);

// Paths inside a config file are relative to the file's directory.
std::string resolve_path(const ExperimentConfig& cfg, const std::string& path);

}  // namespace flowrl
