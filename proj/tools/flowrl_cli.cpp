// Command-line front end: one subcommand per pipeline stage, one config file
// per experiment. Usage errors exit 2, runtime failures exit 1.

#include <CLI11.hpp>
#include <cstdint>
#include <iostream>
#include <string>

#include "flowrl/common.hpp"
#include "flowrl/config.hpp"
#include "flowrl/harness.hpp"

namespace {

struct StageDoc {
    const char* name;
    const char* blurb;
};

constexpr StageDoc kStages[] = {
    {"pretrain", "train a velocity field by conditional flow matching"},
    {"grpo", "reinforce a pretrained field against a reward (group-relative PPO)"},
    {"dpo", "preference fine-tuning on curated winner/loser pairs"},
    {"sft", "continued flow-matching training on a fixed sample set"},
    {"sample", "draw samples (ODE or SDE) from a checkpoint"},
    {"eval", "reward means and oracle statistics for a checkpoint"},
    {"calibrate", "correlation metrics for a two-column score CSV"},
    {"sweep", "re-run grpo across one hyperparameter axis"},
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"flow-matching policy training and evaluation"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    std::string out_dir;
    bool deterministic = false;

    for (const StageDoc& s : kStages) {
        CLI::App* sub = app.add_subcommand(s.name, s.blurb);
        sub->add_option("--config", config_path, "experiment config file (JSON)")
            ->required()
            ->type_name("PATH");
        sub->add_option("--seed", seed, "override the config seed")->type_name("N");
        sub->add_option("--out", out_dir, "override the output directory")->type_name("DIR");
        sub->add_flag("--deterministic", deterministic,
                      "reproducible artifacts: zero wall-clock fields, no timestamps");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    CLI::App* chosen = app.get_subcommands().front();
    try {
        flowrl::ExperimentConfig cfg = flowrl::load_config(config_path);
        if (chosen->count("--seed") > 0) cfg.seed = seed;
        if (chosen->count("--out") > 0) cfg.out_dir = out_dir;
        if (deterministic) cfg.deterministic = true;
        flowrl::run_stage(chosen->get_name(), cfg);
    } catch (const flowrl::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const flowrl::InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
