#include "flowrl/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "flowrl/cfm.hpp"
#include "flowrl/grpo.hpp"
#include "flowrl/offline.hpp"
#include "flowrl/rng.hpp"
#include "flowrl/textio.hpp"

namespace flowrl {

namespace {

namespace fs = std::filesystem;

std::string join_path(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

const Task& require_task(const ExperimentConfig& cfg, const std::string& stage) {
    if (!cfg.task) throw ConfigError("'" + stage + "' needs a 'task' section in the config");
    return *cfg.task;
}

const RingTask* ring_of(const Task& task) { return std::get_if<RingTask>(&task); }

Checkpoint load_stage_checkpoint(const ExperimentConfig& cfg, const std::string& raw_path,
                                 const std::string& stage) {
    if (raw_path.empty()) {
        throw ConfigError("'" + stage + "' needs " + stage + ".checkpoint in the config");
    }
    const std::string path = resolve_path(cfg, raw_path);
    return cfg.net ? load_checkpoint(path, *cfg.net) : load_checkpoint(path);
}

void check_task_fit(const Checkpoint& ck, const Task& task) {
    const NetSpec& spec = ck.params.spec;
    if (spec.num_conditions != num_conditions(task) || spec.input_dim != task_dim(task)) {
        throw CompatibilityError("checkpoint " + describe(spec) + " does not fit a " +
                                 std::to_string(task_dim(task)) + "-d task with " +
                                 std::to_string(num_conditions(task)) + " conditions");
    }
}

void write_train_log(const std::string& path, const std::vector<TrainLogRow>& log) {
    CsvDoc csv("step,loss,wall_ms");
    for (const TrainLogRow& row : log) {
        csv.row({std::to_string(row.step), format_double(row.loss), format_double(row.wall_ms)});
    }
    csv.save(path);
}

std::string fingerprint_hex(std::uint64_t fp) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fp));
    return buf;
}

void run_pretrain(const ExperimentConfig& cfg, std::uint64_t fp) {
    const Task& task = require_task(cfg, "pretrain");
    if (!cfg.net) throw ConfigError("'pretrain' needs a 'net' section in the config");
    TrainConfig tc;
    tc.steps = cfg.pretrain.steps;
    tc.batch_size = cfg.pretrain.batch_size;
    tc.lr = cfg.pretrain.lr;
    tc.log_every = cfg.pretrain.log_every;
    tc.seed = cfg.seed;
    tc.deterministic = cfg.deterministic;

    std::vector<TrainLogRow> log;
    Checkpoint ck = pretrain(task, *cfg.net, tc, &log);
    ck.config_fingerprint = fp;
    const std::string ck_path = join_path(cfg.out_dir, "checkpoint.json");
    save_checkpoint(ck, ck_path);
    write_train_log(join_path(cfg.out_dir, "metrics.csv"), log);
    std::cout << "pretrain: " << tc.steps << " steps, final loss "
              << format_double(log.back().loss) << ", checkpoint " << ck_path << "\n";
}

void run_grpo(const ExperimentConfig& cfg, std::uint64_t fp) {
    const Task& task = require_task(cfg, "grpo");
    const Checkpoint ref = load_stage_checkpoint(cfg, cfg.grpo.checkpoint, "grpo");
    check_task_fit(ref, task);
    const RewardFn reward = training_reward(task, cfg.reward);

    GrpoConfig gc;
    gc.group_size = cfg.grpo.group_size;
    gc.noise_level = cfg.grpo.noise_level;
    gc.kl_coeff = cfg.grpo.kl_coeff;
    gc.clip_eps = cfg.grpo.clip_eps;
    gc.steps = cfg.grpo.steps;
    gc.prompts_per_step = cfg.grpo.prompts_per_step;
    gc.inner_updates = cfg.grpo.inner_updates;
    gc.schedule = schedule_from(cfg.grpo.num_steps, cfg.grpo.clamp_delta);
    gc.lr = cfg.grpo.lr;
    gc.seed = cfg.seed;
    gc.deterministic = cfg.deterministic;

    std::vector<std::string> notices;
    auto [ck, metrics] = grpo_train(ref, task, reward, gc, &notices);
    for (const std::string& n : notices) std::cerr << "note: " << n << "\n";

    ck.config_fingerprint = fp;
    const std::string ck_path = join_path(cfg.out_dir, "checkpoint.json");
    save_checkpoint(ck, ck_path);
    CsvDoc csv("step,mean_reward,surrogate_loss,mean_kl,clip_fraction,wall_ms");
    for (const GrpoMetricsRow& row : metrics) {
        csv.row({std::to_string(row.step), format_double(row.mean_reward),
                 format_double(row.surrogate_loss), format_double(row.mean_kl),
                 format_double(row.clip_fraction), format_double(row.wall_ms)});
    }
    csv.save(join_path(cfg.out_dir, "metrics.csv"));
    std::cout << "grpo: " << gc.steps << " steps, mean reward "
              << format_double(metrics.front().mean_reward) << " -> "
              << format_double(metrics.back().mean_reward) << ", checkpoint " << ck_path << "\n";
}

void run_dpo(const ExperimentConfig& cfg, std::uint64_t fp) {
    const Task& task = require_task(cfg, "dpo");
    const Checkpoint ref = load_stage_checkpoint(cfg, cfg.dpo.checkpoint, "dpo");
    check_task_fit(ref, task);
    const RewardFn reward = training_reward(task, cfg.reward);

    DpoConfig dc;
    dc.beta = cfg.dpo.beta;
    dc.num_prompts = cfg.dpo.num_prompts;
    dc.candidates_per_prompt = cfg.dpo.candidates_per_prompt;
    dc.steps = cfg.dpo.steps;
    dc.batch_size = cfg.dpo.batch_size;
    dc.lr = cfg.dpo.lr;
    dc.schedule = schedule_from(cfg.dpo.num_steps, cfg.dpo.clamp_delta);
    dc.seed = cfg.seed;
    dc.deterministic = cfg.deterministic;

    std::vector<PreferencePair> pairs;
    std::vector<TrainLogRow> log;
    std::vector<std::string> notices;
    Checkpoint ck = dpo_finetune(ref, task, reward, dc, &pairs, &log, &notices);
    for (const std::string& n : notices) std::cerr << "note: " << n << "\n";

    const int d = ref.params.spec.input_dim;
    std::string header = "condition";
    for (int k = 0; k < d; ++k) header += ",winner_" + std::to_string(k);
    for (int k = 0; k < d; ++k) header += ",loser_" + std::to_string(k);
    header += ",winner_reward,loser_reward";
    CsvDoc pairs_csv(header);
    for (const PreferencePair& p : pairs) {
        std::vector<std::string> row;
        row.push_back(std::to_string(p.condition));
        for (double v : p.winner) row.push_back(format_double(v));
        for (double v : p.loser) row.push_back(format_double(v));
        row.push_back(format_double(p.winner_reward));
        row.push_back(format_double(p.loser_reward));
        pairs_csv.row(row);
    }
    pairs_csv.save(join_path(cfg.out_dir, "pairs.csv"));

    ck.config_fingerprint = fp;
    const std::string ck_path = join_path(cfg.out_dir, "checkpoint.json");
    save_checkpoint(ck, ck_path);
    write_train_log(join_path(cfg.out_dir, "metrics.csv"), log);
    std::cout << "dpo: " << pairs.size() << " pairs, " << dc.steps << " steps, final loss "
              << format_double(log.back().loss) << ", checkpoint " << ck_path << "\n";
}

void run_sft(const ExperimentConfig& cfg, std::uint64_t fp) {
    const Task& task = require_task(cfg, "sft");
    const Checkpoint ref = load_stage_checkpoint(cfg, cfg.sft.checkpoint, "sft");
    check_task_fit(ref, task);
    if (cfg.sft.num_samples < 1) throw ConfigError("sft.num_samples must be >= 1");

    const int conds = num_conditions(task);
    std::vector<std::pair<Vec, int>> dataset;
    dataset.reserve(static_cast<std::size_t>(cfg.sft.num_samples));
    if (cfg.sft.source == "task") {
        Rng rng(derive_seed(cfg.seed, 0xda7a));
        for (int i = 0; i < cfg.sft.num_samples; ++i) {
            const int c = rng.uniform_int(conds);
            dataset.emplace_back(sample_one(task, c, rng), c);
        }
    } else {  // top_rollouts: keep the best-rewarded slice of fresh rollouts
        const RewardFn reward = training_reward(task, cfg.reward);
        const Schedule sched = schedule_from(cfg.sft.num_steps, cfg.sft.clamp_delta);
        Rng rng(derive_seed(cfg.seed, 0x5e1));
        struct Scored {
            Vec x;
            int c;
            double r;
        };
        std::vector<Scored> scored;
        scored.reserve(static_cast<std::size_t>(cfg.sft.num_samples));
        for (int i = 0; i < cfg.sft.num_samples; ++i) {
            const int c = rng.uniform_int(conds);
            Trajectory traj = sde_sample(ref.params, c, sched, cfg.sft.noise_level,
                                         derive_seed(cfg.seed, 0xab, static_cast<std::uint64_t>(i)));
            const double r = reward(traj.x_final, c);
            scored.push_back({std::move(traj.x_final), c, r});
        }
        std::stable_sort(scored.begin(), scored.end(),
                         [](const Scored& a, const Scored& b) { return a.r > b.r; });
        const std::size_t keep = std::max<std::size_t>(
            1, static_cast<std::size_t>(cfg.sft.top_fraction * scored.size()));
        for (std::size_t i = 0; i < keep; ++i) {
            dataset.emplace_back(std::move(scored[i].x), scored[i].c);
        }
    }

    SftConfig sc;
    sc.steps = cfg.sft.steps;
    sc.batch_size = cfg.sft.batch_size;
    sc.lr = cfg.sft.lr;
    sc.seed = cfg.seed;
    sc.deterministic = cfg.deterministic;

    std::vector<TrainLogRow> log;
    Checkpoint ck = sft_finetune(ref, dataset, sc, &log);
    ck.config_fingerprint = fp;
    const std::string ck_path = join_path(cfg.out_dir, "checkpoint.json");
    save_checkpoint(ck, ck_path);
    write_train_log(join_path(cfg.out_dir, "metrics.csv"), log);
    std::cout << "sft: " << dataset.size() << " samples (" << cfg.sft.source << "), " << sc.steps
              << " steps, final loss " << format_double(log.back().loss) << ", checkpoint "
              << ck_path << "\n";
}

void run_sample(const ExperimentConfig& cfg) {
    const Checkpoint ck = load_stage_checkpoint(cfg, cfg.sample.checkpoint, "sample");
    if (cfg.sample.num_samples < 1) throw ConfigError("sample.num_samples must be >= 1");
    const NetSpec& spec = ck.params.spec;
    const int d = spec.input_dim;
    const Schedule sched = schedule_from(cfg.sample.num_steps, cfg.sample.clamp_delta);
    const bool use_sde = cfg.sample.sampler == "sde";

    std::string header;
    for (int k = 0; k < d; ++k) header += "x" + std::to_string(k) + ",";
    header += "condition";
    CsvDoc samples_csv(header);

    std::string traj_header = "trajectory,step,t,sigma,dt";
    for (int k = 0; k < d; ++k) traj_header += ",xt_" + std::to_string(k);
    for (int k = 0; k < d; ++k) traj_header += ",mean_" + std::to_string(k);
    for (int k = 0; k < d; ++k) traj_header += ",xnext_" + std::to_string(k);
    CsvDoc traj_csv(traj_header);

    int dumped = 0;
    for (int c = 0; c < spec.num_conditions; ++c) {
        for (int i = 0; i < cfg.sample.num_samples; ++i) {
            const std::uint64_t s =
                derive_seed(cfg.seed, static_cast<std::uint64_t>(c), static_cast<std::uint64_t>(i));
            const Trajectory traj = use_sde
                                        ? sde_sample(ck.params, c, sched, cfg.sample.noise_level, s)
                                        : ode_sample(ck.params, c, sched, s);
            std::vector<std::string> row;
            for (double v : traj.x_final) row.push_back(format_double(v));
            row.push_back(std::to_string(c));
            samples_csv.row(row);

            if (dumped < cfg.sample.dump_trajectories) {
                for (std::size_t k = 0; k < traj.transitions.size(); ++k) {
                    const Transition& tr = traj.transitions[k];
                    std::vector<std::string> trow = {std::to_string(dumped), std::to_string(k),
                                                     format_double(tr.t), format_double(tr.sigma),
                                                     format_double(tr.dt)};
                    for (double v : tr.x_t) trow.push_back(format_double(v));
                    for (double v : tr.mean) trow.push_back(format_double(v));
                    for (double v : tr.x_next) trow.push_back(format_double(v));
                    traj_csv.row(trow);
                }
                ++dumped;
            }
        }
    }
    samples_csv.save(join_path(cfg.out_dir, "samples.csv"));
    if (cfg.sample.dump_trajectories > 0) {
        traj_csv.save(join_path(cfg.out_dir, "trajectories.csv"));
    }
    std::cout << "sample: wrote " << cfg.sample.num_samples * spec.num_conditions << " points ("
              << cfg.sample.sampler << ", T=" << cfg.sample.num_steps << ") to "
              << join_path(cfg.out_dir, "samples.csv") << "\n";
}

void run_eval(const ExperimentConfig& cfg) {
    const Task& task = require_task(cfg, "eval");
    const Checkpoint ck = load_stage_checkpoint(cfg, cfg.eval.checkpoint, "eval");
    const auto rewards = reward_suite(task, cfg.reward);
    const Schedule sched = schedule_from(cfg.eval.num_steps, cfg.eval.clamp_delta);
    const EvalReport rep = evaluate(ck, task, rewards, cfg.eval.num_samples, sched, cfg.seed);

    CsvDoc csv("metric,value");
    csv.row({"samples_per_condition", std::to_string(rep.samples_per_condition)});
    for (std::size_t i = 0; i < rep.reward_names.size(); ++i) {
        csv.row({"reward_mean/" + rep.reward_names[i], format_double(rep.reward_means[i])});
    }
    if (rep.has_oracle) {
        csv.row({"max_mean_err", format_double(rep.max_mean_err)});
        csv.row({"max_cov_err", format_double(rep.max_cov_err)});
    }
    csv.save(join_path(cfg.out_dir, "eval.csv"));

    std::cout << "eval:";
    for (std::size_t i = 0; i < rep.reward_names.size(); ++i) {
        std::cout << " " << rep.reward_names[i] << "=" << format_double(rep.reward_means[i]);
    }
    if (rep.has_oracle) {
        std::cout << " max_mean_err=" << format_double(rep.max_mean_err)
                  << " max_cov_err=" << format_double(rep.max_cov_err);
    }
    std::cout << " (" << rep.samples_per_condition << " samples/condition)\n";
}

void run_calibrate(const ExperimentConfig& cfg) {
    if (cfg.calibrate_section.input.empty()) {
        throw ConfigError("'calibrate' needs calibrate.input (a two-column CSV path)");
    }
    const std::string path = resolve_path(cfg, cfg.calibrate_section.input);
    const std::string text = read_text_file(path);

    Vec model, reference;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        const std::string line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 2) {
            throw InputError(path + ":" + std::to_string(line_no) +
                             ": expected two comma-separated columns");
        }
        try {
            const double m = parse_double(fields[0]);
            const double r = parse_double(fields[1]);
            model.push_back(m);
            reference.push_back(r);
        } catch (const InputError&) {
            if (line_no == 1) continue;  // header row
            throw InputError(path + ":" + std::to_string(line_no) + ": expected two numbers");
        }
    }

    const CalibrationReport rep = calibrate(model, reference);
    CsvDoc csv("lcc,srcc,ktau,n");
    csv.row({format_double(rep.lcc), format_double(rep.srcc), format_double(rep.ktau),
             std::to_string(rep.n)});
    csv.save(join_path(cfg.out_dir, "calibration.csv"));
    std::cout << "calibrate: n=" << rep.n << " lcc=" << format_double(rep.lcc)
              << " srcc=" << format_double(rep.srcc) << " ktau=" << format_double(rep.ktau)
              << "\n";
}

void run_sweep(const ExperimentConfig& cfg) {
    const Task& task = require_task(cfg, "sweep");
    if (cfg.sweep.axis.empty()) throw ConfigError("'sweep' needs a 'sweep' section with an axis");
    const Checkpoint ref = load_stage_checkpoint(cfg, cfg.grpo.checkpoint, "grpo");
    check_task_fit(ref, task);
    const RewardFn reward = training_reward(task, cfg.reward);
    const std::vector<std::pair<std::string, RewardFn>> eval_rewards = {{"train", reward}};

    GrpoConfig base;
    base.group_size = cfg.grpo.group_size;
    base.noise_level = cfg.grpo.noise_level;
    base.kl_coeff = cfg.grpo.kl_coeff;
    base.clip_eps = cfg.grpo.clip_eps;
    base.steps = cfg.grpo.steps;
    base.prompts_per_step = cfg.grpo.prompts_per_step;
    base.inner_updates = cfg.grpo.inner_updates;
    base.schedule = schedule_from(cfg.grpo.num_steps, cfg.grpo.clamp_delta);
    base.lr = cfg.grpo.lr;
    base.seed = cfg.seed;  // shared across axis values so comparisons are paired
    base.deterministic = cfg.deterministic;

    const int eval_samples = 512;
    const std::uint64_t eval_seed = derive_seed(cfg.seed, 0xe7a1);

    CsvDoc csv("axis,value,final_mean_reward,status");
    for (double v : cfg.sweep.values) {
        GrpoConfig gc = base;
        std::string value_str;
        if (cfg.sweep.axis == "group_size") {
            gc.group_size = static_cast<int>(v);
            value_str = std::to_string(static_cast<int>(v));
        } else {
            gc.noise_level = v;
            value_str = format_double(v);
        }
        std::string status = "ok";
        double final_reward = 0.0;
        try {
            auto [ck, metrics] = grpo_train(ref, task, reward, gc);
            final_reward =
                evaluate(ck, task, eval_rewards, eval_samples, base.schedule, eval_seed)
                    .reward_means[0];
        } catch (const FlowError& e) {
            std::cerr << "note: sweep " << cfg.sweep.axis << "=" << value_str
                      << " failed: " << e.what() << "\n";
            status = "failed";
            final_reward =
                evaluate(ref, task, eval_rewards, eval_samples, base.schedule, eval_seed)
                    .reward_means[0];
        }
        csv.row({cfg.sweep.axis, value_str, format_double(final_reward), status});
    }
    csv.save(join_path(cfg.out_dir, "sweep.csv"));
    std::cout << "sweep: " << cfg.sweep.axis << " over " << cfg.sweep.values.size()
              << " values, results in " << join_path(cfg.out_dir, "sweep.csv") << "\n";
}

}  // namespace

Schedule schedule_from(int nsteps, double clamp_delta) {
    return clamp_delta > 0.0 ? uniform_schedule(nsteps, clamp_delta) : uniform_schedule(nsteps);
}

std::vector<std::pair<std::string, RewardFn>> reward_suite(
    const Task& task, const std::optional<RewardSpec>& spec) {
    std::vector<std::pair<std::string, RewardFn>> out;
    const RingTask* ring = ring_of(task);

    if (spec) {
        if (spec->type == "qa_region") {
            const RingTask* region = spec->region ? &*spec->region : ring;
            if (!region) {
                throw ConfigError(
                    "reward: qa_region needs a ring task or an explicit reward.region");
            }
            out.emplace_back("qa_region", qa_reward_fn(region_scorer(*region, spec->steepness)));
        } else {
            const RingTask* space = ring ? ring : (spec->region ? &*spec->region : nullptr);
            if (!space) {
                throw ConfigError(
                    "reward: similarity needs a ring task or an explicit reward.region");
            }
            out.emplace_back("similarity", similarity_reward_fn(ring_embedding(*space)));
        }
    } else if (ring) {
        out.emplace_back("qa_region", qa_reward_fn(region_scorer(*ring, RewardSpec{}.steepness)));
    }

    if (ring && std::none_of(out.begin(), out.end(),
                             [](const auto& p) { return p.first == "similarity"; })) {
        out.emplace_back("similarity", similarity_reward_fn(ring_embedding(*ring)));
    }
    return out;
}

RewardFn training_reward(const Task& task, const std::optional<RewardSpec>& spec) {
    auto suite = reward_suite(task, spec);
    if (suite.empty()) {
        throw ConfigError(
            "this stage needs a reward; add a 'reward' section (Gaussian tasks have no default)");
    }
    return std::move(suite.front().second);
}

EvalReport evaluate(const Checkpoint& ck, const Task& task,
                    const std::vector<std::pair<std::string, RewardFn>>& rewards, int n_samples,
                    const Schedule& schedule, std::uint64_t seed) {
    validate_task(task);
    validate_schedule(schedule);
    if (n_samples < 2) throw InputError("evaluate: num_samples must be >= 2");
    check_task_fit(ck, task);

    const int conds = num_conditions(task);
    const int d = task_dim(task);
    const auto* gauss = std::get_if<GaussianTask>(&task);

    EvalReport rep;
    rep.samples_per_condition = n_samples;
    rep.has_oracle = gauss != nullptr;
    Vec reward_sums(rewards.size(), 0.0);
    for (const auto& [name, fn] : rewards) rep.reward_names.push_back(name);

    for (int c = 0; c < conds; ++c) {
        Vec mean(static_cast<std::size_t>(d), 0.0);
        Mat second(d);  // sum of outer products
        for (int i = 0; i < n_samples; ++i) {
            const Trajectory traj =
                ode_sample(ck.params, c, schedule,
                           derive_seed(seed, static_cast<std::uint64_t>(c),
                                       static_cast<std::uint64_t>(i)));
            const Vec& x = traj.x_final;
            for (std::size_t f = 0; f < rewards.size(); ++f) {
                reward_sums[f] += rewards[f].second(x, c);
            }
            for (int a = 0; a < d; ++a) {
                mean[a] += x[a];
                for (int b = 0; b < d; ++b) second(a, b) += x[a] * x[b];
            }
        }
        const double inv_n = 1.0 / static_cast<double>(n_samples);
        for (int a = 0; a < d; ++a) mean[a] *= inv_n;
        if (gauss) {
            const auto [mu, cov] = oracle_marginal(*gauss, 0.0, c);
            for (int a = 0; a < d; ++a) {
                rep.max_mean_err = std::max(rep.max_mean_err, std::abs(mean[a] - mu[a]));
                for (int b = 0; b < d; ++b) {
                    const double sample_cov = second(a, b) * inv_n - mean[a] * mean[b];
                    rep.max_cov_err = std::max(rep.max_cov_err, std::abs(sample_cov - cov(a, b)));
                }
            }
        }
    }
    rep.reward_means.resize(rewards.size());
    const double total = static_cast<double>(conds) * static_cast<double>(n_samples);
    for (std::size_t f = 0; f < rewards.size(); ++f) {
        rep.reward_means[f] = reward_sums[f] / total;
    }
    return rep;
}

void run_stage(const std::string& stage, ExperimentConfig cfg) {
    static const char* kStages[] = {"pretrain", "grpo", "dpo", "sft",
                                    "sample", "eval", "calibrate", "sweep"};
    if (std::none_of(std::begin(kStages), std::end(kStages),
                     [&](const char* s) { return stage == s; })) {
        throw InputError("unknown subcommand '" + stage + "'");
    }
    if (cfg.stage && *cfg.stage != stage) {
        throw ConfigError("config stage '" + *cfg.stage + "' does not match subcommand '" + stage +
                          "'");
    }
    cfg.stage = stage;

    std::error_code ec;
    fs::create_directories(cfg.out_dir, ec);
    if (ec) throw InputError("cannot create output directory '" + cfg.out_dir + "'");

    const std::uint64_t fp = config_fingerprint(cfg);
    write_text_file(join_path(cfg.out_dir, "fingerprint.txt"), fingerprint_hex(fp) + "\n");
    write_text_file(join_path(cfg.out_dir, "config.json"), dump_config(cfg));

    if (stage == "pretrain") {
        run_pretrain(cfg, fp);
    } else if (stage == "grpo") {
        run_grpo(cfg, fp);
    } else if (stage == "dpo") {
        run_dpo(cfg, fp);
    } else if (stage == "sft") {
        run_sft(cfg, fp);
    } else if (stage == "sample") {
        run_sample(cfg);
    } else if (stage == "eval") {
        run_eval(cfg);
    } else if (stage == "calibrate") {
        run_calibrate(cfg);
    } else {
        run_sweep(cfg);
    }
}

}  // namespace flowrl
