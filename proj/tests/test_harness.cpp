#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <string>
#include <sys/wait.h>

#include "flowrl/config.hpp"
#include "flowrl/harness.hpp"
#include "flowrl/textio.hpp"

using namespace flowrl;
namespace fs = std::filesystem;

namespace {

// Scratch directory, removed on scope exit.
struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() /
               (tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    static int& counter() {
        static int n = 0;
        return n;
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

#ifdef FLOWRL_CLI_PATH
int run_cli(const std::string& args) {
    const std::string cmd = std::string(FLOWRL_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(rc));
    return WEXITSTATUS(rc);
}
#endif

const char* kGaussConfig = R"({
 "stage": "pretrain",
 "seed": 3,
 "task": {
  "type": "gaussian",
  "conditions": [
   {"mean": [2.0, 0.0], "cov": [[1.0, 0.0], [0.0, 1.0]]}
  ]
 },
 "net": {"hidden_widths": [8, 8], "time_embed_dim": 4, "cond_embed_dim": 3, "num_conditions": 1},
 "pretrain": {"steps": 30, "batch_size": 16, "lr": 0.002, "log_every": 5}
})";

NetSpec tiny() {
    NetSpec s;
    s.input_dim = 2;
    s.hidden_widths = {8, 8};
    s.time_embed_dim = 4;
    s.num_conditions = 1;
    s.cond_embed_dim = 3;
    return s;
}

GaussianTask point_task() {
    GaussianTask t;
    t.conditions.push_back({{2.0, 0.0}, Mat::identity(2)});
    return t;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("config parsing fills defaults and validates strictly") {
    const ExperimentConfig cfg = parse_config(kGaussConfig, "inline");
    REQUIRE(cfg.stage.has_value());
    CHECK(*cfg.stage == "pretrain");
    CHECK(cfg.seed == 3);
    CHECK(cfg.pretrain.steps == 30);
    CHECK(cfg.pretrain.log_every == 5);
    // Untouched sections keep documented defaults.
    CHECK(cfg.grpo.group_size == 24);
    CHECK(cfg.grpo.noise_level == 0.7);
    CHECK(cfg.grpo.kl_coeff == 0.04);
    CHECK(cfg.dpo.beta == 100.0);
    CHECK(cfg.sample.num_steps == 100);
    CHECK(cfg.out_dir == "out");
    CHECK_FALSE(cfg.deterministic);
    REQUIRE(cfg.net.has_value());
    CHECK(cfg.net->hidden_widths == std::vector<int>{8, 8});

    CHECK_THROWS_AS(parse_config("{ not json", "inline"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"seed": -4})", "inline"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"seed": "zero"})", "inline"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"stage": "deploy"})", "inline"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"pretrain": {"steps": 5, "bogus": 1}})", "inline"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"sweep": {"axis": "lr", "values": [0.1]}})", "inline"),
                    ConfigError);
    CHECK_THROWS_AS(
        parse_config(R"({"sweep": {"axis": "group_size", "values": [4.5]}})", "inline"),
        ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"reward": {"type": "cosine"}})", "inline"), ConfigError);
}

TEST_CASE("unknown keys are rejected by name, all of them") {
    try {
        parse_config(R"({"seed": 1, "alpha": 1, "zeta": 2})", "inline");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("alpha") != std::string::npos);
        CHECK(msg.find("zeta") != std::string::npos);
    }
}

TEST_CASE("fingerprint tracks the experiment, not its output location") {
    ExperimentConfig a = parse_config(kGaussConfig, "inline");
    ExperimentConfig b = a;
    b.out_dir = "elsewhere";
    CHECK(config_fingerprint(a) == config_fingerprint(b));

    ExperimentConfig c = a;
    c.seed = 4;
    CHECK(config_fingerprint(a) != config_fingerprint(c));

    ExperimentConfig d = a;
    d.pretrain.lr = 0.001;
    CHECK(config_fingerprint(a) != config_fingerprint(d));

    // dump/parse round trip preserves the fingerprint.
    const ExperimentConfig e = parse_config(dump_config(a), "inline");
    CHECK(config_fingerprint(a) == config_fingerprint(e));
}

TEST_CASE("checkpoints round-trip bit-exactly") {
    const NetSpec spec = tiny();
    Checkpoint ck;
    ck.params = init_params(spec, 5);
    // Values chosen to stress the serialization: subnormal-ish, negative
    // zero, repeating binary fractions.
    ck.params.values[0] = 1.0 / 3.0;
    ck.params.values[1] = -0.0;
    ck.params.values[2] = 1e-300;
    ck.params.values[3] = std::numbers::pi;
    AdamState st = make_adam_state(ck.params.values.size(), 3e-4);
    st.step_count = 17;
    st.first_moment[4] = -2.0 / 7.0;
    st.second_moment[4] = 1.0 / 9.0;
    ck.optimizer = st;
    ck.stage = "grpo";
    ck.config_fingerprint = 0xdeadbeefcafef00dull;
    ck.created = "2031-01-01T00:00:00Z";

    TempDir dir("ckpt");
    const std::string path = dir.file("checkpoint.json");
    save_checkpoint(ck, path);
    const Checkpoint back = load_checkpoint(path);
    CHECK(back.params.spec == spec);
    CHECK(back.params.values == ck.params.values);  // bitwise
    REQUIRE(back.optimizer.has_value());
    CHECK(back.optimizer->first_moment == st.first_moment);
    CHECK(back.optimizer->second_moment == st.second_moment);
    CHECK(back.optimizer->step_count == 17);
    CHECK(back.optimizer->lr == st.lr);
    CHECK(back.stage == "grpo");
    CHECK(back.config_fingerprint == ck.config_fingerprint);
    CHECK(back.created == ck.created);

    // Negative zero must survive with its sign.
    CHECK(std::signbit(back.params.values[1]));

    // Save twice: byte-identical files.
    const std::string path2 = dir.file("checkpoint2.json");
    save_checkpoint(ck, path2);
    CHECK(read_text_file(path) == read_text_file(path2));
}

TEST_CASE("checkpoint loading failure modes") {
    const NetSpec spec = tiny();
    Checkpoint ck;
    ck.params = init_params(spec, 5);
    ck.stage = "pretrain";

    TempDir dir("ckpt_fail");
    const std::string path = dir.file("good.json");
    save_checkpoint(ck, path);

    // Truncation: parse error, not a crash.
    const std::string full = read_text_file(path);
    write_text_file(dir.file("cut.json"), full.substr(0, full.size() / 2));
    CHECK_THROWS_AS(load_checkpoint(dir.file("cut.json")), InputError);

    write_text_file(dir.file("junk.json"), "pure garbage\n");
    CHECK_THROWS_AS(load_checkpoint(dir.file("junk.json")), InputError);

    write_text_file(dir.file("other.json"), R"({"format": "something-else-v9"})");
    CHECK_THROWS_AS(load_checkpoint(dir.file("other.json")), CompatibilityError);

    CHECK_THROWS_AS(load_checkpoint(dir.file("missing.json")), InputError);

    // Spec mismatch names both shapes.
    NetSpec wide = spec;
    wide.hidden_widths = {32, 32};
    try {
        load_checkpoint(path, wide);
        FAIL("expected CompatibilityError");
    } catch (const CompatibilityError& e) {
        const std::string msg = e.what();
        CHECK(msg.find(describe(spec)) != std::string::npos);
        CHECK(msg.find(describe(wide)) != std::string::npos);
    }
}

TEST_CASE("schedule selection honors the zero-means-default rule") {
    const Schedule d = schedule_from(20, 0.0);
    CHECK(d.clamp_delta == doctest::Approx(0.025));
    const Schedule e = schedule_from(20, 0.01);
    CHECK(e.clamp_delta == 0.01);
    CHECK(num_steps(d) == 20);
}

TEST_CASE("reward suite composition") {
    RingTask ring;
    ring.num_modes = 8;
    ring.radius = 2.0;
    ring.mode_std = 0.12;
    for (int c = 0; c < 4; ++c) ring.arcs.push_back({c * std::numbers::pi / 2,
                                                     std::numbers::pi / 2});
    const Task ring_task = ring;

    const auto suite = reward_suite(ring_task, std::nullopt);
    REQUIRE(suite.size() == 2);
    CHECK(suite[0].first == "qa_region");
    CHECK(suite[1].first == "similarity");

    RewardSpec sim;
    sim.type = "similarity";
    const auto suite2 = reward_suite(ring_task, sim);
    CHECK(suite2[0].first == "similarity");

    const Task gauss = point_task();
    CHECK(reward_suite(gauss, std::nullopt).empty());
    CHECK_THROWS_AS(training_reward(gauss, std::nullopt), ConfigError);
    CHECK_NOTHROW(training_reward(ring_task, std::nullopt));

    RewardSpec qa;
    qa.type = "qa_region";
    CHECK_THROWS_AS(reward_suite(gauss, qa), ConfigError);  // no region anywhere
    qa.region = ring;
    CHECK(reward_suite(gauss, qa).size() == 1);
}

TEST_CASE("evaluation reports are pure and oracle-aware") {
    const NetSpec spec = tiny();
    Checkpoint ck;
    ck.params = init_params(spec, 12);
    ck.stage = "pretrain";
    const Task task = point_task();
    const Schedule sched = uniform_schedule(10);

    const EvalReport a = evaluate(ck, task, {}, 50, sched, 7);
    const EvalReport b = evaluate(ck, task, {}, 50, sched, 7);
    CHECK(a.has_oracle);
    CHECK(a.samples_per_condition == 50);
    CHECK(a.max_mean_err == b.max_mean_err);
    CHECK(a.max_cov_err == b.max_cov_err);
    CHECK(a.max_mean_err > 0.0);

    NetSpec other = tiny();
    other.num_conditions = 3;
    Checkpoint bad;
    bad.params = init_params(other, 1);
    CHECK_THROWS_AS(evaluate(bad, task, {}, 50, sched, 7), CompatibilityError);
}

#ifdef FLOWRL_CLI_PATH

TEST_CASE("cli usage errors exit 2") {
    CHECK(run_cli("") == 2);
    CHECK(run_cli("finetune --config x.json") == 2);  // unknown subcommand
    CHECK(run_cli("pretrain") == 2);                  // missing required --config
    CHECK(run_cli("pretrain --config /no/such/file.json") == 2);
    CHECK(run_cli("--help") == 0);
}

TEST_CASE("cli rejects invalid configs and stage mismatches with exit 2") {
    TempDir dir("cli_bad");
    write_text_file(dir.file("bad.json"), R"({"seed": 1, "mystery": true})");
    CHECK(run_cli("pretrain --config " + dir.file("bad.json")) == 2);

    write_text_file(dir.file("gauss.json"), kGaussConfig);
    // Config says pretrain; asking for eval is a mismatch.
    CHECK(run_cli("eval --config " + dir.file("gauss.json")) == 2);
}

TEST_CASE("cli runtime failures exit 1") {
    TempDir dir("cli_diverge");
    std::string cfg = kGaussConfig;
    const auto pos = cfg.find("\"lr\": 0.002");
    REQUIRE(pos != std::string::npos);
    cfg.replace(pos, 11, "\"lr\": 1e200");
    write_text_file(dir.file("diverge.json"), cfg);
    CHECK(run_cli("pretrain --config " + dir.file("diverge.json") + " --out " +
                  dir.file("out")) == 1);
}

TEST_CASE("cli pretrain produces the documented artifacts deterministically") {
    TempDir dir("cli_pt");
    write_text_file(dir.file("gauss.json"), kGaussConfig);
    const std::string base = "pretrain --config " + dir.file("gauss.json");

    CHECK(run_cli(base + " --out " + dir.file("a") + " --deterministic") == 0);
    CHECK(fs::exists(dir.file("a/checkpoint.json")));
    CHECK(fs::exists(dir.file("a/metrics.csv")));
    CHECK(fs::exists(dir.file("a/config.json")));
    CHECK(fs::exists(dir.file("a/fingerprint.txt")));

    CHECK(run_cli(base + " --out " + dir.file("b") + " --deterministic") == 0);
    CHECK(read_text_file(dir.file("a/metrics.csv")) == read_text_file(dir.file("b/metrics.csv")));
    CHECK(read_text_file(dir.file("a/checkpoint.json")) ==
          read_text_file(dir.file("b/checkpoint.json")));

    // Header and final row shape.
    const std::string metrics = read_text_file(dir.file("a/metrics.csv"));
    CHECK(metrics.rfind("step,loss,wall_ms\n", 0) == 0);

    // Seed override changes the artifacts (and the recorded fingerprint).
    CHECK(run_cli(base + " --out " + dir.file("c") + " --deterministic --seed 99") == 0);
    CHECK(read_text_file(dir.file("a/metrics.csv")) != read_text_file(dir.file("c/metrics.csv")));
    CHECK(read_text_file(dir.file("a/fingerprint.txt")) !=
          read_text_file(dir.file("c/fingerprint.txt")));
}

TEST_CASE("cli sample and eval consume a pretrained checkpoint") {
    TempDir dir("cli_chain");
    write_text_file(dir.file("gauss.json"), kGaussConfig);
    REQUIRE(run_cli("pretrain --config " + dir.file("gauss.json") + " --out " +
                    dir.file("pt")) == 0);

    const std::string sample_cfg = std::string(R"({
 "stage": "sample",
 "seed": 5,
 "sample": {"checkpoint": ")") + dir.file("pt/checkpoint.json") + R"(",
  "num_samples": 8, "sampler": "sde", "num_steps": 6, "dump_trajectories": 2}
})";
    write_text_file(dir.file("sample.json"), sample_cfg);
    REQUIRE(run_cli("sample --config " + dir.file("sample.json") + " --out " +
                    dir.file("sm")) == 0);
    const std::string samples = read_text_file(dir.file("sm/samples.csv"));
    CHECK(samples.rfind("x0,x1,condition\n", 0) == 0);
    // 8 samples, 1 condition, plus header line.
    CHECK(std::count(samples.begin(), samples.end(), '\n') == 9);
    const std::string trajs = read_text_file(dir.file("sm/trajectories.csv"));
    // 2 dumped trajectories x 6 steps + header.
    CHECK(std::count(trajs.begin(), trajs.end(), '\n') == 13);

    const std::string eval_cfg = std::string(R"({
 "stage": "eval",
 "seed": 6,
 "task": {"type": "gaussian", "conditions": [{"mean": [2.0, 0.0], "cov": [[1.0, 0.0], [0.0, 1.0]]}]},
 "eval": {"checkpoint": ")") + dir.file("pt/checkpoint.json") + R"(", "num_samples": 64, "num_steps": 10}
})";
    write_text_file(dir.file("eval.json"), eval_cfg);
    REQUIRE(run_cli("eval --config " + dir.file("eval.json") + " --out " + dir.file("ev")) == 0);
    const std::string report = read_text_file(dir.file("ev/eval.csv"));
    CHECK(report.rfind("metric,value\n", 0) == 0);
    CHECK(report.find("max_mean_err") != std::string::npos);
    CHECK(report.find("max_cov_err") != std::string::npos);
}

TEST_CASE("cli calibrate reads two-column score files") {
    TempDir dir("cli_cal");
    write_text_file(dir.file("scores.csv"), "model,reference\n0.1,1\n0.4,3\n0.3,2\n0.9,4\n");
    write_text_file(dir.file("cal.json"),
                    R"({"stage": "calibrate", "calibrate": {"input": "scores.csv"}})");
    REQUIRE(run_cli("calibrate --config " + dir.file("cal.json") + " --out " +
                    dir.file("out")) == 0);
    const std::string out = read_text_file(dir.file("out/calibration.csv"));
    CHECK(out.rfind("lcc,srcc,ktau,n\n", 0) == 0);
    CHECK(out.find(",4\n") != std::string::npos);

    // Relative input paths resolve against the config file's directory, so
    // running from any cwd works. (The run above already relied on it.)
    write_text_file(dir.file("broken.csv"), "1,2\n3\n");
    write_text_file(dir.file("cal2.json"),
                    R"({"stage": "calibrate", "calibrate": {"input": "broken.csv"}})");
    CHECK(run_cli("calibrate --config " + dir.file("cal2.json") + " --out " +
                  dir.file("out2")) == 2);
}

#endif  // FLOWRL_CLI_PATH

}  // TEST_SUITE("harness")
