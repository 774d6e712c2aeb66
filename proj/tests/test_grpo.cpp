#include <doctest.h>

#include <cmath>
#include <numbers>
#include <string>

#include "flowrl/cfm.hpp"
#include "flowrl/grpo.hpp"
#include "flowrl/rng.hpp"

using namespace flowrl;

namespace {

constexpr double kPi = std::numbers::pi;

NetSpec tiny_spec(int conds) {
    NetSpec s;
    s.input_dim = 2;
    s.hidden_widths = {8, 8};
    s.time_embed_dim = 4;
    s.num_conditions = conds;
    s.cond_embed_dim = 3;
    return s;
}

RingTask quadrant_ring() {
    RingTask task;
    task.num_modes = 8;
    task.radius = 2.0;
    task.mode_std = 0.12;
    for (int c = 0; c < 4; ++c) task.arcs.push_back({c * kPi / 2, kPi / 2});
    return task;
}

GrpoConfig small_config() {
    GrpoConfig cfg;
    cfg.group_size = 4;
    cfg.noise_level = 0.7;
    cfg.kl_coeff = 0.04;
    cfg.clip_eps = 0.2;
    cfg.steps = 3;
    cfg.prompts_per_step = 2;
    cfg.inner_updates = 1;
    cfg.schedule = uniform_schedule(6);
    cfg.lr = 3e-4;
    cfg.seed = 0;
    return cfg;
}

RewardFn ring_reward() {
    return qa_reward_fn(region_scorer(quadrant_ring(), 8.0));
}

double param_mse(const ParamVector& a, const ParamVector& b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        const double d = a.values[i] - b.values[i];
        sum += d * d;
    }
    return sum / static_cast<double>(a.values.size());
}

}  // namespace

TEST_SUITE("grpo") {

TEST_CASE("advantage normalization worked examples") {
    const Vec two = advantages({1.0, 0.0});
    CHECK(two[0] == doctest::Approx(1.0));
    CHECK(two[1] == doctest::Approx(-1.0));

    const Vec three = advantages({0.2, 0.5, 0.8});
    CHECK(three[0] == doctest::Approx(-1.224744871).epsilon(1e-8));
    CHECK(three[1] == doctest::Approx(0.0));
    CHECK(three[2] == doctest::Approx(1.224744871).epsilon(1e-8));

    const Vec flat = advantages({0.7, 0.7, 0.7, 0.7});
    for (double a : flat) CHECK(a == 0.0);

    // Below the degeneracy threshold counts as flat.
    const Vec nearly = advantages({0.5, 0.5 + 1e-12});
    for (double a : nearly) CHECK(a == 0.0);

    CHECK_THROWS_AS(advantages({1.0}), InputError);
}

TEST_CASE("advantages are standardized for any nondegenerate input") {
    Rng rng(6);
    Vec rewards(1000);
    for (double& r : rewards) r = rng.uniform();
    const Vec adv = advantages(rewards);
    double mean = 0.0;
    for (double a : adv) mean += a;
    mean /= static_cast<double>(adv.size());
    double var = 0.0;
    for (double a : adv) var += (a - mean) * (a - mean);
    var /= static_cast<double>(adv.size());
    CHECK(std::abs(mean) <= 1e-9);
    CHECK(std::abs(std::sqrt(var) - 1.0) <= 1e-6);
}

TEST_CASE("per-step KL closed form") {
    CHECK(step_kl({0.4, -0.2}, {0.4, -0.2}, 0.5, -0.1) == 0.0);

    // ||d||^2 = 2 sig^2 |dt| lands exactly at 1.
    const double sig = 0.3, dt = -0.1;
    const double norm = std::sqrt(2.0 * sig * sig * 0.1);
    CHECK(step_kl({norm, 0.0}, {0.0, 0.0}, sig, dt) == doctest::Approx(1.0));

    // (0.09 + 0.16) / (2 * 0.25 * 0.04) = 12.5.
    CHECK(step_kl({0.3, 0.4}, {0.0, 0.0}, 0.5, -0.04) == doctest::Approx(12.5));

    CHECK_THROWS_AS(step_kl({1.0}, {0.0}, 0.0, -0.1), NumericError);
    CHECK_THROWS_AS(step_kl({1.0}, {0.0}, 0.5, 0.0), InputError);
    CHECK_THROWS_AS(step_kl({1.0}, {0.0, 0.0}, 0.5, -0.1), InputError);
}

TEST_CASE("clip arithmetic") {
    const double eps = 0.2;
    // Ratio far above the window with positive advantage: clipped branch.
    CHECK(clip_term(1.0 + 2 * eps, 1.0, eps) == doctest::Approx(1.0 + eps));
    // Negative advantage, ratio below the window: min picks the clipped -0.8.
    CHECK(clip_term(0.5, -1.0, eps) == doctest::Approx(-0.8));
    // Inside the window both branches agree.
    CHECK(clip_term(1.05, 1.0, eps) == doctest::Approx(1.05));
    CHECK(clip_term(0.9, -2.0, eps) == doctest::Approx(-1.8));
}

TEST_CASE("group collection structure, range, and determinism") {
    const NetSpec spec = tiny_spec(4);
    const ParamVector params = init_params(spec, 10);
    const GrpoConfig cfg = small_config();
    const RewardFn reward = ring_reward();

    const RolloutGroup g = collect_group(params, 2, cfg, reward, 33);
    REQUIRE(g.trajectories.size() == 4);
    REQUIRE(g.rewards.size() == 4);
    REQUIRE(g.advantages.size() == 4);
    CHECK(g.condition == 2);
    for (const Trajectory& traj : g.trajectories) {
        CHECK(traj.transitions.size() == 6);
        CHECK(chains(traj));
        CHECK(traj.condition == 2);
        REQUIRE(traj.reward.has_value());
    }
    for (double r : g.rewards) {
        CHECK(r > 0.0);
        CHECK(r < 1.0);
    }
    double mean = 0.0;
    for (double a : g.advantages) mean += a;
    CHECK(std::abs(mean) <= 1e-9);

    const RolloutGroup g2 = collect_group(params, 2, cfg, reward, 33);
    CHECK(g.rewards == g2.rewards);
    CHECK(g.trajectories[1].x_final == g2.trajectories[1].x_final);
    const RolloutGroup g3 = collect_group(params, 2, cfg, reward, 34);
    CHECK(g.rewards != g3.rewards);
}

TEST_CASE("reward failures carry the trajectory index") {
    const NetSpec spec = tiny_spec(4);
    const ParamVector params = init_params(spec, 10);
    const GrpoConfig cfg = small_config();
    const RewardFn broken = [](const Vec&, int) -> double {
        throw InputError("scorer offline");
    };
    try {
        collect_group(params, 0, cfg, broken, 1);
        FAIL("expected an error");
    } catch (const FlowError& e) {
        CHECK(std::string(e.what()).find("trajectory") != std::string::npos);
    }
}

TEST_CASE("identical policies make the surrogate vanish") {
    const NetSpec spec = tiny_spec(4);
    const ParamVector params = init_params(spec, 20);
    const GrpoConfig cfg = small_config();
    const RolloutGroup group = collect_group(params, 1, cfg, ring_reward(), 5);

    const PolicyTriple triple{params, params, params};
    const SurrogateResult r = surrogate_loss(triple, group, cfg);
    CHECK(std::abs(r.loss) <= 1e-12);
    CHECK(r.diag.mean_kl == 0.0);
    CHECK(r.diag.clip_fraction == 0.0);
    CHECK(r.diag.mean_ratio == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.diag.min_ratio == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.diag.max_ratio == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("surrogate gradient matches finite differences on a frozen group") {
    const NetSpec spec = tiny_spec(4);
    const ParamVector old_params = init_params(spec, 40);
    GrpoConfig cfg = small_config();
    cfg.group_size = 2;
    cfg.schedule = uniform_schedule(3);
    const RolloutGroup group = collect_group(old_params, 3, cfg, ring_reward(), 9);

    // General position: current, old and reference all differ.
    ParamVector current = old_params;
    ParamVector reference = old_params;
    Rng rng(55);
    for (double& v : current.values) v += 0.01 * rng.normal();
    for (double& v : reference.values) v += 0.01 * rng.normal();

    PolicyTriple triple{current, old_params, reference};
    const SurrogateResult base = surrogate_loss(triple, group, cfg);
    REQUIRE(base.grads.values.size() == current.values.size());

    const double h = 1e-5;
    for (std::size_t i = 0; i < current.values.size(); ++i) {
        const double keep = triple.current.values[i];
        triple.current.values[i] = keep + h;
        const double fp = surrogate_loss(triple, group, cfg).loss;
        triple.current.values[i] = keep - h;
        const double fm = surrogate_loss(triple, group, cfg).loss;
        triple.current.values[i] = keep;
        const double fd = (fp - fm) / (2 * h);
        const double scale = std::max({std::abs(fd), std::abs(base.grads.values[i]), 1e-7});
        CHECK(std::abs(fd - base.grads.values[i]) / scale <= 1e-4);
    }

    // Old and reference parameters must receive no gradient: the loss value
    // is unchanged when only the current policy is perturbed back and forth,
    // which the finite-difference pass above already exercised; here check
    // the documented direction explicitly via the diagnostics.
    CHECK(base.diag.mean_ratio != doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("flat rewards with zero KL coefficient give a zero gradient") {
    const NetSpec spec = tiny_spec(4);
    const ParamVector params = init_params(spec, 3);
    GrpoConfig cfg = small_config();
    cfg.kl_coeff = 0.0;
    const RewardFn constant = [](const Vec&, int) { return 0.42; };
    const RolloutGroup group = collect_group(params, 0, cfg, constant, 12);
    for (double a : group.advantages) CHECK(a == 0.0);

    ParamVector current = params;
    Rng rng(2);
    for (double& v : current.values) v += 0.01 * rng.normal();
    const PolicyTriple triple{current, params, params};
    const SurrogateResult r = surrogate_loss(triple, group, cfg);
    for (double g : r.grads.values) CHECK(g == 0.0);
}

TEST_CASE("surrogate requires stochastic transitions") {
    const NetSpec spec = tiny_spec(4);
    const ParamVector params = init_params(spec, 3);
    GrpoConfig cfg = small_config();

    RolloutGroup group = collect_group(params, 0, cfg, ring_reward(), 12);
    for (Trajectory& traj : group.trajectories) {
        for (Transition& tr : traj.transitions) tr.sigma = 0.0;
    }
    const PolicyTriple triple{params, params, params};
    CHECK_THROWS_AS(surrogate_loss(triple, group, cfg), InputError);
}

TEST_CASE("group means stabilize as the group grows") {
    // The advantage estimator's whole point: bigger groups, steadier means.
    const NetSpec spec = tiny_spec(4);
    const ParamVector params = init_params(spec, 60);
    const RewardFn reward = ring_reward();

    auto group_mean_sd = [&](int G, std::uint64_t salt) {
        GrpoConfig cfg = small_config();
        cfg.group_size = G;
        Vec means;
        for (int rep = 0; rep < 40; ++rep) {
            const RolloutGroup g =
                collect_group(params, 1, cfg, reward, derive_seed(salt, rep));
            double m = 0.0;
            for (double r : g.rewards) m += r;
            means.push_back(m / G);
        }
        double mm = 0.0;
        for (double m : means) mm += m;
        mm /= means.size();
        double var = 0.0;
        for (double m : means) var += (m - mm) * (m - mm);
        return std::sqrt(var / means.size());
    };
    CHECK(group_mean_sd(24, 101) < group_mean_sd(4, 100));
}

TEST_CASE("training rejects a zero noise level") {
    const Task task = quadrant_ring();
    const NetSpec spec = tiny_spec(4);
    Checkpoint ref;
    ref.params = init_params(spec, 1);
    ref.stage = "pretrain";
    GrpoConfig cfg = small_config();
    cfg.noise_level = 0.0;
    CHECK_THROWS_AS(grpo_train(ref, task, ring_reward(), cfg), TrainingError);
}

TEST_CASE("training is deterministic and logs a full metrics series") {
    const Task task = quadrant_ring();
    const NetSpec spec = tiny_spec(4);
    Checkpoint ref;
    ref.params = init_params(spec, 8);
    ref.stage = "pretrain";
    GrpoConfig cfg = small_config();
    cfg.deterministic = true;

    const auto [ck1, m1] = grpo_train(ref, task, ring_reward(), cfg);
    const auto [ck2, m2] = grpo_train(ref, task, ring_reward(), cfg);
    REQUIRE(m1.size() == 3);
    CHECK(ck1.params.values == ck2.params.values);
    CHECK(ck1.stage == "grpo");
    for (std::size_t i = 0; i < m1.size(); ++i) {
        CHECK(m1[i].mean_reward == m2[i].mean_reward);
        CHECK(m1[i].surrogate_loss == m2[i].surrogate_loss);
        CHECK(m1[i].mean_kl == m2[i].mean_kl);
        CHECK(m1[i].clip_fraction == m2[i].clip_fraction);
        CHECK(m1[i].wall_ms == 0.0);
    }
    // Single inner update per step: every logged row reflects ratios == 1,
    // so the clip never fires on the logged update.
    for (const GrpoMetricsRow& row : m1) CHECK(row.clip_fraction == 0.0);
}

TEST_CASE("degenerate groups are reported but not fatal") {
    const Task task = quadrant_ring();
    const NetSpec spec = tiny_spec(4);
    Checkpoint ref;
    ref.params = init_params(spec, 8);
    ref.stage = "pretrain";
    GrpoConfig cfg = small_config();
    cfg.steps = 2;
    const RewardFn constant = [](const Vec&, int) { return 0.5; };
    std::vector<std::string> notices;
    const auto [ck, metrics] = grpo_train(ref, task, constant, cfg, &notices);
    CHECK(metrics.size() == 2);
    CHECK(!notices.empty());
    CHECK(notices.front().find("degenerate") != std::string::npos);
    // With zero advantages everywhere only the KL term can move parameters;
    // current == reference keeps that at zero too, so nothing changes.
    CHECK(ck.params.values == ref.params.values);
}

TEST_CASE("a heavy KL anchor keeps the policy near the reference") {
    const Task task = quadrant_ring();
    NetSpec spec = tiny_spec(4);
    Checkpoint ref;
    ref.params = init_params(spec, 14);
    ref.stage = "pretrain";

    GrpoConfig cfg = small_config();
    cfg.steps = 20;
    cfg.prompts_per_step = 2;
    cfg.lr = 1e-3;

    GrpoConfig loose = cfg;
    loose.kl_coeff = 0.04;
    GrpoConfig tight = cfg;
    tight.kl_coeff = 10.0;

    const auto [ck_loose, m_loose] = grpo_train(ref, task, ring_reward(), loose);
    const auto [ck_tight, m_tight] = grpo_train(ref, task, ring_reward(), tight);
    CHECK(param_mse(ck_tight.params, ref.params) < param_mse(ck_loose.params, ref.params));
}

TEST_CASE("config validation") {
    GrpoConfig cfg = small_config();
    cfg.group_size = 1;
    CHECK_THROWS_AS(validate_config(cfg), ConfigError);
    cfg = small_config();
    cfg.clip_eps = 0.0;
    CHECK_THROWS_AS(validate_config(cfg), ConfigError);
    cfg = small_config();
    cfg.noise_level = -0.1;
    CHECK_THROWS_AS(validate_config(cfg), ConfigError);
    cfg = small_config();
    cfg.kl_coeff = -1.0;
    CHECK_THROWS_AS(validate_config(cfg), ConfigError);
    cfg = small_config();
    cfg.inner_updates = 0;
    CHECK_THROWS_AS(validate_config(cfg), ConfigError);
    CHECK_NOTHROW(validate_config(small_config()));
}

}  // TEST_SUITE("grpo")
