#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "flowrl/rewards.hpp"
#include "flowrl/rng.hpp"

using namespace flowrl;

namespace {

constexpr double kPi = std::numbers::pi;

BinaryScorer fixed_scorer(double s_yes, double s_no) {
    return BinaryScorer{[=](const Vec&, int) { return std::make_pair(s_yes, s_no); }};
}

RingTask quadrant_ring() {
    RingTask task;
    task.num_modes = 8;
    task.radius = 2.0;
    task.mode_std = 0.12;
    for (int c = 0; c < 4; ++c) task.arcs.push_back({c * kPi / 2, kPi / 2});
    return task;
}

Vec polar(double r, double ang) { return {r * std::cos(ang), r * std::sin(ang)}; }

}  // namespace

TEST_SUITE("rewards") {

TEST_CASE("qa reward logistic identities") {
    CHECK(qa_reward(fixed_scorer(1.3, 1.3), {0.0}, 0) == doctest::Approx(0.5));
    CHECK(qa_reward(fixed_scorer(std::log(3.0), 0.0), {0.0}, 0) == doctest::Approx(0.75));

    // Huge gaps must neither overflow nor leave [0, 1].  At a gap of -600
    // the true value is still representable, so it must stay strictly
    // positive; at -1000 it underflows and rounding to 0 is correct.
    const double hi = qa_reward(fixed_scorer(1000.0, 0.0), {0.0}, 0);
    CHECK(hi == doctest::Approx(1.0));
    CHECK(hi <= 1.0);
    CHECK(qa_reward(fixed_scorer(0.0, 600.0), {0.0}, 0) > 0.0);
    const double lo = qa_reward(fixed_scorer(0.0, 1000.0), {0.0}, 0);
    CHECK(lo == doctest::Approx(0.0));
    CHECK(lo >= 0.0);
    CHECK(std::isfinite(hi));
    CHECK(std::isfinite(lo));
}

TEST_CASE("qa reward is monotone in s_yes and shift invariant") {
    double prev = 0.0;
    for (double s = -3.0; s <= 3.0; s += 0.5) {
        const double r = qa_reward(fixed_scorer(s, 0.7), {0.0}, 0);
        if (s > -3.0) CHECK(r > prev);
        prev = r;
        // Common shifts cancel in the two-way softmax.
        const double shifted = qa_reward(fixed_scorer(s + 11.0, 0.7 + 11.0), {0.0}, 0);
        CHECK(shifted == doctest::Approx(r).epsilon(1e-12));
    }
}

TEST_CASE("qa reward rejects broken scorers") {
    CHECK_THROWS_AS(qa_reward(BinaryScorer{}, {0.0}, 0), InputError);
    CHECK_THROWS_AS(qa_reward(fixed_scorer(std::nan(""), 0.0), {0.0}, 0), NumericError);
}

TEST_CASE("region margin sign structure") {
    const RingTask task = quadrant_ring();

    // Dead center of condition 0's region: on the ring, mid-arc.
    CHECK(region_margin(task, polar(2.0, kPi / 4), 0) > 0.0);
    // On the radial boundary (ring distance = 3 mode_std).
    const double half_width = 3.0 * task.mode_std;
    CHECK(region_margin(task, polar(2.0 + half_width, kPi / 4), 0) ==
          doctest::Approx(0.0).epsilon(1e-12));
    // On the angular boundary.
    CHECK(region_margin(task, polar(2.0, 0.0), 0) == doctest::Approx(0.0).epsilon(1e-12));
    // Antipodal: far outside.
    CHECK(region_margin(task, polar(2.0, kPi + kPi / 4), 0) < -1.0);
    // Condition guard.
    CHECK_THROWS_AS(region_margin(task, {1.0, 0.0}, 4), InputError);
}

TEST_CASE("region scorer drives qa reward to the limits") {
    const RingTask task = quadrant_ring();
    const Vec inside = polar(2.0, kPi / 4);
    const Vec outside = polar(2.0, kPi + kPi / 4);
    const Vec boundary = polar(2.0 + 3.0 * task.mode_std, kPi / 4);

    CHECK(qa_reward(region_scorer(task, 1.0), boundary, 0) == doctest::Approx(0.5));

    double prev_in = 0.0, prev_out = 1.0;
    for (double steep : {1.0, 4.0, 16.0, 64.0}) {
        const BinaryScorer sc = region_scorer(task, steep);
        const double rin = qa_reward(sc, inside, 0);
        const double rout = qa_reward(sc, outside, 0);
        CHECK(rin > prev_in);
        CHECK(rout < prev_out);
        prev_in = rin;
        prev_out = rout;
    }
    CHECK(prev_in > 0.999);
    CHECK(prev_out < 1e-6);

    CHECK_THROWS_AS(region_scorer(task, 0.0), ConfigError);
    CHECK_THROWS_AS(region_scorer(task, -2.0), ConfigError);
}

TEST_CASE("full-circle region is rotation invariant") {
    RingTask task;
    task.num_modes = 8;
    task.radius = 2.0;
    task.mode_std = 0.12;
    task.arcs.push_back({0.0, 2 * kPi});
    const BinaryScorer sc = region_scorer(task, 8.0);
    const double base = qa_reward(sc, polar(2.05, 0.3), 0);
    for (double rot = 0.5; rot < 6.0; rot += 0.7) {
        CHECK(qa_reward(sc, polar(2.05, 0.3 + rot), 0) == doctest::Approx(base).epsilon(1e-12));
    }
}

TEST_CASE("quarter-arc region is invariant under its symmetry rotation") {
    // Rotating both the sample and the condition by pi/2 maps region c onto
    // region c+1, so rewards must agree exactly.
    const RingTask task = quadrant_ring();
    const BinaryScorer sc = region_scorer(task, 8.0);
    Rng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        const double r = 1.0 + 2.0 * rng.uniform();
        const double ang = 2 * kPi * rng.uniform();
        for (int c = 0; c < 3; ++c) {
            const double a = qa_reward(sc, polar(r, ang), c);
            const double b = qa_reward(sc, polar(r, ang + kPi / 2), c + 1);
            CHECK(a == doctest::Approx(b).epsilon(1e-10));
        }
    }
}

TEST_CASE("similarity reward cosine anchors") {
    const RingTask task = quadrant_ring();
    const Embedding emb = ring_embedding(task);

    // Condition 0's arc center is at pi/4.
    CHECK(similarity_reward(emb, polar(1.7, kPi / 4), 0) == doctest::Approx(1.0));
    // Orthogonal direction.
    CHECK(similarity_reward(emb, polar(0.4, kPi / 4 + kPi / 2), 0) == doctest::Approx(0.5));
    // Opposite direction.
    CHECK(similarity_reward(emb, polar(2.0, kPi / 4 + kPi), 0) == doctest::Approx(0.0));
    // Radius never matters, only direction.
    CHECK(similarity_reward(emb, polar(0.01, 1.1), 2) ==
          doctest::Approx(similarity_reward(emb, polar(9.0, 1.1), 2)).epsilon(1e-12));

    CHECK_THROWS_AS(similarity_reward(emb, {0.0, 0.0}, 0), InputError);
}

TEST_CASE("calibration on the worked four-point example") {
    const CalibrationReport rep = calibrate({1, 2, 3, 4}, {1, 3, 2, 4});
    CHECK(rep.n == 4);
    // One discordant pair of six: tau = (5 - 1) / 6.
    CHECK(rep.ktau == doctest::Approx(2.0 / 3.0));
    CHECK(rep.srcc == doctest::Approx(0.8));
    CHECK(rep.lcc == doctest::Approx(0.8));
}

TEST_CASE("calibration detects perfect monotone and reversed relationships") {
    Vec model = {0.1, -1.2, 2.0, 0.7, 1.1, -0.3};
    Vec cubed(model.size());
    Vec negated(model.size());
    for (std::size_t i = 0; i < model.size(); ++i) {
        cubed[i] = model[i] * model[i] * model[i];
        negated[i] = -model[i];
    }
    const CalibrationReport mono = calibrate(model, cubed);
    CHECK(mono.srcc == doctest::Approx(1.0));
    CHECK(mono.ktau == doctest::Approx(1.0));
    CHECK(mono.lcc < 1.0);
    CHECK(mono.lcc > 0.0);

    const CalibrationReport rev = calibrate(model, negated);
    CHECK(rev.lcc == doctest::Approx(-1.0));
    CHECK(rev.srcc == doctest::Approx(-1.0));
    CHECK(rev.ktau == doctest::Approx(-1.0));
}

TEST_CASE("rank statistics ignore strictly monotone transformations") {
    Rng rng(44);
    Vec model(40), reference(40);
    for (int i = 0; i < 40; ++i) {
        model[i] = rng.normal();
        reference[i] = rng.normal();
    }
    const CalibrationReport base = calibrate(model, reference);
    Vec squashed(model.size());
    for (std::size_t i = 0; i < model.size(); ++i) {
        squashed[i] = std::tanh(model[i]) * 3.0 + 7.0;
    }
    const CalibrationReport warped = calibrate(squashed, reference);
    CHECK(warped.srcc == doctest::Approx(base.srcc).epsilon(1e-12));
    CHECK(warped.ktau == doctest::Approx(base.ktau).epsilon(1e-12));
    CHECK(std::abs(base.srcc) <= 1.0);
    CHECK(std::abs(base.ktau) <= 1.0);
}

TEST_CASE("ties use average ranks and the tau-b correction") {
    // model has a tied pair; tau-b divides by sqrt((n0 - t_x)(n0 - t_y)).
    const Vec model = {1.0, 1.0, 2.0, 3.0};
    const Vec reference = {1.0, 2.0, 3.0, 4.0};
    const CalibrationReport rep = calibrate(model, reference);
    // Pairs: (1,2) tied in model; the other five concordant.
    // tau-b = 5 / sqrt((6-1)*6).
    CHECK(rep.ktau == doctest::Approx(5.0 / std::sqrt(30.0)));
    // Average ranks for model: 1.5, 1.5, 3, 4.
    // Spearman = Pearson([1.5,1.5,3,4], [1,2,3,4]).
    const CalibrationReport spear = calibrate({1.5, 1.5, 3.0, 4.0}, {1.0, 2.0, 3.0, 4.0});
    CHECK(rep.srcc == doctest::Approx(spear.lcc));
}

TEST_CASE("calibration input guards") {
    CHECK_THROWS_AS(calibrate({1.0}, {1.0}), InputError);
    CHECK_THROWS_AS(calibrate({1.0, 2.0}, {1.0, 2.0, 3.0}), InputError);
    CHECK_THROWS_AS(calibrate({2.0, 2.0, 2.0}, {1.0, 2.0, 3.0}), InputError);  // zero variance
    CHECK_THROWS_AS(calibrate({1.0, std::nan(""), 3.0}, {1.0, 2.0, 3.0}), InputError);
}

TEST_CASE("reward function wrappers forward to the primitives") {
    const RingTask task = quadrant_ring();
    const RewardFn qa = qa_reward_fn(region_scorer(task, 8.0));
    const RewardFn sim = similarity_reward_fn(ring_embedding(task));
    const Vec p = polar(2.0, kPi / 4);
    CHECK(qa(p, 0) == qa_reward(region_scorer(task, 8.0), p, 0));
    CHECK(sim(p, 0) == similarity_reward(ring_embedding(task), p, 0));
}

}  // TEST_SUITE("rewards")
