#include "flowrl/rewards.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace flowrl {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

double logistic(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double wrap_angle(double a) {
    double u = std::fmod(a, kTwoPi);
    if (u < 0.0) u += kTwoPi;
    return u;
}

Vec average_ranks(const Vec& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    Vec ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based average rank
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

double pearson(const Vec& a, const Vec& b) {
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        cov += da * db;
        va += da * da;
        vb += db * db;
    }
    return cov / std::sqrt(va * vb);
}

}  // namespace

double qa_reward(const BinaryScorer& scorer, const Vec& sample, int c) {
    if (!scorer.score) throw InputError("qa_reward: scorer is empty");
    const auto [s_yes, s_no] = scorer.score(sample, c);
    if (!std::isfinite(s_yes) || !std::isfinite(s_no)) {
        throw NumericError("qa_reward: scorer returned a non-finite log-score");
    }
    return logistic(s_yes - s_no);
}

double region_margin(const RingTask& task, const Vec& sample, int c) {
    if (c < 0 || c >= static_cast<int>(task.arcs.size())) {
        throw InputError("region_margin: condition id " + std::to_string(c) + " out of range");
    }
    require_dim(sample, 2, "region_margin: sample");
    require_finite(sample, "region_margin: sample");

    const double half_width = 3.0 * task.mode_std;
    const double r = std::hypot(sample[0], sample[1]);
    const double radial = half_width - std::abs(r - task.radius);

    const Arc& arc = task.arcs[c];
    if (arc.width >= kTwoPi) return radial;  // no angular boundary

    const double u = wrap_angle(std::atan2(sample[1], sample[0]) - arc.start);
    double angular;
    if (u < arc.width) {
        angular = std::min(u, arc.width - u);
    } else {
        angular = -std::min(u - arc.width, kTwoPi - u);
    }
    return std::min(radial, task.radius * angular);
}

BinaryScorer region_scorer(const RingTask& task, double steepness) {
    if (!(steepness > 0.0)) throw ConfigError("region_scorer: steepness must be > 0");
    validate_task(task);
    BinaryScorer scorer;
    scorer.score = [task, steepness](const Vec& sample, int c) {
        return std::pair<double, double>{steepness * region_margin(task, sample, c), 0.0};
    };
    return scorer;
}

Embedding ring_embedding(const RingTask& task) {
    validate_task(task);
    Embedding e;
    e.embed_sample = [](const Vec& sample) {
        require_dim(sample, 2, "embedding: sample");
        const double norm = std::hypot(sample[0], sample[1]);
        if (!(norm > 0.0)) throw InputError("embedding: zero-norm sample");
        return Vec{sample[0] / norm, sample[1] / norm};
    };
    e.embed_condition = [task](int c) {
        if (c < 0 || c >= static_cast<int>(task.arcs.size())) {
            throw InputError("embedding: condition id " + std::to_string(c) + " out of range");
        }
        const double center = task.arcs[c].start + 0.5 * task.arcs[c].width;
        return Vec{std::cos(center), std::sin(center)};
    };
    return e;
}

double similarity_reward(const Embedding& embedding, const Vec& sample, int c) {
    if (!embedding.embed_sample || !embedding.embed_condition) {
        throw InputError("similarity_reward: embedding is empty");
    }
    const Vec es = embedding.embed_sample(sample);
    const Vec ec = embedding.embed_condition(c);
    require_dim(ec, es.size(), "similarity_reward: condition embedding");
    if (std::abs(squared_norm(es) - 1.0) > 1e-6 || std::abs(squared_norm(ec) - 1.0) > 1e-6) {
        throw InputError("similarity_reward: embeddings must be unit-norm");
    }
    const double cosine = std::clamp(dot(es, ec), -1.0, 1.0);
    return 0.5 * (1.0 + cosine);
}

RewardFn qa_reward_fn(BinaryScorer scorer) {
    return [scorer = std::move(scorer)](const Vec& sample, int c) {
        return qa_reward(scorer, sample, c);
    };
}

RewardFn similarity_reward_fn(Embedding embedding) {
    return [embedding = std::move(embedding)](const Vec& sample, int c) {
        return similarity_reward(embedding, sample, c);
    };
}

CalibrationReport calibrate(const Vec& model_scores, const Vec& reference_scores) {
    const std::size_t n = model_scores.size();
    if (reference_scores.size() != n) throw InputError("calibrate: score lists differ in length");
    if (n < 2) throw InputError("calibrate: need at least two scores");
    require_finite(model_scores, "calibrate: model scores");
    require_finite(reference_scores, "calibrate: reference scores");

    const auto zero_variance = [](const Vec& v) {
        return *std::max_element(v.begin(), v.end()) == *std::min_element(v.begin(), v.end());
    };
    if (zero_variance(model_scores) || zero_variance(reference_scores)) {
        throw InputError("calibrate: undefined correlation (a score list has zero variance)");
    }

    CalibrationReport rep;
    rep.n = static_cast<int>(n);
    rep.lcc = pearson(model_scores, reference_scores);
    rep.srcc = pearson(average_ranks(model_scores), average_ranks(reference_scores));

    // Kendall tau-b over all pairs, with tie corrections in each list.
    long long concordant = 0, discordant = 0, ties_x = 0, ties_y = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dx = model_scores[i] - model_scores[j];
            const double dy = reference_scores[i] - reference_scores[j];
            if (dx == 0.0) ++ties_x;
            if (dy == 0.0) ++ties_y;
            if (dx == 0.0 || dy == 0.0) continue;
            if ((dx > 0.0) == (dy > 0.0)) {
                ++concordant;
            } else {
                ++discordant;
            }
        }
    }
    const long long n0 = static_cast<long long>(n) * (static_cast<long long>(n) - 1) / 2;
    rep.ktau = static_cast<double>(concordant - discordant) /
               std::sqrt(static_cast<double>(n0 - ties_x) * static_cast<double>(n0 - ties_y));
    return rep;
}

}  // namespace flowrl
