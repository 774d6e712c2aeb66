#pragma once

#include <functional>
#include <utility>

#include "flowrl/tasks.hpp"

namespace flowrl {

// Log-scores (s_yes, s_no) for "does this sample satisfy condition c?".
struct BinaryScorer {
    std::function<std::pair<double, double>(const Vec& sample, int c)> score;
};

// logistic(s_yes - s_no), computed without overflow; strictly in (0, 1).
double qa_reward(const BinaryScorer& scorer, const Vec& sample, int c);

// Signed distance of a 2-D sample to the annular sector belonging to
// condition c: positive inside, zero on the boundary. The angular part is
// measured as arc length so both axes share units; a full-circle arc has no
// angular boundary and contributes nothing.
double region_margin(const RingTask& task, const Vec& sample, int c);

// BinaryScorer with s_yes - s_no = steepness * region_margin.
BinaryScorer region_scorer(const RingTask& task, double steepness);

// Unit-vector embeddings for samples and conditions sharing one space.
struct Embedding {
    std::function<Vec(const Vec& sample)> embed_sample;
    std::function<Vec(int c)> embed_condition;
};

// Sample -> its direction on the unit circle; condition -> the unit vector
// at its arc's center angle.
Embedding ring_embedding(const RingTask& task);

// (1 + cosine) / 2 between the two embeddings, in [0, 1].
double similarity_reward(const Embedding& embedding, const Vec& sample, int c);

using RewardFn = std::function<double(const Vec& sample, int c)>;

RewardFn qa_reward_fn(BinaryScorer scorer);
RewardFn similarity_reward_fn(Embedding embedding);

struct CalibrationReport {
    double lcc = 0.0;   // Pearson
    double srcc = 0.0;  // Spearman (Pearson on average ranks)
    double ktau = 0.0;  // Kendall tau-b
    int n = 0;
};

CalibrationReport calibrate(const Vec& model_scores, const Vec& reference_scores);

}  // namespace flowrl
