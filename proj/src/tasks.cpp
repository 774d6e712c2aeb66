#include "flowrl/tasks.hpp"

#include <cmath>
#include <numbers>

#include "flowrl/rng.hpp"

namespace flowrl {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

void check_condition(int c, int count) {
    if (c < 0 || c >= count) {
        throw InputError("condition id " + std::to_string(c) + " out of range [0, " +
                         std::to_string(count) + ")");
    }
}

}  // namespace

void validate_task(const GaussianTask& task) {
    if (task.conditions.empty()) throw ConfigError("gaussian task: needs at least one condition");
    const std::size_t d = task.conditions.front().mean.size();
    if (d == 0) throw ConfigError("gaussian task: dimension must be >= 1");
    for (const auto& cond : task.conditions) {
        if (cond.mean.size() != d || static_cast<std::size_t>(cond.cov.n) != d) {
            throw ConfigError("gaussian task: all conditions must share one dimension");
        }
        require_finite(cond.mean, "gaussian task mean");
        if (!is_symmetric(cond.cov, 1e-9)) {
            throw ConfigError("gaussian task: covariance must be symmetric");
        }
        try {
            cholesky(cond.cov);
        } catch (const NumericError&) {
            throw ConfigError("gaussian task: covariance must be positive definite");
        }
    }
}

void validate_task(const RingTask& task) {
    if (task.num_modes < 2) throw ConfigError("ring task: num_modes must be >= 2");
    if (!(task.radius > 0.0)) throw ConfigError("ring task: radius must be > 0");
    if (!(task.mode_std > 0.0)) throw ConfigError("ring task: mode_std must be > 0");
    if (task.arcs.empty()) throw ConfigError("ring task: needs at least one condition arc");
    for (std::size_t c = 0; c < task.arcs.size(); ++c) {
        const Arc& a = task.arcs[c];
        if (!(a.start >= 0.0 && a.start < kTwoPi)) {
            throw ConfigError("ring task: arc start must lie in [0, 2*pi)");
        }
        if (!(a.width > 0.0 && a.width <= kTwoPi)) {
            throw ConfigError("ring task: arc width must lie in (0, 2*pi]");
        }
        if (modes_in_arc(task, static_cast<int>(c)).empty()) {
            throw ConfigError("ring task: condition " + std::to_string(c) +
                              " contains no mode centers");
        }
    }
}

void validate_task(const Task& task) {
    std::visit([](const auto& t) { validate_task(t); }, task);
}

int num_conditions(const Task& task) {
    if (const auto* g = std::get_if<GaussianTask>(&task)) {
        return static_cast<int>(g->conditions.size());
    }
    return static_cast<int>(std::get<RingTask>(task).arcs.size());
}

int task_dim(const Task& task) {
    if (const auto* g = std::get_if<GaussianTask>(&task)) {
        return static_cast<int>(g->conditions.front().mean.size());
    }
    return 2;
}

double mode_angle(const RingTask& task, int k) {
    return std::numbers::pi / task.num_modes + kTwoPi * k / task.num_modes;
}

bool arc_contains(const Arc& arc, double angle) {
    double u = std::fmod(angle - arc.start, kTwoPi);
    if (u < 0.0) u += kTwoPi;
    return u < arc.width;
}

std::vector<int> modes_in_arc(const RingTask& task, int c) {
    check_condition(c, static_cast<int>(task.arcs.size()));
    std::vector<int> out;
    for (int k = 0; k < task.num_modes; ++k) {
        if (arc_contains(task.arcs[c], mode_angle(task, k))) out.push_back(k);
    }
    return out;
}

Vec sample_one(const GaussianTask& task, int c, Rng& rng) {
    check_condition(c, static_cast<int>(task.conditions.size()));
    const auto& cond = task.conditions[c];
    const int d = static_cast<int>(cond.mean.size());
    const Mat l = cholesky(cond.cov);
    const Vec z = rng.normal_vec(static_cast<std::size_t>(d));
    Vec x(cond.mean);
    for (int r = 0; r < d; ++r) {
        for (int k = 0; k <= r; ++k) x[r] += l(r, k) * z[k];
    }
    return x;
}

Vec sample_one(const RingTask& task, int c, Rng& rng) {
    const std::vector<int> modes = modes_in_arc(task, c);
    const int k = modes[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(modes.size())))];
    const double angle = mode_angle(task, k);
    return {task.radius * std::cos(angle) + task.mode_std * rng.normal(),
            task.radius * std::sin(angle) + task.mode_std * rng.normal()};
}

Vec sample_one(const Task& task, int c, Rng& rng) {
    return std::visit([&](const auto& t) { return sample_one(t, c, rng); }, task);
}

namespace {

template <class T>
std::vector<Vec> sample_n(const T& task, int c, int n, std::uint64_t seed) {
    if (n < 1) throw InputError("sample_data: n must be >= 1");
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
    std::vector<Vec> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out.push_back(sample_one(task, c, rng));
    return out;
}

}  // namespace

std::vector<Vec> sample_data(const GaussianTask& task, int c, int n, std::uint64_t seed) {
    return sample_n(task, c, n, seed);
}

std::vector<Vec> sample_data(const RingTask& task, int c, int n, std::uint64_t seed) {
    return sample_n(task, c, n, seed);
}

std::vector<Vec> sample_data(const Task& task, int c, int n, std::uint64_t seed) {
    return std::visit([&](const auto& t) { return sample_data(t, c, n, seed); }, task);
}

Vec oracle_velocity(const GaussianTask& task, const Vec& x_t, double t, int c) {
    check_condition(c, static_cast<int>(task.conditions.size()));
    const auto& cond = task.conditions[c];
    const int d = static_cast<int>(cond.mean.size());
    require_dim(x_t, static_cast<std::size_t>(d), "oracle_velocity: x_t");
    if (!(t >= 0.0 && t <= 1.0)) throw InputError("oracle_velocity: t must lie in [0, 1]");

    const double omt = 1.0 - t;
    Mat c_t(d);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) c_t(i, j) = omt * omt * cond.cov(i, j);
        c_t(i, i) += t * t;
    }
    Vec centered(x_t);
    for (int i = 0; i < d; ++i) centered[i] -= omt * cond.mean[i];

    Vec y;
    try {
        y = solve_spd(c_t, centered);
    } catch (const NumericError&) {
        throw NumericError("oracle_velocity: singular interpolant covariance C_t");
    }
    const Vec sigma_y = matvec(cond.cov, y);
    Vec v(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) v[i] = -cond.mean[i] + t * y[i] - omt * sigma_y[i];
    return v;
}

std::pair<Vec, Mat> oracle_marginal(const GaussianTask& task, double t, int c) {
    check_condition(c, static_cast<int>(task.conditions.size()));
    if (!(t >= 0.0 && t <= 1.0)) throw InputError("oracle_marginal: t must lie in [0, 1]");
    const auto& cond = task.conditions[c];
    const int d = static_cast<int>(cond.mean.size());
    const double omt = 1.0 - t;
    Vec mean(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) mean[i] = omt * cond.mean[i];
    Mat cov(d);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) cov(i, j) = omt * omt * cond.cov(i, j);
        cov(i, i) += t * t;
    }
    return {std::move(mean), std::move(cov)};
}

}  // namespace flowrl
