#pragma once

#include <cstddef>
#include <vector>

#include "flowrl/common.hpp"

namespace flowrl {

// Small dense square matrix, row-major. Only what the Gaussian oracles need.
struct Mat {
    int n = 0;
    std::vector<double> a;

    Mat() = default;
    explicit Mat(int dim) : n(dim), a(static_cast<std::size_t>(dim) * dim, 0.0) {}

    double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }
    double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }

    static Mat identity(int dim) {
        Mat m(dim);
        for (int i = 0; i < dim; ++i) m(i, i) = 1.0;
        return m;
    }
};

bool is_symmetric(const Mat& m, double tol = 1e-12);

// Lower-triangular Cholesky factor; throws NumericError if not positive definite.
Mat cholesky(const Mat& m);

// Solve m * y = b for symmetric positive-definite m.
Vec solve_spd(const Mat& m, const Vec& b);

Vec matvec(const Mat& m, const Vec& v);

}  // namespace flowrl
