#include "flowrl/linalg.hpp"

#include <cmath>

namespace flowrl {

bool is_symmetric(const Mat& m, double tol) {
    for (int i = 0; i < m.n; ++i) {
        for (int j = i + 1; j < m.n; ++j) {
            if (std::abs(m(i, j) - m(j, i)) > tol) return false;
        }
    }
    return true;
}

Mat cholesky(const Mat& m) {
    const int n = m.n;
    Mat l(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = m(i, j);
            for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            if (i == j) {
                if (s <= 0.0 || !std::isfinite(s)) {
                    throw NumericError("cholesky: matrix not positive definite");
                }
                l(i, i) = std::sqrt(s);
            } else {
                l(i, j) = s / l(j, j);
            }
        }
    }
    return l;
}

Vec solve_spd(const Mat& m, const Vec& b) {
    const Mat l = cholesky(m);
    const int n = m.n;
    Vec y(b);
    for (int i = 0; i < n; ++i) {
        double s = y[i];
        for (int k = 0; k < i; ++k) s -= l(i, k) * y[k];
        y[i] = s / l(i, i);
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = y[i];
        for (int k = i + 1; k < n; ++k) s -= l(k, i) * y[k];
        y[i] = s / l(i, i);
    }
    return y;
}

Vec matvec(const Mat& m, const Vec& v) {
    Vec out(static_cast<std::size_t>(m.n), 0.0);
    for (int i = 0; i < m.n; ++i) {
        double s = 0.0;
        for (int j = 0; j < m.n; ++j) s += m(i, j) * v[j];
        out[i] = s;
    }
    return out;
}

}  // namespace flowrl
