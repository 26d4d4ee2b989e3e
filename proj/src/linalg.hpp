#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace cardio::detail {

// Dense row-major square matrix, just enough for the small Newton systems.
struct Matrix {
    std::size_t n = 0;
    std::vector<double> a;

    explicit Matrix(std::size_t size) : n(size), a(size * size, 0.0) {}
    double& operator()(std::size_t i, std::size_t j) { return a[i * n + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * n + j]; }
};

// Solves H x = b for symmetric positive (semi)definite H by Cholesky,
// adding diagonal jitter until the factorisation succeeds.
inline std::vector<double> solve_spd(Matrix h, std::span<const double> b) {
    const std::size_t n = h.n;
    double jitter = 0.0;
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(h(i, i)));
    if (scale == 0.0) scale = 1.0;
    Matrix l(n);
    for (int attempt = 0; attempt < 30; ++attempt) {
        bool ok = true;
        for (std::size_t i = 0; i < n && ok; ++i) {
            for (std::size_t j = 0; j <= i; ++j) {
                double s = h(i, j) + (i == j ? jitter : 0.0);
                for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
                if (i == j) {
                    if (!(s > 0.0)) {
                        ok = false;
                        break;
                    }
                    l(i, i) = std::sqrt(s);
                } else {
                    l(i, j) = s / l(j, j);
                }
            }
        }
        if (ok) {
            std::vector<double> y(n);
            for (std::size_t i = 0; i < n; ++i) {
                double s = b[i];
                for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
                y[i] = s / l(i, i);
            }
            std::vector<double> x(n);
            for (std::size_t i = n; i-- > 0;) {
                double s = y[i];
                for (std::size_t k = i + 1; k < n; ++k) s -= l(k, i) * x[k];
                x[i] = s / l(i, i);
            }
            return x;
        }
        jitter = jitter == 0.0 ? 1e-12 * scale : jitter * 10.0;
    }
    return std::vector<double>(n, 0.0);
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace cardio::detail
