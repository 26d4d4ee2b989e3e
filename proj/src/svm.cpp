#include <algorithm>
#include <cmath>
#include <limits>

#include "cardio/classifiers.hpp"
#include "cardio/error.hpp"
#include "linalg.hpp"
#include "model_common.hpp"

namespace cardio {

namespace {

constexpr int kMaxIterations = 10000;
constexpr double kObjectiveTolerance = 1e-10;
constexpr double kKktTolerance = 1e-6;

double sign_of(int label) { return label == 1 ? 1.0 : -1.0; }

double primal(const std::vector<std::vector<double>>& rows, const std::vector<int>& labels,
              std::span<const double> params, double c) {
    const std::size_t d = params.size() - 1;
    double reg = 0.0;
    for (std::size_t j = 0; j < d; ++j) reg += params[j] * params[j];
    double loss = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double m = 1.0 - sign_of(labels[i]) * (detail::dot(rows[i], params.first(d)) + params[d]);
        if (m > 0.0) loss += m * m;
    }
    return 0.5 * reg + c * loss;
}

// Generalised Newton on the squared-hinge primal. The objective is
// piecewise quadratic and continuously differentiable; each step solves
// against the Hessian of the currently active margin set.
SvmPayload fit_linear(const std::vector<std::vector<double>>& rows, const std::vector<int>& labels,
                      double c) {
    const std::size_t d = rows.front().size();
    const std::size_t p = d + 1;
    std::vector<double> theta(p, 0.0);
    double f = primal(rows, labels, theta, c);
    int iteration = 0;
    for (; iteration < kMaxIterations; ++iteration) {
        std::vector<double> g(theta.begin(), theta.end());
        g[d] = 0.0;
        detail::Matrix hess(p);
        for (std::size_t j = 0; j < d; ++j) hess(j, j) = 1.0;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const double s = sign_of(labels[i]);
            const double m = 1.0 - s * (detail::dot(rows[i], std::span(theta).first(d)) + theta[d]);
            if (m <= 0.0) continue;
            for (std::size_t a = 0; a < p; ++a) {
                const double xa = a < d ? rows[i][a] : 1.0;
                g[a] -= 2.0 * c * m * s * xa;
                for (std::size_t b = 0; b <= a; ++b) {
                    const double xb = b < d ? rows[i][b] : 1.0;
                    hess(a, b) += 2.0 * c * xa * xb;
                }
            }
        }
        double gmax = 0.0;
        for (double v : g) gmax = std::max(gmax, std::abs(v));
        if (gmax < 1e-12) break;
        for (std::size_t a = 0; a < p; ++a) {
            for (std::size_t b = 0; b < a; ++b) hess(b, a) = hess(a, b);
        }
        if (hess(d, d) == 0.0) hess(d, d) = 1e-12;
        std::vector<double> neg_g(p);
        for (std::size_t j = 0; j < p; ++j) neg_g[j] = -g[j];
        const auto step = detail::solve_spd(hess, neg_g);
        const double slope = detail::dot(g, step);

        double t = 1.0;
        std::vector<double> trial(p);
        double f_trial = f;
        bool moved = false;
        for (int ls = 0; ls < 60; ++ls) {
            for (std::size_t j = 0; j < p; ++j) trial[j] = theta[j] + t * step[j];
            f_trial = primal(rows, labels, trial, c);
            if (f_trial <= f + 1e-4 * t * slope) {
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if (!moved) break;
        const double decrease = f - f_trial;
        theta = trial;
        f = f_trial;
        if (decrease < kObjectiveTolerance) {
            ++iteration;
            break;
        }
    }
    SvmPayload out;
    out.kernel = Kernel::linear;
    out.weights.assign(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(d));
    out.bias = theta[d];
    out.iterations = iteration;
    out.objective = f;
    return out;
}

// Dual of the squared-hinge SVM: the box constraint disappears and the
// kernel gains 1/(2C) on its diagonal. Solved by SMO with maximal violating
// pair selection.
SvmPayload fit_rbf(const std::vector<std::vector<double>>& rows, const std::vector<int>& labels,
                   double c, double gamma) {
    const std::size_t n = rows.size();
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = sign_of(labels[i]);
    std::vector<double> kernel(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double d2 = 0.0;
            for (std::size_t k = 0; k < rows[i].size(); ++k) {
                const double dd = rows[i][k] - rows[j][k];
                d2 += dd * dd;
            }
            kernel[i * n + j] = kernel[j * n + i] = std::exp(-gamma * d2);
        }
    }
    const double ridge = 1.0 / (2.0 * c);
    auto q = [&](std::size_t i, std::size_t j) {
        return y[i] * y[j] * kernel[i * n + j] + (i == j ? ridge : 0.0);
    };

    std::vector<double> alpha(n, 0.0);
    std::vector<double> grad(n, -1.0);  // Q alpha - e
    int iteration = 0;
    for (; iteration < kMaxIterations; ++iteration) {
        double up = -std::numeric_limits<double>::infinity();
        double low = std::numeric_limits<double>::infinity();
        std::size_t i = n, j = n;
        for (std::size_t t = 0; t < n; ++t) {
            const double v = -y[t] * grad[t];
            const bool in_up = y[t] > 0 || alpha[t] > 0.0;
            const bool in_low = y[t] < 0 || alpha[t] > 0.0;
            if (in_up && v > up) {
                up = v;
                i = t;
            }
            if (in_low && v < low) {
                low = v;
                j = t;
            }
        }
        if (i == n || j == n || up - low < kKktTolerance) break;

        const double old_i = alpha[i];
        const double old_j = alpha[j];
        if (y[i] != y[j]) {
            double quad = q(i, i) + q(j, j) + 2.0 * q(i, j);
            if (quad <= 0.0) quad = 1e-12;
            const double delta = (-grad[i] - grad[j]) / quad;
            const double diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if (diff > 0.0) {
                if (alpha[j] < 0.0) {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if (alpha[i] < 0.0) {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
        } else {
            double quad = q(i, i) + q(j, j) - 2.0 * q(i, j);
            if (quad <= 0.0) quad = 1e-12;
            const double delta = (grad[i] - grad[j]) / quad;
            const double sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if (alpha[j] < 0.0) {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if (alpha[i] < 0.0) {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        const double di = alpha[i] - old_i;
        const double dj = alpha[j] - old_j;
        for (std::size_t t = 0; t < n; ++t) grad[t] += q(i, t) * di + q(j, t) * dj;
    }

    double bias_sum = 0.0;
    int free_count = 0;
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < n; ++t) {
        const double yg = y[t] * grad[t];
        if (alpha[t] > 0.0) {
            bias_sum += yg;
            ++free_count;
        } else if (y[t] > 0) {
            ub = std::min(ub, yg);
        } else {
            lb = std::max(lb, yg);
        }
    }
    const double rho = free_count > 0 ? bias_sum / free_count : (ub + lb) / 2.0;

    SvmPayload out;
    out.kernel = Kernel::rbf;
    out.gamma = gamma;
    out.bias = -rho;
    out.iterations = iteration;
    double obj = 0.0;
    for (std::size_t t = 0; t < n; ++t) obj += 0.5 * alpha[t] * (grad[t] - 1.0);
    out.objective = obj;
    for (std::size_t t = 0; t < n; ++t) {
        if (alpha[t] > 0.0) {
            out.support.push_back(rows[t]);
            out.coefficients.push_back(alpha[t] * y[t]);
        }
    }
    return out;
}

}  // namespace

double svm_objective(const Dataset& d, std::span<const double> params, double c) {
    if (params.size() != d.arity() + 1) throw ArgumentError("svm_objective: parameter arity");
    return primal(d.rows, d.labels, params, c);
}

TrainedModel fit_svm(const Dataset& train, const Hyperparams& h) {
    auto prepared = detail::prepare_training(train, h, Variant::svm);
    detail::require_both_classes(train, "fit_svm");
    if (h.svm_kernel == Kernel::linear) {
        prepared.model.payload = fit_linear(prepared.rows, train.labels, h.svm_c);
    } else {
        const double gamma =
            h.svm_rbf_gamma.value_or(1.0 / static_cast<double>(std::max<std::size_t>(1, train.arity())));
        prepared.model.payload = fit_rbf(prepared.rows, train.labels, h.svm_c, gamma);
    }
    return prepared.model;
}

}  // namespace cardio
