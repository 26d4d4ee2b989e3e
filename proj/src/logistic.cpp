#include <cmath>

#include "cardio/classifiers.hpp"
#include "cardio/error.hpp"
#include "linalg.hpp"
#include "model_common.hpp"

namespace cardio {

namespace {

constexpr int kMaxNewtonIterations = 100;

// log(1 + e^z) without overflow.
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double objective(const std::vector<std::vector<double>>& rows, const std::vector<int>& labels,
                 std::span<const double> params, double c) {
    const std::size_t d = params.size() - 1;
    double reg = 0.0;
    for (std::size_t j = 0; j < d; ++j) reg += params[j] * params[j];
    double loss = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double z = detail::dot(rows[i], params.first(d)) + params[d];
        // -log p(y|x) = softplus(z) - y z
        loss += softplus(z) - labels[i] * z;
    }
    return 0.5 * reg + c * loss;
}

std::vector<double> gradient(const std::vector<std::vector<double>>& rows,
                             const std::vector<int>& labels, std::span<const double> params,
                             double c) {
    const std::size_t d = params.size() - 1;
    std::vector<double> g(params.begin(), params.end());
    g[d] = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double z = detail::dot(rows[i], params.first(d)) + params[d];
        const double r = c * (sigmoid(z) - labels[i]);
        for (std::size_t j = 0; j < d; ++j) g[j] += r * rows[i][j];
        g[d] += r;
    }
    return g;
}

}  // namespace

double lr_objective(const Dataset& d, std::span<const double> params, double c) {
    if (params.size() != d.arity() + 1) throw ArgumentError("lr_objective: parameter arity");
    return objective(d.rows, d.labels, params, c);
}

std::vector<double> lr_gradient(const Dataset& d, std::span<const double> params, double c) {
    if (params.size() != d.arity() + 1) throw ArgumentError("lr_gradient: parameter arity");
    return gradient(d.rows, d.labels, params, c);
}

// Damped Newton on the l2-regularised negative log-likelihood. The intercept
// is not penalised.
TrainedModel fit_lr(const Dataset& train, const Hyperparams& h) {
    auto prepared = detail::prepare_training(train, h, Variant::lr);
    detail::require_both_classes(train, "fit_lr");
    const auto& rows = prepared.rows;
    const auto& labels = train.labels;
    const std::size_t d = train.arity();
    const std::size_t p = d + 1;
    const double c = h.lr_c;

    std::vector<double> theta(p, 0.0);
    double f = objective(rows, labels, theta, c);
    int iteration = 0;
    for (; iteration < kMaxNewtonIterations; ++iteration) {
        const auto g = gradient(rows, labels, theta, c);
        double gmax = 0.0;
        for (double v : g) gmax = std::max(gmax, std::abs(v));
        if (gmax < h.lr_solver_tolerance) break;

        detail::Matrix hess(p);
        for (std::size_t j = 0; j < d; ++j) hess(j, j) = 1.0;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const double z = detail::dot(rows[i], std::span(theta).first(d)) + theta[d];
            const double s = sigmoid(z);
            const double w = c * s * (1.0 - s);
            if (w == 0.0) continue;
            for (std::size_t a = 0; a < p; ++a) {
                const double xa = a < d ? rows[i][a] : 1.0;
                for (std::size_t b = 0; b <= a; ++b) {
                    const double xb = b < d ? rows[i][b] : 1.0;
                    hess(a, b) += w * xa * xb;
                }
            }
        }
        for (std::size_t a = 0; a < p; ++a) {
            for (std::size_t b = 0; b < a; ++b) hess(b, a) = hess(a, b);
        }
        std::vector<double> neg_g(p);
        for (std::size_t j = 0; j < p; ++j) neg_g[j] = -g[j];
        const auto step = detail::solve_spd(hess, neg_g);
        const double slope = detail::dot(g, step);

        // Backtracking (Armijo) line search.
        double t = 1.0;
        std::vector<double> trial(p);
        double f_trial = f;
        bool moved = false;
        for (int ls = 0; ls < 60; ++ls) {
            for (std::size_t j = 0; j < p; ++j) trial[j] = theta[j] + t * step[j];
            f_trial = objective(rows, labels, trial, c);
            if (f_trial <= f + 1e-4 * t * slope) {
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if (!moved) break;  // no further decrease representable
        theta = trial;
        f = f_trial;
    }

    LinearPayload payload;
    payload.weights.assign(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(d));
    payload.bias = theta[d];
    payload.iterations = iteration;
    prepared.model.payload = std::move(payload);
    return prepared.model;
}

}  // namespace cardio
