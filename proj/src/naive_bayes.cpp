#include <algorithm>
#include <cmath>
#include <set>

#include "cardio/classifiers.hpp"
#include "cardio/error.hpp"
#include "model_common.hpp"

namespace cardio {

namespace {

void fit_categorical(const Dataset& train, const std::vector<std::vector<double>>& rows,
                     double alpha, NbPayload& nb) {
    const std::size_t d = train.arity();
    const auto counts = train.class_counts();
    nb.codes.resize(d);
    for (int c = 0; c < 2; ++c) {
        nb.log_likelihood[static_cast<std::size_t>(c)].resize(d);
        nb.log_unseen[static_cast<std::size_t>(c)].resize(d);
    }
    for (std::size_t j = 0; j < d; ++j) {
        const auto& attr = train.column_schema(j);
        std::set<double> codes;
        if (attr.kind == AttributeKind::categorical) {
            for (const auto& cat : attr.categories) codes.insert(cat.code);
        }
        for (const auto& r : rows) {
            if (r[j] != std::floor(r[j])) {
                throw ArgumentError("NB-categorical requires integer-coded attributes; attribute " +
                                    std::to_string(train.columns[j]) + " (" + attr.name +
                                    ") has value " + std::to_string(r[j]));
            }
            codes.insert(r[j]);
        }
        nb.codes[j].assign(codes.begin(), codes.end());
        const double k = static_cast<double>(codes.size());
        for (std::size_t c = 0; c < 2; ++c) {
            std::vector<double> tally(codes.size(), 0.0);
            for (std::size_t i = 0; i < rows.size(); ++i) {
                if (static_cast<std::size_t>(train.labels[i]) != c) continue;
                const auto it = std::lower_bound(nb.codes[j].begin(), nb.codes[j].end(), rows[i][j]);
                tally[static_cast<std::size_t>(it - nb.codes[j].begin())] += 1.0;
            }
            const double denom = static_cast<double>(counts[c]) + alpha * k;
            auto& ll = nb.log_likelihood[c][j];
            ll.resize(codes.size());
            for (std::size_t v = 0; v < codes.size(); ++v) ll[v] = std::log((tally[v] + alpha) / denom);
            nb.log_unseen[c][j] = std::log(alpha / denom);
        }
    }
}

void fit_multinomial(const Dataset& train, const std::vector<std::vector<double>>& rows,
                     double alpha, NbPayload& nb) {
    const std::size_t d = train.arity();
    for (const auto& r : rows) {
        for (std::size_t j = 0; j < d; ++j) {
            if (r[j] < 0.0) {
                throw ArgumentError("NB-multinomial requires non-negative features; attribute " +
                                    std::to_string(train.columns[j]) + " has value " +
                                    std::to_string(r[j]));
            }
        }
    }
    for (std::size_t c = 0; c < 2; ++c) {
        std::vector<double> mass(d, 0.0);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (static_cast<std::size_t>(train.labels[i]) != c) continue;
            for (std::size_t j = 0; j < d; ++j) mass[j] += rows[i][j];
        }
        double total = 0.0;
        for (double m : mass) total += m;
        const double denom = total + alpha * static_cast<double>(d);
        auto& theta = nb.log_theta[c];
        theta.resize(d);
        for (std::size_t j = 0; j < d; ++j) theta[j] = std::log((mass[j] + alpha) / denom);
    }
}

}  // namespace

TrainedModel fit_nb(const Dataset& train, const Hyperparams& h) {
    if (!is_naive_bayes(h.variant)) {
        throw ArgumentError("fit_nb called with variant " + std::string(to_string(h.variant)));
    }
    auto prepared = detail::prepare_training(train, h, h.variant);
    detail::require_both_classes(train, "fit_nb");
    NbPayload nb;
    nb.multinomial = h.variant == Variant::nb_multinomial;
    const auto counts = train.class_counts();
    const double n = static_cast<double>(train.size());
    for (std::size_t c = 0; c < 2; ++c) nb.log_prior[c] = std::log(counts[c] / n);
    if (nb.multinomial) {
        fit_multinomial(train, prepared.rows, h.nb_alpha, nb);
    } else {
        fit_categorical(train, prepared.rows, h.nb_alpha, nb);
    }
    prepared.model.payload = std::move(nb);
    return prepared.model;
}

// argmax_c [log P(c) + sum_j log P(x_j | c)], score = softmax weight of class 1.
Prediction predict_nb(const TrainedModel& model, std::span<const double> x) {
    if (!is_naive_bayes(model.variant)) throw ArgumentError("predict_nb on a non-NB model");
    const auto q = detail::prepare_query(model, x);
    const auto& nb = std::get<NbPayload>(model.payload);
    std::array<double, 2> joint = nb.log_prior;
    for (std::size_t c = 0; c < 2; ++c) {
        for (std::size_t j = 0; j < q.size(); ++j) {
            if (nb.multinomial) {
                joint[c] += q[j] * nb.log_theta[c][j];
            } else {
                const auto& codes = nb.codes[j];
                const auto it = std::lower_bound(codes.begin(), codes.end(), q[j]);
                if (it != codes.end() && *it == q[j]) {
                    joint[c] += nb.log_likelihood[c][j][static_cast<std::size_t>(it - codes.begin())];
                } else {
                    joint[c] += nb.log_unseen[c][j];
                }
            }
        }
    }
    const double top = std::max(joint[0], joint[1]);
    const double e0 = std::exp(joint[0] - top);
    const double e1 = std::exp(joint[1] - top);
    return {joint[1] > joint[0] ? 1 : 0, e1 / (e0 + e1)};
}

}  // namespace cardio
