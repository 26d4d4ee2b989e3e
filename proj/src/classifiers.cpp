#include "cardio/classifiers.hpp"

#include <cmath>

#include "cardio/error.hpp"
#include "model_common.hpp"

namespace cardio {

std::string_view to_string(Variant v) {
    switch (v) {
        case Variant::lr: return "LR";
        case Variant::dt: return "DT";
        case Variant::knn: return "KNN";
        case Variant::nb_multinomial: return "NB-multinomial";
        case Variant::nb_categorical: return "NB-categorical";
        case Variant::svm: return "SVM";
    }
    return "?";
}

Variant variant_from_string(std::string_view s) {
    for (auto v : {Variant::lr, Variant::dt, Variant::knn, Variant::nb_multinomial,
                   Variant::nb_categorical, Variant::svm}) {
        if (s == to_string(v)) return v;
    }
    if (s == "NB") return Variant::nb_categorical;
    throw ArgumentError("unknown classifier '" + std::string(s) +
                        "' (expected LR, DT, KNN, NB, NB-multinomial, NB-categorical, SVM)");
}

int family_order(Variant v) {
    switch (v) {
        case Variant::lr: return 0;
        case Variant::dt: return 1;
        case Variant::knn: return 2;
        case Variant::nb_multinomial:
        case Variant::nb_categorical: return 3;
        case Variant::svm: return 4;
    }
    return 5;
}

std::string_view family_name(Variant v) {
    return is_naive_bayes(v) ? std::string_view("NB") : to_string(v);
}

bool is_naive_bayes(Variant v) {
    return v == Variant::nb_multinomial || v == Variant::nb_categorical;
}

void Hyperparams::validate() const {
    switch (variant) {
        case Variant::lr:
            if (!(lr_solver_tolerance > 0.0)) throw HyperparamError("lr_solver_tolerance must be > 0");
            if (!(lr_c > 0.0)) throw HyperparamError("lr_c must be > 0");
            break;
        case Variant::dt:
            if (dt_max_depth < 3 || dt_max_depth > 6) {
                throw HyperparamError("dt_max_depth=" + std::to_string(dt_max_depth) +
                                      " outside [3, 6]");
            }
            break;
        case Variant::knn:
            if (knn_k < 5 || knn_k > 15) {
                throw HyperparamError("knn_k=" + std::to_string(knn_k) + " outside [5, 15]");
            }
            break;
        case Variant::nb_multinomial:
        case Variant::nb_categorical:
            if (!(nb_alpha > 0.0) || !std::isfinite(nb_alpha)) {
                throw HyperparamError("nb_alpha must be a positive finite number");
            }
            break;
        case Variant::svm:
            if (!(svm_c > 0.0)) throw HyperparamError("svm_c must be > 0");
            if (svm_rbf_gamma && !(*svm_rbf_gamma > 0.0)) {
                throw HyperparamError("svm_rbf_gamma must be > 0");
            }
            break;
    }
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double gini(std::span<const int> class_counts) {
    double total = 0.0;
    for (int c : class_counts) {
        if (c < 0) throw ArgumentError("gini: negative class count");
        total += c;
    }
    if (total == 0.0) throw ArgumentError("gini: all class counts are zero");
    double sum_sq = 0.0;
    for (int c : class_counts) {
        const double p = c / total;
        sum_sq += p * p;
    }
    return 1.0 - sum_sq;
}

double entropy(std::span<const int> class_counts) {
    double total = 0.0;
    for (int c : class_counts) {
        if (c < 0) throw ArgumentError("entropy: negative class count");
        total += c;
    }
    if (total == 0.0) throw ArgumentError("entropy: all class counts are zero");
    double h = 0.0;
    for (int c : class_counts) {
        if (c == 0) continue;
        const double p = c / total;
        h -= p * std::log2(p);
    }
    return h;
}

double euclidean(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) {
        throw ArgumentError("euclidean: arity mismatch (" + std::to_string(p.size()) + " vs " +
                            std::to_string(q.size()) + ")");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = q[i] - p[i];
        s += d * d;
    }
    return std::sqrt(s);
}

std::vector<double> Standardizer::apply(std::span<const double> x) const {
    std::vector<double> out(x.begin(), x.end());
    if (empty()) return out;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (out[i] - mean[i]) / scale[i];
    return out;
}

namespace detail {

void require_both_classes(const Dataset& train, std::string_view who) {
    const auto counts = train.class_counts();
    if (counts[0] == 0 || counts[1] == 0) {
        throw ArgumentError(std::string(who) + ": training data must contain both classes");
    }
}

Prepared prepare_training(const Dataset& train, const Hyperparams& h, Variant expected) {
    const bool nb_ok = is_naive_bayes(expected) && is_naive_bayes(h.variant);
    if (h.variant != expected && !nb_ok) {
        throw ArgumentError("fit_" + std::string(to_string(expected)) + " called with variant " +
                            std::string(to_string(h.variant)));
    }
    h.validate();
    if (train.size() == 0) throw ArgumentError("cannot fit on an empty training set");
    Prepared p;
    auto& m = p.model;
    m.variant = h.variant;
    m.hyperparams = h;
    m.feature_set.indices = train.columns;
    m.feature_set.schema = train.schema.name;
    m.schema_name = train.schema.name;
    m.schema_fingerprint = train.schema.fingerprint();
    p.rows = train.rows;

    if (h.standardize) {
        const std::size_t d = train.arity();
        m.standardizer.mean.assign(d, 0.0);
        m.standardizer.scale.assign(d, 1.0);
        for (std::size_t c = 0; c < d; ++c) {
            if (train.column_schema(c).kind != AttributeKind::numeric) continue;
            double mean = 0.0;
            for (const auto& r : train.rows) mean += r[c];
            mean /= static_cast<double>(train.size());
            double var = 0.0;
            for (const auto& r : train.rows) var += (r[c] - mean) * (r[c] - mean);
            var /= static_cast<double>(train.size());
            m.standardizer.mean[c] = mean;
            m.standardizer.scale[c] = var > 0.0 ? std::sqrt(var) : 1.0;
        }
        for (auto& r : p.rows) r = m.standardizer.apply(r);
    }
    return p;
}

std::vector<double> prepare_query(const TrainedModel& m, std::span<const double> x) {
    if (x.size() != m.feature_set.size()) {
        throw ArgumentError("predict: expected " + std::to_string(m.feature_set.size()) +
                            " attributes, got " + std::to_string(x.size()));
    }
    return m.standardizer.apply(x);
}

}  // namespace detail

TrainedModel fit(const Dataset& train, const Hyperparams& h) {
    switch (h.variant) {
        case Variant::lr: return fit_lr(train, h);
        case Variant::dt: return fit_dt(train, h);
        case Variant::knn: return fit_knn(train, h);
        case Variant::nb_multinomial:
        case Variant::nb_categorical: return fit_nb(train, h);
        case Variant::svm: return fit_svm(train, h);
    }
    throw ArgumentError("unknown variant");
}

namespace {

Prediction predict_linear(const TrainedModel& m, std::span<const double> x) {
    const auto q = detail::prepare_query(m, x);
    const auto& p = std::get<LinearPayload>(m.payload);
    double z = p.bias;
    for (std::size_t i = 0; i < q.size(); ++i) z += p.weights[i] * q[i];
    const double s = sigmoid(z);
    return {s > 0.5 ? 1 : 0, s};
}

Prediction predict_tree(const TrainedModel& m, std::span<const double> x) {
    const auto q = detail::prepare_query(m, x);
    const auto& nodes = std::get<TreePayload>(m.payload).nodes;
    int at = 0;
    while (!nodes[static_cast<std::size_t>(at)].leaf()) {
        const auto& n = nodes[static_cast<std::size_t>(at)];
        const double v = q[static_cast<std::size_t>(n.column)];
        int next = -1;
        if (n.categorical) {
            for (const auto& [code, child] : n.branches) {
                if (static_cast<double>(code) == v) {
                    next = child;
                    break;
                }
            }
        } else {
            next = v <= n.threshold ? n.left : n.right;
        }
        if (next < 0) break;  // unseen code: answer from this node's counts
        at = next;
    }
    const auto& counts = nodes[static_cast<std::size_t>(at)].counts;
    const double s = static_cast<double>(counts[1]) / static_cast<double>(counts[0] + counts[1]);
    return {s > 0.5 ? 1 : 0, s};
}

}  // namespace

double svm_decision(const TrainedModel& m, std::span<const double> x) {
    if (m.variant != Variant::svm) throw ArgumentError("svm_decision on a non-SVM model");
    const auto q = detail::prepare_query(m, x);
    const auto& p = std::get<SvmPayload>(m.payload);
    double v = p.bias;
    if (p.kernel == Kernel::linear) {
        for (std::size_t i = 0; i < q.size(); ++i) v += p.weights[i] * q[i];
    } else {
        for (std::size_t s = 0; s < p.support.size(); ++s) {
            double d2 = 0.0;
            for (std::size_t i = 0; i < q.size(); ++i) {
                const double d = q[i] - p.support[s][i];
                d2 += d * d;
            }
            v += p.coefficients[s] * std::exp(-p.gamma * d2);
        }
    }
    return v;
}

Prediction predict(const TrainedModel& model, std::span<const double> x) {
    switch (model.variant) {
        case Variant::lr: return predict_linear(model, x);
        case Variant::dt: return predict_tree(model, x);
        case Variant::knn: return predict_knn(model, x);
        case Variant::nb_multinomial:
        case Variant::nb_categorical: return predict_nb(model, x);
        case Variant::svm: {
            const double v = svm_decision(model, x);
            return {v > 0.0 ? 1 : 0, sigmoid(v)};
        }
    }
    throw ArgumentError("unknown variant");
}

}  // namespace cardio
