#include "cardio/evaluation.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <memory>
#include <numeric>
#include <ostream>
#include <sstream>

#include "cardio/error.hpp"
#include "cardio/text.hpp"

namespace cardio {

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
}

ConfusionMatrix confusion(std::span<const int> predicted, std::span<const int> truth) {
    if (predicted.size() != truth.size()) {
        throw ArgumentError("confusion: " + std::to_string(predicted.size()) + " predictions for " +
                            std::to_string(truth.size()) + " labels");
    }
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const int p = predicted[i];
        const int t = truth[i];
        if ((p != 0 && p != 1) || (t != 0 && t != 1)) {
            throw ArgumentError("confusion: labels must be 0 or 1 (row " + std::to_string(i) + ")");
        }
        if (p == 1 && t == 1) ++cm.tp;
        else if (p == 1) ++cm.fp;
        else if (t == 1) ++cm.fn;
        else ++cm.tn;
    }
    return cm;
}

namespace {

double ratio(std::int64_t num, std::int64_t den, bool& undefined) {
    undefined = den == 0;
    return undefined ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Predicts every row three times and returns the median pass duration
// together with the first pass's predictions.
std::pair<double, std::vector<Prediction>> timed_predictions(const Predictor& predictor,
                                                             const Dataset& test) {
    std::vector<Prediction> out(test.size());
    std::array<double, 3> passes{};
    for (std::size_t pass = 0; pass < passes.size(); ++pass) {
        const auto t0 = std::chrono::steady_clock::now();
        for (std::size_t i = 0; i < test.size(); ++i) {
            const auto p = predictor(test.rows[i]);
            if (pass == 0) out[i] = p;
        }
        passes[pass] = seconds_since(t0);
    }
    std::sort(passes.begin(), passes.end());
    return {passes[1], std::move(out)};
}

void fill_from_predictions(EvalReport& r, const std::vector<int>& truth,
                           const std::vector<int>& labels, const std::vector<double>& scores) {
    r.cm = confusion(labels, truth);
    r.m = metrics(r.cm);
    const bool both = std::find(truth.begin(), truth.end(), 0) != truth.end() &&
                      std::find(truth.begin(), truth.end(), 1) != truth.end();
    if (both) {
        r.curve = roc(scores, truth);
        r.auc = auc(r.curve);
    }
}

}  // namespace

Metrics metrics(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw ArgumentError("metrics: empty confusion matrix");
    Metrics m;
    m.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
    m.precision = ratio(cm.tp, cm.tp + cm.fp, m.precision_undefined);
    m.recall = ratio(cm.tp, cm.tp + cm.fn, m.recall_undefined);
    m.specificity_fig12 = ratio(cm.fp, cm.tn + cm.fp, m.specificity_undefined);
    return m;
}

RocCurve roc(std::span<const double> scores, std::span<const int> truth) {
    if (scores.size() != truth.size()) throw ArgumentError("roc: scores and labels differ in length");
    RocCurve curve;
    for (int t : truth) {
        if (t == 1) ++curve.positives;
        else if (t == 0) ++curve.negatives;
        else throw ArgumentError("roc: labels must be 0 or 1");
    }
    if (curve.positives == 0 || curve.negatives == 0) {
        throw ArgumentError("roc: truth must contain both classes");
    }
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    const double p = static_cast<double>(curve.positives);
    const double n = static_cast<double>(curve.negatives);
    curve.points.push_back({});
    std::int64_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < order.size();) {
        const double s = scores[order[i]];
        while (i < order.size() && scores[order[i]] == s) {
            if (truth[order[i]] == 1) ++tp;
            else ++fp;
            ++i;
        }
        curve.points.push_back({static_cast<double>(fp) / n, static_cast<double>(tp) / p, s, fp, tp});
    }
    return curve;
}

// With integer counts the trapezoid sum is sum(dfp * (tp_prev + tp)) / 2PN,
// which is exactly the Mann-Whitney pair count with ties worth one half.
double auc(const RocCurve& curve) {
    if (curve.points.size() < 2) return 0.0;
    if (curve.positives > 0 && curve.negatives > 0) {
        std::int64_t twice = 0;
        for (std::size_t i = 1; i < curve.points.size(); ++i) {
            const auto& a = curve.points[i - 1];
            const auto& b = curve.points[i];
            twice += (b.fp - a.fp) * (a.tp + b.tp);
        }
        return static_cast<double>(twice) /
               (2.0 * static_cast<double>(curve.positives) * static_cast<double>(curve.negatives));
    }
    double area = 0.0;
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        const auto& a = curve.points[i - 1];
        const auto& b = curve.points[i];
        area += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
    }
    return area;
}

void write_roc_csv(std::ostream& out, const RocCurve& curve) {
    out << "fpr,tpr\n";
    for (const auto& pt : curve.points) out << format_number(pt.fpr) << ',' << format_number(pt.tpr) << '\n';
}

std::string eval_csv_header() {
    return "tp,fp,fn,tn,accuracy,precision,recall,specificity_fig12,auc,per_sample_time,cv_mean,cv_std";
}

std::string eval_csv_row(const EvalReport& r) {
    std::ostringstream os;
    os << r.cm.tp << ',' << r.cm.fp << ',' << r.cm.fn << ',' << r.cm.tn << ','
       << format_number(r.m.accuracy) << ',' << format_number(r.m.precision) << ','
       << format_number(r.m.recall) << ',' << format_number(r.m.specificity_fig12) << ','
       << format_number(r.auc) << ',' << format_number(r.per_sample_time) << ','
       << (r.cv_mean ? format_number(*r.cv_mean) : "") << ','
       << (r.cv_std ? format_number(*r.cv_std) : "");
    return os.str();
}

nlohmann::json to_json(const EvalReport& r, bool with_timing) {
    nlohmann::json j{
        {"cm", {{"tp", r.cm.tp}, {"fp", r.cm.fp}, {"fn", r.cm.fn}, {"tn", r.cm.tn}}},
        {"accuracy", r.m.accuracy},
        {"precision", r.m.precision},
        {"recall", r.m.recall},
        {"specificity_fig12", r.m.specificity_fig12},
        {"auc", r.auc}};
    nlohmann::json undefined = nlohmann::json::array();
    if (r.m.precision_undefined) undefined.push_back("precision");
    if (r.m.recall_undefined) undefined.push_back("recall");
    if (r.m.specificity_undefined) undefined.push_back("specificity_fig12");
    j["undefined"] = undefined;
    if (r.cv_mean) {
        j["cv_mean"] = *r.cv_mean;
        j["cv_std"] = r.cv_std.value_or(0.0);
        j["fold_accuracy"] = r.fold_accuracy;
    }
    if (with_timing) j["per_sample_time"] = r.per_sample_time;
    return j;
}

Learner learner_for(const Hyperparams& h) {
    return [h](const Dataset& train) -> Predictor {
        auto model = std::make_shared<const TrainedModel>(fit(train, h));
        return [model](std::span<const double> x) { return predict(*model, x); };
    };
}

EvalReport cross_validate(const Dataset& d, const FeatureSet& fs, const Hyperparams& h,
                          const FoldPlan& plan) {
    return cross_validate(project(d, fs), learner_for(h), plan);
}

EvalReport cross_validate(const Dataset& d, const Learner& learner, const FoldPlan& plan) {
    if (plan.fold_assignments.size() != d.size()) {
        throw FoldError("fold plan covers " + std::to_string(plan.fold_assignments.size()) +
                        " rows, dataset has " + std::to_string(d.size()));
    }
    EvalReport report;
    std::vector<int> labels(d.size(), 0);
    std::vector<double> scores(d.size(), 0.0);
    double predict_time = 0.0;
    for (int fold = 0; fold < plan.k; ++fold) {
        const auto held = plan.fold_rows(fold);
        if (held.empty()) throw FoldError("fold " + std::to_string(fold) + " is empty");
        const auto train = d.subset(plan.training_rows(fold));
        const auto test = d.subset(held);
        std::pair<double, std::vector<Prediction>> timed;
        try {
            timed = timed_predictions(learner(train), test);
        } catch (const Error& e) {
            throw FoldError("fold " + std::to_string(fold) + ": " + e.what());
        }
        predict_time += timed.first;
        std::int64_t correct = 0;
        for (std::size_t i = 0; i < held.size(); ++i) {
            labels[held[i]] = timed.second[i].label;
            scores[held[i]] = timed.second[i].score;
            if (timed.second[i].label == test.labels[i]) ++correct;
        }
        report.fold_accuracy.push_back(100.0 * static_cast<double>(correct) /
                                       static_cast<double>(held.size()));
    }
    fill_from_predictions(report, d.labels, labels, scores);
    report.per_sample_time = predict_time / static_cast<double>(d.size());
    const double k = static_cast<double>(report.fold_accuracy.size());
    const double mean = std::accumulate(report.fold_accuracy.begin(), report.fold_accuracy.end(), 0.0) / k;
    double var = 0.0;
    for (double a : report.fold_accuracy) var += (a - mean) * (a - mean);
    report.cv_mean = mean;
    report.cv_std = std::sqrt(var / k);
    return report;
}

EvalReport evaluate(const Predictor& predictor, const Dataset& test) {
    if (test.size() == 0) throw ArgumentError("evaluate: empty test set");
    auto [elapsed, preds] = timed_predictions(predictor, test);
    std::vector<int> labels(preds.size());
    std::vector<double> scores(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i) {
        labels[i] = preds[i].label;
        scores[i] = preds[i].score;
    }
    EvalReport r;
    fill_from_predictions(r, test.labels, labels, scores);
    r.per_sample_time = elapsed / static_cast<double>(test.size());
    return r;
}

EvalReport evaluate(const TrainedModel& model, const Dataset& test) {
    if (test.columns != model.feature_set.indices) {
        throw ArgumentError("evaluate: test columns do not match the model's feature set");
    }
    return evaluate([&model](std::span<const double> x) { return predict(model, x); }, test);
}

}  // namespace cardio
