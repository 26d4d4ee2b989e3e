#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cardio/classifiers.hpp"
#include "cardio/dataset.hpp"
#include "cardio/selection.hpp"

namespace cardio {

// Positive is class 1.
struct ConfusionMatrix {
    std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;

    std::int64_t total() const { return tp + fp + fn + tn; }
    ConfusionMatrix& operator+=(const ConfusionMatrix& o);
    bool operator==(const ConfusionMatrix&) const = default;
};

ConfusionMatrix confusion(std::span<const int> predicted, std::span<const int> truth);

// specificity_fig12 is FP / (TN + FP), i.e. the false positive rate, kept
// under that name so reports line up with the printed tables. A 0/0 ratio
// is reported as 0 and flagged.
struct Metrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double specificity_fig12 = 0.0;
    bool precision_undefined = false;
    bool recall_undefined = false;
    bool specificity_undefined = false;
};

Metrics metrics(const ConfusionMatrix& cm);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    double threshold = std::numeric_limits<double>::infinity();  // predict 1 when score >= threshold
    std::int64_t fp = 0;
    std::int64_t tp = 0;
};

// Points carry integer counts when built by roc(); hand-made curves may
// leave positives/negatives at 0 and are integrated from the rates.
struct RocCurve {
    std::vector<RocPoint> points;
    std::int64_t positives = 0;
    std::int64_t negatives = 0;
};

RocCurve roc(std::span<const double> scores, std::span<const int> truth);
double auc(const RocCurve& curve);

// Two-column fpr,tpr CSV with header.
void write_roc_csv(std::ostream& out, const RocCurve& curve);

struct EvalReport {
    ConfusionMatrix cm;
    Metrics m;
    double auc = 0.0;
    double per_sample_time = 0.0;  // seconds
    std::optional<double> cv_mean;  // percent
    std::optional<double> cv_std;   // percent, population
    std::vector<double> fold_accuracy;  // percent, by fold index
    RocCurve curve;
};

// Header and row of the flat CSV form.
std::string eval_csv_header();
std::string eval_csv_row(const EvalReport& r);
// `with_timing` false drops per_sample_time so the document is reproducible.
nlohmann::json to_json(const EvalReport& r, bool with_timing = true);

// A learner maps a training set to a scoring function over rows of the
// same columns.
using Predictor = std::function<Prediction(std::span<const double>)>;
using Learner = std::function<Predictor(const Dataset& train)>;

Learner learner_for(const Hyperparams& h);

// Projects `d` onto `fs` and runs K-fold CV. The confusion matrix and ROC
// are pooled over the out-of-fold predictions.
EvalReport cross_validate(const Dataset& d, const FeatureSet& fs, const Hyperparams& h,
                          const FoldPlan& plan);
EvalReport cross_validate(const Dataset& d, const Learner& learner, const FoldPlan& plan);

// Scores every row of `test` (already restricted to the model's columns).
EvalReport evaluate(const TrainedModel& model, const Dataset& test);
EvalReport evaluate(const Predictor& predictor, const Dataset& test);

}  // namespace cardio
