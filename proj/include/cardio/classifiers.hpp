#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "cardio/dataset.hpp"
#include "cardio/selection.hpp"

namespace cardio {

enum class Variant { lr, dt, knn, nb_multinomial, nb_categorical, svm };
enum class Criterion { gini, entropy };
enum class Kernel { linear, rbf };

std::string_view to_string(Variant v);
Variant variant_from_string(std::string_view s);
// Position in the reporting order LR, DT, KNN, NB, SVM (both NB variants share a slot).
int family_order(Variant v);
std::string_view family_name(Variant v);
bool is_naive_bayes(Variant v);

struct Hyperparams {
    Variant variant = Variant::lr;
    double lr_solver_tolerance = 1e-8;
    double lr_c = 1.0;  // inverse l2 strength, sklearn convention
    Criterion dt_criterion = Criterion::gini;
    int dt_max_depth = 5;
    int knn_k = 5;
    double nb_alpha = 0.5;
    Kernel svm_kernel = Kernel::linear;
    double svm_c = 1.0;
    std::optional<double> svm_rbf_gamma;  // 1/d when unset
    bool standardize = false;             // z-score numeric columns

    // Throws HyperparamError for out-of-range values.
    void validate() const;
};

nlohmann::json to_json(const Hyperparams& h);
Hyperparams hyperparams_from_json(const nlohmann::json& j);

struct LinearPayload {
    std::vector<double> weights;
    double bias = 0.0;
    int iterations = 0;
};

struct TreeNode {
    std::array<int, 2> counts{0, 0};
    int depth = 0;
    int column = -1;  // -1 marks a leaf
    bool categorical = false;
    double threshold = 0.0;                      // numeric: x <= threshold goes left
    int left = -1, right = -1;                   // numeric children
    std::vector<std::pair<int, int>> branches;   // categorical: (code, child)
    bool leaf() const { return column < 0; }
};

struct TreePayload {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
    int depth() const;
};

struct KnnPayload {
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    int k = 5;
};

struct NbPayload {
    bool multinomial = false;
    std::array<double, 2> log_prior{0.0, 0.0};
    // Categorical: per column, the code list and per-class log likelihoods
    // aligned with it, plus the log likelihood assigned to unseen codes.
    std::vector<std::vector<double>> codes;
    std::array<std::vector<std::vector<double>>, 2> log_likelihood;
    std::array<std::vector<double>, 2> log_unseen;
    // Multinomial: per-class log feature probabilities.
    std::array<std::vector<double>, 2> log_theta;
};

struct SvmPayload {
    Kernel kernel = Kernel::linear;
    std::vector<double> weights;  // linear
    double bias = 0.0;
    std::vector<std::vector<double>> support;  // rbf
    std::vector<double> coefficients;          // rbf: lambda_i * y_i (y in {-1, +1})
    double gamma = 0.0;
    int iterations = 0;
    double objective = 0.0;
};

using Payload = std::variant<LinearPayload, TreePayload, KnnPayload, NbPayload, SvmPayload>;

struct Standardizer {
    std::vector<double> mean;
    std::vector<double> scale;  // 1 for categorical columns
    bool empty() const { return mean.empty(); }
    std::vector<double> apply(std::span<const double> x) const;
};

struct TrainedModel {
    Variant variant = Variant::lr;
    Hyperparams hyperparams;
    FeatureSet feature_set;
    std::string schema_name;
    std::string schema_fingerprint;
    Standardizer standardizer;
    Payload payload;
    std::vector<FScore> importance;  // training ranking, may be empty
};

struct Prediction {
    int label = 0;
    double score = 0.5;  // monotone confidence for class 1, in [0, 1]
};

double sigmoid(double z);
double gini(std::span<const int> class_counts);
double entropy(std::span<const int> class_counts);
double euclidean(std::span<const double> p, std::span<const double> q);

// All fit functions take a dataset already restricted to the model's
// columns; the stored feature set mirrors train.columns.
TrainedModel fit(const Dataset& train, const Hyperparams& h);
TrainedModel fit_lr(const Dataset& train, const Hyperparams& h);
TrainedModel fit_dt(const Dataset& train, const Hyperparams& h);
TrainedModel fit_knn(const Dataset& train, const Hyperparams& h);
TrainedModel fit_nb(const Dataset& train, const Hyperparams& h);
TrainedModel fit_svm(const Dataset& train, const Hyperparams& h);

Prediction predict(const TrainedModel& model, std::span<const double> x);
Prediction predict_knn(const TrainedModel& model, std::span<const double> x);
Prediction predict_nb(const TrainedModel& model, std::span<const double> x);
// Signed SVM decision value p(x).
double svm_decision(const TrainedModel& model, std::span<const double> x);

// l2-regularised logistic loss over params = (w..., b):
//   0.5 |w|^2 + c * sum_i log(1 + exp(-s_i z_i)),  s_i in {-1, +1}.
double lr_objective(const Dataset& d, std::span<const double> params, double c);
std::vector<double> lr_gradient(const Dataset& d, std::span<const double> params, double c);

// Squared-hinge primal over params = (w..., b):
//   0.5 |w|^2 + c * sum_i max(0, 1 - s_i (w.x_i + b))^2.
double svm_objective(const Dataset& d, std::span<const double> params, double c);

nlohmann::json to_json(const TrainedModel& m);
TrainedModel model_from_json(const nlohmann::json& doc);
void save_model(const std::string& path, const TrainedModel& m);
// Loads and checks the stored fingerprint against `schema`.
TrainedModel load_model(const std::string& path, const Schema& schema);
// Loads without a schema check; the caller resolves the schema by name.
TrainedModel load_model(const std::string& path);
std::string model_id(const TrainedModel& m);

}  // namespace cardio
