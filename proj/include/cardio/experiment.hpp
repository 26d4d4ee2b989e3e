#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cardio/classifiers.hpp"
#include "cardio/dataset.hpp"
#include "cardio/evaluation.hpp"
#include "cardio/selection.hpp"

namespace cardio {

struct GridConfig {
    std::uint64_t seed = 42;
    int k = 5;
    bool tune = true;      // inner-CV search over the hyperparameter ranges
    bool holdout = false;  // score cells on the 70/30 test split instead of CV
    int workers = 1;
    std::optional<std::string> stamp;  // written to the grid file only when set
    std::vector<Variant> families{Variant::lr, Variant::dt, Variant::knn, Variant::nb_categorical,
                                  Variant::svm};

    void validate() const;
};

struct CellKey {
    std::string dataset;
    std::string tag;     // "beta", "alpha-<n>", "eta"
    std::string family;  // LR, DT, KNN, NB, SVM
    auto operator<=>(const CellKey&) const = default;
};

struct Cell {
    CellKey key;
    std::vector<int> features;
    bool ok = false;
    std::string error;
    EvalReport report;
    std::vector<Hyperparams> chosen;  // per outer fold (one entry in holdout mode)

    // cv_mean, or test accuracy in percent for holdout cells.
    double score() const;
};

struct DatasetSummary {
    std::string name;
    std::string schema;
    std::string fingerprint;
    std::size_t rows = 0;
    std::size_t positives = 0;
    std::vector<FScore> ranking;
};

struct ExperimentGrid {
    GridConfig config;
    std::vector<DatasetSummary> datasets;
    std::vector<Cell> cells;  // dataset order, then tag order, then family order
    // (dataset, family) -> alpha tag fused into that family's eta.
    std::map<std::pair<std::string, std::string>, std::string> eta_source;
    double wall_seconds = 0.0;

    const Cell* find(const CellKey& key) const;
    std::size_t error_count() const;
};

// Tags evaluated for a schema with `attributes` non-label attributes:
// beta, alpha-2, alpha-4, ... up to min(alpha_cap, attributes), then eta when
// at least one alpha tag exists.
std::vector<std::string> selection_tags(const Schema& schema, std::size_t attributes);

// Hyperparameter candidates for a family; a single default when untuned.
std::vector<Hyperparams> candidates(Variant family, bool tune);

// Picks the candidate with the best inner-CV mean on `train` (already
// projected). Candidates that fail to fit are skipped.
Hyperparams select_hyperparams(const Dataset& train, Variant family, const GridConfig& config,
                               std::uint64_t seed);

ExperimentGrid run_grid(const std::vector<Dataset>& datasets, const GridConfig& config);

// Byte-stable document: no timings, stamp only when configured.
nlohmann::json to_json(const ExperimentGrid& grid);
// Wall-clock data kept out of the grid document.
nlohmann::json timings_json(const ExperimentGrid& grid);

// "table": per-dataset mean±std accuracy tables with the best cell of each
// row starred. "csv": long form, one row per (cell, metric). "json": the
// grid document.
std::string report(const ExperimentGrid& grid, const std::string& format);
// Number of metric rows each cell contributes to the csv report.
inline constexpr std::size_t kReportMetrics = 7;

// fpr/tpr files for each eta cell, named <dataset>_eta_<family>.csv.
std::vector<std::filesystem::path> write_roc_files(const ExperimentGrid& grid,
                                                   const std::filesystem::path& dir);

// Highest score; ties go to lower per-sample time, then family order.
CellKey best_cell(const ExperimentGrid& grid, const std::optional<std::string>& dataset = {});

struct BestModel {
    CellKey key;
    TrainedModel model;
};

// Refits the winning configuration on the 70% training split of its dataset.
BestModel best_model(const ExperimentGrid& grid, const std::vector<Dataset>& datasets,
                     const std::optional<std::string>& dataset = {});

struct DatasetSource {
    std::string name;
    std::string schema;
    std::filesystem::path path;
};

// The five datasets under a data directory, whether or not their files exist.
std::vector<DatasetSource> default_sources(const std::filesystem::path& data_dir);

}  // namespace cardio
