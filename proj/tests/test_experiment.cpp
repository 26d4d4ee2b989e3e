#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <sstream>

#include "cardio/error.hpp"
#include "cardio/experiment.hpp"
#include "oracles.hpp"

using namespace cardio;
namespace fs = std::filesystem;

namespace {

const fs::path kData = CARDIO_DATA_DIR;

GridConfig quick() {
    GridConfig c;
    c.tune = false;
    return c;
}

Cell scored(const std::string& tag, const std::string& family, double cv, double time) {
    Cell c;
    c.key = {"d", tag, family};
    c.ok = true;
    c.report.cv_mean = cv;
    c.report.cv_std = 0.0;
    c.report.per_sample_time = time;
    return c;
}

std::size_t lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("selection tags") {
    const auto bhdc = selection_tags(builtin_schema("bhdc"), 18);
    CHECK(bhdc.size() == 11);
    CHECK(bhdc.front() == "beta");
    CHECK(bhdc[1] == "alpha-2");
    CHECK(bhdc[9] == "alpha-18");
    CHECK(bhdc.back() == "eta");
    // The processed UCI files carry 13 attributes, so the sweep ends at 12.
    const auto uci = selection_tags(builtin_schema("cleveland"), 13);
    CHECK(uci.size() == 8);
    CHECK(uci[6] == "alpha-12");
    auto tiny = oracle::numeric_schema(3);
    tiny.alpha_cap = 1;
    CHECK(selection_tags(tiny, 3) == std::vector<std::string>{"beta"});
}

TEST_CASE("hyperparameter candidates cover the documented ranges") {
    CHECK(candidates(Variant::dt, true).size() == 8);
    CHECK(candidates(Variant::knn, true).size() == 6);
    CHECK(candidates(Variant::nb_categorical, true).size() == 8);
    CHECK(candidates(Variant::svm, true).size() == 2);
    CHECK(candidates(Variant::lr, true).size() == 1);
    CHECK(candidates(Variant::dt, false).size() == 1);
    for (auto v : {Variant::lr, Variant::dt, Variant::knn, Variant::nb_categorical, Variant::svm}) {
        for (const auto& h : candidates(v, true)) CHECK_NOTHROW(h.validate());
    }
    const auto d = project(synth_bhdc(150, 2), expert_set(builtin_schema("bhdc")));
    GridConfig cfg;
    const auto a = select_hyperparams(d, Variant::knn, cfg, 5);
    const auto b = select_hyperparams(d, Variant::knn, cfg, 5);
    CHECK(to_json(a) == to_json(b));
    CHECK(a.variant == Variant::knn);
}

TEST_CASE("grid config validation") {
    GridConfig c;
    c.k = 1;
    CHECK_THROWS_AS(c.validate(), ArgumentError);
    c = GridConfig{};
    c.workers = 0;
    CHECK_THROWS_AS(c.validate(), ArgumentError);
    c = GridConfig{};
    c.families.clear();
    CHECK_THROWS_AS(c.validate(), ArgumentError);
}

TEST_CASE("grid shape and eta provenance") {
    auto bhdc = synth_bhdc(200, 42);
    bhdc.name = "bhdc";
    auto uci = load_dataset(kData / "uci" / "cleveland.csv", builtin_schema("cleveland"));
    uci.name = "cleveland";
    const auto grid = run_grid({bhdc, uci}, quick());
    CHECK(grid.cells.size() == 55 + 40);
    CHECK(grid.error_count() == 0);
    CHECK(grid.cells.front().key.dataset == "bhdc");
    CHECK(grid.cells.front().key.tag == "beta");
    CHECK(grid.cells.front().key.family == "LR");
    CHECK(grid.cells.back().key.tag == "eta");
    CHECK(grid.cells.back().key.family == "SVM");

    for (const auto& c : grid.cells) {
        if (c.key.tag != "eta") continue;
        const auto alpha_tag = grid.eta_source.at({c.key.dataset, c.key.family});
        const auto* alpha = grid.find({c.key.dataset, alpha_tag, c.key.family});
        REQUIRE(alpha);
        // The chosen alpha is the best-scoring alpha cell of that family.
        for (const auto& other : grid.cells) {
            if (other.key.dataset == c.key.dataset && other.key.family == c.key.family &&
                other.key.tag.rfind("alpha-", 0) == 0) {
                CHECK(other.score() <= alpha->score());
            }
        }
        const auto schema = builtin_schema(c.key.dataset);
        const auto eta = fuse(FeatureSet{alpha->features, SelectionKind::anova, 0, ""},
                              FeatureSet{schema.expert, SelectionKind::expert, 0, ""});
        CHECK(c.features == eta.indices);
    }

    const auto csv = report(grid, "csv");
    CHECK(lines(csv) == 2 + grid.cells.size() * kReportMetrics);
    const auto table = report(grid, "table");
    CHECK(table.find("## bhdc (200 rows)") != std::string::npos);
    CHECK(table.find("| classifier | beta | alpha-2 |") != std::string::npos);
    // One starred cell per classifier row.
    CHECK(std::count(table.begin(), table.end(), '*') == 1 + 10);
    const auto json_text = report(grid, "json");
    CHECK(nlohmann::json::parse(json_text)["cells"].size() == grid.cells.size());
    CHECK_THROWS_AS(report(grid, "xml"), ArgumentError);

    const auto dir = fs::temp_directory_path() / "cardio_roc_test";
    fs::remove_all(dir);
    const auto files = write_roc_files(grid, dir);
    CHECK(files.size() == 10);
    CHECK(fs::exists(dir / "cleveland_eta_SVM.csv"));
    fs::remove_all(dir);
}

TEST_CASE("minimal grid and empty reports") {
    auto d = oracle::make_dataset({{0}, {1}, {0}, {1}, {0}, {1}, {0}, {1}, {0}, {1}}, {0, 1, 0, 1, 0, 1, 0, 1, 0, 1});
    d.schema.alpha_cap = 1;
    auto cfg = quick();
    cfg.families = {Variant::lr};
    const auto grid = run_grid({d}, cfg);
    REQUIRE(grid.cells.size() == 1);
    CHECK(grid.cells[0].key.tag == "beta");
    CHECK(grid.cells[0].ok);

    const ExperimentGrid empty;
    CHECK(lines(report(empty, "csv")) == 2);
    CHECK(report(empty, "csv").find("dataset,tag,classifier,metric,value") != std::string::npos);
    CHECK(lines(report(empty, "table")) == 1);
}

TEST_CASE("grid is deterministic and independent of worker count") {
    auto d = synth_bhdc(150, 7);
    d.name = "bhdc";
    auto cfg = quick();
    cfg.seed = 7;
    const auto a = to_json(run_grid({d}, cfg)).dump();
    cfg.workers = 3;
    const auto b = to_json(run_grid({d}, cfg)).dump();
    CHECK(a == b);
    CHECK(a.find("stamp") == std::string::npos);
    cfg.stamp = "run-1";
    CHECK(to_json(run_grid({d}, cfg))["stamp"] == "run-1");
}

TEST_CASE("holdout grid scores test accuracy") {
    auto d = synth_bhdc(150, 3);
    d.name = "bhdc";
    auto cfg = quick();
    cfg.holdout = true;
    cfg.families = {Variant::lr, Variant::nb_categorical};
    const auto grid = run_grid({d}, cfg);
    const auto test_rows = static_cast<std::int64_t>(split_stratified(d, {0.70, cfg.seed, true}).test.size());
    CHECK(grid.error_count() == 0);
    for (const auto& c : grid.cells) {
        CHECK_FALSE(c.report.cv_mean.has_value());
        CHECK(c.report.cm.total() == test_rows);
        CHECK(c.score() == 100.0 * c.report.m.accuracy);
    }
}

TEST_CASE("per-cell failures are recorded") {
    // KNN needs at least five training rows per fold.
    const auto d = oracle::make_dataset({{0, 1}, {1, 0}, {0, 2}, {1, 1}, {0, 0}, {1, 2}}, {0, 1, 0, 1, 0, 1});
    auto cfg = quick();
    cfg.k = 2;
    cfg.families = {Variant::lr, Variant::knn};
    const auto grid = run_grid({d}, cfg);
    const auto* knn = grid.find({"fixture", "beta", "KNN"});
    REQUIRE(knn);
    CHECK_FALSE(knn->ok);
    CHECK_FALSE(knn->error.empty());
    const auto* eta = grid.find({"fixture", "eta", "KNN"});
    REQUIRE(eta);
    CHECK_FALSE(eta->ok);
    CHECK(grid.find({"fixture", "beta", "LR"})->ok);
    CHECK(grid.error_count() >= 2);
    CHECK(report(grid, "table").find("error") != std::string::npos);
}

TEST_CASE("best cell tie rules") {
    ExperimentGrid g;
    g.cells = {scored("beta", "LR", 80.0, 1e-6), scored("eta", "SVM", 100.0, 1e-6),
               scored("alpha-2", "DT", 90.0, 1e-6)};
    CHECK(best_cell(g).family == "SVM");

    g.cells = {scored("beta", "LR", 90.0, 2e-6), scored("beta", "KNN", 90.0, 1e-6)};
    CHECK(best_cell(g).family == "KNN");

    g.cells = {scored("beta", "SVM", 90.0, 1e-6), scored("beta", "DT", 90.0, 1e-6)};
    CHECK(best_cell(g).family == "DT");

    CHECK_THROWS_AS(best_cell(ExperimentGrid{}), ArgumentError);
}

TEST_CASE("best model refit") {
    auto d = synth_bhdc(200, 11);
    d.name = "bhdc";
    auto cfg = quick();
    cfg.families = {Variant::lr, Variant::nb_categorical};
    const auto grid = run_grid({d}, cfg);
    const auto best = best_model(grid, {d});
    CHECK(best.key == best_cell(grid));
    CHECK(best.model.feature_set.indices == grid.find(best.key)->features);
    CHECK(best.model.importance.size() == 18);
    CHECK(best.model.schema_fingerprint == d.schema.fingerprint());
    CHECK_THROWS_AS(best_model(grid, {}), ArgumentError);
}

TEST_CASE("default sources") {
    const auto s = default_sources("/data");
    REQUIRE(s.size() == 5);
    CHECK(s[0].name == "bhdc");
    CHECK(s[1].path == fs::path("/data/uci/cleveland.csv"));
}
