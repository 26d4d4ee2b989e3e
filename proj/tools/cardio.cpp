#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cardio/classifiers.hpp"
#include "cardio/dataset.hpp"
#include "cardio/error.hpp"
#include "cardio/evaluation.hpp"
#include "cardio/experiment.hpp"
#include "cardio/selection.hpp"
#include "cardio/service.hpp"
#include "cardio/text.hpp"

namespace fs = std::filesystem;
using namespace cardio;

namespace {

struct Options {
    std::vector<std::string> data;
    std::string schema;
    std::string data_dir;
    std::uint64_t seed = 42;
    int k = 5;
    std::string out;
    std::string features = "beta";
    std::string classifier = "LR";
    std::string format = "table";
    double train_fraction = 0.70;
    int top = 0;
    bool expert = false;
    std::string alpha, beta;
    std::string model;
    std::string split = "test";
    std::string predictions_out, roc_out;
    int workers = 1;
    bool no_tune = false;
    bool holdout = false;
    std::string stamp;
    int n = 563;
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string static_dir;

    // Hyperparameter overrides.
    std::optional<int> max_depth, knn_k;
    std::optional<std::string> criterion, kernel;
    std::optional<double> nb_alpha, c, gamma;
    bool standardize = false;
};

fs::path data_dir(const Options& o) {
    if (!o.data_dir.empty()) return o.data_dir;
    if (const char* env = std::getenv("CARDIO_DATA_DIR")) return env;
    return "data";
}

struct Resolved {
    fs::path path;
    Schema schema;
};

// A --data value is either a path or a dataset name under the data directory.
Resolved resolve_data(const Options& o, const std::string& value) {
    for (const auto& src : default_sources(data_dir(o))) {
        if (src.name == value) {
            if (!fs::exists(src.path)) throw IoError("dataset " + value + " not found at " + src.path.string());
            return {src.path, resolve_schema(o.schema.empty() ? src.schema : o.schema)};
        }
    }
    if (o.schema.empty()) throw ArgumentError("--schema is required for data file " + value);
    return {value, resolve_schema(o.schema)};
}

Dataset load_one(const Options& o) {
    if (o.data.size() != 1) throw ArgumentError("exactly one --data value expected");
    const auto r = resolve_data(o, o.data.front());
    return load_dataset(r.path, r.schema);
}

void header(std::ostream& out, const Options& o) { out << "# seed " << o.seed << '\n'; }

// Output goes to --out when given, else stdout.
template <typename Fn>
void emit(const Options& o, Fn&& write) {
    if (o.out.empty()) {
        write(std::cout);
        return;
    }
    std::ofstream f(o.out);
    if (!f) throw IoError("cannot write " + o.out);
    write(f);
}

FeatureSet parse_features(const std::string& spec, const Dataset& d) {
    if (spec == "beta") return expert_set(d.schema);
    const auto ranking = [&] { return rank(d); };
    if (spec.rfind("alpha-", 0) == 0) return top_n(ranking(), std::stoi(spec.substr(6)), d.schema.name);
    if (spec.rfind("eta-", 0) == 0) {
        return fuse(top_n(ranking(), std::stoi(spec.substr(4)), d.schema.name), expert_set(d.schema));
    }
    FeatureSet fs;
    fs.indices = parse_index_list(spec);
    fs.kind = SelectionKind::expert;
    fs.schema = d.schema.name;
    return fs;
}

Hyperparams parse_hyperparams(const Options& o) {
    Hyperparams h;
    h.variant = variant_from_string(o.classifier);
    if (o.max_depth) h.dt_max_depth = *o.max_depth;
    if (o.criterion) {
        if (*o.criterion == "gini") h.dt_criterion = Criterion::gini;
        else if (*o.criterion == "entropy") h.dt_criterion = Criterion::entropy;
        else throw HyperparamError("criterion must be gini or entropy");
    }
    if (o.knn_k) h.knn_k = *o.knn_k;
    if (o.nb_alpha) h.nb_alpha = *o.nb_alpha;
    if (o.kernel) {
        if (*o.kernel == "linear") h.svm_kernel = Kernel::linear;
        else if (*o.kernel == "rbf") h.svm_kernel = Kernel::rbf;
        else throw HyperparamError("kernel must be linear or rbf");
    }
    if (o.c) h.lr_c = h.svm_c = *o.c;
    if (o.gamma) h.svm_rbf_gamma = *o.gamma;
    h.standardize = o.standardize;
    h.validate();
    return h;
}

void print_report(std::ostream& out, const EvalReport& r) {
    out << eval_csv_header() << '\n' << eval_csv_row(r) << '\n';
}

int cmd_ingest(const Options& o) {
    const auto r = resolve_data(o, o.data.at(0));
    const auto raw = load_csv(r.path, r.schema);
    const auto cleaned = clean(raw);
    const auto d = encode(cleaned);
    const auto counts = d.class_counts();
    std::cerr << "# seed " << o.seed << "\n# " << d.name << ": " << raw.size() << " rows read, "
              << cleaned.dropped << " dropped, " << d.size() << " kept (" << counts[0]
              << " negative, " << counts[1] << " positive)\n";
    emit(o, [&](std::ostream& out) { write_csv(out, d); });
    return 0;
}

int cmd_rank(const Options& o) {
    const auto d = load_one(o);
    emit(o, [&](std::ostream& out) {
        header(out, o);
        out << "rank,attribute,name,s2_between,s2_within,f\n";
        int pos = 1;
        for (const auto& s : rank(d)) {
            out << pos++ << ',' << s.attribute << ',' << csv_escape(d.schema.attribute(s.attribute).name)
                << ',' << format_number(s.s2_between) << ',' << format_number(s.s2_within) << ','
                << format_number(s.f) << '\n';
        }
    });
    return 0;
}

int cmd_select(const Options& o) {
    const auto d = load_one(o);
    if (o.expert == (o.top > 0)) throw ArgumentError("give exactly one of --top N or --expert");
    const auto fs = o.expert ? expert_set(d.schema) : top_n(rank(d), o.top, d.schema.name);
    emit(o, [&](std::ostream& out) { out << join_indices(fs.indices) << '\n'; });
    return 0;
}

int cmd_fuse(const Options& o) {
    FeatureSet alpha, beta;
    alpha.indices = parse_index_list(o.alpha);
    alpha.kind = SelectionKind::anova;
    alpha.n = static_cast<int>(alpha.indices.size());
    beta.indices = parse_index_list(o.beta);
    beta.kind = SelectionKind::expert;
    emit(o, [&](std::ostream& out) { out << join_indices(fuse(alpha, beta).indices) << '\n'; });
    return 0;
}

int cmd_train(const Options& o) {
    const auto d = load_one(o);
    const auto fs = parse_features(o.features, d);
    const auto h = parse_hyperparams(o);
    const auto split = split_stratified(d, {o.train_fraction, o.seed, true});
    auto model = fit(project(split.train, fs), h);
    model.feature_set.kind = fs.kind;
    model.feature_set.n = fs.n;
    model.importance = rank(split.train);
    if (o.out.empty()) throw ArgumentError("--out is required for train");
    save_model(o.out, model);
    std::cout << "# seed " << o.seed << "\nmodel " << model_id(model) << " (" << to_string(model.variant)
              << ", features " << join_indices(model.feature_set.indices) << ", " << split.train.size()
              << " training rows) -> " << o.out << '\n';
    return 0;
}

int cmd_evaluate(const Options& o) {
    const auto d = load_one(o);
    const auto model = load_model(o.model, d.schema);
    FeatureSet fs;
    fs.indices = model.feature_set.indices;
    Dataset target;
    if (o.split == "test") {
        target = split_stratified(d, {o.train_fraction, o.seed, true}).test;
    } else if (o.split == "all") {
        target = d;
    } else {
        throw ArgumentError("--split must be test or all");
    }
    target = project(target, fs);
    const auto r = evaluate(model, target);
    emit(o, [&](std::ostream& out) {
        header(out, o);
        print_report(out, r);
    });
    if (!o.predictions_out.empty()) {
        std::ofstream out(o.predictions_out);
        if (!out) throw IoError("cannot write " + o.predictions_out);
        out << "row,truth,label,score\n";
        for (std::size_t i = 0; i < target.size(); ++i) {
            const auto p = predict(model, target.rows[i]);
            out << i << ',' << target.labels[i] << ',' << p.label << ',' << format_number(p.score) << '\n';
        }
    }
    if (!o.roc_out.empty()) {
        std::ofstream out(o.roc_out);
        if (!out) throw IoError("cannot write " + o.roc_out);
        write_roc_csv(out, r.curve);
    }
    return 0;
}

int cmd_cv(const Options& o) {
    const auto d = load_one(o);
    const auto fs = parse_features(o.features, d);
    const auto h = parse_hyperparams(o);
    FoldPlan plan;
    plan.k = o.k;
    plan.seed = o.seed;
    plan = make_folds(d, plan);
    const auto r = cross_validate(d, fs, h, plan);
    emit(o, [&](std::ostream& out) {
        header(out, o);
        out << "# " << d.name << ", " << to_string(h.variant) << ", features "
            << join_indices(fs.indices) << ", k " << o.k << '\n';
        print_report(out, r);
    });
    return 0;
}

int cmd_grid(const Options& o) {
    std::vector<Dataset> datasets;
    std::vector<std::string> wanted = o.data;
    if (wanted.size() == 1 && wanted.front() == "all") {
        wanted.clear();
        for (const auto& src : default_sources(data_dir(o))) {
            if (fs::exists(src.path)) {
                wanted.push_back(src.name);
            } else {
                std::cerr << "# skipping " << src.name << ": no data at " << src.path.string() << '\n';
            }
        }
    }
    for (const auto& w : wanted) {
        const auto r = resolve_data(o, w);
        auto d = load_dataset(r.path, r.schema);
        if (!fs::exists(w)) d.name = w;
        datasets.push_back(std::move(d));
    }
    if (datasets.empty()) throw ArgumentError("no datasets to run");

    GridConfig cfg;
    cfg.seed = o.seed;
    cfg.k = o.k;
    cfg.tune = !o.no_tune;
    cfg.holdout = o.holdout;
    cfg.workers = o.workers;
    if (!o.stamp.empty()) cfg.stamp = o.stamp;

    const auto grid = run_grid(datasets, cfg);
    const fs::path dir = o.out.empty() ? fs::path("grid-out") : fs::path(o.out);
    fs::create_directories(dir);
    auto write = [&](const fs::path& p, const std::string& text) {
        std::ofstream f(dir / p);
        if (!f) throw IoError("cannot write " + (dir / p).string());
        f << text;
    };
    write("grid.json", report(grid, "json"));
    write("grid.timings.json", timings_json(grid).dump(2) + "\n");
    write("tables.md", report(grid, "table"));
    write("grid.csv", report(grid, "csv"));
    write_roc_files(grid, dir / "roc");
    for (const auto& d : datasets) {
        try {
            const auto best = best_model(grid, datasets, d.name);
            save_model((dir / ("best_" + d.name + ".model.json")).string(), best.model);
            std::cout << "# best for " << d.name << ": " << best.key.family << " on " << best.key.tag
                      << " (" << format_number(grid.find(best.key)->score()) << ")\n";
        } catch (const ArgumentError& e) {
            std::cerr << "# no best model for " << d.name << ": " << e.what() << '\n';
        }
    }
    std::cout << report(grid, o.format);
    std::cerr << "# " << grid.cells.size() << " cells, " << grid.error_count() << " errors, "
              << format_number(grid.wall_seconds) << " s; outputs in " << dir.string() << '\n';
    return grid.error_count() == 0 ? 0 : 1;
}

int cmd_serve(const Options& o) {
    auto state = std::make_shared<const ServiceState>(
        load_service(o.model, o.schema.empty() ? std::nullopt : std::optional<std::string>(o.schema)));
    ServeOptions opts;
    opts.host = o.host;
    opts.port = o.port;
    if (!o.static_dir.empty()) opts.static_dir = o.static_dir;
    PredictionServer server(state, opts);
    const int port = server.bind();
    std::cout << "serving model " << state->model_id << " (" << state->schema.name << ") on http://"
              << o.host << ':' << port << std::endl;
    server.run();
    return 0;
}

int cmd_synth(const Options& o) {
    const auto d = synth_bhdc(o.n, o.seed);
    emit(o, [&](std::ostream& out) { write_csv(out, d); });
    const auto counts = d.class_counts();
    std::cerr << "# seed " << o.seed << ": " << d.size() << " rows (" << counts[1] << " positive, "
              << counts[0] << " negative)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cardiovascular disease prognosis toolkit"};
    app.require_subcommand(1);
    Options o;

    auto data_opts = [&](CLI::App* sub, bool multi = false) {
        auto* opt = sub->add_option("--data", o.data,
                                    multi ? "Dataset names or CSV paths, or 'all'"
                                          : "Dataset name (bhdc, cleveland, ...) or CSV path");
        opt->required();
        if (!multi) opt->expected(1);
        sub->add_option("--schema", o.schema, "Schema name or schema file (inferred for named datasets)");
        sub->add_option("--data-dir", o.data_dir, "Data directory (default $CARDIO_DATA_DIR, then ./data)");
    };
    auto seed_opt = [&](CLI::App* sub) { sub->add_option("--seed", o.seed, "Random seed")->capture_default_str(); };
    auto out_opt = [&](CLI::App* sub, const std::string& what) { sub->add_option("--out", o.out, what); };
    auto model_opts = [&](CLI::App* sub) {
        sub->add_option("--features", o.features, "beta, alpha-N, eta-N or an index list")->capture_default_str();
        sub->add_option("--classifier", o.classifier, "LR, DT, KNN, NB-categorical, NB-multinomial or SVM")
            ->capture_default_str();
        sub->add_option("--max-depth", o.max_depth, "DT maximum depth (3-6)");
        sub->add_option("--criterion", o.criterion, "DT criterion: gini or entropy");
        sub->add_option("--k-neighbors", o.knn_k, "KNN neighbour count (5-15)");
        sub->add_option("--nb-alpha", o.nb_alpha, "NB smoothing (> 0)");
        sub->add_option("--kernel", o.kernel, "SVM kernel: linear or rbf");
        sub->add_option("--c", o.c, "LR/SVM inverse regularisation strength");
        sub->add_option("--gamma", o.gamma, "RBF kernel width (default 1/d)");
        sub->add_flag("--standardize", o.standardize, "Z-score numeric columns");
    };

    auto* ingest = app.add_subcommand("ingest", "Load, clean and encode a dataset; write the canonical CSV");
    data_opts(ingest);
    seed_opt(ingest);
    out_opt(ingest, "Output CSV (default stdout)");

    auto* rank_cmd = app.add_subcommand("rank", "ANOVA F-score ranking as CSV");
    data_opts(rank_cmd);
    seed_opt(rank_cmd);
    out_opt(rank_cmd, "Output CSV (default stdout)");

    auto* select = app.add_subcommand("select", "Print a feature set as an index list");
    data_opts(select);
    seed_opt(select);
    select->add_option("--top", o.top, "Top-N attributes by F score");
    select->add_flag("--expert", o.expert, "Expert-recommended set");
    out_opt(select, "Output file (default stdout)");

    auto* fuse_cmd = app.add_subcommand("fuse", "Duplicate-free union of an ANOVA set and an expert set");
    fuse_cmd->add_option("--alpha", o.alpha, "Comma-separated ANOVA indices")->required();
    fuse_cmd->add_option("--beta", o.beta, "Comma-separated expert indices")->required();
    out_opt(fuse_cmd, "Output file (default stdout)");

    auto* train = app.add_subcommand("train", "Fit a classifier on the training split and save it");
    data_opts(train);
    seed_opt(train);
    model_opts(train);
    train->add_option("--train-fraction", o.train_fraction, "Training share of the split")->capture_default_str();
    out_opt(train, "Model file");

    auto* eval = app.add_subcommand("evaluate", "Score a saved model on the test split or all rows");
    data_opts(eval);
    seed_opt(eval);
    eval->add_option("--model", o.model, "Model file")->required();
    eval->add_option("--split", o.split, "test or all")->capture_default_str();
    eval->add_option("--train-fraction", o.train_fraction, "Training share used when the model was fit")
        ->capture_default_str();
    eval->add_option("--predictions", o.predictions_out, "Per-row predictions CSV");
    eval->add_option("--roc", o.roc_out, "ROC points CSV");
    out_opt(eval, "Report CSV (default stdout)");

    auto* cv = app.add_subcommand("cv", "K-fold cross-validation of one configuration");
    data_opts(cv);
    seed_opt(cv);
    model_opts(cv);
    cv->add_option("--k", o.k, "Fold count")->capture_default_str();
    out_opt(cv, "Report CSV (default stdout)");

    auto* grid = app.add_subcommand("grid", "Run the dataset x selection x classifier grid");
    data_opts(grid, true);
    seed_opt(grid);
    grid->add_option("--k", o.k, "Fold count")->capture_default_str();
    grid->add_option("--workers", o.workers, "Concurrent cells")->capture_default_str();
    grid->add_flag("--no-tune", o.no_tune, "Use default hyperparameters instead of the inner-CV search");
    grid->add_flag("--holdout", o.holdout, "Score cells on the 70/30 test split instead of CV");
    grid->add_option("--stamp", o.stamp, "Provenance string recorded in the grid file");
    grid->add_option("--format", o.format, "Report printed to stdout: table, csv or json")->capture_default_str();
    out_opt(grid, "Output directory (default grid-out)");

    auto* serve = app.add_subcommand("serve", "Serve a saved model over HTTP");
    serve->add_option("--model", o.model, "Model file")->required();
    serve->add_option("--schema", o.schema, "Schema name or file (default: the model's schema)");
    serve->add_option("--host", o.host, "Bind address")->capture_default_str();
    serve->add_option("--port", o.port, "Port (0 picks a free one)")->capture_default_str();
    serve->add_option("--static", o.static_dir, "Directory served at /");

    auto* synth = app.add_subcommand("synth", "Generate the synthetic BHDC-shaped dataset");
    seed_opt(synth);
    synth->add_option("--n", o.n, "Row count")->capture_default_str();
    out_opt(synth, "Output CSV (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*ingest) return cmd_ingest(o);
        if (*rank_cmd) return cmd_rank(o);
        if (*select) return cmd_select(o);
        if (*fuse_cmd) return cmd_fuse(o);
        if (*train) return cmd_train(o);
        if (*eval) return cmd_evaluate(o);
        if (*cv) return cmd_cv(o);
        if (*grid) return cmd_grid(o);
        if (*serve) return cmd_serve(o);
        if (*synth) return cmd_synth(o);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
