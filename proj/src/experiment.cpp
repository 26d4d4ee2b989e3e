#include "cardio/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include "cardio/error.hpp"
#include "cardio/rng.hpp"
#include "cardio/text.hpp"

namespace cardio {

using nlohmann::json;

void GridConfig::validate() const {
    if (k < 2) throw ArgumentError("k must be at least 2");
    if (workers < 1) throw ArgumentError("workers must be at least 1");
    if (families.empty()) throw ArgumentError("no classifier families configured");
}

double Cell::score() const {
    if (report.cv_mean) return *report.cv_mean;
    return 100.0 * report.m.accuracy;
}

const Cell* ExperimentGrid::find(const CellKey& key) const {
    for (const auto& c : cells) {
        if (c.key == key) return &c;
    }
    return nullptr;
}

std::size_t ExperimentGrid::error_count() const {
    return static_cast<std::size_t>(
        std::count_if(cells.begin(), cells.end(), [](const Cell& c) { return !c.ok; }));
}

std::vector<std::string> selection_tags(const Schema& schema, std::size_t attributes) {
    std::vector<std::string> tags{"beta"};
    const auto cap = std::min<std::size_t>(static_cast<std::size_t>(schema.alpha_cap), attributes);
    for (std::size_t n = 2; n <= cap; n += 2) tags.push_back("alpha-" + std::to_string(n));
    if (tags.size() > 1) tags.push_back("eta");
    return tags;
}

std::vector<Hyperparams> candidates(Variant family, bool tune) {
    std::vector<Hyperparams> out;
    Hyperparams base;
    base.variant = family;
    switch (family) {
        case Variant::lr:
            out.push_back(base);
            break;
        case Variant::dt:
            if (!tune) {
                out.push_back(base);
                break;
            }
            for (auto crit : {Criterion::gini, Criterion::entropy}) {
                for (int depth = 3; depth <= 6; ++depth) {
                    auto h = base;
                    h.dt_criterion = crit;
                    h.dt_max_depth = depth;
                    out.push_back(h);
                }
            }
            break;
        case Variant::knn:
            for (int k = 5; k <= (tune ? 15 : 5); k += 2) {
                auto h = base;
                h.knn_k = k;
                out.push_back(h);
            }
            break;
        case Variant::nb_categorical:
        case Variant::nb_multinomial:
            // Categorical first: it is the natural model for coded answers.
            // Multinomial stays available for tables with real-valued columns.
            for (auto v : {Variant::nb_categorical, Variant::nb_multinomial}) {
                for (int step = 0; step <= (tune ? 3 : 0); ++step) {
                    auto h = base;
                    h.variant = v;
                    h.nb_alpha = 0.5 + 0.1 * step;
                    out.push_back(h);
                }
            }
            break;
        case Variant::svm:
            out.push_back(base);
            if (tune) {
                auto h = base;
                h.svm_kernel = Kernel::rbf;
                out.push_back(h);
            }
            break;
    }
    return out;
}

Hyperparams select_hyperparams(const Dataset& train, Variant family, const GridConfig& config,
                               std::uint64_t seed) {
    const auto options = candidates(family, config.tune);
    const auto counts = train.class_counts();
    const int inner_k = static_cast<int>(std::min<std::size_t>(
        static_cast<std::size_t>(config.k), std::min(counts[0], counts[1])));

    std::optional<Hyperparams> best;
    double best_score = -1.0;
    std::string last_error = "no candidates";
    for (const auto& h : options) {
        try {
            double score = 0.0;
            if (options.size() > 1 && inner_k >= 2) {
                FoldPlan plan;
                plan.k = inner_k;
                plan.seed = seed;
                plan = make_folds(train, plan);
                score = *cross_validate(train, learner_for(h), plan).cv_mean;
            } else {
                fit(train, h);
            }
            if (!best || score > best_score) {
                best = h;
                best_score = score;
            }
        } catch (const Error& e) {
            last_error = e.what();
        }
    }
    if (!best) {
        throw ArgumentError(std::string("no ") + std::string(family_name(family)) +
                            " configuration fits: " + last_error);
    }
    return *best;
}

namespace {

struct Job {
    std::size_t dataset;
    std::string tag;
    Variant family;
    FeatureSet features;
};

std::string family_key(Variant v) { return std::string(family_name(v)); }

Cell run_cell(const Dataset& d, const Job& job, const GridConfig& config) {
    Cell cell;
    cell.key = {d.name, job.tag, family_key(job.family)};
    cell.features = job.features.indices;
    try {
        const auto projected = project(d, job.features);
        if (config.holdout) {
            const auto split = split_stratified(projected, {0.70, config.seed, true});
            const auto h = select_hyperparams(split.train, job.family, config,
                                              derive_seed(config.seed, 1));
            cell.chosen.push_back(h);
            const auto model = fit(split.train, h);
            cell.report = evaluate(model, split.test);
        } else {
            FoldPlan plan;
            plan.k = config.k;
            plan.seed = config.seed;
            plan = make_folds(projected, plan);
            std::uint64_t fold = 0;
            Learner learner = [&](const Dataset& train) -> Predictor {
                const auto h = select_hyperparams(train, job.family, config,
                                                  derive_seed(config.seed, ++fold));
                cell.chosen.push_back(h);
                auto model = std::make_shared<const TrainedModel>(fit(train, h));
                return [model](std::span<const double> x) { return predict(*model, x); };
            };
            cell.report = cross_validate(projected, learner, plan);
        }
        cell.ok = true;
    } catch (const std::exception& e) {
        cell.ok = false;
        cell.error = e.what();
        cell.chosen.clear();
    }
    return cell;
}

void run_jobs(const std::vector<Dataset>& datasets, const std::vector<Job>& jobs,
              const GridConfig& config, std::vector<Cell>& out) {
    out.assign(jobs.size(), {});
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            out[i] = run_cell(datasets[jobs[i].dataset], jobs[i], config);
        }
    };
    const auto n = std::min<std::size_t>(static_cast<std::size_t>(config.workers), jobs.size());
    if (n <= 1) {
        worker();
        return;
    }
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

int tag_rank(const std::string& tag) {
    if (tag == "beta") return 0;
    if (tag == "eta") return 1000;
    return std::stoi(tag.substr(tag.find('-') + 1));
}

FeatureSet feature_set_for(const std::string& tag, const DatasetSummary& summary,
                           const Schema& schema) {
    if (tag == "beta") return expert_set(schema);
    return top_n(summary.ranking, tag_rank(tag), schema.name);
}

json number(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

}  // namespace

ExperimentGrid run_grid(const std::vector<Dataset>& datasets, const GridConfig& config) {
    config.validate();
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentGrid grid;
    grid.config = config;

    std::set<std::string> names;
    for (const auto& d : datasets) {
        if (!names.insert(d.name).second) throw ArgumentError("duplicate dataset name " + d.name);
        DatasetSummary s;
        s.name = d.name;
        s.schema = d.schema.name;
        s.fingerprint = d.schema.fingerprint();
        s.rows = d.size();
        s.positives = d.class_counts()[1];
        if (config.holdout) {
            s.ranking = rank(split_stratified(d, {0.70, config.seed, true}).train);
        } else {
            s.ranking = rank(d);
        }
        grid.datasets.push_back(std::move(s));
    }

    // Phase one: beta and the alpha sweep.
    std::vector<Job> jobs;
    for (std::size_t di = 0; di < datasets.size(); ++di) {
        const auto& d = datasets[di];
        for (const auto& tag : selection_tags(d.schema, grid.datasets[di].ranking.size())) {
            if (tag == "eta") continue;
            const auto fs = feature_set_for(tag, grid.datasets[di], d.schema);
            for (auto family : config.families) jobs.push_back({di, tag, family, fs});
        }
    }
    std::vector<Cell> first;
    run_jobs(datasets, jobs, config, first);

    // Phase two: eta = fuse(best alpha, beta) per (dataset, family).
    std::vector<Job> eta_jobs;
    for (std::size_t di = 0; di < datasets.size(); ++di) {
        const auto& d = datasets[di];
        for (auto family : config.families) {
            const Cell* best = nullptr;
            for (const auto& c : first) {
                if (c.key.dataset != d.name || c.key.family != family_key(family)) continue;
                if (c.key.tag == "beta" || !c.ok) continue;
                if (!best || c.score() > best->score()) best = &c;
            }
            if (!best) continue;
            grid.eta_source[{d.name, family_key(family)}] = best->key.tag;
            const auto alpha = feature_set_for(best->key.tag, grid.datasets[di], d.schema);
            eta_jobs.push_back({di, "eta", family, fuse(alpha, expert_set(d.schema))});
        }
    }
    std::vector<Cell> second;
    run_jobs(datasets, eta_jobs, config, second);

    grid.cells = std::move(first);
    grid.cells.insert(grid.cells.end(), second.begin(), second.end());
    // Families whose whole alpha sweep failed still get an explicit eta record.
    for (std::size_t di = 0; di < datasets.size(); ++di) {
        const auto& d = datasets[di];
        const auto tags = selection_tags(d.schema, grid.datasets[di].ranking.size());
        if (tags.back() != "eta") continue;
        for (auto family : config.families) {
            CellKey key{d.name, "eta", family_key(family)};
            if (grid.find(key)) continue;
            Cell c;
            c.key = key;
            c.error = "no successful alpha cell to fuse";
            grid.cells.push_back(std::move(c));
        }
    }

    std::map<std::string, std::size_t> dataset_pos;
    for (std::size_t i = 0; i < datasets.size(); ++i) dataset_pos[datasets[i].name] = i;
    std::stable_sort(grid.cells.begin(), grid.cells.end(), [&](const Cell& a, const Cell& b) {
        const auto ka = std::make_tuple(dataset_pos[a.key.dataset], tag_rank(a.key.tag),
                                        family_order(variant_from_string(a.key.family)));
        const auto kb = std::make_tuple(dataset_pos[b.key.dataset], tag_rank(b.key.tag),
                                        family_order(variant_from_string(b.key.family)));
        return ka < kb;
    });
    grid.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return grid;
}

json to_json(const ExperimentGrid& grid) {
    const auto& cfg = grid.config;
    json families = json::array();
    for (auto f : cfg.families) families.push_back(family_name(f));
    json config{{"seed", cfg.seed},
                {"k", cfg.k},
                {"tune", cfg.tune},
                {"holdout", cfg.holdout},
                {"families", families}};
    json datasets = json::array();
    for (const auto& d : grid.datasets) {
        json ranking = json::array();
        for (const auto& s : d.ranking) ranking.push_back({{"attribute", s.attribute}, {"f", number(s.f)}});
        datasets.push_back({{"name", d.name},
                            {"schema", d.schema},
                            {"fingerprint", d.fingerprint},
                            {"rows", d.rows},
                            {"positives", d.positives},
                            {"ranking", ranking}});
    }
    json eta = json::array();
    for (const auto& [key, tag] : grid.eta_source) {
        eta.push_back({{"dataset", key.first}, {"family", key.second}, {"alpha", tag}});
    }
    json cells = json::array();
    for (const auto& c : grid.cells) {
        json cell{{"dataset", c.key.dataset},
                  {"tag", c.key.tag},
                  {"family", c.key.family},
                  {"features", c.features},
                  {"status", c.ok ? "ok" : "error"}};
        if (c.ok) {
            cell["report"] = to_json(c.report, false);
            json chosen = json::array();
            for (const auto& h : c.chosen) chosen.push_back(to_json(h));
            cell["hyperparams"] = chosen;
            if (c.key.tag == "eta") {
                json pts = json::array();
                for (const auto& p : c.report.curve.points) pts.push_back({p.fpr, p.tpr});
                cell["roc"] = pts;
            }
        } else {
            cell["error"] = c.error;
        }
        cells.push_back(std::move(cell));
    }
    json doc{{"format", "cardio-grid"},
             {"version", 1},
             {"config", config},
             {"datasets", datasets},
             {"eta_source", eta},
             {"cells", cells}};
    if (cfg.stamp) doc["stamp"] = *cfg.stamp;
    return doc;
}

json timings_json(const ExperimentGrid& grid) {
    json cells = json::array();
    for (const auto& c : grid.cells) {
        if (!c.ok) continue;
        cells.push_back({{"dataset", c.key.dataset},
                         {"tag", c.key.tag},
                         {"family", c.key.family},
                         {"per_sample_time", c.report.per_sample_time}});
    }
    return {{"format", "cardio-grid-timings"},
            {"version", 1},
            {"wall_seconds", grid.wall_seconds},
            {"cells", cells}};
}

namespace {

std::string fixed(double v, int digits) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

std::string table_report(const ExperimentGrid& grid) {
    std::ostringstream os;
    os << "# accuracy (%) mean±std over folds; seed " << grid.config.seed << ", k "
       << grid.config.k << (grid.config.holdout ? ", holdout" : "") << "; * marks the best cell per row\n";
    for (const auto& d : grid.datasets) {
        std::vector<std::string> tags;
        std::vector<std::string> families;
        for (const auto& c : grid.cells) {
            if (c.key.dataset != d.name) continue;
            if (std::find(tags.begin(), tags.end(), c.key.tag) == tags.end()) tags.push_back(c.key.tag);
            if (std::find(families.begin(), families.end(), c.key.family) == families.end()) {
                families.push_back(c.key.family);
            }
        }
        std::sort(families.begin(), families.end(), [](const std::string& a, const std::string& b) {
            return family_order(variant_from_string(a)) < family_order(variant_from_string(b));
        });
        os << "\n## " << d.name << " (" << d.rows << " rows)\n\n| classifier |";
        for (const auto& t : tags) os << ' ' << t << " |";
        os << "\n|---|";
        for (std::size_t i = 0; i < tags.size(); ++i) os << "---|";
        os << '\n';
        for (const auto& f : families) {
            const Cell* best = nullptr;
            for (const auto& t : tags) {
                const auto* c = grid.find({d.name, t, f});
                if (c && c->ok && (!best || c->score() > best->score())) best = c;
            }
            os << "| " << f << " |";
            for (const auto& t : tags) {
                const auto* c = grid.find({d.name, t, f});
                os << ' ';
                if (!c) {
                    os << '-';
                } else if (!c->ok) {
                    os << "error";
                } else {
                    os << fixed(c->score(), 1);
                    if (c->report.cv_std) os << "±" << fixed(*c->report.cv_std, 1);
                    if (c == best) os << " *";
                }
                os << " |";
            }
            os << '\n';
        }
    }
    return os.str();
}

std::string csv_report(const ExperimentGrid& grid) {
    std::ostringstream os;
    os << "# seed " << grid.config.seed << ", k " << grid.config.k << '\n';
    os << "dataset,tag,classifier,metric,value\n";
    for (const auto& c : grid.cells) {
        const auto& r = c.report;
        const std::pair<const char*, std::optional<double>> rows[kReportMetrics] = {
            {"cv_mean", r.cv_mean},
            {"cv_std", r.cv_std},
            {"accuracy", r.m.accuracy},
            {"precision", r.m.precision},
            {"recall", r.m.recall},
            {"specificity_fig12", r.m.specificity_fig12},
            {"auc", r.auc}};
        for (const auto& [metric, value] : rows) {
            os << csv_escape(c.key.dataset) << ',' << c.key.tag << ',' << c.key.family << ',' << metric
               << ',';
            if (c.ok && value) os << format_number(*value);
            os << '\n';
        }
    }
    return os.str();
}

}  // namespace

std::string report(const ExperimentGrid& grid, const std::string& format) {
    if (format == "table") return table_report(grid);
    if (format == "csv") return csv_report(grid);
    if (format == "json") return to_json(grid).dump(2) + "\n";
    throw ArgumentError("unknown report format '" + format + "' (expected table, csv or json)");
}

std::vector<std::filesystem::path> write_roc_files(const ExperimentGrid& grid,
                                                   const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    for (const auto& c : grid.cells) {
        if (c.key.tag != "eta" || !c.ok || c.report.curve.points.empty()) continue;
        const auto path = dir / (c.key.dataset + "_eta_" + c.key.family + ".csv");
        std::ofstream out(path);
        if (!out) throw IoError("cannot write " + path.string());
        write_roc_csv(out, c.report.curve);
        written.push_back(path);
    }
    return written;
}

CellKey best_cell(const ExperimentGrid& grid, const std::optional<std::string>& dataset) {
    const Cell* best = nullptr;
    for (const auto& c : grid.cells) {
        if (!c.ok || (dataset && c.key.dataset != *dataset)) continue;
        if (!best) {
            best = &c;
            continue;
        }
        const double s = c.score(), b = best->score();
        if (s != b) {
            if (s > b) best = &c;
            continue;
        }
        const double t = c.report.per_sample_time, bt = best->report.per_sample_time;
        if (t != bt) {
            if (t < bt) best = &c;
            continue;
        }
        if (family_order(variant_from_string(c.key.family)) <
            family_order(variant_from_string(best->key.family))) {
            best = &c;
        }
    }
    if (!best) throw ArgumentError("best_model: grid has no successful cells");
    return best->key;
}

BestModel best_model(const ExperimentGrid& grid, const std::vector<Dataset>& datasets,
                     const std::optional<std::string>& dataset) {
    const auto key = best_cell(grid, dataset);
    const auto* cell = grid.find(key);
    const auto it = std::find_if(datasets.begin(), datasets.end(),
                                 [&](const Dataset& d) { return d.name == key.dataset; });
    if (it == datasets.end()) throw ArgumentError("best_model: dataset " + key.dataset + " not supplied");

    const auto split = split_stratified(*it, {0.70, grid.config.seed, true});
    FeatureSet fs;
    fs.indices = cell->features;
    fs.schema = it->schema.name;
    fs.kind = key.tag == "beta" ? SelectionKind::expert
              : key.tag == "eta" ? SelectionKind::fused
                                 : SelectionKind::anova;
    if (fs.kind == SelectionKind::anova) fs.n = tag_rank(key.tag);
    const auto train = project(split.train, fs);
    const auto family = variant_from_string(key.family);
    const auto h = select_hyperparams(train, family, grid.config, derive_seed(grid.config.seed, 1));
    BestModel out{key, fit(train, h)};
    out.model.feature_set.kind = fs.kind;
    out.model.feature_set.n = fs.n;
    out.model.importance = rank(split.train);
    return out;
}

std::vector<DatasetSource> default_sources(const std::filesystem::path& data_dir) {
    return {{"bhdc", "bhdc", data_dir / "bhdc" / "bhdc_synthetic.csv"},
            {"cleveland", "cleveland", data_dir / "uci" / "cleveland.csv"},
            {"hungarian", "hungarian", data_dir / "uci" / "hungarian.csv"},
            {"switzerland", "switzerland", data_dir / "uci" / "switzerland.csv"},
            {"long-beach-va", "long-beach-va", data_dir / "uci" / "long-beach-va.csv"}};
}

}  // namespace cardio
