#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numeric>

#include "cardio/classifiers.hpp"
#include "cardio/error.hpp"
#include "cardio/rng.hpp"
#include "oracles.hpp"

using namespace cardio;

namespace {

Hyperparams params(Variant v) {
    Hyperparams h;
    h.variant = v;
    return h;
}

const Variant kAll[] = {Variant::lr, Variant::dt, Variant::knn, Variant::nb_multinomial,
                        Variant::nb_categorical, Variant::svm};

double weighted_impurity(const TreePayload& t, const std::vector<int>& children, Criterion crit) {
    double total = 0.0, sum = 0.0;
    for (int c : children) {
        const auto& n = t.nodes[static_cast<std::size_t>(c)];
        const double w = n.counts[0] + n.counts[1];
        total += w;
        sum += w * (crit == Criterion::gini ? gini(n.counts) : entropy(n.counts));
    }
    return sum / total;
}

}  // namespace

TEST_CASE("sigmoid") {
    CHECK(sigmoid(0.0) == 0.5);
    CHECK(sigmoid(1000.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sigmoid(-1000.0) >= 0.0);
    CHECK(std::isfinite(sigmoid(-1000.0)));
    CHECK(sigmoid(std::log(3.0)) == doctest::Approx(0.75).epsilon(1e-15));
    double prev = 0.0;
    for (double z = -50.0; z <= 50.0; z += 0.25) {
        CHECK(sigmoid(z) >= prev);
        prev = sigmoid(z);
    }
}

TEST_CASE("gini, entropy and euclidean") {
    CHECK(gini(std::array{10, 0}) == 0.0);
    CHECK(gini(std::array{5, 5}) == 0.5);
    CHECK(gini(std::array{3, 1}) == 0.375);
    CHECK_THROWS_AS(gini(std::array{0, 0}), ArgumentError);
    CHECK(entropy(std::array{5, 5}) == 1.0);
    CHECK(entropy(std::array{4, 0}) == 0.0);

    const std::vector<double> o{0, 0}, p{3, 4};
    CHECK(euclidean(o, o) == 0.0);
    CHECK(euclidean(o, p) == 5.0);
    CHECK(euclidean(std::vector<double>{1, 2, 3}, std::vector<double>{4, 6, 3}) == 5.0);
    CHECK_THROWS_AS(euclidean(o, std::vector<double>{1, 2, 3}), ArgumentError);

    Rng rng(1);
    for (int i = 0; i < 200; ++i) {
        std::vector<double> a(4), b(4), c(4);
        for (int j = 0; j < 4; ++j) {
            a[static_cast<std::size_t>(j)] = rng.uniform();
            b[static_cast<std::size_t>(j)] = rng.uniform();
            c[static_cast<std::size_t>(j)] = rng.uniform();
        }
        CHECK(euclidean(a, b) == euclidean(b, a));
        CHECK(euclidean(a, c) <= euclidean(a, b) + euclidean(b, c) + 1e-12);
    }
}

TEST_CASE("hyperparameter ranges") {
    auto dt = params(Variant::dt);
    dt.dt_max_depth = 0;
    CHECK_THROWS_AS(dt.validate(), HyperparamError);
    dt.dt_max_depth = 7;
    CHECK_THROWS_AS(dt.validate(), HyperparamError);
    auto knn = params(Variant::knn);
    knn.knn_k = 4;
    CHECK_THROWS_AS(knn.validate(), HyperparamError);
    auto svm = params(Variant::svm);
    svm.svm_c = 0.0;
    CHECK_THROWS_AS(svm.validate(), HyperparamError);
    svm.svm_c = 1.0;
    svm.svm_rbf_gamma = -1.0;
    CHECK_THROWS_AS(svm.validate(), HyperparamError);
    auto nb = params(Variant::nb_categorical);
    nb.nb_alpha = 0.0;
    CHECK_THROWS_AS(nb.validate(), HyperparamError);

    const auto d = oracle::make_dataset({{0}, {1}, {0}, {1}, {0}, {1}}, {0, 1, 0, 1, 0, 1});
    dt.dt_max_depth = 0;
    CHECK_THROWS_AS(fit(d, dt), HyperparamError);
    svm.svm_rbf_gamma.reset();
    svm.svm_c = -1.0;
    CHECK_THROWS_AS(fit(d, svm), HyperparamError);
}

TEST_CASE("variant names round trip") {
    for (auto v : kAll) CHECK(variant_from_string(to_string(v)) == v);
    CHECK(variant_from_string("NB") == Variant::nb_categorical);
    CHECK_THROWS_AS(variant_from_string("RF"), ArgumentError);
    CHECK(family_name(Variant::nb_multinomial) == "NB");
}

TEST_CASE("logistic regression") {
    SUBCASE("symmetric one-dimensional data") {
        const auto d = oracle::make_dataset({{-1}, {-1}, {1}, {1}}, {0, 0, 1, 1});
        const auto m = fit_lr(d, params(Variant::lr));
        CHECK(predict(m, std::vector<double>{0.0}).score == doctest::Approx(0.5).epsilon(1e-9));
        CHECK(predict(m, std::vector<double>{1.0}).label == 1);
        CHECK(predict(m, std::vector<double>{-1.0}).label == 0);
    }
    SUBCASE("constant feature predicts the prior") {
        const auto d = oracle::make_dataset({{2}, {2}, {2}, {2}}, {0, 1, 1, 1});
        const auto m = fit_lr(d, params(Variant::lr));
        CHECK(predict(m, std::vector<double>{2.0}).score == doctest::Approx(0.75).epsilon(1e-6));
    }
    SUBCASE("perfect separation stays bounded") {
        const auto d = oracle::make_dataset({{-3}, {-2}, {2}, {3}}, {0, 0, 1, 1});
        const auto m = fit_lr(d, params(Variant::lr));
        const auto& p = std::get<LinearPayload>(m.payload);
        CHECK(std::isfinite(p.weights[0]));
        CHECK(p.iterations <= 100);
    }
    SUBCASE("zero weights give the tie label") {
        TrainedModel m;
        m.variant = Variant::lr;
        m.feature_set.indices = {1, 2};
        m.payload = LinearPayload{{0.0, 0.0}, 0.0, 0};
        const auto p = predict(m, std::vector<double>{3.0, -1.0});
        CHECK(p.label == 0);
        CHECK(p.score == 0.5);
    }
    SUBCASE("gradient matches finite differences") {
        Rng rng(17);
        for (int trial = 0; trial < 50; ++trial) {
            const auto d = oracle::random_dataset(rng, 5 + rng.below(46), 1 + rng.below(8), false);
            std::vector<double> at(d.arity() + 1);
            for (auto& v : at) v = rng.uniform() * 2.0 - 1.0;
            const double c = 0.5 + rng.uniform();
            const auto g = lr_gradient(d, at, c);
            const auto num = oracle::numeric_gradient(
                [&](const std::vector<double>& w) { return lr_objective(d, w, c); }, at, 1e-5);
            for (std::size_t i = 0; i < g.size(); ++i) {
                CHECK(std::abs(g[i] - num[i]) <= 1e-6 * std::max(1.0, std::abs(num[i])));
            }
        }
    }
    SUBCASE("converged gradient is small") {
        Rng rng(4);
        const auto d = oracle::random_dataset(rng, 60, 3, false);
        const auto m = fit_lr(d, params(Variant::lr));
        const auto& p = std::get<LinearPayload>(m.payload);
        std::vector<double> at = p.weights;
        at.push_back(p.bias);
        for (double v : lr_gradient(d, at, 1.0)) CHECK(std::abs(v) < 1e-6);
    }
}

TEST_CASE("decision tree") {
    SUBCASE("one binary attribute separates") {
        const auto d = oracle::make_dataset({{0, 3}, {0, 1}, {1, 2}, {1, 0}}, {0, 0, 1, 1});
        const auto m = fit_dt(d, params(Variant::dt));
        CHECK(std::get<TreePayload>(m.payload).depth() == 1);
        for (std::size_t i = 0; i < d.size(); ++i) CHECK(predict(m, d.rows[i]).label == d.labels[i]);
    }
    SUBCASE("xor at depth 2 and beyond") {
        const auto d = oracle::make_dataset({{0, 0}, {0, 1}, {1, 0}, {1, 1}}, {0, 1, 1, 0});
        for (int depth = 3; depth <= 6; ++depth) {
            for (auto crit : {Criterion::gini, Criterion::entropy}) {
                auto h = params(Variant::dt);
                h.dt_max_depth = depth;
                h.dt_criterion = crit;
                const auto m = fit_dt(d, h);
                for (std::size_t i = 0; i < d.size(); ++i) {
                    CHECK(predict(m, d.rows[i]).label == d.labels[i]);
                }
            }
        }
    }
    SUBCASE("categorical split is multiway") {
        const auto d = synth_bhdc(200, 2);
        const auto m = fit_dt(project(d, FeatureSet{{9}, SelectionKind::expert, 0, "bhdc"}),
                              params(Variant::dt));
        const auto& root = std::get<TreePayload>(m.payload).nodes.front();
        CHECK(root.categorical);
        CHECK(root.branches.size() == 4);
    }
    SUBCASE("depth bound and impurity decrease on random data") {
        Rng rng(8);
        for (int trial = 0; trial < 40; ++trial) {
            const auto d = oracle::random_dataset(rng, 20 + rng.below(80), 1 + rng.below(5), trial % 2);
            auto h = params(Variant::dt);
            h.dt_max_depth = 3 + static_cast<int>(rng.below(4));
            h.dt_criterion = trial % 3 == 0 ? Criterion::entropy : Criterion::gini;
            const auto m = fit_dt(d, h);
            const auto& t = std::get<TreePayload>(m.payload);
            CHECK(t.depth() <= h.dt_max_depth);
            for (const auto& n : t.nodes) {
                if (n.leaf()) continue;
                std::vector<int> kids;
                if (n.categorical) {
                    for (const auto& [code, child] : n.branches) kids.push_back(child);
                } else {
                    kids = {n.left, n.right};
                }
                const double parent = h.dt_criterion == Criterion::gini ? gini(n.counts) : entropy(n.counts);
                CHECK(weighted_impurity(t, kids, h.dt_criterion) <= parent + 1e-12);
            }
        }
    }
    SUBCASE("leaf score is the positive ratio") {
        const auto d = oracle::make_dataset({{0}, {0}, {0}, {0}}, {0, 1, 1, 1});
        const auto m = fit_dt(d, params(Variant::dt));
        const auto p = predict(m, std::vector<double>{0.0});
        CHECK(p.score == 0.75);
        CHECK(p.label == 1);
    }
}

TEST_CASE("k nearest neighbours") {
    SUBCASE("duplicate training rows") {
        const auto d = oracle::make_dataset({{1, 1}, {1, 1}, {1, 1}, {1, 1}, {1, 1}, {5, 5}, {6, 6}},
                                            {1, 1, 1, 1, 1, 0, 0});
        const auto m = fit_knn(d, params(Variant::knn));
        CHECK(predict(m, std::vector<double>{1.0, 1.0}).label == 1);
    }
    SUBCASE("k equal to training size votes globally") {
        const auto d = oracle::make_dataset({{0}, {1}, {2}, {3}, {4}}, {1, 1, 1, 0, 0});
        const auto m = fit_knn(d, params(Variant::knn));
        CHECK(predict(m, std::vector<double>{100.0}).label == 1);
        CHECK(predict(m, std::vector<double>{100.0}).score == 0.6);
    }
    SUBCASE("k larger than training size") {
        const auto d = oracle::make_dataset({{0}, {1}, {2}, {3}}, {1, 1, 0, 0});
        CHECK_THROWS_AS(fit_knn(d, params(Variant::knn)), ArgumentError);
    }
    SUBCASE("even k tie goes to the nearer neighbours") {
        auto h = params(Variant::knn);
        h.knn_k = 6;
        const auto d = oracle::make_dataset({{1}, {2}, {3}, {4}, {5}, {6}, {50}}, {0, 1, 1, 0, 1, 0, 1});
        // Six nearest to 0: 1..6 -> three of each; nearest five lean positive.
        const auto p = predict(fit_knn(d, h), std::vector<double>{0.0});
        CHECK(p.label == 1);
        CHECK(p.score == 0.5);
    }
    SUBCASE("matches the full-sort oracle") {
        Rng rng(23);
        const auto d = oracle::random_dataset(rng, 40, 3, true);
        for (int k = 5; k <= 15; ++k) {
            auto h = params(Variant::knn);
            h.knn_k = k;
            const auto m = fit_knn(d, h);
            for (int q = 0; q < 30; ++q) {
                std::vector<double> x(3);
                for (auto& v : x) v = static_cast<double>(rng.below(5));
                CHECK(predict(m, x).label == oracle::knn_label(d.rows, d.labels, x, k));
            }
        }
    }
}

TEST_CASE("naive Bayes") {
    SUBCASE("hand posterior") {
        const auto d = oracle::make_dataset({{0}, {1}}, {0, 1});
        auto h = params(Variant::nb_categorical);
        h.nb_alpha = 0.5;
        const auto m = fit_nb(d, h);
        const auto p = predict(m, std::vector<double>{0.0});
        CHECK(p.label == 0);
        CHECK(std::abs(p.score - 0.25) <= 1e-12);
        CHECK(std::abs(predict(m, std::vector<double>{1.0}).score - 0.75) <= 1e-12);
    }
    SUBCASE("heavy smoothing approaches the prior") {
        const auto d = oracle::make_dataset({{0}, {1}, {1}, {2}}, {0, 1, 1, 1});
        for (auto v : {Variant::nb_categorical, Variant::nb_multinomial}) {
            auto h = params(v);
            h.nb_alpha = 1e6;
            const auto m = fit_nb(d, h);
            for (double x : {0.0, 1.0, 2.0}) {
                CHECK(predict(m, std::vector<double>{x}).score == doctest::Approx(0.75).epsilon(1e-5));
            }
        }
    }
    SUBCASE("symmetric model scores one half") {
        const auto d = oracle::make_dataset({{0}, {1}, {0}, {1}}, {0, 0, 1, 1});
        const auto m = fit_nb(d, params(Variant::nb_categorical));
        CHECK(predict(m, std::vector<double>{0.0}).score == doctest::Approx(0.5).epsilon(1e-15));
    }
    SUBCASE("likelihood tables are normalised") {
        const auto d = synth_bhdc(300, 6);
        const auto m = fit_nb(d, params(Variant::nb_categorical));
        const auto& p = std::get<NbPayload>(m.payload);
        for (int c = 0; c < 2; ++c) {
            CHECK(std::exp(p.log_prior[0]) + std::exp(p.log_prior[1]) == doctest::Approx(1.0).epsilon(1e-12));
            for (std::size_t j = 0; j < p.codes.size(); ++j) {
                double sum = 0.0;
                for (double l : p.log_likelihood[static_cast<std::size_t>(c)][j]) sum += std::exp(l);
                CHECK(std::abs(sum - 1.0) <= 1e-9);
                // Schema-declared codes are all part of the table.
                CHECK(p.codes[j].size() == d.column_schema(j).categories.size());
            }
        }
        const auto mm = fit_nb(d, params(Variant::nb_multinomial));
        const auto& q = std::get<NbPayload>(mm.payload);
        for (int c = 0; c < 2; ++c) {
            double sum = 0.0;
            for (double l : q.log_theta[static_cast<std::size_t>(c)]) sum += std::exp(l);
            CHECK(std::abs(sum - 1.0) <= 1e-9);
        }
    }
    SUBCASE("unseen code and input errors") {
        const auto d = oracle::make_dataset({{0}, {1}}, {0, 1});
        const auto m = fit_nb(d, params(Variant::nb_categorical));
        const auto p = predict(m, std::vector<double>{7.0});
        CHECK(p.score == doctest::Approx(0.5));
        const auto neg = oracle::make_dataset({{-1}, {1}}, {0, 1});
        CHECK_THROWS_AS(fit_nb(neg, params(Variant::nb_multinomial)), ArgumentError);
        const auto frac = oracle::make_dataset({{0.5}, {1}}, {0, 1});
        CHECK_THROWS_AS(fit_nb(frac, params(Variant::nb_categorical)), ArgumentError);
    }
}

TEST_CASE("support vector machine") {
    SUBCASE("separable blobs") {
        Rng rng(31);
        const auto d = oracle::blobs(rng, 60);
        for (auto k : {Kernel::linear, Kernel::rbf}) {
            auto h = params(Variant::svm);
            h.svm_kernel = k;
            const auto m = fit_svm(d, h);
            for (std::size_t i = 0; i < d.size(); ++i) {
                CHECK(predict(m, d.rows[i]).label == d.labels[i]);
                CHECK((svm_decision(m, d.rows[i]) > 0) == (d.rows[i][0] > 0));
            }
        }
    }
    SUBCASE("scaling inputs keeps training labels") {
        Rng rng(32);
        auto d = oracle::random_dataset(rng, 40, 3, false);
        const auto m1 = fit_svm(d, params(Variant::svm));
        std::vector<int> before;
        for (const auto& r : d.rows) before.push_back(predict(m1, r).label);
        for (auto& r : d.rows) {
            for (auto& v : r) v *= 2.0;
        }
        const auto m2 = fit_svm(d, params(Variant::svm));
        int same = 0;
        for (std::size_t i = 0; i < d.size(); ++i) same += predict(m2, d.rows[i]).label == before[i];
        // Regularisation shifts with scale, so only near-boundary points may move.
        CHECK(same >= static_cast<int>(d.size()) - 2);
    }
    SUBCASE("symmetric duplicated points") {
        const auto d = oracle::make_dataset({{-1}, {-1}, {1}, {1}}, {0, 0, 1, 1});
        const auto m = fit_svm(d, params(Variant::svm));
        CHECK(std::abs(svm_decision(m, std::vector<double>{0.0})) <= 1e-6);
    }
    SUBCASE("objective matches the descent oracle") {
        Rng rng(33);
        for (int trial = 0; trial < 20; ++trial) {
            const auto d = oracle::random_dataset(rng, 20, 1 + rng.below(4), false);
            const auto m = fit_svm(d, params(Variant::svm));
            const auto& p = std::get<SvmPayload>(m.payload);
            auto theta = p.weights;
            theta.push_back(p.bias);
            const double ours = svm_objective(d, theta, 1.0);
            const double ref = svm_objective(d, oracle::svm_descent(d.rows, d.labels, 1.0, 20000), 1.0);
            CHECK(ours == doctest::Approx(p.objective).epsilon(1e-12));
            CHECK(std::abs(ours - ref) <= 1e-6 * std::max(1.0, ref));
        }
    }
}

TEST_CASE("uniform predict contract") {
    Rng rng(40);
    const auto d = oracle::random_dataset(rng, 80, 4, true);
    for (auto v : kAll) {
        CAPTURE(to_string(v));
        const auto m = fit(d, params(v));
        const auto again = fit(d, params(v));
        CHECK(to_json(m) == to_json(again));
        for (int i = 0; i < 10000; ++i) {
            std::vector<double> x(4);
            for (auto& e : x) e = static_cast<double>(rng.below(5));
            const auto p = predict(m, x);
            CHECK((p.score >= 0.0 && p.score <= 1.0));
            CHECK((p.label == 0 || p.label == 1));
        }
        CHECK_THROWS_AS(predict(m, std::vector<double>{1.0}), ArgumentError);
        // Self-consistency: a row labelled correctly by score also by label.
        for (std::size_t i = 0; i < d.size(); ++i) {
            const auto p = predict(m, d.rows[i]);
            if (p.score > 0.5) CHECK(p.label == 1);
            if (p.score < 0.5) CHECK(p.label == 0);
        }
    }
    const auto single = oracle::make_dataset({{0}, {1}, {2}, {3}, {4}}, {1, 1, 1, 1, 1});
    CHECK_THROWS_AS(fit_lr(single, params(Variant::lr)), ArgumentError);
    CHECK_THROWS_AS(fit_svm(single, params(Variant::svm)), ArgumentError);
    Dataset empty = oracle::make_dataset({{0}}, {0});
    empty.rows.clear();
    empty.labels.clear();
    CHECK_THROWS_AS(fit_dt(empty, params(Variant::dt)), ArgumentError);
}

TEST_CASE("standardization is stored and applied") {
    const auto d = oracle::make_dataset({{100, 0}, {110, 1}, {200, 0}, {210, 1}, {150, 1}, {160, 0}},
                                        {0, 0, 1, 1, 1, 0});
    auto h = params(Variant::lr);
    h.standardize = true;
    const auto m = fit(d, h);
    REQUIRE_FALSE(m.standardizer.empty());
    CHECK(m.standardizer.mean[0] == doctest::Approx(155.0));
    CHECK(m.standardizer.scale[0] > 1.0);
}

TEST_CASE("model documents round trip") {
    Rng rng(41);
    const auto d = synth_bhdc(150, 3);
    const auto tmp = std::filesystem::temp_directory_path() / "cardio_model_test.json";
    for (auto v : kAll) {
        auto h = params(v);
        if (v == Variant::svm) {
            h.svm_kernel = Kernel::rbf;
            h.svm_rbf_gamma = 0.2;
        }
        auto m = fit(d, h);
        m.importance = rank(d);
        m.importance.front().f = std::numeric_limits<double>::infinity();
        save_model(tmp.string(), m);
        const auto back = load_model(tmp.string(), d.schema);
        CHECK(to_json(back) == to_json(m));
        CHECK(model_id(back) == model_id(m));
        CHECK(back.importance.front().separating());
        for (std::size_t i = 0; i < 20; ++i) {
            CHECK(predict(back, d.rows[i]).score == predict(m, d.rows[i]).score);
        }
    }
    CHECK_THROWS_AS(load_model(tmp.string(), builtin_schema("cleveland")), ConfigError);
    CHECK_THROWS_AS(load_model("/nonexistent/model.json"), IoError);
    auto doc = to_json(fit(d, params(Variant::lr)));
    doc["version"] = 99;
    CHECK_THROWS_AS(model_from_json(doc), ConfigError);
    doc = to_json(fit(d, params(Variant::lr)));
    doc.erase("payload");
    CHECK_THROWS_AS(model_from_json(doc), ConfigError);
    std::filesystem::remove(tmp);
}
