#include <doctest.h>

#include <filesystem>
#include <memory>
#include <thread>

#include <httplib.h>

#include "cardio/error.hpp"
#include "cardio/service.hpp"

using namespace cardio;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Fixture {
    fs::path path = fs::temp_directory_path() / "cardio_service_model.json";
    Dataset data = synth_bhdc(300, 21);
    TrainedModel model;
    ServiceState state;

    Fixture() {
        const auto eta = fuse(FeatureSet{{7, 8, 9, 10, 14, 16, 17, 18}, SelectionKind::anova, 8, "bhdc"},
                              expert_set(data.schema));
        Hyperparams h;
        h.variant = Variant::nb_categorical;
        model = fit(project(data, eta), h);
        model.feature_set.kind = SelectionKind::fused;
        model.importance = rank(data);
        save_model(path.string(), model);
        state = load_service(path.string(), "bhdc");
    }
    ~Fixture() { fs::remove(path); }

    json request(std::size_t row) const {
        json attrs = json::object();
        const auto col = project(data, model.feature_set);
        for (std::size_t i = 0; i < model.feature_set.size(); ++i) {
            attrs[std::to_string(model.feature_set.indices[i])] = col.rows[row][i];
        }
        return {{"schema", "bhdc"}, {"attributes", attrs}};
    }
};

}  // namespace

TEST_CASE("service handlers") {
    Fixture f;
    CHECK(handle_health(f.state).body["status"] == "ok");
    CHECK(handle_health(f.state).body["model_id"] == model_id(f.model));

    const auto schema = handle_schema(f.state).body;
    CHECK(schema["schema"]["name"] == "bhdc");
    CHECK(schema["features"] == json(f.model.feature_set.indices));
    CHECK(schema["fingerprint"] == f.data.schema.fingerprint());

    const auto imp = handle_importance(f.state).body;
    CHECK(imp["ranking"].size() == 18);
    CHECK(imp["ranking"][0]["attribute"] == f.model.importance[0].attribute);

    SUBCASE("happy path matches offline predictions") {
        const auto col = project(f.data, f.model.feature_set);
        for (std::size_t r = 0; r < 30; ++r) {
            const auto res = handle_predict(f.state, f.request(r).dump());
            REQUIRE(res.status == 200);
            const auto p = predict(f.model, col.rows[r]);
            CHECK(res.body["label"] == p.label);
            CHECK(res.body["score"].get<double>() == p.score);
            CHECK(res.body["what_if_results"].empty());
            CHECK(res.body["feature_importance"].size() == 18);
        }
    }
    SUBCASE("missing attribute names it") {
        auto req = f.request(0);
        req["attributes"].erase("14");
        const auto res = handle_predict(f.state, req.dump());
        CHECK(res.status == 400);
        CHECK(res.body["error"].get<std::string>().find("family history") != std::string::npos);
        CHECK(res.body["field"] == "attributes.14");
    }
    SUBCASE("what-if deltas equal offline differences") {
        auto req = f.request(3);
        req["attributes"]["3"] = 1;
        req["what_if"] = json::array({{{"attribute", 3}, {"code", 0}}, {{"attribute", 14}, {"code", 1}}});
        const auto res = handle_predict(f.state, req.dump());
        REQUIRE(res.status == 200);
        const auto col = project(f.data, f.model.feature_set);
        auto x = col.rows[3];
        x[2] = 1;  // smoking habit sits third in the fused set
        const auto base = predict(f.model, x);
        auto alt = x;
        alt[2] = 0;
        const auto off = predict(f.model, alt);
        const auto& wi = res.body["what_if_results"];
        REQUIRE(wi.size() == 2);
        CHECK(res.body["score"].get<double>() == base.score);
        CHECK(wi[0]["score"].get<double>() == off.score);
        CHECK(wi[0]["delta"].get<double>() == off.score - base.score);
        CHECK(wi[0]["label"] == off.label);
    }
    SUBCASE("malformed requests") {
        CHECK(handle_predict(f.state, "{not json").status == 400);
        CHECK(handle_predict(f.state, "[1,2]").status == 400);
        CHECK(handle_predict(f.state, R"({"attributes": 3})").body["field"] == "attributes");

        auto req = f.request(0);
        req["schema"] = "cleveland";
        CHECK(handle_predict(f.state, req.dump()).body["field"] == "schema");

        req = f.request(0);
        req["attributes"]["9"] = 7;
        auto res = handle_predict(f.state, req.dump());
        CHECK(res.status == 400);
        CHECK(res.body["field"] == "attributes.9");

        req = f.request(0);
        req["attributes"]["9"] = "Typical angina";
        CHECK(handle_predict(f.state, req.dump()).status == 400);

        req = f.request(0);
        req["attributes"]["42"] = 0;
        CHECK(handle_predict(f.state, req.dump()).body["field"] == "attributes.42");

        req = f.request(0);
        req["attributes"]["19"] = 0;
        CHECK(handle_predict(f.state, req.dump()).status == 400);

        req = f.request(0);
        req["what_if"] = json::array({{{"attribute", 4}, {"code", 0}}});
        res = handle_predict(f.state, req.dump());
        CHECK(res.status == 400);
        CHECK(res.body["field"] == "what_if.0");

        req = f.request(0);
        req["what_if"] = json::array({{{"attribute", 3}, {"code", 9}}});
        CHECK(handle_predict(f.state, req.dump()).status == 400);
    }
    SUBCASE("identical requests give identical responses") {
        const auto body = f.request(5).dump();
        const auto first = handle_predict(f.state, body).body.dump();
        std::vector<std::thread> threads;
        std::vector<std::string> out(8);
        for (std::size_t i = 0; i < out.size(); ++i) {
            threads.emplace_back([&, i] { out[i] = handle_predict(f.state, body).body.dump(); });
        }
        for (auto& t : threads) t.join();
        for (const auto& o : out) CHECK(o == first);
    }
}

TEST_CASE("load_service checks the schema fingerprint") {
    Fixture f;
    CHECK_THROWS_AS(load_service(f.path.string(), "cleveland"), ConfigError);
    CHECK_NOTHROW(load_service(f.path.string()));
    CHECK_THROWS_AS(load_service("/nonexistent/model.json"), IoError);
}

TEST_CASE("http round trip") {
    Fixture f;
    auto state = std::make_shared<const ServiceState>(f.state);
    PredictionServer server(state, {"127.0.0.1", 0, std::nullopt});
    const int port = server.bind();
    REQUIRE(port > 0);
    std::thread loop([&] { server.run(); });

    httplib::Client client("127.0.0.1", port);
    auto health = client.Get("/health");
    REQUIRE(health);
    CHECK(health->status == 200);
    CHECK(json::parse(health->body)["model_id"] == f.state.model_id);
    CHECK(health->get_header_value("Access-Control-Allow-Origin") == "*");

    auto schema = client.Get("/schema");
    REQUIRE(schema);
    CHECK(json::parse(schema->body)["schema"]["name"] == "bhdc");

    auto imp = client.Get("/importance");
    REQUIRE(imp);
    CHECK(json::parse(imp->body)["ranking"].size() == 18);

    const auto body = f.request(7).dump();
    auto pred = client.Post("/predict", body, "application/json");
    REQUIRE(pred);
    CHECK(pred->status == 200);
    CHECK(json::parse(pred->body) == handle_predict(f.state, body).body);

    auto bad = client.Post("/predict", "{}", "application/json");
    REQUIRE(bad);
    CHECK(bad->status == 400);

    auto opt = client.Options("/predict");
    REQUIRE(opt);
    CHECK(opt->status == 204);

    // A second server on the same port must fail to start.
    PredictionServer clash(state, {"127.0.0.1", port, std::nullopt});
    CHECK_THROWS_AS(clash.bind(), IoError);

    server.stop();
    loop.join();
}

TEST_CASE("static directory must exist") {
    Fixture f;
    auto state = std::make_shared<const ServiceState>(f.state);
    CHECK_THROWS_AS(PredictionServer(state, {"127.0.0.1", 0, "/nonexistent/static"}), IoError);
}
