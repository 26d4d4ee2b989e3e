#include "cardio/service.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>

#include <httplib.h>

#include "cardio/error.hpp"

namespace cardio {

using nlohmann::json;

ServiceState load_service(const std::string& model_path, const std::optional<std::string>& schema) {
    ServiceState state;
    state.model = load_model(model_path);
    state.schema = resolve_schema(schema.value_or(state.model.schema_name));
    if (state.model.schema_fingerprint != state.schema.fingerprint()) {
        throw ConfigError("model " + model_path + " was trained against schema fingerprint " +
                          state.model.schema_fingerprint + " but schema " + state.schema.name +
                          " has " + state.schema.fingerprint());
    }
    state.model_id = model_id(state.model);
    return state;
}

namespace {

HttpResult bad_request(const std::string& message, const std::string& field) {
    return {400, {{"error", message}, {"field", field}}};
}

std::string describe(const AttributeSchema& a) {
    return "attribute " + std::to_string(a.index) + " (" + a.name + ")";
}

// Validates one wire value against the schema; returns an error message or
// nothing.
std::optional<std::string> check_value(const AttributeSchema& a, const json& v) {
    if (!v.is_number()) return describe(a) + " must be a number";
    const double x = v.get<double>();
    if (!std::isfinite(x)) return describe(a) + " must be finite";
    if (a.kind == AttributeKind::categorical) {
        if (x != std::floor(x) || !a.has_code(static_cast<int>(x))) {
            std::string codes;
            for (const auto& c : a.categories) {
                codes += (codes.empty() ? "" : ", ") + std::to_string(c.code);
            }
            return describe(a) + " has invalid code " + v.dump() + " (expected one of " + codes + ")";
        }
    }
    return std::nullopt;
}

json importance_json(const ServiceState& state) {
    json out = json::array();
    for (const auto& s : state.model.importance) {
        json f = std::isinf(s.f) ? json("inf") : json(s.f);
        std::string name;
        if (state.schema.contains(s.attribute)) name = state.schema.attribute(s.attribute).name;
        out.push_back({{"attribute", s.attribute}, {"name", name}, {"f", f}});
    }
    return out;
}

}  // namespace

HttpResult handle_health(const ServiceState& state) {
    return {200, {{"status", "ok"}, {"model_id", state.model_id}}};
}

HttpResult handle_schema(const ServiceState& state) {
    return {200,
            {{"schema", to_json(state.schema)},
             {"fingerprint", state.schema.fingerprint()},
             {"model_id", state.model_id},
             {"variant", to_string(state.model.variant)},
             {"features", state.model.feature_set.indices},
             {"request", {{"fields", {"schema", "attributes", "what_if"}},
                          {"what_if_fields", {"attribute", "code"}}}},
             {"response",
              {{"fields", {"label", "score", "model_id", "feature_importance", "what_if_results"}},
               {"what_if_result_fields", {"attribute", "code", "label", "score", "delta"}}}}}};
}

HttpResult handle_importance(const ServiceState& state) {
    return {200, {{"model_id", state.model_id}, {"ranking", importance_json(state)}}};
}

HttpResult handle_predict(const ServiceState& state, const std::string& body) {
    json req;
    try {
        req = json::parse(body);
    } catch (const json::exception& e) {
        return bad_request(std::string("request body is not valid JSON: ") + e.what(), "");
    }
    if (!req.is_object()) return bad_request("request body must be an object", "");
    if (req.contains("schema")) {
        if (!req["schema"].is_string() || req["schema"].get<std::string>() != state.schema.name) {
            return bad_request("model serves schema " + state.schema.name + ", request names " +
                                   req["schema"].dump(),
                               "schema");
        }
    }
    if (!req.contains("attributes") || !req["attributes"].is_object()) {
        return bad_request("attributes must be an object keyed by attribute index", "attributes");
    }
    const auto& attrs = req["attributes"];
    for (const auto& [key, value] : attrs.items()) {
        int index = 0;
        try {
            std::size_t used = 0;
            index = std::stoi(key, &used);
            if (used != key.size()) throw std::invalid_argument(key);
        } catch (const std::exception&) {
            return bad_request("attribute key '" + key + "' is not an index", "attributes." + key);
        }
        if (!state.schema.contains(index) || state.schema.attribute(index).is_label) {
            return bad_request("unknown attribute " + key + " for schema " + state.schema.name,
                               "attributes." + key);
        }
    }

    const auto& features = state.model.feature_set.indices;
    std::vector<double> x(features.size());
    for (std::size_t i = 0; i < features.size(); ++i) {
        const auto& a = state.schema.attribute(features[i]);
        const auto key = std::to_string(a.index);
        if (!attrs.contains(key)) {
            return bad_request("missing " + describe(a), "attributes." + key);
        }
        if (auto err = check_value(a, attrs[key])) return bad_request(*err, "attributes." + key);
        x[i] = attrs[key].get<double>();
    }

    std::vector<std::pair<std::size_t, double>> overrides;
    if (req.contains("what_if")) {
        const auto& wi = req["what_if"];
        if (!wi.is_array()) return bad_request("what_if must be a list", "what_if");
        for (std::size_t n = 0; n < wi.size(); ++n) {
            const auto field = "what_if." + std::to_string(n);
            const auto& o = wi[n];
            if (!o.is_object() || !o.contains("attribute") || !o.contains("code") ||
                !o["attribute"].is_number_integer()) {
                return bad_request("what_if entries need integer attribute and code", field);
            }
            const int index = o["attribute"].get<int>();
            const auto it = std::find(features.begin(), features.end(), index);
            if (it == features.end()) {
                return bad_request("what_if attribute " + std::to_string(index) +
                                       " is not used by the model",
                                   field);
            }
            if (auto err = check_value(state.schema.attribute(index), o["code"])) {
                return bad_request(*err, field);
            }
            overrides.emplace_back(static_cast<std::size_t>(it - features.begin()),
                                   o["code"].get<double>());
        }
    }

    Prediction base;
    try {
        base = predict(state.model, x);
    } catch (const Error& e) {
        return bad_request(e.what(), "attributes");
    }
    json results = json::array();
    for (const auto& [pos, code] : overrides) {
        auto alt = x;
        alt[pos] = code;
        const auto p = predict(state.model, alt);
        results.push_back({{"attribute", features[pos]},
                           {"code", code},
                           {"label", p.label},
                           {"score", p.score},
                           {"delta", p.score - base.score}});
    }
    return {200,
            {{"label", base.label},
             {"score", base.score},
             {"model_id", state.model_id},
             {"feature_importance", importance_json(state)},
             {"what_if_results", results}}};
}

struct PredictionServer::Impl {
    std::shared_ptr<const ServiceState> state;
    ServeOptions options;
    httplib::Server server;
    bool bound = false;
};

namespace {

void reply(httplib::Response& res, const HttpResult& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
}

}  // namespace

PredictionServer::PredictionServer(std::shared_ptr<const ServiceState> state, ServeOptions options)
    : impl_(std::make_unique<Impl>()) {
    impl_->state = std::move(state);
    impl_->options = std::move(options);
    auto& srv = impl_->server;
    auto st = impl_->state;
    // The library default adds SO_REUSEPORT, which would let a second
    // instance silently share a busy port.
    srv.set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof(yes));
    });
    srv.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    srv.Get("/health", [st](const httplib::Request&, httplib::Response& res) { reply(res, handle_health(*st)); });
    srv.Get("/schema", [st](const httplib::Request&, httplib::Response& res) { reply(res, handle_schema(*st)); });
    srv.Get("/importance",
            [st](const httplib::Request&, httplib::Response& res) { reply(res, handle_importance(*st)); });
    srv.Post("/predict", [st](const httplib::Request& req, httplib::Response& res) {
        reply(res, handle_predict(*st, req.body));
    });
    srv.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
        res.status = 204;
    });
    if (impl_->options.static_dir) {
        if (!std::filesystem::is_directory(*impl_->options.static_dir) ||
            !srv.set_mount_point("/", *impl_->options.static_dir)) {
            throw IoError("static directory " + *impl_->options.static_dir + " is not readable");
        }
    }
}

PredictionServer::~PredictionServer() { stop(); }

int PredictionServer::bind() {
    auto& o = impl_->options;
    int port = o.port;
    if (port == 0) {
        port = impl_->server.bind_to_any_port(o.host);
        if (port < 0) throw IoError("cannot bind " + o.host + " to any port");
    } else if (!impl_->server.bind_to_port(o.host, port)) {
        throw IoError("cannot bind " + o.host + ":" + std::to_string(port) + " (port busy?)");
    }
    impl_->bound = true;
    return port;
}

void PredictionServer::run() {
    if (!impl_->bound) throw ArgumentError("PredictionServer::run before bind");
    impl_->server.listen_after_bind();
}

void PredictionServer::stop() {
    if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace cardio
