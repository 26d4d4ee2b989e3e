#pragma once

#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "cardio/classifiers.hpp"
#include "cardio/schema.hpp"

namespace cardio {

// Immutable after construction; shared by every request handler.
struct ServiceState {
    TrainedModel model;
    Schema schema;
    std::string model_id;
};

// Loads a persisted model and checks it against `schema` (a built-in name
// or a schema file). Without a schema the model's own schema name is used.
ServiceState load_service(const std::string& model_path,
                          const std::optional<std::string>& schema = {});

struct HttpResult {
    int status = 200;
    nlohmann::json body;
};

HttpResult handle_health(const ServiceState& state);
HttpResult handle_schema(const ServiceState& state);
HttpResult handle_importance(const ServiceState& state);
// Body: {"schema": name, "attributes": {"<index>": code, ...},
//        "what_if": [{"attribute": index, "code": code}, ...]}
HttpResult handle_predict(const ServiceState& state, const std::string& body);

struct ServeOptions {
    std::string host = "127.0.0.1";
    int port = 8080;  // 0 picks a free port
    std::optional<std::string> static_dir;
};

class PredictionServer {
public:
    PredictionServer(std::shared_ptr<const ServiceState> state, ServeOptions options);
    ~PredictionServer();
    PredictionServer(const PredictionServer&) = delete;
    PredictionServer& operator=(const PredictionServer&) = delete;

    // Binds the socket; throws IoError when the address is unavailable.
    // Returns the bound port.
    int bind();
    // Serves until stop(). Requires bind().
    void run();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace cardio
