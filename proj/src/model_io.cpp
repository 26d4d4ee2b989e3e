#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "cardio/classifiers.hpp"
#include "cardio/error.hpp"

namespace cardio {

using nlohmann::json;

namespace {

constexpr int kModelVersion = 1;

json number(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

double number_from(const json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        throw ConfigError("bad number '" + s + "'");
    }
    return j.get<double>();
}

std::string_view selection_kind_name(SelectionKind k) {
    switch (k) {
        case SelectionKind::expert: return "expert";
        case SelectionKind::anova: return "anova";
        case SelectionKind::fused: return "fused";
    }
    return "?";
}

SelectionKind selection_kind_from(const std::string& s) {
    if (s == "expert") return SelectionKind::expert;
    if (s == "anova") return SelectionKind::anova;
    if (s == "fused") return SelectionKind::fused;
    throw ConfigError("unknown feature set kind '" + s + "'");
}

struct PayloadWriter {
    json operator()(const LinearPayload& p) const {
        return {{"weights", p.weights}, {"bias", p.bias}, {"iterations", p.iterations}};
    }
    json operator()(const TreePayload& p) const {
        json nodes = json::array();
        for (const auto& n : p.nodes) {
            json node{{"counts", n.counts}, {"depth", n.depth}, {"column", n.column}};
            if (!n.leaf()) {
                node["categorical"] = n.categorical;
                if (n.categorical) {
                    node["branches"] = n.branches;
                } else {
                    node["threshold"] = n.threshold;
                    node["left"] = n.left;
                    node["right"] = n.right;
                }
            }
            nodes.push_back(std::move(node));
        }
        return {{"nodes", nodes}};
    }
    json operator()(const KnnPayload& p) const {
        return {{"rows", p.rows}, {"labels", p.labels}, {"k", p.k}};
    }
    json operator()(const NbPayload& p) const {
        json j{{"multinomial", p.multinomial}, {"log_prior", p.log_prior}};
        if (p.multinomial) {
            j["log_theta"] = p.log_theta;
        } else {
            j["codes"] = p.codes;
            j["log_likelihood"] = p.log_likelihood;
            j["log_unseen"] = p.log_unseen;
        }
        return j;
    }
    json operator()(const SvmPayload& p) const {
        json j{{"kernel", p.kernel == Kernel::linear ? "linear" : "rbf"},
               {"bias", p.bias},
               {"iterations", p.iterations},
               {"objective", p.objective}};
        if (p.kernel == Kernel::linear) {
            j["weights"] = p.weights;
        } else {
            j["gamma"] = p.gamma;
            j["support"] = p.support;
            j["coefficients"] = p.coefficients;
        }
        return j;
    }
};

Payload payload_from_json(Variant v, const json& j) {
    switch (v) {
        case Variant::lr: {
            LinearPayload p;
            p.weights = j.at("weights").get<std::vector<double>>();
            p.bias = j.at("bias").get<double>();
            p.iterations = j.at("iterations").get<int>();
            return p;
        }
        case Variant::dt: {
            TreePayload p;
            for (const auto& item : j.at("nodes")) {
                TreeNode n;
                n.counts = item.at("counts").get<std::array<int, 2>>();
                n.depth = item.at("depth").get<int>();
                n.column = item.at("column").get<int>();
                if (!n.leaf()) {
                    n.categorical = item.at("categorical").get<bool>();
                    if (n.categorical) {
                        n.branches = item.at("branches").get<std::vector<std::pair<int, int>>>();
                    } else {
                        n.threshold = item.at("threshold").get<double>();
                        n.left = item.at("left").get<int>();
                        n.right = item.at("right").get<int>();
                    }
                }
                p.nodes.push_back(std::move(n));
            }
            return p;
        }
        case Variant::knn: {
            KnnPayload p;
            p.rows = j.at("rows").get<std::vector<std::vector<double>>>();
            p.labels = j.at("labels").get<std::vector<int>>();
            p.k = j.at("k").get<int>();
            return p;
        }
        case Variant::nb_multinomial:
        case Variant::nb_categorical: {
            NbPayload p;
            p.multinomial = j.at("multinomial").get<bool>();
            p.log_prior = j.at("log_prior").get<std::array<double, 2>>();
            if (p.multinomial) {
                p.log_theta = j.at("log_theta").get<std::array<std::vector<double>, 2>>();
            } else {
                p.codes = j.at("codes").get<std::vector<std::vector<double>>>();
                p.log_likelihood =
                    j.at("log_likelihood").get<std::array<std::vector<std::vector<double>>, 2>>();
                p.log_unseen = j.at("log_unseen").get<std::array<std::vector<double>, 2>>();
            }
            return p;
        }
        case Variant::svm: {
            SvmPayload p;
            p.kernel = j.at("kernel") == "linear" ? Kernel::linear : Kernel::rbf;
            p.bias = j.at("bias").get<double>();
            p.iterations = j.at("iterations").get<int>();
            p.objective = j.at("objective").get<double>();
            if (p.kernel == Kernel::linear) {
                p.weights = j.at("weights").get<std::vector<double>>();
            } else {
                p.gamma = j.at("gamma").get<double>();
                p.support = j.at("support").get<std::vector<std::vector<double>>>();
                p.coefficients = j.at("coefficients").get<std::vector<double>>();
            }
            return p;
        }
    }
    throw ConfigError("unknown variant");
}

}  // namespace

json to_json(const Hyperparams& h) {
    json j{{"variant", to_string(h.variant)},
           {"lr_solver_tolerance", h.lr_solver_tolerance},
           {"lr_c", h.lr_c},
           {"dt_criterion", h.dt_criterion == Criterion::gini ? "gini" : "entropy"},
           {"dt_max_depth", h.dt_max_depth},
           {"knn_k", h.knn_k},
           {"nb_alpha", h.nb_alpha},
           {"svm_kernel", h.svm_kernel == Kernel::linear ? "linear" : "rbf"},
           {"svm_c", h.svm_c},
           {"standardize", h.standardize}};
    j["svm_rbf_gamma"] = h.svm_rbf_gamma ? json(*h.svm_rbf_gamma) : json(nullptr);
    return j;
}

Hyperparams hyperparams_from_json(const json& j) {
    Hyperparams h;
    h.variant = variant_from_string(j.at("variant").get<std::string>());
    h.lr_solver_tolerance = j.at("lr_solver_tolerance").get<double>();
    h.lr_c = j.at("lr_c").get<double>();
    h.dt_criterion = j.at("dt_criterion") == "entropy" ? Criterion::entropy : Criterion::gini;
    h.dt_max_depth = j.at("dt_max_depth").get<int>();
    h.knn_k = j.at("knn_k").get<int>();
    h.nb_alpha = j.at("nb_alpha").get<double>();
    h.svm_kernel = j.at("svm_kernel") == "rbf" ? Kernel::rbf : Kernel::linear;
    h.svm_c = j.at("svm_c").get<double>();
    if (!j.at("svm_rbf_gamma").is_null()) h.svm_rbf_gamma = j.at("svm_rbf_gamma").get<double>();
    h.standardize = j.at("standardize").get<bool>();
    return h;
}

json to_json(const TrainedModel& m) {
    json importance = json::array();
    for (const auto& s : m.importance) {
        importance.push_back({{"attribute", s.attribute},
                              {"s2_between", s.s2_between},
                              {"s2_within", s.s2_within},
                              {"f", number(s.f)}});
    }
    json j{{"format", "cardio-model"},
           {"version", kModelVersion},
           {"variant", to_string(m.variant)},
           {"hyperparams", to_json(m.hyperparams)},
           {"feature_set",
            {{"indices", m.feature_set.indices},
             {"kind", selection_kind_name(m.feature_set.kind)},
             {"n", m.feature_set.n},
             {"schema", m.feature_set.schema}}},
           {"schema", {{"name", m.schema_name}, {"fingerprint", m.schema_fingerprint}}},
           {"payload", std::visit(PayloadWriter{}, m.payload)},
           {"importance", importance}};
    if (!m.standardizer.empty()) {
        j["standardizer"] = {{"mean", m.standardizer.mean}, {"scale", m.standardizer.scale}};
    }
    return j;
}

TrainedModel model_from_json(const json& doc) {
    try {
        if (doc.at("format") != "cardio-model") throw ConfigError("not a cardio-model document");
        if (doc.at("version").get<int>() != kModelVersion) {
            throw ConfigError("unsupported model version " + doc.at("version").dump());
        }
        TrainedModel m;
        m.variant = variant_from_string(doc.at("variant").get<std::string>());
        m.hyperparams = hyperparams_from_json(doc.at("hyperparams"));
        const auto& fs = doc.at("feature_set");
        m.feature_set.indices = fs.at("indices").get<std::vector<int>>();
        m.feature_set.kind = selection_kind_from(fs.at("kind").get<std::string>());
        m.feature_set.n = fs.at("n").get<int>();
        m.feature_set.schema = fs.at("schema").get<std::string>();
        m.schema_name = doc.at("schema").at("name").get<std::string>();
        m.schema_fingerprint = doc.at("schema").at("fingerprint").get<std::string>();
        m.payload = payload_from_json(m.variant, doc.at("payload"));
        for (const auto& s : doc.at("importance")) {
            m.importance.push_back({s.at("attribute").get<int>(), s.at("s2_between").get<double>(),
                                    s.at("s2_within").get<double>(), number_from(s.at("f"))});
        }
        if (doc.contains("standardizer")) {
            m.standardizer.mean = doc["standardizer"].at("mean").get<std::vector<double>>();
            m.standardizer.scale = doc["standardizer"].at("scale").get<std::vector<double>>();
        }
        return m;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed model document: ") + e.what());
    }
}

void save_model(const std::string& path, const TrainedModel& m) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << to_json(m).dump(2) << '\n';
}

TrainedModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read model " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return model_from_json(doc);
}

TrainedModel load_model(const std::string& path, const Schema& schema) {
    auto m = load_model(path);
    if (m.schema_fingerprint != schema.fingerprint()) {
        throw ConfigError("model " + path + " was trained against schema fingerprint " +
                          m.schema_fingerprint + " but schema " + schema.name + " has " +
                          schema.fingerprint());
    }
    return m;
}

std::string model_id(const TrainedModel& m) {
    const std::string canonical = to_json(m).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s-%012llx", std::string(to_string(m.variant)).c_str(),
                  static_cast<unsigned long long>(h & 0xffffffffffffULL));
    return buf;
}

}  // namespace cardio
