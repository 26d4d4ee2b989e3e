#include "cardio/schema.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>

#include "cardio/error.hpp"
#include "cardio/text.hpp"

namespace cardio {

namespace {

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) ==
                      std::tolower(static_cast<unsigned char>(y));
           });
}

AttributeSchema categorical(int index, std::string name, std::vector<Category> categories,
                            std::vector<std::string> missing) {
    AttributeSchema a;
    a.index = index;
    a.name = std::move(name);
    a.kind = AttributeKind::categorical;
    a.categories = std::move(categories);
    a.missing_markers = std::move(missing);
    return a;
}

AttributeSchema numeric(int index, std::string name, std::vector<std::string> missing) {
    AttributeSchema a;
    a.index = index;
    a.name = std::move(name);
    a.kind = AttributeKind::numeric;
    a.missing_markers = std::move(missing);
    return a;
}

std::vector<Category> no_yes_na() { return {{0, "No"}, {1, "Yes"}, {2, "N/A"}}; }

Schema bhdc() {
    const std::vector<std::string> missing{""};
    Schema s;
    s.name = "bhdc";
    s.alpha_cap = 18;
    s.expert = {1, 2, 3, 7, 8, 9, 10, 14};
    auto& a = s.attributes;
    a.push_back(categorical(1, "age",
                            {{0, "age <= 30"},
                             {1, "31 <= age <= 45"},
                             {2, "46 <= age <= 65"},
                             {3, "age >= 65"}},
                            missing));
    a.push_back(categorical(2, "gender", {{0, "Male"}, {1, "Female"}, {2, "Other"}}, missing));
    a.push_back(categorical(3, "smoking habit", no_yes_na(), missing));
    a.push_back(categorical(4, "smoking condition",
                            {{0, "Past smoker"}, {1, "Present smoker"}, {2, "N/A"}}, missing));
    a.push_back(categorical(5, "regular pulse", no_yes_na(), missing));
    a.push_back(categorical(6, "physical activity",
                            {{0, "Walk"}, {1, "Outdoor games"}, {2, "Gym"}, {3, "No"}}, missing));
    a.push_back(categorical(7, "diabetes", no_yes_na(), missing));
    a.push_back(categorical(8, "cholesterol", {{0, "No"}, {1, "Yes"}, {2, "Unknown"}}, missing));
    a.push_back(categorical(9, "chest pain",
                            {{0, "Typical angina"},
                             {1, "Atypical angina"},
                             {2, "Non-cardiac chest pain"},
                             {3, "No chest pain"}},
                            missing));
    a.push_back(categorical(10, "hypertension", no_yes_na(), missing));
    a.push_back(categorical(11, "skipping doses", no_yes_na(), missing));
    a.push_back(categorical(12, "junk food",
                            {{0, "Everyday"},
                             {1, "2-3 days a week"},
                             {2, "4-6 days a week"},
                             {3, "No"}},
                            missing));
    a.push_back(categorical(13, "rice eating habit",
                            {{0, "3 or more times a day"}, {1, "2 times a day"}, {2, "1 time a day"}},
                            missing));
    a.push_back(categorical(14, "family history", no_yes_na(), missing));
    a.push_back(categorical(15, "relationship",
                            {{0, "Father and mother"}, {1, "Brother and sister"}, {2, "N/A"}},
                            missing));
    a.push_back(categorical(16, "family member's age",
                            {{0, "Less than 65"}, {1, "Greater than 65"}, {2, "N/A"}}, missing));
    a.push_back(categorical(17, "family member's gender",
                            {{0, "Male"}, {1, "Female"}, {2, "N/A"}}, missing));
    a.push_back(categorical(18, "disease type",
                            {{0, "Heart Attack"}, {1, "Heart Block"}, {2, "N/A"}}, missing));
    auto label = categorical(19, "label", {{0, "No"}, {1, "Yes"}}, missing);
    label.is_label = true;
    a.push_back(std::move(label));
    return s;
}

// Processed UCI files carry 14 of the 76 raw attributes. Indices are the raw
// attribute ids so that the repository's recommended list resolves directly.
Schema uci(std::string name) {
    const std::vector<std::string> missing{"?", "", "-9"};
    Schema s;
    s.name = std::move(name);
    s.alpha_cap = 14;
    s.expert = {3, 4, 9, 10, 12, 16, 19, 32, 38, 40, 41, 44, 51};
    auto& a = s.attributes;
    a.push_back(numeric(3, "age", missing));
    a.push_back(categorical(4, "sex", {{0, "Female"}, {1, "Male"}}, missing));
    a.push_back(categorical(9, "chest pain type",
                            {{1, "Typical angina"},
                             {2, "Atypical angina"},
                             {3, "Non-anginal pain"},
                             {4, "Asymptomatic"}},
                            missing));
    a.push_back(numeric(10, "resting blood pressure", missing));
    a.push_back(numeric(12, "serum cholesterol", missing));
    a.push_back(categorical(16, "fasting blood sugar > 120", {{0, "False"}, {1, "True"}}, missing));
    a.push_back(categorical(19, "resting ecg",
                            {{0, "Normal"},
                             {1, "ST-T wave abnormality"},
                             {2, "Left ventricular hypertrophy"}},
                            missing));
    a.push_back(numeric(32, "max heart rate", missing));
    a.push_back(categorical(38, "exercise induced angina", {{0, "No"}, {1, "Yes"}}, missing));
    a.push_back(numeric(40, "st depression", missing));
    a.push_back(categorical(41, "st slope", {{1, "Upsloping"}, {2, "Flat"}, {3, "Downsloping"}},
                            missing));
    a.push_back(numeric(44, "major vessels", missing));
    a.push_back(categorical(51, "thal",
                            {{3, "Normal"}, {6, "Fixed defect"}, {7, "Reversable defect"}},
                            missing));
    auto label = categorical(58, "diagnosis", {{0, "No disease"}, {1, "Disease"}}, missing);
    label.is_label = true;
    label.binarize = true;
    a.push_back(std::move(label));
    return s;
}

}  // namespace

bool AttributeSchema::has_code(int code) const {
    return std::any_of(categories.begin(), categories.end(),
                       [code](const Category& c) { return c.code == code; });
}

std::optional<int> AttributeSchema::code_for_meaning(std::string_view meaning) const {
    for (const auto& c : categories) {
        if (iequals(c.meaning, meaning)) return c.code;
    }
    return std::nullopt;
}

std::string_view AttributeSchema::meaning_of(int code) const {
    for (const auto& c : categories) {
        if (c.code == code) return c.meaning;
    }
    return {};
}

bool AttributeSchema::is_missing(std::string_view cell) const {
    const auto trimmed = trim(cell);
    for (const auto& marker : missing_markers) {
        if (trimmed == marker) return true;
        const auto a = parse_number(trimmed);
        const auto b = parse_number(marker);
        if (a && b && *a == *b) return true;
    }
    return false;
}

void Schema::validate() const {
    std::set<int> seen;
    int labels = 0;
    for (const auto& a : attributes) {
        if (!seen.insert(a.index).second) {
            throw ConfigError("schema " + name + ": duplicate attribute index " +
                              std::to_string(a.index));
        }
        std::set<int> codes;
        for (const auto& c : a.categories) {
            if (!codes.insert(c.code).second) {
                throw ConfigError("schema " + name + ": duplicate code " + std::to_string(c.code) +
                                  " in attribute " + a.name);
            }
        }
        if (a.is_label) {
            ++labels;
            if (!a.has_code(0) || !a.has_code(1) || a.categories.size() != 2) {
                throw ConfigError("schema " + name + ": label must have codes {0, 1}");
            }
        }
    }
    if (labels != 1) {
        throw ConfigError("schema " + name + ": expected exactly one label attribute, found " +
                          std::to_string(labels));
    }
    for (int e : expert) {
        if (!seen.count(e) || attribute(e).is_label) {
            throw ConfigError("schema " + name + ": expert attribute " + std::to_string(e) +
                              " is not a feature");
        }
    }
}

const AttributeSchema& Schema::label() const { return attributes.at(label_position()); }

std::size_t Schema::label_position() const {
    for (std::size_t i = 0; i < attributes.size(); ++i) {
        if (attributes[i].is_label) return i;
    }
    throw ConfigError("schema " + name + " has no label attribute");
}

const AttributeSchema& Schema::attribute(int index) const {
    if (auto p = position(index)) return attributes[*p];
    throw ArgumentError("schema " + name + " has no attribute " + std::to_string(index));
}

std::optional<std::size_t> Schema::position(int index) const {
    for (std::size_t i = 0; i < attributes.size(); ++i) {
        if (attributes[i].index == index) return i;
    }
    return std::nullopt;
}

std::vector<int> Schema::feature_indices() const {
    std::vector<int> out;
    for (const auto& a : attributes) {
        if (!a.is_label) out.push_back(a.index);
    }
    return out;
}

std::string Schema::fingerprint() const {
    // FNV-1a over the canonical dump; object keys are emitted sorted.
    const std::string canonical = to_json(*this).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

nlohmann::json to_json(const Schema& schema) {
    nlohmann::json attrs = nlohmann::json::array();
    for (const auto& a : schema.attributes) {
        nlohmann::json cats = nlohmann::json::array();
        for (const auto& c : a.categories) cats.push_back({{"code", c.code}, {"meaning", c.meaning}});
        nlohmann::json item{{"index", a.index},
                            {"name", a.name},
                            {"kind", a.kind == AttributeKind::categorical ? "categorical" : "numeric"},
                            {"categories", cats},
                            {"missing_markers", a.missing_markers}};
        if (a.is_label) {
            item["label"] = true;
            item["binarize"] = a.binarize;
        }
        attrs.push_back(std::move(item));
    }
    return {{"format", "cardio-schema"},
            {"version", Schema::kFormatVersion},
            {"name", schema.name},
            {"expert", schema.expert},
            {"alpha_cap", schema.alpha_cap},
            {"attributes", attrs}};
}

Schema schema_from_json(const nlohmann::json& doc) {
    try {
        if (doc.at("format") != "cardio-schema") throw ConfigError("not a cardio-schema document");
        if (doc.at("version").get<int>() != Schema::kFormatVersion) {
            throw ConfigError("unsupported schema version " + doc.at("version").dump());
        }
        Schema s;
        s.name = doc.at("name").get<std::string>();
        s.expert = doc.at("expert").get<std::vector<int>>();
        s.alpha_cap = doc.at("alpha_cap").get<int>();
        for (const auto& item : doc.at("attributes")) {
            AttributeSchema a;
            a.index = item.at("index").get<int>();
            a.name = item.at("name").get<std::string>();
            const auto kind = item.at("kind").get<std::string>();
            if (kind == "categorical") {
                a.kind = AttributeKind::categorical;
            } else if (kind == "numeric") {
                a.kind = AttributeKind::numeric;
            } else {
                throw ConfigError("attribute " + a.name + ": unknown kind " + kind);
            }
            for (const auto& c : item.at("categories")) {
                a.categories.push_back({c.at("code").get<int>(), c.at("meaning").get<std::string>()});
            }
            a.missing_markers = item.at("missing_markers").get<std::vector<std::string>>();
            a.is_label = item.value("label", false);
            a.binarize = item.value("binarize", false);
            s.attributes.push_back(std::move(a));
        }
        s.validate();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed schema document: ") + e.what());
    }
}

Schema load_schema(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open schema file " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return schema_from_json(doc);
}

Schema builtin_schema(std::string_view name) {
    Schema s;
    if (name == "bhdc") {
        s = bhdc();
    } else if (name == "cleveland" || name == "uci") {
        s = uci("cleveland");
    } else if (name == "hungarian" || name == "switzerland" || name == "long-beach-va") {
        s = uci(std::string(name));
    } else {
        throw ArgumentError("unknown schema '" + std::string(name) + "'");
    }
    s.validate();
    return s;
}

std::vector<std::string> builtin_schema_names() {
    return {"bhdc", "cleveland", "hungarian", "switzerland", "long-beach-va"};
}

Schema resolve_schema(const std::string& name_or_path) {
    const auto names = builtin_schema_names();
    if (name_or_path == "uci" ||
        std::find(names.begin(), names.end(), name_or_path) != names.end()) {
        return builtin_schema(name_or_path);
    }
    return load_schema(name_or_path);
}

}  // namespace cardio
