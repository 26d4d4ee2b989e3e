#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace cardio {

enum class AttributeKind { categorical, numeric };

struct Category {
    int code = 0;
    std::string meaning;
};

struct AttributeSchema {
    int index = 0;  // 1-based attribute id as published for the dataset
    std::string name;
    AttributeKind kind = AttributeKind::categorical;
    std::vector<Category> categories;
    std::vector<std::string> missing_markers;
    bool is_label = false;
    // Label only: raw values > 0 collapse to 1 (UCI 0-4 severity field).
    bool binarize = false;

    bool has_code(int code) const;
    std::optional<int> code_for_meaning(std::string_view meaning) const;
    std::string_view meaning_of(int code) const;
    bool is_missing(std::string_view cell) const;
};

// An ordered attribute list for one dataset family. The CSV column order is
// the attribute order; exactly one attribute is the label.
struct Schema {
    static constexpr int kFormatVersion = 1;

    std::string name;
    std::vector<AttributeSchema> attributes;
    std::vector<int> expert;  // expert-recommended attribute indices
    int alpha_cap = 18;       // largest top-n in the selection sweep

    // Throws ConfigError on duplicate indices/codes or a missing label.
    void validate() const;

    const AttributeSchema& label() const;
    std::size_t label_position() const;
    const AttributeSchema& attribute(int index) const;
    std::optional<std::size_t> position(int index) const;
    bool contains(int index) const { return position(index).has_value(); }
    // Non-label attribute indices in schema order.
    std::vector<int> feature_indices() const;

    // Stable 16-hex-digit digest of the canonical JSON form.
    std::string fingerprint() const;
};

nlohmann::json to_json(const Schema& schema);
Schema schema_from_json(const nlohmann::json& doc);
Schema load_schema(const std::string& path);

// Built-in schemas: "bhdc", "cleveland", "hungarian", "switzerland",
// "long-beach-va". "uci" is accepted as an alias of "cleveland".
Schema builtin_schema(std::string_view name);
std::vector<std::string> builtin_schema_names();

// Resolves a built-in name or a path to a schema document.
Schema resolve_schema(const std::string& name_or_path);

}  // namespace cardio
