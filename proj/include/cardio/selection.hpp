#pragma once

#include <limits>
#include <string>
#include <vector>

#include "cardio/dataset.hpp"

namespace cardio {

// One-way ANOVA summary for a single attribute against the binary label.
// f is +infinity when the attribute separates the classes with zero
// within-class spread, and 0 when it carries no between-class spread.
struct FScore {
    int attribute = 0;
    double s2_between = 0.0;
    double s2_within = 0.0;
    double f = 0.0;

    bool separating() const { return f == std::numeric_limits<double>::infinity(); }
};

enum class SelectionKind { expert, anova, fused };

struct FeatureSet {
    std::vector<int> indices;
    SelectionKind kind = SelectionKind::expert;
    int n = 0;           // top-n size, anova only
    std::string schema;  // schema name the indices refer to; empty = unchecked

    // "beta", "alpha-<n>" or "eta".
    std::string tag() const;
    std::size_t size() const { return indices.size(); }
    // Throws ArgumentError when empty or duplicated.
    void validate() const;
};

FeatureSet expert_set(const Schema& schema);

FScore anova_f(const Dataset& d, int attribute);

// Every non-label column, descending by f; ties by ascending index.
std::vector<FScore> rank(const Dataset& d);

FeatureSet top_n(const std::vector<FScore>& ranking, int n, std::string schema = {});

// Duplicate-free union: beta in beta order, then alpha members not in beta.
FeatureSet fuse(const FeatureSet& alpha, const FeatureSet& beta);

Dataset project(const Dataset& d, const FeatureSet& fs);

}  // namespace cardio
