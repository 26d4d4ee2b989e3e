#include "cardio/selection.hpp"

#include <algorithm>
#include <array>
#include <set>

#include "cardio/error.hpp"

namespace cardio {

std::string FeatureSet::tag() const {
    switch (kind) {
        case SelectionKind::expert: return "beta";
        case SelectionKind::anova: return "alpha-" + std::to_string(n);
        case SelectionKind::fused: return "eta";
    }
    return "?";
}

void FeatureSet::validate() const {
    if (indices.empty()) throw ArgumentError("feature set " + tag() + " is empty");
    std::set<int> seen;
    for (int i : indices) {
        if (!seen.insert(i).second) {
            throw ArgumentError("feature set " + tag() + " repeats attribute " + std::to_string(i));
        }
    }
}

FeatureSet expert_set(const Schema& schema) {
    FeatureSet fs;
    fs.indices = schema.expert;
    fs.kind = SelectionKind::expert;
    fs.schema = schema.name;
    return fs;
}

FScore anova_f(const Dataset& d, int attribute) {
    const auto col = d.column_of(attribute);
    if (!col) {
        throw ArgumentError("anova_f: attribute " + std::to_string(attribute) + " not in dataset");
    }
    const auto counts = d.class_counts();
    if (counts[0] == 0 || counts[1] == 0) {
        throw ArgumentError("anova_f: both classes must be present");
    }
    constexpr int kClasses = 2;
    const std::size_t n = d.size();
    const std::size_t c = *col;

    // Exact-equality bookkeeping so constant columns give exact zeros
    // instead of rounding residue.
    std::array<bool, 2> class_constant{true, true};
    std::array<double, 2> first{0.0, 0.0};
    std::array<bool, 2> seen{false, false};
    const double pivot = d.rows[0][c];
    std::array<double, 2> shifted_sum{0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
        const auto y = static_cast<std::size_t>(d.labels[i]);
        const double x = d.rows[i][c];
        if (!seen[y]) {
            seen[y] = true;
            first[y] = x;
        } else if (x != first[y]) {
            class_constant[y] = false;
        }
        shifted_sum[y] += x - pivot;
    }
    std::array<double, 2> mean{};
    for (std::size_t y = 0; y < 2; ++y) {
        mean[y] = class_constant[y] ? first[y]
                                    : pivot + shifted_sum[y] / static_cast<double>(counts[y]);
    }
    const bool all_constant = class_constant[0] && class_constant[1] && first[0] == first[1];

    FScore s;
    s.attribute = attribute;
    if (!all_constant) {
        const double overall = pivot + (shifted_sum[0] + shifted_sum[1]) / static_cast<double>(n);
        double between = 0.0;
        for (std::size_t y = 0; y < 2; ++y) {
            const double dm = mean[y] - overall;
            between += static_cast<double>(counts[y]) * dm * dm;
        }
        s.s2_between = between / (kClasses - 1);
    }
    if (!(class_constant[0] && class_constant[1]) && n > static_cast<std::size_t>(kClasses)) {
        double within = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double dx = d.rows[i][c] - mean[static_cast<std::size_t>(d.labels[i])];
            within += dx * dx;
        }
        s.s2_within = within / static_cast<double>(n - kClasses);
    }

    if (s.s2_within > 0.0) {
        s.f = s.s2_between / s.s2_within;
    } else if (s.s2_between > 0.0) {
        s.f = std::numeric_limits<double>::infinity();
    } else {
        s.f = 0.0;
    }
    return s;
}

std::vector<FScore> rank(const Dataset& d) {
    std::vector<FScore> out;
    out.reserve(d.arity());
    for (int attribute : d.columns) out.push_back(anova_f(d, attribute));
    std::sort(out.begin(), out.end(), [](const FScore& a, const FScore& b) {
        if (a.f != b.f) return a.f > b.f;
        return a.attribute < b.attribute;
    });
    return out;
}

FeatureSet top_n(const std::vector<FScore>& ranking, int n, std::string schema) {
    if (n < 1 || static_cast<std::size_t>(n) > ranking.size()) {
        throw ArgumentError("top_n: n=" + std::to_string(n) + " outside [1, " +
                            std::to_string(ranking.size()) + "]");
    }
    FeatureSet fs;
    fs.kind = SelectionKind::anova;
    fs.n = n;
    fs.schema = std::move(schema);
    for (int i = 0; i < n; ++i) fs.indices.push_back(ranking[static_cast<std::size_t>(i)].attribute);
    return fs;
}

FeatureSet fuse(const FeatureSet& alpha, const FeatureSet& beta) {
    if (!alpha.schema.empty() && !beta.schema.empty() && alpha.schema != beta.schema) {
        throw ArgumentError("fuse: feature sets target different schemas (" + alpha.schema +
                            " vs " + beta.schema + ")");
    }
    alpha.validate();
    beta.validate();
    FeatureSet eta;
    eta.kind = SelectionKind::fused;
    eta.schema = beta.schema.empty() ? alpha.schema : beta.schema;
    std::set<int> seen;
    for (const auto* source : {&beta, &alpha}) {
        for (int i : source->indices) {
            if (seen.insert(i).second) eta.indices.push_back(i);
        }
    }
    return eta;
}

Dataset project(const Dataset& d, const FeatureSet& fs) {
    fs.validate();
    if (!fs.schema.empty() && fs.schema != d.schema.name) {
        throw ArgumentError("project: feature set targets schema " + fs.schema + ", dataset is " +
                            d.schema.name);
    }
    std::vector<std::size_t> picks;
    picks.reserve(fs.size());
    for (int index : fs.indices) {
        const auto c = d.column_of(index);
        if (!c) {
            throw ArgumentError("project: attribute " + std::to_string(index) +
                                " is not a column of " + d.name);
        }
        picks.push_back(*c);
    }
    Dataset out;
    out.name = d.name;
    out.schema = d.schema;
    out.columns = fs.indices;
    out.labels = d.labels;
    out.provenance = Provenance::projected;
    out.rows.reserve(d.size());
    for (const auto& row : d.rows) {
        std::vector<double> r;
        r.reserve(picks.size());
        for (auto p : picks) r.push_back(row[p]);
        out.rows.push_back(std::move(r));
    }
    return out;
}

}  // namespace cardio
