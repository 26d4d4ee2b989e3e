#include <algorithm>
#include <map>
#include <numeric>

#include "cardio/classifiers.hpp"
#include "cardio/error.hpp"
#include "model_common.hpp"

namespace cardio {

int TreePayload::depth() const {
    int d = 0;
    for (const auto& n : nodes) d = std::max(d, n.depth);
    return d;
}

namespace {

struct Split {
    bool found = false;
    int column = -1;
    bool categorical = false;
    double threshold = 0.0;
    double impurity = 0.0;
};

class TreeBuilder {
public:
    TreeBuilder(const std::vector<std::vector<double>>& rows, const std::vector<int>& labels,
                std::vector<bool> categorical, const Hyperparams& h)
        : rows_(rows), labels_(labels), categorical_(std::move(categorical)), h_(h) {}

    TreePayload build() {
        std::vector<std::size_t> all(rows_.size());
        std::iota(all.begin(), all.end(), 0);
        grow(all, 0);
        return std::move(tree_);
    }

private:
    double impurity(const std::array<int, 2>& counts) const {
        return h_.dt_criterion == Criterion::gini ? gini(counts) : entropy(counts);
    }

    std::array<int, 2> count(const std::vector<std::size_t>& idx) const {
        std::array<int, 2> c{0, 0};
        for (auto i : idx) ++c[static_cast<std::size_t>(labels_[i])];
        return c;
    }

    Split best_split(const std::vector<std::size_t>& idx) const {
        Split best;
        const double n = static_cast<double>(idx.size());
        const std::size_t d = categorical_.size();
        for (std::size_t col = 0; col < d; ++col) {
            if (categorical_[col]) {
                std::map<double, std::array<int, 2>> groups;
                for (auto i : idx) ++groups[rows_[i][col]][static_cast<std::size_t>(labels_[i])];
                if (groups.size() < 2) continue;
                double weighted = 0.0;
                for (const auto& [code, c] : groups) {
                    weighted += (c[0] + c[1]) / n * impurity(c);
                }
                if (!best.found || weighted < best.impurity) {
                    best = {true, static_cast<int>(col), true, 0.0, weighted};
                }
            } else {
                std::vector<std::pair<double, int>> values;
                values.reserve(idx.size());
                for (auto i : idx) values.emplace_back(rows_[i][col], labels_[i]);
                std::sort(values.begin(), values.end());
                std::array<int, 2> left{0, 0};
                auto right = count(idx);
                for (std::size_t k = 0; k + 1 < values.size(); ++k) {
                    ++left[static_cast<std::size_t>(values[k].second)];
                    --right[static_cast<std::size_t>(values[k].second)];
                    if (values[k].first == values[k + 1].first) continue;
                    const double nl = k + 1.0;
                    const double weighted =
                        nl / n * impurity(left) + (n - nl) / n * impurity(right);
                    if (!best.found || weighted < best.impurity) {
                        const double mid = values[k].first + (values[k + 1].first - values[k].first) / 2.0;
                        best = {true, static_cast<int>(col), false, mid, weighted};
                    }
                }
            }
        }
        return best;
    }

    int grow(const std::vector<std::size_t>& idx, int depth) {
        const int id = static_cast<int>(tree_.nodes.size());
        tree_.nodes.emplace_back();
        auto counts = count(idx);
        tree_.nodes[static_cast<std::size_t>(id)].counts = counts;
        tree_.nodes[static_cast<std::size_t>(id)].depth = depth;
        const bool pure = counts[0] == 0 || counts[1] == 0;
        if (pure || depth >= h_.dt_max_depth) return id;

        // Zero-gain splits are allowed (child impurity <= parent always holds);
        // greedy growth would otherwise stall on XOR-like interactions.
        const Split s = best_split(idx);
        if (!s.found) return id;

        const auto col = static_cast<std::size_t>(s.column);
        if (s.categorical) {
            std::map<double, std::vector<std::size_t>> parts;
            for (auto i : idx) parts[rows_[i][col]].push_back(i);
            std::vector<std::pair<int, int>> branches;
            for (const auto& [code, members] : parts) {
                const int child = grow(members, depth + 1);
                branches.emplace_back(static_cast<int>(code), child);
            }
            auto& node = tree_.nodes[static_cast<std::size_t>(id)];
            node.column = s.column;
            node.categorical = true;
            node.branches = std::move(branches);
        } else {
            std::vector<std::size_t> left, right;
            for (auto i : idx) (rows_[i][col] <= s.threshold ? left : right).push_back(i);
            const int l = grow(left, depth + 1);
            const int r = grow(right, depth + 1);
            auto& node = tree_.nodes[static_cast<std::size_t>(id)];
            node.column = s.column;
            node.categorical = false;
            node.threshold = s.threshold;
            node.left = l;
            node.right = r;
        }
        return id;
    }

    const std::vector<std::vector<double>>& rows_;
    const std::vector<int>& labels_;
    std::vector<bool> categorical_;
    const Hyperparams& h_;
    TreePayload tree_;
};

}  // namespace

TrainedModel fit_dt(const Dataset& train, const Hyperparams& h) {
    auto prepared = detail::prepare_training(train, h, Variant::dt);
    std::vector<bool> categorical(train.arity());
    for (std::size_t c = 0; c < train.arity(); ++c) {
        categorical[c] = train.column_schema(c).kind == AttributeKind::categorical;
    }
    TreeBuilder builder(prepared.rows, train.labels, std::move(categorical), h);
    prepared.model.payload = builder.build();
    return prepared.model;
}

}  // namespace cardio
