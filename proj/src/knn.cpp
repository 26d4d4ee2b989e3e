#include <algorithm>
#include <numeric>

#include "cardio/classifiers.hpp"
#include "cardio/error.hpp"
#include "model_common.hpp"

namespace cardio {

TrainedModel fit_knn(const Dataset& train, const Hyperparams& h) {
    auto prepared = detail::prepare_training(train, h, Variant::knn);
    if (static_cast<std::size_t>(h.knn_k) > train.size()) {
        throw ArgumentError("knn_k=" + std::to_string(h.knn_k) + " exceeds training size " +
                            std::to_string(train.size()));
    }
    KnnPayload payload;
    payload.rows = std::move(prepared.rows);
    payload.labels = train.labels;
    payload.k = h.knn_k;
    prepared.model.payload = std::move(payload);
    return prepared.model;
}

// Neighbours ordered by (distance, training row). A tied vote is re-cast
// over the nearest k-1, k-2, ... neighbours; label 0 if it never resolves.
Prediction predict_knn(const TrainedModel& model, std::span<const double> x) {
    if (model.variant != Variant::knn) throw ArgumentError("predict_knn on a non-KNN model");
    const auto q = detail::prepare_query(model, x);
    const auto& p = std::get<KnnPayload>(model.payload);
    const auto k = static_cast<std::size_t>(p.k);
    if (k > p.rows.size()) {
        throw ArgumentError("knn_k=" + std::to_string(p.k) + " exceeds training size " +
                            std::to_string(p.rows.size()));
    }
    std::vector<std::pair<double, std::size_t>> dist;
    dist.reserve(p.rows.size());
    for (std::size_t i = 0; i < p.rows.size(); ++i) dist.emplace_back(euclidean(q, p.rows[i]), i);
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());

    std::vector<int> prefix_pos(k + 1, 0);
    for (std::size_t m = 0; m < k; ++m) prefix_pos[m + 1] = prefix_pos[m] + p.labels[dist[m].second];

    Prediction out;
    out.score = static_cast<double>(prefix_pos[k]) / static_cast<double>(k);
    out.label = 0;
    for (std::size_t m = k; m >= 1; --m) {
        const int pos = prefix_pos[m];
        const int neg = static_cast<int>(m) - pos;
        if (pos != neg) {
            out.label = pos > neg ? 1 : 0;
            break;
        }
    }
    return out;
}

}  // namespace cardio
