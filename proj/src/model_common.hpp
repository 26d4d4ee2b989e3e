#pragma once

#include <vector>

#include "cardio/classifiers.hpp"

namespace cardio::detail {

// Shell model for `train` plus the (optionally standardised) training rows.
struct Prepared {
    TrainedModel model;
    std::vector<std::vector<double>> rows;
};

Prepared prepare_training(const Dataset& train, const Hyperparams& h, Variant expected);

// Arity check plus standardisation of a query vector.
std::vector<double> prepare_query(const TrainedModel& m, std::span<const double> x);

void require_both_classes(const Dataset& train, std::string_view who);

}  // namespace cardio::detail
