#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cardio/schema.hpp"

namespace cardio {

enum class Provenance { raw, cleaned, encoded, projected };

std::string_view to_string(Provenance p);

// Verbatim CSV cells in schema column order, label column included.
struct RawDataset {
    std::string name;
    Schema schema;
    std::vector<std::vector<std::string>> cells;
    Provenance provenance = Provenance::raw;
    std::size_t dropped = 0;  // rows removed by the clean() call that produced this

    std::size_t size() const { return cells.size(); }
};

// Encoded numeric table. `columns` names the attribute index of each row
// position; the label is held separately.
struct Dataset {
    std::string name;
    Schema schema;
    std::vector<int> columns;
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    Provenance provenance = Provenance::encoded;

    std::size_t size() const { return rows.size(); }
    std::size_t arity() const { return columns.size(); }
    std::array<std::size_t, 2> class_counts() const;
    std::optional<std::size_t> column_of(int attribute) const;
    const AttributeSchema& column_schema(std::size_t column) const {
        return schema.attribute(columns.at(column));
    }
    std::vector<double> column(std::size_t c) const;

    // Rows picked by position, in the order given.
    Dataset subset(std::span<const std::size_t> row_positions) const;
};

RawDataset load_csv(const std::filesystem::path& path, const Schema& schema);
RawDataset parse_csv(std::istream& in, const Schema& schema, std::string name);

// Drops every row with a missing marker in any of `attributes` or in the
// label. An empty list means every attribute. Order preserving.
RawDataset clean(const RawDataset& raw, std::span<const int> attributes = {});

Dataset encode(const RawDataset& cleaned);

// Inverse of encode on the cleaned representation: categorical cells come
// back as their integer codes, numeric cells in shortest round-trip form.
RawDataset decode(const Dataset& encoded);

// Convenience: load, clean over all attributes, encode.
Dataset load_dataset(const std::filesystem::path& path, const Schema& schema);

// Canonical dump: header of attribute names, columns in dataset order, label
// last, numbers in shortest round-trip form.
void write_csv(std::ostream& out, const Dataset& d);

struct SplitSpec {
    double train_fraction = 0.70;
    std::uint64_t seed = 42;
    bool stratified = true;
};

struct Split {
    Dataset train;
    Dataset test;
    std::vector<std::size_t> train_rows;  // positions in the source dataset, ascending
    std::vector<std::size_t> test_rows;
};

Split split_stratified(const Dataset& d, const SplitSpec& spec);

struct FoldPlan {
    int k = 5;
    std::uint64_t seed = 42;
    std::vector<int> fold_assignments;  // one fold id per row

    std::vector<std::size_t> fold_rows(int fold) const;
    std::vector<std::size_t> training_rows(int fold) const;
};

FoldPlan make_folds(const Dataset& d, FoldPlan plan);

// Synthetic stand-in for the private BHDC questionnaire data. See
// src/synth.cpp for the generative story.
Dataset synth_bhdc(int n, std::uint64_t seed);

}  // namespace cardio
