#include "cardio/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>

#include "cardio/error.hpp"
#include "cardio/rng.hpp"
#include "cardio/text.hpp"

namespace cardio {

std::string_view to_string(Provenance p) {
    switch (p) {
        case Provenance::raw: return "raw";
        case Provenance::cleaned: return "cleaned";
        case Provenance::encoded: return "encoded";
        case Provenance::projected: return "projected";
    }
    return "?";
}

std::array<std::size_t, 2> Dataset::class_counts() const {
    std::array<std::size_t, 2> counts{0, 0};
    for (int y : labels) ++counts[static_cast<std::size_t>(y)];
    return counts;
}

std::optional<std::size_t> Dataset::column_of(int attribute) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i] == attribute) return i;
    }
    return std::nullopt;
}

std::vector<double> Dataset::column(std::size_t c) const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.at(c));
    return out;
}

Dataset Dataset::subset(std::span<const std::size_t> row_positions) const {
    Dataset out;
    out.name = name;
    out.schema = schema;
    out.columns = columns;
    out.provenance = provenance;
    out.rows.reserve(row_positions.size());
    out.labels.reserve(row_positions.size());
    for (auto p : row_positions) {
        out.rows.push_back(rows.at(p));
        out.labels.push_back(labels.at(p));
    }
    return out;
}

namespace {

bool looks_like_header(const std::vector<std::string>& fields, const Schema& schema) {
    if (fields.empty() || schema.attributes.empty()) return false;
    const auto first = trim(fields[0]);
    const auto& attr = schema.attributes.front();
    if (first.empty() || parse_number(first)) return false;
    if (attr.is_missing(first) || attr.code_for_meaning(first)) return false;
    return true;
}

}  // namespace

RawDataset parse_csv(std::istream& in, const Schema& schema, std::string name) {
    RawDataset raw;
    raw.name = std::move(name);
    raw.schema = schema;
    auto records = read_csv_records(in);
    std::size_t first = 0;
    if (!records.empty() && looks_like_header(records[0].fields, schema)) first = 1;
    const std::size_t arity = schema.attributes.size();
    for (std::size_t i = first; i < records.size(); ++i) {
        auto& rec = records[i];
        if (rec.fields.size() != arity) {
            throw ParseError("expected " + std::to_string(arity) + " fields, found " +
                                 std::to_string(rec.fields.size()),
                             rec.line);
        }
        raw.cells.push_back(std::move(rec.fields));
    }
    return raw;
}

RawDataset load_csv(const std::filesystem::path& path, const Schema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    try {
        return parse_csv(in, schema, path.stem().string());
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what(), e.line());
    }
}

RawDataset clean(const RawDataset& raw, std::span<const int> attributes) {
    const auto& schema = raw.schema;
    const std::size_t label_pos = schema.label_position();
    std::vector<std::size_t> checked{label_pos};
    if (attributes.empty()) {
        for (std::size_t i = 0; i < schema.attributes.size(); ++i) {
            if (i != label_pos) checked.push_back(i);
        }
    } else {
        for (int a : attributes) {
            const auto p = schema.position(a);
            if (!p) throw ConfigError("clean: attribute " + std::to_string(a) + " not in schema");
            checked.push_back(*p);
        }
    }

    RawDataset out;
    out.name = raw.name;
    out.schema = schema;
    out.provenance = Provenance::cleaned;
    out.dropped = 0;
    for (const auto& row : raw.cells) {
        const bool missing = std::any_of(checked.begin(), checked.end(), [&](std::size_t p) {
            return schema.attributes[p].is_missing(row[p]);
        });
        if (missing) {
            ++out.dropped;
        } else {
            out.cells.push_back(row);
        }
    }
    return out;
}

namespace {

int encode_categorical(const AttributeSchema& attr, std::string_view cell, std::size_t row) {
    const auto text = trim(cell);
    auto fail = [&] {
        return EncodingError("row " + std::to_string(row + 1) + ", attribute " +
                             std::to_string(attr.index) + " (" + attr.name + "): '" +
                             std::string(text) + "' is not a valid code");
    };
    if (auto v = parse_number(text)) {
        if (*v != std::floor(*v) || std::abs(*v) > 1e9) throw fail();
        const int code = static_cast<int>(*v);
        if (attr.is_label && attr.binarize) {
            if (code < 0) throw fail();
            return code > 0 ? 1 : 0;
        }
        if (!attr.has_code(code)) throw fail();
        return code;
    }
    if (auto code = attr.code_for_meaning(text)) return *code;
    throw fail();
}

}  // namespace

Dataset encode(const RawDataset& cleaned) {
    if (cleaned.provenance != Provenance::cleaned) {
        throw ArgumentError("encode: dataset " + cleaned.name + " has not been cleaned");
    }
    const auto& schema = cleaned.schema;
    const std::size_t label_pos = schema.label_position();
    Dataset d;
    d.name = cleaned.name;
    d.schema = schema;
    d.provenance = Provenance::encoded;
    d.columns = schema.feature_indices();
    d.rows.reserve(cleaned.cells.size());
    for (std::size_t r = 0; r < cleaned.cells.size(); ++r) {
        const auto& cells = cleaned.cells[r];
        std::vector<double> row;
        row.reserve(d.columns.size());
        for (std::size_t p = 0; p < schema.attributes.size(); ++p) {
            const auto& attr = schema.attributes[p];
            if (p == label_pos) continue;
            if (attr.kind == AttributeKind::categorical) {
                row.push_back(encode_categorical(attr, cells[p], r));
            } else {
                const auto v = parse_number(cells[p]);
                if (!v || !std::isfinite(*v)) {
                    throw EncodingError("row " + std::to_string(r + 1) + ", attribute " +
                                        std::to_string(attr.index) + " (" + attr.name + "): '" +
                                        cells[p] + "' is not numeric");
                }
                row.push_back(*v);
            }
        }
        d.rows.push_back(std::move(row));
        d.labels.push_back(encode_categorical(schema.attributes[label_pos], cells[label_pos], r));
    }
    return d;
}

RawDataset decode(const Dataset& d) {
    RawDataset raw;
    raw.name = d.name;
    raw.schema = d.schema;
    raw.provenance = Provenance::cleaned;
    const auto& schema = d.schema;
    for (std::size_t r = 0; r < d.size(); ++r) {
        std::vector<std::string> cells(schema.attributes.size());
        for (std::size_t p = 0; p < schema.attributes.size(); ++p) {
            const auto& attr = schema.attributes[p];
            if (attr.is_label) {
                cells[p] = std::to_string(d.labels[r]);
                continue;
            }
            const auto c = d.column_of(attr.index);
            if (!c) throw ArgumentError("decode: dataset lacks attribute " + std::to_string(attr.index));
            cells[p] = format_number(d.rows[r][*c]);
        }
        raw.cells.push_back(std::move(cells));
    }
    return raw;
}

Dataset load_dataset(const std::filesystem::path& path, const Schema& schema) {
    return encode(clean(load_csv(path, schema)));
}

void write_csv(std::ostream& out, const Dataset& d) {
    for (std::size_t c = 0; c < d.columns.size(); ++c) {
        out << csv_escape(d.column_schema(c).name) << ',';
    }
    out << csv_escape(d.schema.label().name) << '\n';
    for (std::size_t r = 0; r < d.size(); ++r) {
        for (double v : d.rows[r]) out << format_number(v) << ',';
        out << d.labels[r] << '\n';
    }
}

Split split_stratified(const Dataset& d, const SplitSpec& spec) {
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
        throw SplitError("train_fraction must lie in (0, 1)");
    }
    const auto counts = d.class_counts();
    if (counts[0] < 2 || counts[1] < 2) {
        throw SplitError("split: each class needs at least 2 samples (have " +
                         std::to_string(counts[0]) + " negative, " + std::to_string(counts[1]) +
                         " positive)");
    }
    Rng rng(spec.seed);
    std::vector<std::size_t> train;
    if (spec.stratified) {
        for (int cls = 0; cls < 2; ++cls) {
            std::vector<std::size_t> members;
            for (std::size_t i = 0; i < d.size(); ++i) {
                if (d.labels[i] == cls) members.push_back(i);
            }
            rng.shuffle(std::span(members));
            const auto take =
                static_cast<std::size_t>(std::lround(spec.train_fraction * members.size()));
            train.insert(train.end(), members.begin(), members.begin() + take);
        }
    } else {
        std::vector<std::size_t> all(d.size());
        std::iota(all.begin(), all.end(), 0);
        rng.shuffle(std::span(all));
        const auto take = static_cast<std::size_t>(std::lround(spec.train_fraction * d.size()));
        train.assign(all.begin(), all.begin() + take);
    }
    std::sort(train.begin(), train.end());
    std::vector<std::size_t> test;
    std::size_t t = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (t < train.size() && train[t] == i) {
            ++t;
        } else {
            test.push_back(i);
        }
    }
    Split s;
    s.train = d.subset(train);
    s.test = d.subset(test);
    s.train_rows = std::move(train);
    s.test_rows = std::move(test);
    return s;
}

std::vector<std::size_t> FoldPlan::fold_rows(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_assignments.size(); ++i) {
        if (fold_assignments[i] == fold) out.push_back(i);
    }
    return out;
}

std::vector<std::size_t> FoldPlan::training_rows(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_assignments.size(); ++i) {
        if (fold_assignments[i] != fold) out.push_back(i);
    }
    return out;
}

FoldPlan make_folds(const Dataset& d, FoldPlan plan) {
    if (plan.k < 2) throw FoldError("k must be at least 2");
    const auto counts = d.class_counts();
    const auto minority = std::min(counts[0], counts[1]);
    if (static_cast<std::size_t>(plan.k) > minority) {
        throw FoldError("k=" + std::to_string(plan.k) + " exceeds minority class count " +
                        std::to_string(minority));
    }
    Rng rng(plan.seed);
    plan.fold_assignments.assign(d.size(), -1);
    // One round-robin deal across both classes: per-class and total fold
    // sizes each differ by at most one.
    std::size_t next = 0;
    for (int cls = 0; cls < 2; ++cls) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < d.size(); ++i) {
            if (d.labels[i] == cls) members.push_back(i);
        }
        rng.shuffle(std::span(members));
        for (auto m : members) {
            plan.fold_assignments[m] = static_cast<int>(next % plan.k);
            ++next;
        }
    }
    return plan;
}

}  // namespace cardio
