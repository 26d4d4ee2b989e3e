#include <array>
#include <cmath>
#include <numeric>
#include <vector>

#include "cardio/dataset.hpp"
#include "cardio/error.hpp"
#include "cardio/rng.hpp"

namespace cardio {

// Generative story for the synthetic BHDC table.
//
// 1. The label count is fixed: round(n * 313 / 563) positives, the rest
//    negative, placed at shuffled row positions.
// 2. Every personal attribute is drawn from a class-conditional categorical
//    distribution (NEG / POS rows below). Diabetes (7), cholesterol (8),
//    chest pain (9) and hypertension (10) carry strong signal; age, gender and
//    smoking carry mild signal; the rest are near noise.
// 3. Family history (14) is class-conditional. The family-member block
//    (15-18) is N/A unless family history is "Yes"; given "Yes", member age
//    (16), member gender (17) and disease type (18) carry additional signal
//    that is not recoverable from attribute 14 alone. Relationship (15) is
//    frequently left N/A even when history is "Yes" and is uninformative
//    beyond that.
// 4. Smoking condition (4) is N/A unless the smoking habit (3) is "Yes".
namespace {

struct Conditional {
    std::vector<double> neg;
    std::vector<double> pos;
};

const Conditional& table(int attribute) {
    static const std::array<Conditional, 19> t = [] {
        std::array<Conditional, 19> a;
        a[1] = {{0.12, 0.33, 0.38, 0.17}, {0.06, 0.27, 0.45, 0.22}};
        a[2] = {{0.50, 0.48, 0.02}, {0.62, 0.36, 0.02}};
        a[3] = {{0.60, 0.35, 0.05}, {0.50, 0.45, 0.05}};
        a[4] = {{0.50, 0.50}, {0.35, 0.65}};  // given habit = Yes
        a[5] = {{0.25, 0.65, 0.10}, {0.33, 0.57, 0.10}};
        a[6] = {{0.38, 0.18, 0.12, 0.32}, {0.32, 0.12, 0.08, 0.48}};
        a[7] = {{0.80, 0.15, 0.05}, {0.40, 0.55, 0.05}};
        a[8] = {{0.68, 0.20, 0.12}, {0.25, 0.63, 0.12}};
        a[9] = {{0.06, 0.16, 0.28, 0.50}, {0.45, 0.30, 0.10, 0.15}};
        a[10] = {{0.70, 0.25, 0.05}, {0.28, 0.67, 0.05}};
        a[11] = {{0.32, 0.15, 0.53}, {0.35, 0.22, 0.43}};
        a[12] = {{0.15, 0.30, 0.25, 0.30}, {0.20, 0.33, 0.25, 0.22}};
        a[13] = {{0.40, 0.40, 0.20}, {0.48, 0.36, 0.16}};
        a[14] = {{0.62, 0.33, 0.05}, {0.30, 0.65, 0.05}};
        a[15] = {{0.22, 0.18, 0.60}, {0.22, 0.18, 0.60}};  // given history = Yes
        a[16] = {{0.15, 0.85}, {0.85, 0.15}};              // given history = Yes
        a[17] = {{0.20, 0.80}, {0.80, 0.20}};              // given history = Yes
        a[18] = {{0.15, 0.85}, {0.85, 0.15}};              // given history = Yes
        return a;
    }();
    return t.at(static_cast<std::size_t>(attribute));
}

constexpr int kNotApplicable = 2;

}  // namespace

Dataset synth_bhdc(int n, std::uint64_t seed) {
    if (n < 4) throw ArgumentError("synth_bhdc: n must be at least 4");
    Rng rng(seed);

    const auto positives = static_cast<std::size_t>(std::lround(n * 313.0 / 563.0));
    std::vector<int> labels(static_cast<std::size_t>(n), 0);
    std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(positives), 1);
    rng.shuffle(std::span(labels));

    Dataset d;
    d.name = "bhdc";
    d.schema = builtin_schema("bhdc");
    d.columns = d.schema.feature_indices();
    d.provenance = Provenance::encoded;
    d.labels = labels;
    d.rows.reserve(labels.size());

    for (int y : labels) {
        auto draw = [&](int attribute) {
            const auto& c = table(attribute);
            return rng.categorical(y ? c.pos : c.neg);
        };
        std::vector<double> row(18);
        for (int a = 1; a <= 18; ++a) {
            int code = 0;
            switch (a) {
                case 4:
                    code = row[2] == 1 ? draw(4) : kNotApplicable;
                    break;
                case 15:
                case 16:
                case 17:
                case 18:
                    code = row[13] == 1 ? draw(a) : kNotApplicable;
                    break;
                default:
                    code = draw(a);
            }
            row[static_cast<std::size_t>(a - 1)] = code;
        }
        d.rows.push_back(std::move(row));
    }
    return d;
}

}  // namespace cardio
