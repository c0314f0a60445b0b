#include "support/demo_data.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

#include "tabaug/rng.hpp"

namespace tabaug::demo {

namespace {

using rng::Rng;

const std::vector<std::string> kDestinations = {"acute_care", "rehab", "home", "nursing"};

double clamp_round(double v, double lo, double hi, double grid = 1.0) {
    v = std::clamp(v, lo, hi);
    return std::round(v / grid) * grid;
}

int bin(double v, int lo, int hi) {
    return std::clamp(static_cast<int>(std::lround(v)), lo, hi);
}

struct FeatureGen {
    Feature feature;
    double missing_rate = 0.0;
    std::function<Cell(double s, Rng& rng)> draw;
};

FeatureKind cat(std::initializer_list<const char*> levels) {
    std::vector<std::string> lv;
    for (const char* l : levels) lv.emplace_back(l);
    return FeatureKind::categorical(std::move(lv));
}

Cell pick(const std::vector<double>& probs, Rng& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return Cell::category(static_cast<int>(i));
    }
    return Cell::category(static_cast<int>(probs.size()) - 1);
}

// One generator table per feature; `aux` tweaks distributions and missing
// rates toward a register-style extract.
std::vector<FeatureGen> feature_generators(bool aux) {
    std::vector<FeatureGen> gens;
    auto add = [&](Feature f, double primary_miss, double aux_miss,
                   std::function<Cell(double, Rng&)> draw) {
        gens.push_back({std::move(f), aux ? aux_miss : primary_miss, std::move(draw)});
    };

    add({"department", cat({"avc", "uch", "uro"})}, 0.0, 0.0, [=](double, Rng& rng) {
        return aux ? pick({0.0, 1.0, 0.0}, rng) : pick({0.13, 0.75, 0.12}, rng);
    });
    add({"sex", cat({"male", "female"})}, 0.0, 0.0, [=](double, Rng& rng) {
        return pick(aux ? std::vector<double>{0.29, 0.71} : std::vector<double>{0.41, 0.59}, rng);
    });
    add({"age", FeatureKind::numeric()}, 0.0, 0.0, [=](double s, Rng& rng) {
        return Cell::number(clamp_round((aux ? 84.0 : 80.0) + 2.5 * s + rng.normal(0, 5), 65, 99));
    });
    add({"time_to_op_h", FeatureKind::numeric()}, 0.01, 0.02, [](double, Rng& rng) {
        return Cell::number(clamp_round(std::exp(rng.normal(7.4, 1.1)), 1, 40000));
    });
    add({"op_duration_min", FeatureKind::numeric()}, 0.01, 0.05, [](double, Rng& rng) {
        return Cell::number(clamp_round(std::exp(rng.normal(4.3, 0.55)), 10, 600));
    });
    add({"icu_minutes", FeatureKind::numeric()}, 0.10, 0.35, [](double s, Rng& rng) {
        return Cell::number(clamp_round(std::exp(rng.normal(5.3 + 0.4 * s, 1.0)), 0, 20000));
    });
    add({"blood_transfusion", cat({"yes", "no"})}, 0.0, 0.60, [](double s, Rng& rng) {
        return Cell::category(s + rng.normal(0, 1.3) > 0.9 ? 0 : 1);
    });
    add({"care_grade", cat({"g0", "g1", "g2", "g3", "g4", "g5"})}, 0.02, 0.20,
        [](double s, Rng& rng) {
            return Cell::category(bin(0.9 + 0.9 * s + rng.normal(0, 1.1), 0, 5));
        });
    add({"prev_living", cat({"assisted", "nursing_home", "home_with_help", "home_alone"})}, 0.0,
        0.05, [](double s, Rng& rng) {
            const double u = s + rng.normal(0, 1.0);
            if (u > 1.8) return Cell::category(1);
            if (u > 1.2) return Cell::category(0);
            if (u < -0.8) return Cell::category(3);
            return Cell::category(2);
        });
    add({"adl_help", cat({"yes", "no"})}, 0.0, 0.04, [](double s, Rng& rng) {
        return Cell::category(s + rng.normal(0, 1.0) > -1.1 ? 0 : 1);
    });
    if (!aux) {
        add({"social_contacts", FeatureKind::numeric()}, 0.02, 1.0, [](double s, Rng& rng) {
            return Cell::number(clamp_round(10 - 2.2 * s + rng.normal(0, 7), 0, 60));
        });
        add({"adl_pre_illness", FeatureKind::numeric()}, 0.01, 1.0, [](double s, Rng& rng) {
            return Cell::number(clamp_round(86 - 12 * s + rng.normal(0, 10), 0, 100, 5));
        });
        add({"adl_pre_op", FeatureKind::numeric()}, 0.0, 1.0, [](double s, Rng& rng) {
            return Cell::number(clamp_round(58 - 16 * s + rng.normal(0, 12), 0, 100, 5));
        });
        add({"adl_post_op_d1", FeatureKind::numeric()}, 0.03, 1.0, [](double s, Rng& rng) {
            return Cell::number(clamp_round(43 - 14 * s + rng.normal(0, 10), 0, 100, 5));
        });
        add({"adl_post_op_d3", FeatureKind::numeric()}, 0.08, 1.0, [](double s, Rng& rng) {
            return Cell::number(clamp_round(52 - 15 * s + rng.normal(0, 10), 0, 100, 5));
        });
        add({"adl_transfer_d3", cat({"t0", "t5", "t10", "t15"})}, 0.08, 1.0,
            [](double s, Rng& rng) {
                const double u = -s + rng.normal(0, 1.0);
                if (u > 0.8) return Cell::category(3);
                if (u > 0.1) return Cell::category(2);
                if (u > -0.7) return Cell::category(1);
                return Cell::category(0);
            });
    }
    add({"adl_discharge", FeatureKind::numeric()}, 0.01, 0.35, [](double s, Rng& rng) {
        return Cell::number(clamp_round(62 - 17 * s + rng.normal(0, 9), 0, 100, 5));
    });
    add({"mobility_pre_illness", FeatureKind::numeric()}, 0.03, 0.70, [](double s, Rng& rng) {
        return Cell::number(clamp_round(8 - 1.7 * s + rng.normal(0, 1.2), 0, 11));
    });
    if (!aux) {
        add({"mobility_d1", FeatureKind::numeric()}, 0.03, 1.0, [](double s, Rng& rng) {
            return Cell::number(clamp_round(2.6 - 1.5 * s + rng.normal(0, 1.4), 0, 11));
        });
        add({"mobility_d3", FeatureKind::numeric()}, 0.08, 1.0, [](double s, Rng& rng) {
            return Cell::number(clamp_round(4.3 - 1.7 * s + rng.normal(0, 1.3), 0, 11));
        });
    }
    add({"mobility_discharge", FeatureKind::numeric()}, 0.01, 0.75, [](double s, Rng& rng) {
        return Cell::number(clamp_round(5.4 - 1.9 * s + rng.normal(0, 1.1), 0, 11));
    });
    add({"risk_screen", cat({"r1", "r2", "r3", "r4", "r5", "r6"})}, 0.0, 0.50,
        [](double s, Rng& rng) {
            return Cell::category(bin(2.1 + 0.8 * s + rng.normal(0, 1.0), 0, 5));
        });
    add({"frailty_impression", cat({"yes", "no"})}, 0.02, 0.20, [](double s, Rng& rng) {
        return Cell::category(s + rng.normal(0, 0.9) > 0.0 ? 0 : 1);
    });
    if (!aux) {
        add({"frailty_scale", cat({"f1", "f2", "f3", "f4", "f5", "f6", "f7", "f8"})}, 0.03, 1.0,
            [](double s, Rng& rng) {
                return Cell::category(bin(3.4 + 1.3 * s + rng.normal(0, 1.2), 0, 7));
            });
    }
    add({"asa", cat({"a0", "a1", "a2", "a3", "a4"})}, 0.01, 0.03, [=](double s, Rng& rng) {
        return Cell::category(bin((aux ? 2.8 : 1.9) + 0.5 * s + rng.normal(0, 0.7), 0, 4));
    });
    add({"comorbidity_index", cat({"c0", "c1", "c2", "c3", "c4", "c5", "c6", "c7"})}, 0.0, 0.06,
        [=](double s, Rng& rng) {
            return Cell::category(bin((aux ? 2.2 : 1.3) + 0.8 * s + rng.normal(0, 1.2), 0, 7));
        });
    add({"n_medications", FeatureKind::numeric()}, 0.0, 0.06, [=](double s, Rng& rng) {
        return Cell::number(clamp_round((aux ? 6.9 : 8.7) + 1.3 * s + rng.normal(0, 3.2), 0, 25));
    });
    if (!aux) {
        add({"cognition_screen", FeatureKind::numeric()}, 0.10, 1.0, [](double s, Rng& rng) {
            return Cell::number(clamp_round(21.7 - 2.6 * s + rng.normal(0, 4.5), 0, 30));
        });
    }
    add({"dementia", cat({"yes", "no"})}, 0.02, 0.37, [=](double s, Rng& rng) {
        return Cell::category(s + rng.normal(0, 1.1) > (aux ? 0.6 : 1.7) ? 0 : 1);
    });
    add({"emergency", cat({"yes", "no"})}, 0.0, 0.02, [](double s, Rng& rng) {
        return Cell::category(0.3 * s + rng.normal(0, 1.0) > 0.2 ? 0 : 1);
    });
    add({"ops_group", cat({"g55", "g79", "g82", "g83", "other"})}, 0.0, 0.0,
        [=](double, Rng& rng) {
            return pick(aux ? std::vector<double>{0.0, 0.57, 0.30, 0.04, 0.09}
                            : std::vector<double>{0.07, 0.38, 0.17, 0.05, 0.33},
                        rng);
        });
    if (aux) {
        add({"cog_test_a", FeatureKind::numeric()}, 1.0, 0.50, [](double s, Rng& rng) {
            return Cell::number(clamp_round(24 - 2.5 * s + rng.normal(0, 5), 0, 30));
        });
        add({"cog_test_b", FeatureKind::numeric()}, 1.0, 0.50, [](double s, Rng& rng) {
            return Cell::number(clamp_round(21.6 - 2.8 * s + rng.normal(0, 5.5), 0, 30));
        });
    }
    return gens;
}

double class_severity(int destination, Rng& rng) {
    switch (destination) {
        case 0: return 0.5 + rng.normal(0, 0.7);   // acute_care
        case 1: return 0.1 + rng.normal(0, 0.7);   // rehab
        case 2: return -0.9 + rng.normal(0, 0.7);  // home
        default: return 1.6 + rng.normal(0, 0.7);  // nursing
    }
}

Table build(bool aux, const std::vector<std::size_t>& class_counts, double severity_shift,
            std::uint64_t seed) {
    Rng rng(seed);
    std::vector<int> labels;
    for (std::size_t c = 0; c < class_counts.size(); ++c) {
        labels.insert(labels.end(), class_counts[c], static_cast<int>(c));
    }
    for (std::size_t i = labels.size(); i > 1; --i) {
        std::swap(labels[i - 1], labels[rng.uniform_int(i)]);
    }

    const auto gens = feature_generators(aux);
    Schema schema;
    for (const auto& g : gens) schema.features.push_back(g.feature);
    schema.features.push_back({"destination", FeatureKind::categorical(kDestinations)});
    schema.target = "destination";

    const std::size_t p = schema.size();
    std::vector<Cell> cells(labels.size() * p);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double s = severity_shift + class_severity(labels[i], rng);
        for (std::size_t j = 0; j < gens.size(); ++j) {
            Cell value = gens[j].draw(s, rng);
            if (rng.uniform() < gens[j].missing_rate) value = Cell::missing();
            cells[i * p + j] = value;
        }
        cells[i * p + gens.size()] = Cell::category(labels[i]);
    }
    return Table(std::move(schema), std::move(cells));
}

}  // namespace

Table make_primary(std::uint64_t seed) {
    return build(false, {75, 9, 79, 6}, 0.0, rng::derive(seed, 0x7072696d));
}

Table make_auxiliary(std::uint64_t seed) {
    return build(true, {46, 6, 20, 10}, 0.5, rng::derive(seed, 0x617578));
}

}  // namespace tabaug::demo
