#include <doctest.h>

#include "support/sim_data.hpp"
#include "tabaug/csv.hpp"
#include "tabaug/serialize.hpp"

using namespace tabaug;

TEST_CASE("forest json round trip preserves structure and predictions") {
    const Table t = sim::gaussian_blobs(80, 2.0, 4);
    ForestParams p;
    p.n_trees = 15;
    const Forest f = fit_classifier(t, "label", p, 7);
    const nlohmann::json j = forest_to_json(f);
    const Forest back = forest_from_json(j);
    CHECK(forest_to_json(back).dump() == j.dump());
    const Table x = drop_columns(t, {"label"});
    CHECK(predict_proba(back, x).probs == predict_proba(f, x).probs);
    CHECK(oob_accuracy(back).accuracy == oob_accuracy(f).accuracy);
}

TEST_CASE("arf json round trip preserves generation bit-exactly") {
    const Table t = sim::bivariate_gaussian(300, 0.7, 12);
    ArfParams p;
    p.n_trees = 40;
    const ArfModel m = fit_arf(t, p, 5);
    const ArfModel back = arf_from_json(arf_to_json(m));
    CHECK(emit_csv(generate(back, 100, 9)) == emit_csv(generate(m, 100, 9)));
    Evidence ev;
    ev.emplace("x", Cell::number(0.4));
    CHECK(emit_csv(sample_conditional(back, ev, 50, 3).table) ==
          emit_csv(sample_conditional(m, ev, 50, 3).table));
}

TEST_CASE("imputer json round trip for both kinds") {
    const Table masked = sim::mask_mcar(sim::bivariate_gaussian(150, 0.8, 3), 0.15, 4);
    const ImputerModel mm = fit_meanmode(masked);
    const ImputerModel mm_back = imputer_from_json(imputer_to_json(mm));
    CHECK(emit_csv(apply_imputer(mm_back, masked)) == emit_csv(apply_imputer(mm, masked)));

    ArfParams p;
    p.n_trees = 30;
    const ImputerModel ma = fit_missarf(masked, p, 6);
    const ImputerModel ma_back = imputer_from_json(imputer_to_json(ma));
    CHECK(emit_csv(apply_imputer(ma_back, masked)) == emit_csv(apply_imputer(ma, masked)));
}

TEST_CASE("lr json round trip preserves predictions") {
    const Table t = sim::logistic_sim(200, 1.5, 8);
    LrParams p;
    const FittedLR m = fit_multinomial_lr(t, "y", p, 0);
    const FittedLR back = lr_from_json(lr_to_json(m));
    const Table x = drop_columns(t, {"y"});
    CHECK(predict_proba_lr(back, x).matrix.probs == predict_proba_lr(m, x).matrix.probs);
    CHECK(back.reference_class == m.reference_class);
}

TEST_CASE("format tags are checked") {
    const Table t = sim::logistic_sim(40, 1.0, 1);
    LrParams p;
    const FittedLR m = fit_multinomial_lr(t, "y", p, 0);
    nlohmann::json j = lr_to_json(m);
    j["format"] = "something.else";
    CHECK_THROWS_AS(lr_from_json(j), Error);
    CHECK_THROWS_AS(forest_from_json(j), Error);
}
