// tabaug: tabular data augmentation toolkit.
//
// Subcommands: combine (dataset fusion to CSV), impute (fit/apply an
// imputer), synth (fit an ARF and generate rows), experiment (the full
// augmentation-grid benchmark), sweep (synthetic-size sweep), pfi
// (stand-alone permutation importance), report (render result grids).

#include <CLI11.hpp>
#include <iostream>

#include "tabaug/csv.hpp"
#include "tabaug/experiment.hpp"
#include "tabaug/pfi.hpp"
#include "tabaug/rng.hpp"
#include "tabaug/serialize.hpp"

using namespace tabaug;

namespace {

struct ArfCliOptions {
    ArfParams params;
    void attach(CLI::App* app) {
        app->add_option("--arf-trees", params.n_trees, "discriminator trees per round");
        app->add_option("--arf-delta", params.delta, "tolerance on the 0.5 stop rule");
        app->add_option("--arf-max-iters", params.max_iters, "max adversarial rounds");
        app->add_option("--arf-min-node", params.min_node_size, "min leaf size");
    }
};

ImputerKind imputer_kind(const std::string& name) {
    if (name == "meanmode") return ImputerKind::MeanMode;
    if (name == "missarf") return ImputerKind::MissArf;
    throw ConfigError("unknown imputer '" + name + "' (use meanmode or missarf)");
}

ExperimentConfig load_config(const std::string& config_path, const std::string& from_summary) {
    nlohmann::json j;
    if (!from_summary.empty()) {
        j = load_json_file(from_summary).at("config");
    } else {
        j = load_json_file(config_path);
    }
    return experiment_config_from_json(j);
}

int run_cli(int argc, char** argv) {
    CLI::App app{"tabular data augmentation toolkit"};
    app.require_subcommand(1);

    // combine
    auto* combine = app.add_subcommand("combine", "fuse datasets by align/stack/impute");
    std::string c_primary, c_primary_schema, c_aux, c_aux_schema, c_mode = "joint",
                c_imputer = "meanmode", c_out, c_source = "source", c_model_out;
    std::vector<std::string> c_labels = {"primary", "aux"};
    std::uint64_t c_seed = 1;
    ArfCliOptions c_arf;
    combine->add_option("--primary", c_primary, "primary CSV")->required();
    combine->add_option("--primary-schema", c_primary_schema, "primary schema JSON")->required();
    combine->add_option("--auxiliary", c_aux, "auxiliary CSV")->required();
    combine->add_option("--auxiliary-schema", c_aux_schema, "auxiliary schema JSON")->required();
    combine->add_option("--mode", c_mode, "joint or transfer");
    combine->add_option("--imputer", c_imputer, "meanmode or missarf");
    combine->add_option("--seed", c_seed, "seed");
    combine->add_option("--out", c_out, "output CSV")->required();
    combine->add_option("--source-name", c_source, "source indicator column name");
    combine->add_option("--labels", c_labels, "source labels (primary auxiliary)")->expected(2);
    combine->add_option("--model-out", c_model_out, "write the fitted imputer JSON here");
    c_arf.attach(combine);

    // impute
    auto* impute = app.add_subcommand("impute", "fit an imputer and complete tables");
    std::string i_data, i_schema, i_imputer = "meanmode", i_out, i_model_out, i_apply, i_apply_out;
    std::uint64_t i_seed = 1;
    ArfCliOptions i_arf;
    impute->add_option("--data", i_data, "training CSV")->required();
    impute->add_option("--schema", i_schema, "schema JSON")->required();
    impute->add_option("--imputer", i_imputer, "meanmode or missarf");
    impute->add_option("--seed", i_seed, "seed");
    impute->add_option("--out", i_out, "imputed training CSV")->required();
    impute->add_option("--model-out", i_model_out, "write the fitted imputer JSON here");
    impute->add_option("--apply-to", i_apply, "additional CSV to impute with the same model");
    impute->add_option("--apply-out", i_apply_out, "output for --apply-to");
    i_arf.attach(impute);

    // synth
    auto* synth = app.add_subcommand("synth", "fit an ARF and generate synthetic rows");
    std::string s_data, s_schema, s_out, s_model_out;
    std::size_t s_n = 100;
    std::uint64_t s_seed = 1;
    ArfCliOptions s_arf;
    synth->add_option("--data", s_data, "training CSV")->required();
    synth->add_option("--schema", s_schema, "schema JSON")->required();
    synth->add_option("--n", s_n, "rows to generate");
    synth->add_option("--seed", s_seed, "seed");
    synth->add_option("--out", s_out, "synthetic CSV")->required();
    synth->add_option("--model-out", s_model_out, "write the fitted ARF JSON here");
    s_arf.attach(synth);

    // experiment / sweep
    auto* experiment = app.add_subcommand("experiment", "run the augmentation grid");
    std::string e_config, e_summary, e_out;
    std::uint64_t e_seed = 0;
    bool e_seed_set = false;
    experiment->add_option("--config", e_config, "config JSON");
    experiment->add_option("--from-summary", e_summary, "re-run from a summary JSON");
    experiment->add_option("--out", e_out, "override output directory");
    experiment->add_option("--seed", e_seed, "override the config seed")
        ->each([&](const std::string&) { e_seed_set = true; });

    auto* sweep = app.add_subcommand("sweep", "synthetic sample size sweep");
    std::string w_config, w_summary, w_out;
    std::uint64_t w_seed = 0;
    bool w_seed_set = false;
    sweep->add_option("--config", w_config, "config JSON");
    sweep->add_option("--from-summary", w_summary, "re-run from a summary JSON");
    sweep->add_option("--out", w_out, "override output directory");
    sweep->add_option("--seed", w_seed, "override the config seed")
        ->each([&](const std::string&) { w_seed_set = true; });

    // pfi
    auto* pfi_cmd = app.add_subcommand("pfi", "permutation feature importance on held-out data");
    std::string p_train, p_test, p_schema, p_learner = "multinomial_lr", p_out;
    std::size_t p_perms = 10;
    std::uint64_t p_seed = 1;
    pfi_cmd->add_option("--train", p_train, "training CSV (complete)")->required();
    pfi_cmd->add_option("--test", p_test, "test CSV (complete)")->required();
    pfi_cmd->add_option("--schema", p_schema, "schema JSON")->required();
    pfi_cmd->add_option("--learner", p_learner, "multinomial_lr or random_forest");
    pfi_cmd->add_option("--permutations", p_perms, "permutations per feature");
    pfi_cmd->add_option("--seed", p_seed, "seed");
    pfi_cmd->add_option("--out", p_out, "output CSV")->required();

    // report
    auto* report = app.add_subcommand("report", "render methods-by-scope summary grids");
    std::string r_results, r_artifact;
    report->add_option("--results", r_results, "results.csv path");
    report->add_option("--artifact", r_artifact, "artifact directory (uses results.csv inside)");

    CLI11_PARSE(app, argc, argv);

    if (combine->parsed()) {
        const Table primary = read_csv_file(c_primary, read_schema_file(c_primary_schema));
        const Table aux = read_csv_file(c_aux, read_schema_file(c_aux_schema));
        ComImpPlan plan;
        plan.mode = c_mode == "transfer" ? ComImpMode::Transfer : ComImpMode::Joint;
        if (c_mode != "joint" && c_mode != "transfer") throw ConfigError("mode must be joint or transfer");
        plan.imputer = imputer_kind(c_imputer);
        plan.arf = c_arf.params;
        plan.source_feature_name = c_source;
        plan.source_labels = c_labels;
        const ComImpResult result = comimp_combine({primary, aux}, plan, c_seed);
        write_csv_file(c_out, result.combined);
        if (!c_model_out.empty()) save_json_file(c_model_out, imputer_to_json(result.imputer));
        std::cout << "combined " << result.combined.n_rows() << " rows x "
                  << result.combined.n_cols() << " columns -> " << c_out << "\n";
        return 0;
    }
    if (impute->parsed()) {
        const Table data = read_csv_file(i_data, read_schema_file(i_schema));
        const ImputerModel model = imputer_kind(i_imputer) == ImputerKind::MeanMode
                                       ? fit_meanmode(data)
                                       : fit_missarf(data, i_arf.params, i_seed);
        ImputerModel seeded = model;
        if (seeded.kind == ImputerKind::MeanMode) seeded.seed = i_seed;
        write_csv_file(i_out, apply_imputer(seeded, data));
        if (!i_model_out.empty()) save_json_file(i_model_out, imputer_to_json(seeded));
        if (!i_apply.empty()) {
            if (i_apply_out.empty()) throw ConfigError("--apply-to needs --apply-out");
            const Table other = read_csv_file(i_apply, read_schema_file(i_schema));
            write_csv_file(i_apply_out, apply_imputer(seeded, other, 1));
        }
        std::cout << "imputed " << data.n_rows() << " rows -> " << i_out << "\n";
        return 0;
    }
    if (synth->parsed()) {
        Table data = read_csv_file(s_data, read_schema_file(s_schema));
        ArfModel model = [&] {
            if (is_complete(data)) return fit_arf(data, s_arf.params, s_seed);
            // Incomplete input: MissARF-complete it first, then fit the
            // generator on the completed table.
            const ImputerModel imp = fit_missarf(data, s_arf.params, rng::derive(s_seed, 1));
            return fit_arf(apply_imputer(imp, data), s_arf.params, s_seed);
        }();
        write_csv_file(s_out, generate(model, s_n, rng::derive(s_seed, 2)));
        if (!s_model_out.empty()) save_json_file(s_model_out, arf_to_json(model));
        std::cout << "generated " << s_n << " rows -> " << s_out
                  << (model.converged ? "" : " (warning: ARF did not converge)") << "\n";
        return 0;
    }
    if (experiment->parsed() || sweep->parsed()) {
        const bool is_sweep = sweep->parsed();
        ExperimentConfig config = load_config(is_sweep ? w_config : e_config,
                                              is_sweep ? w_summary : e_summary);
        const std::string out_override = is_sweep ? w_out : e_out;
        if (!out_override.empty()) config.output_dir = out_override;
        if (is_sweep ? w_seed_set : e_seed_set) config.seed = is_sweep ? w_seed : e_seed;
        const RunArtifact artifact = is_sweep ? sweep_synth(config) : run_experiment(config);
        std::cout << "artifact written to " << artifact.output_dir << " ("
                  << artifact.runtime_seconds << " s)\n";
        for (const auto& [w, c] : artifact.warning_counts) {
            std::cout << "  warning " << w << ": " << c << "\n";
        }
        return 0;
    }
    if (pfi_cmd->parsed()) {
        const Schema schema = read_schema_file(p_schema);
        if (!schema.target) throw ConfigError("schema must declare a target for pfi");
        const Table train = read_csv_file(p_train, schema);
        const Table test = read_csv_file(p_test, schema);
        LearnerSpec spec;
        if (p_learner == "multinomial_lr") spec.kind = LearnerSpec::Kind::MultinomialLR;
        else if (p_learner == "random_forest") spec.kind = LearnerSpec::Kind::RandomForest;
        else throw ConfigError("unknown learner '" + p_learner + "'");
        const FittedLearner fitted = fit_learner(spec, train, *schema.target, p_seed);
        const Table test_features = drop_columns(test, {*schema.target});
        std::vector<int> truth(test.n_rows());
        const std::size_t tj = test.schema().require(*schema.target);
        for (std::size_t i = 0; i < test.n_rows(); ++i) truth[i] = test.at(i, tj).category();
        const PfiResult result =
            pfi([&](const Table& t) { return fitted.predict(t); }, test_features, truth,
                PfiMetric::LogLoss, p_perms, p_seed);
        std::string text = "feature,importance,sd\n";
        for (const auto& fr : result.features) {
            text += fr.feature + "," + format_double(fr.importance) + "," + format_double(fr.sd) + "\n";
        }
        std::ofstream out(p_out, std::ios::binary);
        out << text;
        std::cout << "base " << (result.metric == PfiMetric::LogLoss ? "log_loss" : "error")
                  << " = " << result.base_error << "; wrote " << p_out << "\n";
        return 0;
    }
    if (report->parsed()) {
        std::string path = r_results;
        if (path.empty()) {
            if (r_artifact.empty()) throw ConfigError("report needs --results or --artifact");
            path = r_artifact + "/results.csv";
        }
        std::cout << emit_summary_tables(path);
        return 0;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
