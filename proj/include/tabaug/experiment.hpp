#pragma once

#include <json.hpp>
#include <map>

#include "tabaug/impute.hpp"
#include "tabaug/learners.hpp"
#include "tabaug/resampling.hpp"
#include "tabaug/table.hpp"

namespace tabaug {

enum class Scope { Primary, Joint, Transfer };

std::string scope_name(Scope scope);
Scope scope_from_name(const std::string& name);

// One cell of the augmentation grid. Plain kinds pair with a scope; Synth
// appends n_synth generated rows to a MissARF-completed base (primary-only
// or joint), so Synth is incompatible with the Transfer scope.
struct AugmentationMethod {
    enum class Kind { None, MeanMode, MissArf, Synth };
    Kind kind = Kind::MeanMode;
    Scope scope = Scope::Primary;
    std::size_t n_synth = 0;     // Synth only
    Scope base = Scope::Primary;  // Synth only: Primary or Joint

    std::string id() const;  // e.g. "meanmode@joint", "synth_338@joint"
    void validate() const;
    bool uses_auxiliary() const;
};

struct LearnerConfig {
    LearnerSpec spec;
    std::string id;                          // unique in the run ("multinomial_lr", ...)
    std::optional<std::size_t> repetitions;  // optional per-learner replicate override
};

struct DatasetRef {
    std::string data_path;
    std::string schema_path;
};

struct SweepConfig {
    std::size_t from = 50, to = 500, step = 50;
    std::vector<Scope> bases = {Scope::Primary, Scope::Joint};
};

struct ExperimentConfig {
    DatasetRef primary;
    std::optional<DatasetRef> auxiliary;
    std::vector<AugmentationMethod> methods;
    std::vector<LearnerConfig> learners;
    std::size_t k = 5;
    std::size_t repetitions = 100;
    bool stratified = true;
    std::uint64_t seed = 1;
    ArfParams arf;
    std::size_t pfi_permutations = 10;
    std::optional<SweepConfig> sweep;
    std::string output_dir = "out";
    std::size_t workers = 0;  // 0 = hardware concurrency
    std::string source_feature_name = "source";
    std::string primary_label = "primary";
    std::string auxiliary_label = "aux";
    bool unsafe_global_augmentation = false;
    bool cache_models = false;
    bool debug_leakage_check = false;

    void validate() const;
};

// Strict config codec: unknown keys are rejected, round-trips exactly.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
nlohmann::json experiment_config_to_json(const ExperimentConfig& config);

struct RunArtifact {
    std::string output_dir;
    std::string results_csv;
    std::string per_class_csv;
    std::string pfi_csv;
    std::string odds_ratios_csv;
    std::string sweep_csv;  // sweep runs only
    std::string summary_json;
    std::string models_dir;
    std::map<std::string, std::size_t> warning_counts;
    double runtime_seconds = 0.0;
};

// The full grid: per repetition x fold, the test fold is drawn from the
// primary dataset only; auxiliary rows join every training side; all
// augmentation structures are fitted on the training side inside the fold
// (unless unsafe_global_augmentation); the source indicator participates in
// imputation/synthesis and is dropped before learning; metrics, class-wise
// accuracy, PFI and (for LR) odds ratios are written as CSV plus a summary
// JSON that reproduces the run byte-identically.
RunArtifact run_experiment(const ExperimentConfig& config);

// In-memory variant (datasets already loaded); used by tests and the file
// front-end alike.
RunArtifact run_experiment_on(const ExperimentConfig& config, const Table& primary,
                              const std::optional<Table>& auxiliary);

// One experiment per n_synth value over config.sweep; emits sweep.csv with
// (n_synth, base, learner, metric, mean, sd) raw points.
RunArtifact sweep_synth(const ExperimentConfig& config);
RunArtifact sweep_synth_on(const ExperimentConfig& config, const Table& primary,
                           const std::optional<Table>& auxiliary);

// Renders methods-by-scope grids ("mean (SD)" cells, "-" where a cell is
// incompatible or absent) from a results CSV, one grid per learner x metric.
std::string emit_summary_tables(const std::string& results_csv_path);

}  // namespace tabaug
