#include "tabaug/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "tabaug/aggregate.hpp"
#include "tabaug/csv.hpp"
#include "tabaug/pfi.hpp"
#include "tabaug/rng.hpp"
#include "tabaug/serialize.hpp"

namespace tabaug {

namespace fs = std::filesystem;
using nlohmann::json;

std::string scope_name(Scope scope) {
    switch (scope) {
        case Scope::Primary: return "primary";
        case Scope::Joint: return "joint";
        case Scope::Transfer: return "transfer";
    }
    throw ConfigError("bad scope");
}

Scope scope_from_name(const std::string& name) {
    if (name == "primary") return Scope::Primary;
    if (name == "joint") return Scope::Joint;
    if (name == "transfer") return Scope::Transfer;
    throw ConfigError("unknown scope '" + name + "'");
}

std::string AugmentationMethod::id() const {
    switch (kind) {
        case Kind::None: return "none@" + scope_name(scope);
        case Kind::MeanMode: return "meanmode@" + scope_name(scope);
        case Kind::MissArf: return "missarf@" + scope_name(scope);
        case Kind::Synth: return "synth_" + std::to_string(n_synth) + "@" + scope_name(base);
    }
    throw ConfigError("bad method kind");
}

void AugmentationMethod::validate() const {
    if (kind == Kind::Synth) {
        if (base == Scope::Transfer) {
            throw ConfigError("synth methods are incompatible with the transfer scope");
        }
    }
    if (kind == Kind::None && scope != Scope::Primary) {
        throw ConfigError("method 'none' only applies to the primary scope");
    }
}

bool AugmentationMethod::uses_auxiliary() const {
    if (kind == Kind::Synth) return base == Scope::Joint;
    return scope != Scope::Primary;
}

void ExperimentConfig::validate() const {
    if (learners.empty()) throw ConfigError("no learners configured");
    if (k < 2) throw ConfigError("k must be at least 2");
    if (repetitions < 1) throw ConfigError("repetitions must be positive");
    bool needs_aux = false;
    for (const auto& m : methods) {
        m.validate();
        needs_aux = needs_aux || m.uses_auxiliary();
    }
    if (sweep) {
        if (sweep->step == 0) throw ConfigError("sweep step must be positive");
        if (sweep->to < sweep->from) throw ConfigError("sweep range is empty");
        for (Scope b : sweep->bases) {
            if (b == Scope::Transfer) throw ConfigError("sweep bases must be primary or joint");
            needs_aux = needs_aux || b == Scope::Joint;
        }
    }
    if (needs_aux && !auxiliary) {
        throw ConfigError("a method references the auxiliary dataset but none is configured");
    }
    std::set<std::string> ids;
    for (const auto& l : learners) {
        if (!ids.insert(l.id).second) throw ConfigError("duplicate learner id '" + l.id + "'");
    }
}

// ---------------------------------------------------------------------------
// Config JSON codec (strict: unknown keys rejected).

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!known.count(it.key())) {
            throw ConfigError("unknown key '" + it.key() + "' in " + where);
        }
    }
}

AugmentationMethod method_from_json(const json& j) {
    reject_unknown(j, {"kind", "scope", "n_synth", "base"}, "method");
    AugmentationMethod m;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "none") m.kind = AugmentationMethod::Kind::None;
    else if (kind == "meanmode") m.kind = AugmentationMethod::Kind::MeanMode;
    else if (kind == "missarf") m.kind = AugmentationMethod::Kind::MissArf;
    else if (kind == "synth") m.kind = AugmentationMethod::Kind::Synth;
    else throw ConfigError("unknown method kind '" + kind + "'");
    if (m.kind == AugmentationMethod::Kind::Synth) {
        m.n_synth = j.at("n_synth").get<std::size_t>();
        m.base = scope_from_name(j.value("base", "primary"));
    } else {
        m.scope = scope_from_name(j.value("scope", "primary"));
    }
    m.validate();
    return m;
}

json method_to_json(const AugmentationMethod& m) {
    json j;
    switch (m.kind) {
        case AugmentationMethod::Kind::None: j["kind"] = "none"; break;
        case AugmentationMethod::Kind::MeanMode: j["kind"] = "meanmode"; break;
        case AugmentationMethod::Kind::MissArf: j["kind"] = "missarf"; break;
        case AugmentationMethod::Kind::Synth: j["kind"] = "synth"; break;
    }
    if (m.kind == AugmentationMethod::Kind::Synth) {
        j["n_synth"] = m.n_synth;
        j["base"] = scope_name(m.base);
    } else {
        j["scope"] = scope_name(m.scope);
    }
    return j;
}

LearnerConfig learner_from_json(const json& j, std::size_t index) {
    reject_unknown(j,
                   {"kind", "lambda", "max_iter", "tol", "reference_class", "n_trees", "mtry",
                    "min_node_size", "bootstrap", "repetitions", "id"},
                   "learner");
    LearnerConfig l;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "multinomial_lr") {
        l.spec.kind = LearnerSpec::Kind::MultinomialLR;
        l.spec.lr.lambda = j.value("lambda", 1e-3);
        l.spec.lr.max_iter = j.value("max_iter", 2000);
        l.spec.lr.tol = j.value("tol", 1e-4);
        if (j.contains("reference_class") && !j["reference_class"].is_null()) {
            l.spec.lr.reference_class = j["reference_class"].get<std::string>();
        }
    } else if (kind == "random_forest") {
        l.spec.kind = LearnerSpec::Kind::RandomForest;
        l.spec.forest.n_trees = j.value("n_trees", 500);
        l.spec.forest.mtry = j.value("mtry", 0);
        l.spec.forest.min_node_size = j.value("min_node_size", 1);
        l.spec.forest.bootstrap = j.value("bootstrap", true);
    } else {
        throw ConfigError("unknown learner kind '" + kind + "'");
    }
    l.id = j.value("id", kind);
    if (j.contains("repetitions")) l.repetitions = j["repetitions"].get<std::size_t>();
    (void)index;
    return l;
}

json learner_to_json(const LearnerConfig& l) {
    json j;
    if (l.spec.kind == LearnerSpec::Kind::MultinomialLR) {
        j["kind"] = "multinomial_lr";
        j["lambda"] = l.spec.lr.lambda;
        j["max_iter"] = l.spec.lr.max_iter;
        j["tol"] = l.spec.lr.tol;
        j["reference_class"] =
            l.spec.lr.reference_class ? json(*l.spec.lr.reference_class) : json();
    } else {
        j["kind"] = "random_forest";
        j["n_trees"] = l.spec.forest.n_trees;
        j["mtry"] = l.spec.forest.mtry;
        j["min_node_size"] = l.spec.forest.min_node_size;
        j["bootstrap"] = l.spec.forest.bootstrap;
    }
    j["id"] = l.id;
    if (l.repetitions) j["repetitions"] = *l.repetitions;
    return j;
}

ArfParams arf_from_config_json(const json& j) {
    reject_unknown(j,
                   {"n_trees", "mtry", "min_node_size", "delta", "max_iters",
                    "synthetic_per_round", "smoothing"},
                   "arf");
    ArfParams a;
    a.n_trees = j.value("n_trees", 100);
    a.mtry = j.value("mtry", 0);
    a.min_node_size = j.value("min_node_size", 5);
    a.delta = j.value("delta", 0.05);
    a.max_iters = j.value("max_iters", 10);
    a.synthetic_per_round = j.value("synthetic_per_round", std::size_t{0});
    a.smoothing = j.value("smoothing", true);
    return a;
}

json arf_to_config_json(const ArfParams& a) {
    return {{"n_trees", a.n_trees},
            {"mtry", a.mtry},
            {"min_node_size", a.min_node_size},
            {"delta", a.delta},
            {"max_iters", a.max_iters},
            {"synthetic_per_round", a.synthetic_per_round},
            {"smoothing", a.smoothing}};
}

DatasetRef dataset_from_json(const json& j) {
    reject_unknown(j, {"data", "schema"}, "dataset");
    return {j.at("data").get<std::string>(), j.at("schema").get<std::string>()};
}

}  // namespace

ExperimentConfig experiment_config_from_json(const json& j) {
    reject_unknown(j,
                   {"primary", "auxiliary", "methods", "learners", "resampling", "arf", "pfi",
                    "sweep", "output_dir", "workers", "source_feature", "source_labels",
                    "unsafe_global_augmentation", "cache_models", "debug_leakage_check"},
                   "config");
    ExperimentConfig c;
    c.primary = dataset_from_json(j.at("primary"));
    if (j.contains("auxiliary") && !j["auxiliary"].is_null()) {
        c.auxiliary = dataset_from_json(j["auxiliary"]);
    }
    for (const auto& mj : j.value("methods", json::array())) {
        c.methods.push_back(method_from_json(mj));
    }
    std::size_t li = 0;
    for (const auto& lj : j.at("learners")) {
        c.learners.push_back(learner_from_json(lj, li++));
    }
    if (j.contains("resampling")) {
        const auto& r = j["resampling"];
        reject_unknown(r, {"k", "repetitions", "stratified", "seed"}, "resampling");
        c.k = r.value("k", std::size_t{5});
        c.repetitions = r.value("repetitions", std::size_t{100});
        c.stratified = r.value("stratified", true);
        c.seed = r.value("seed", std::uint64_t{1});
    }
    if (j.contains("arf")) c.arf = arf_from_config_json(j["arf"]);
    if (j.contains("pfi")) {
        reject_unknown(j["pfi"], {"n_permutations"}, "pfi");
        c.pfi_permutations = j["pfi"].value("n_permutations", std::size_t{10});
    }
    if (j.contains("sweep") && !j["sweep"].is_null()) {
        const auto& s = j["sweep"];
        reject_unknown(s, {"from", "to", "step", "bases"}, "sweep");
        SweepConfig sw;
        sw.from = s.at("from").get<std::size_t>();
        sw.to = s.at("to").get<std::size_t>();
        sw.step = s.at("step").get<std::size_t>();
        if (s.contains("bases")) {
            sw.bases.clear();
            for (const auto& b : s["bases"]) sw.bases.push_back(scope_from_name(b.get<std::string>()));
        }
        c.sweep = sw;
    }
    c.output_dir = j.value("output_dir", "out");
    c.workers = j.value("workers", std::size_t{0});
    c.source_feature_name = j.value("source_feature", "source");
    if (j.contains("source_labels")) {
        const auto& s = j["source_labels"];
        reject_unknown(s, {"primary", "auxiliary"}, "source_labels");
        c.primary_label = s.value("primary", "primary");
        c.auxiliary_label = s.value("auxiliary", "aux");
    }
    c.unsafe_global_augmentation = j.value("unsafe_global_augmentation", false);
    c.cache_models = j.value("cache_models", false);
    c.debug_leakage_check = j.value("debug_leakage_check", false);
    c.validate();
    return c;
}

json experiment_config_to_json(const ExperimentConfig& c) {
    json j;
    j["primary"] = {{"data", c.primary.data_path}, {"schema", c.primary.schema_path}};
    j["auxiliary"] = c.auxiliary ? json{{"data", c.auxiliary->data_path},
                                        {"schema", c.auxiliary->schema_path}}
                                 : json();
    j["methods"] = json::array();
    for (const auto& m : c.methods) j["methods"].push_back(method_to_json(m));
    j["learners"] = json::array();
    for (const auto& l : c.learners) j["learners"].push_back(learner_to_json(l));
    j["resampling"] = {{"k", c.k},
                       {"repetitions", c.repetitions},
                       {"stratified", c.stratified},
                       {"seed", c.seed}};
    j["arf"] = arf_to_config_json(c.arf);
    j["pfi"] = {{"n_permutations", c.pfi_permutations}};
    if (c.sweep) {
        json bases = json::array();
        for (Scope b : c.sweep->bases) bases.push_back(scope_name(b));
        j["sweep"] = {{"from", c.sweep->from},
                      {"to", c.sweep->to},
                      {"step", c.sweep->step},
                      {"bases", bases}};
    } else {
        j["sweep"] = json();
    }
    j["output_dir"] = c.output_dir;
    j["workers"] = c.workers;
    j["source_feature"] = c.source_feature_name;
    j["source_labels"] = {{"primary", c.primary_label}, {"auxiliary", c.auxiliary_label}};
    j["unsafe_global_augmentation"] = c.unsafe_global_augmentation;
    j["cache_models"] = c.cache_models;
    j["debug_leakage_check"] = c.debug_leakage_check;
    return j;
}

// ---------------------------------------------------------------------------
// Grid execution.

namespace {

struct ResultRow {
    std::size_t rep = 0, fold = 0;
    std::string method, learner, metric;
    std::optional<double> value;
    std::vector<std::string> warnings;
};

struct ClassRow {
    std::size_t rep = 0, fold = 0;
    std::string method, learner, class_name;
    std::optional<double> value;
    std::vector<std::string> warnings;
};

struct PfiFoldRow {
    std::size_t rep = 0, fold = 0;
    std::string method, learner, feature;
    double importance = 0.0;
};

struct OrRow {
    std::size_t rep = 0, fold = 0;
    std::string method, learner, class_name, feature, level;
    double coefficient = 0.0, odds_ratio = 1.0;
};

struct JobOutput {
    std::vector<ResultRow> results;
    std::vector<ClassRow> class_rows;
    std::vector<PfiFoldRow> pfi_rows;
    std::vector<OrRow> or_rows;
    std::map<std::string, std::size_t> warning_counts;
    std::exception_ptr error;
};

struct RunContext {
    const ExperimentConfig* config = nullptr;
    std::vector<AugmentationMethod> methods;  // may override config->methods (sweep)
    const Table* primary = nullptr;           // rows with observed target only
    const Table* aux = nullptr;               // nullptr when absent
    std::string target;
    std::vector<int> labels;
    ResamplingPlan plan;
    std::string models_dir;  // empty = no disk cache
};

struct BuiltData {
    Table train;
    Table test;
    std::vector<long> provenance;  // >=0 primary row, -1 synthetic, -2 auxiliary
    std::vector<std::string> warnings;
};

constexpr long kSynthetic = -1;
constexpr long kAuxiliary = -2;

std::string cache_file(const RunContext& ctx, const std::string& tag, const std::string& where) {
    if (ctx.models_dir.empty()) return {};
    std::string name = tag;
    std::replace(name.begin(), name.end(), ':', '_');
    return ctx.models_dir + "/" + name + "_" + where + "_s" + std::to_string(ctx.config->seed) +
           ".json";
}

// Augmentation primitives for one training side, cached per tag so the grid
// cells that share a primitive (MissARF base completion, ARF generators)
// compute it once and draw from the same stream.
class AugmentationBuilder {
public:
    AugmentationBuilder(const RunContext& ctx, Table train_primary, std::vector<long> train_prov,
                        std::uint64_t seed_base, std::string where)
        : ctx_(ctx),
          train_primary_(std::move(train_primary)),
          train_prov_(std::move(train_prov)),
          seed_base_(seed_base),
          where_(std::move(where)) {}

    BuiltData build(const AugmentationMethod& m, const Table& test_primary) {
        switch (m.kind) {
            case AugmentationMethod::Kind::None: {
                if (!is_complete(train_primary_) || !is_complete(test_primary)) {
                    throw FitError("method 'none' requires complete data");
                }
                return {train_primary_, test_primary, train_prov_, {}};
            }
            case AugmentationMethod::Kind::MeanMode:
            case AugmentationMethod::Kind::MissArf: {
                const ImputerKind kind = m.kind == AugmentationMethod::Kind::MeanMode
                                             ? ImputerKind::MeanMode
                                             : ImputerKind::MissArf;
                if (m.scope == Scope::Primary) {
                    const auto& e = primary_imputer(kind);
                    BuiltData out{e.applied_train, apply_imputer(e.model, test_primary),
                                  train_prov_, e.warnings};
                    return out;
                }
                const auto& e = comimp(kind, m.scope);
                BuiltData out{e.result.combined, make_joint_test(e, test_primary, m.scope),
                              e.provenance, e.warnings};
                return out;
            }
            case AugmentationMethod::Kind::Synth: {
                if (m.base == Scope::Primary) {
                    const auto& base = primary_imputer(ImputerKind::MissArf);
                    const auto& gen = generator(Scope::Primary);
                    const Table synth =
                        generate(gen.model, m.n_synth, rng::derive_tag(seed_base_, "synthrows:primary"));
                    BuiltData out;
                    out.train = stack({base.applied_train, synth});
                    out.test = apply_imputer(base.model, test_primary);
                    out.provenance = train_prov_;
                    out.provenance.insert(out.provenance.end(), m.n_synth, kSynthetic);
                    out.warnings = merge(base.warnings, gen.warnings);
                    check_synth_count(out.train, base.applied_train, m.n_synth);
                    return out;
                }
                const auto& base = comimp(ImputerKind::MissArf, Scope::Joint);
                const auto& gen = generator(Scope::Joint);
                const Table synth =
                    generate(gen.model, m.n_synth, rng::derive_tag(seed_base_, "synthrows:joint"));
                BuiltData out;
                out.train = stack({base.result.combined, synth});
                out.test = make_joint_test(base, test_primary, Scope::Joint);
                out.provenance = base.provenance;
                out.provenance.insert(out.provenance.end(), m.n_synth, kSynthetic);
                out.warnings = merge(base.warnings, gen.warnings);
                check_synth_count(out.train, base.result.combined, m.n_synth);
                return out;
            }
        }
        throw ConfigError("bad method kind");
    }

    const Table& train_primary() const { return train_primary_; }
    const std::vector<long>& train_prov() const { return train_prov_; }

private:
    struct ImputerEntry {
        ImputerModel model;
        Table applied_train;
        std::vector<std::string> warnings;
    };
    struct ComImpEntry {
        ComImpResult result;
        std::vector<long> provenance;
        std::vector<std::string> warnings;
    };
    struct GenEntry {
        ArfModel model;
        std::vector<std::string> warnings;
    };

    static std::vector<std::string> merge(std::vector<std::string> a,
                                          const std::vector<std::string>& b) {
        for (const auto& w : b) {
            if (std::find(a.begin(), a.end(), w) == a.end()) a.push_back(w);
        }
        return a;
    }

    static void check_synth_count(const Table& train, const Table& base, std::size_t n_synth) {
        if (train.n_rows() != base.n_rows() + n_synth) {
            throw Error("synthetic augmentation row accounting is off");
        }
    }

    static void note_stats(const ImputeStats& stats, std::vector<std::string>& warnings) {
        if (stats.fallback_bounds_dropped > 0) warnings.push_back("conditional_fallback_bounds");
        if (stats.fallback_unconditional > 0) warnings.push_back("conditional_fallback_unconditional");
    }

    ImputerModel fit_or_load_imputer(ImputerKind kind, const Table& data, const std::string& tag,
                                     std::uint64_t seed) {
        const std::string path = cache_file(ctx_, tag, where_);
        if (!path.empty() && fs::exists(path)) {
            return imputer_from_json(load_json_file(path));
        }
        ImputerModel model =
            kind == ImputerKind::MeanMode ? fit_meanmode(data) : fit_missarf(data, ctx_.config->arf, seed);
        if (kind == ImputerKind::MeanMode) model.seed = seed;
        if (!path.empty()) save_json_file(path, imputer_to_json(model));
        return model;
    }

    const ImputerEntry& primary_imputer(ImputerKind kind) {
        const std::string tag =
            std::string("imp:") + (kind == ImputerKind::MeanMode ? "meanmode" : "missarf") +
            ":primary";
        auto it = imputers_.find(tag);
        if (it != imputers_.end()) return it->second;
        ImputerEntry e;
        e.model = fit_or_load_imputer(kind, train_primary_, tag, rng::derive_tag(seed_base_, tag));
        ImputeStats stats;
        e.applied_train = apply_imputer(e.model, train_primary_, 0, &stats);
        note_stats(stats, e.warnings);
        if (e.model.arf && !e.model.arf->converged) e.warnings.push_back("arf_nonconverged");
        return imputers_.emplace(tag, std::move(e)).first->second;
    }

    const ComImpEntry& comimp(ImputerKind kind, Scope scope) {
        const std::string tag =
            std::string("comimp:") + (kind == ImputerKind::MeanMode ? "meanmode" : "missarf") +
            ":" + scope_name(scope);
        auto it = comimps_.find(tag);
        if (it != comimps_.end()) return it->second;
        ComImpPlan plan;
        plan.mode = scope == Scope::Joint ? ComImpMode::Joint : ComImpMode::Transfer;
        plan.imputer = kind;
        plan.arf = ctx_.config->arf;
        plan.source_feature_name = ctx_.config->source_feature_name;
        plan.source_labels = {ctx_.config->primary_label, ctx_.config->auxiliary_label};
        plan.reference = 0;
        ComImpEntry e;
        // The disk cache stores the fitted imputer; the combined table is
        // re-derived by re-applying it (deterministic given the seeds).
        const std::string path = cache_file(ctx_, tag, where_);
        const std::uint64_t seed = rng::derive_tag(seed_base_, tag);
        if (!path.empty() && fs::exists(path)) {
            ImputerModel model = imputer_from_json(load_json_file(path));
            e.result = rebuild_comimp(model, plan);
        } else {
            e.result = comimp_combine({train_primary_, *ctx_.aux}, plan, seed);
            if (!path.empty()) save_json_file(path, imputer_to_json(e.result.imputer));
        }
        e.provenance = train_prov_;
        e.provenance.insert(e.provenance.end(), ctx_.aux->n_rows(), kAuxiliary);
        note_stats(e.result.stats, e.warnings);
        if (e.result.imputer.arf && !e.result.imputer.arf->converged) {
            e.warnings.push_back("arf_nonconverged");
        }
        return comimps_.emplace(tag, std::move(e)).first->second;
    }

    // Reconstructs a ComImpResult from a cached imputer by replaying the
    // (deterministic) application path of comimp_combine.
    ComImpResult rebuild_comimp(ImputerModel model, const ComImpPlan& plan) {
        ComImpPlan p = plan;
        // comimp_combine would refit; instead apply the loaded model along
        // the same alignment/stream path.
        const Feature source_feature{p.source_feature_name,
                                     FeatureKind::categorical(p.source_labels)};
        ImputeStats stats;
        if (p.mode == ComImpMode::Joint) {
            std::vector<Schema> schemas = {train_primary_.schema(), ctx_.aux->schema()};
            const Schema combined = union_schema(schemas);
            std::vector<Table> aligned = {align_to_schema(train_primary_, combined),
                                          align_to_schema(*ctx_.aux, combined)};
            std::vector<Cell> source_col;
            source_col.insert(source_col.end(), train_primary_.n_rows(), Cell::category(0));
            source_col.insert(source_col.end(), ctx_.aux->n_rows(), Cell::category(1));
            Table stacked = append_column(stack(aligned), source_feature, source_col);
            Schema s = stacked.schema();
            s.source_feature = p.source_feature_name;
            stacked = Table(s, stacked.cells());
            Table complete = apply_imputer_seeded(model, stacked,
                                                  rng::derive(model.seed, 0x64726177, 0), &stats);
            return ComImpResult{std::move(complete), std::move(model), stats};
        }
        const Schema& ref_schema = train_primary_.schema();
        std::vector<Table> blocks;
        std::vector<Cell> source_col;
        blocks.push_back(apply_imputer_seeded(model, train_primary_,
                                              rng::derive(model.seed, 0x7461626c, 0), &stats));
        source_col.insert(source_col.end(), train_primary_.n_rows(), Cell::category(0));
        std::vector<std::string> shared;
        for (const auto& f : ctx_.aux->schema().features) {
            if (ref_schema.index_of(f.name) >= 0) shared.push_back(f.name);
        }
        blocks.push_back(apply_imputer_seeded(
            model, align_to_schema(select_columns(*ctx_.aux, shared), ref_schema),
            rng::derive(model.seed, 0x7461626c, 1), &stats));
        source_col.insert(source_col.end(), ctx_.aux->n_rows(), Cell::category(1));
        Table combined = append_column(stack(blocks), source_feature, source_col);
        Schema s = combined.schema();
        s.source_feature = p.source_feature_name;
        combined = Table(s, combined.cells());
        return ComImpResult{std::move(combined), std::move(model), stats};
    }

    Table make_joint_test(const ComImpEntry& e, const Table& test_primary, Scope scope) {
        if (scope == Scope::Transfer) {
            return apply_imputer(e.result.imputer, test_primary);
        }
        // Joint: test rows carry the primary source label before imputation.
        const Feature source_feature{ctx_.config->source_feature_name,
                                     FeatureKind::categorical({ctx_.config->primary_label,
                                                               ctx_.config->auxiliary_label})};
        const std::vector<Cell> source_col(test_primary.n_rows(), Cell::category(0));
        return apply_imputer(e.result.imputer,
                             append_column(test_primary, source_feature, source_col));
    }

    const GenEntry& generator(Scope base) {
        const std::string tag = std::string("arfgen:") + scope_name(base);
        auto it = generators_.find(tag);
        if (it != generators_.end()) return it->second;
        const Table& data = base == Scope::Primary
                                ? primary_imputer(ImputerKind::MissArf).applied_train
                                : comimp(ImputerKind::MissArf, Scope::Joint).result.combined;
        GenEntry e;
        const std::string path = cache_file(ctx_, tag, where_);
        if (!path.empty() && fs::exists(path)) {
            e.model = arf_from_json(load_json_file(path));
        } else {
            e.model = fit_arf(data, ctx_.config->arf, rng::derive_tag(seed_base_, tag));
            if (!path.empty()) save_json_file(path, arf_to_json(e.model));
        }
        if (!e.model.converged) e.warnings.push_back("arf_nonconverged");
        return generators_.emplace(tag, std::move(e)).first->second;
    }

    const RunContext& ctx_;
    Table train_primary_;
    std::vector<long> train_prov_;
    std::uint64_t seed_base_;
    std::string where_;
    std::map<std::string, ImputerEntry> imputers_;
    std::map<std::string, ComImpEntry> comimps_;
    std::map<std::string, GenEntry> generators_;
};

// Fit-once-on-all-data mode: augmentation structures are computed on the
// full primary (+ auxiliary) before folding; folds then slice the imputed
// primary block. Deliberately leaky; behind the unsafe config flag.
struct GlobalEntry {
    Table applied_primary;  // aligned/imputed block covering every primary row, in order
    Table extra;            // auxiliary block + synthetic rows (0-row table when none)
    std::vector<long> extra_prov;
    std::vector<std::string> warnings;
    bool has_extra = false;
};

std::map<std::string, GlobalEntry> build_global_entries(const RunContext& ctx) {
    std::map<std::string, GlobalEntry> entries;
    const std::size_t n_primary = ctx.primary->n_rows();
    std::vector<long> prov(n_primary);
    for (std::size_t i = 0; i < n_primary; ++i) prov[i] = static_cast<long>(i);
    AugmentationBuilder builder(ctx, *ctx.primary, prov,
                                rng::derive_tag(ctx.config->seed, "global"), "global");
    for (const auto& m : ctx.methods) {
        if (entries.count(m.id())) continue;
        BuiltData built = builder.build(m, *ctx.primary);
        GlobalEntry e;
        e.warnings = built.warnings;
        std::vector<std::size_t> primary_rows(n_primary);
        for (std::size_t i = 0; i < n_primary; ++i) primary_rows[i] = i;
        e.applied_primary = select_rows(built.train, primary_rows);
        if (built.train.n_rows() > n_primary) {
            std::vector<std::size_t> extra_rows;
            for (std::size_t i = n_primary; i < built.train.n_rows(); ++i) extra_rows.push_back(i);
            e.extra = select_rows(built.train, extra_rows);
            e.extra_prov.assign(built.provenance.begin() + static_cast<long>(n_primary),
                                built.provenance.end());
            e.has_extra = true;
        }
        entries.emplace(m.id(), std::move(e));
    }
    return entries;
}

std::vector<int> target_indices(const Table& table, const std::string& target) {
    const std::size_t tj = table.schema().require(target);
    std::vector<int> out(table.n_rows());
    for (std::size_t i = 0; i < table.n_rows(); ++i) out[i] = table.at(i, tj).category();
    return out;
}

// Content hash of a table; learner/PFI sub-seeds key on it so method cells
// that produce identical training data (Synth with n_synth=0 vs its base
// method) evaluate identically.
std::uint64_t table_hash(const Table& table) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::uint64_t v) {
        h ^= v;
        h *= 0x100000001b3ULL;
    };
    mix(table.n_rows());
    mix(table.n_cols());
    for (const Cell& c : table.cells()) {
        if (c.is_missing()) {
            mix(0x4d);
        } else if (c.is_number()) {
            std::uint64_t bits;
            static_assert(sizeof(bits) == sizeof(double));
            const double v = c.number();
            std::memcpy(&bits, &v, sizeof(bits));
            mix(bits + 1);
        } else {
            mix(0x43'00000000ULL + static_cast<std::uint64_t>(c.category()));
        }
    }
    return h;
}

void evaluate_method_learner(const RunContext& ctx, std::size_t rep, std::size_t fold,
                             const AugmentationMethod& method, const LearnerConfig& learner,
                             std::size_t learner_idx, const BuiltData& built,
                             std::uint64_t job_seed, JobOutput& out) {
    std::vector<std::string> warnings = built.warnings;

    // The source indicator is available to imputation/synthesis only.
    Table train = built.train;
    Table test = built.test;
    if (train.schema().index_of(ctx.config->source_feature_name) >= 0) {
        train = drop_columns(train, {ctx.config->source_feature_name});
    }
    if (test.schema().index_of(ctx.config->source_feature_name) >= 0) {
        test = drop_columns(test, {ctx.config->source_feature_name});
    }
    if (train.schema().index_of(ctx.config->source_feature_name) >= 0) {
        throw Error("source indicator leaked into the learner feature set");
    }

    FittedLearner fitted = fit_learner(learner.spec, train, ctx.target,
                                       rng::derive(rng::derive_tag(job_seed, "learner"),
                                                   learner_idx, table_hash(train)));
    if (fitted.degenerate_single_class) warnings.push_back("degenerate_single_class");
    if (fitted.lr && !fitted.lr->converged) warnings.push_back("lr_not_converged");

    const Table test_features = drop_columns(test, {ctx.target});
    const std::vector<int> truth = target_indices(test, ctx.target);
    const PredictionMatrix pred = fitted.predict(test_features);

    auto push = [&](const std::string& metric, std::optional<double> value,
                    std::vector<std::string> extra = {}) {
        ResultRow row;
        row.rep = rep;
        row.fold = fold;
        row.method = method.id();
        row.learner = learner.id;
        row.metric = metric;
        row.value = value;
        row.warnings = warnings;
        for (auto& w : extra) row.warnings.push_back(std::move(w));
        for (const auto& w : row.warnings) ++out.warning_counts[w];
        out.results.push_back(std::move(row));
    };

    push("accuracy", accuracy(pred, truth));
    const AucResult auc = auc_macro_ovr(pred, truth);
    if (auc.value) {
        push("auc", *auc.value,
             auc.n_classes_skipped > 0 ? std::vector<std::string>{"auc_classes_skipped"}
                                       : std::vector<std::string>{});
    } else {
        push("auc", std::nullopt, {"auc_undefined"});
    }
    push("brier", brier_multiclass(pred, truth));
    push("log_loss", log_loss(pred, truth));

    const auto cw = class_wise_accuracy(pred, truth);
    for (std::size_t c = 0; c < pred.classes.size(); ++c) {
        ClassRow row;
        row.rep = rep;
        row.fold = fold;
        row.method = method.id();
        row.learner = learner.id;
        row.class_name = pred.classes[c];
        row.value = cw[c];
        row.warnings = warnings;
        if (!cw[c]) {
            row.warnings.push_back("zero_support_class");
            ++out.warning_counts["zero_support_class"];
        }
        out.class_rows.push_back(std::move(row));
    }

    const PfiResult pfi_result =
        pfi([&](const Table& t) { return fitted.predict(t); }, test_features, truth,
            PfiMetric::LogLoss, ctx.config->pfi_permutations,
            rng::derive(rng::derive_tag(job_seed, "pfi"), learner_idx, table_hash(train)));
    for (const auto& fr : pfi_result.features) {
        out.pfi_rows.push_back({rep, fold, method.id(), learner.id, fr.feature, fr.importance});
    }

    if (fitted.lr) {
        std::size_t ref_idx = 0;
        for (std::size_t c = 0; c < fitted.lr->classes.size(); ++c) {
            if (fitted.lr->classes[c] == fitted.lr->reference_class) ref_idx = c;
        }
        if (fitted.lr->class_absent[ref_idx]) {
            ++out.warning_counts["or_reference_absent"];
        } else {
            for (const auto& r : odds_ratios(*fitted.lr)) {
                out.or_rows.push_back({rep, fold, method.id(), learner.id, r.class_name, r.feature,
                                       r.level, r.coefficient, r.odds_ratio});
            }
        }
    }
}

JobOutput run_job(const RunContext& ctx, std::size_t rep, std::size_t fold,
                  const std::map<std::string, GlobalEntry>* global_entries) {
    JobOutput out;
    const std::vector<std::size_t> test_idx = ctx.plan.test_rows(rep, fold);
    const std::vector<std::size_t> train_idx = ctx.plan.train_rows(rep, fold);
    const Table test_primary = select_rows(*ctx.primary, test_idx);
    const std::uint64_t job_seed = rng::derive(ctx.config->seed, rep, fold);

    std::optional<AugmentationBuilder> builder;
    if (!global_entries) {
        std::vector<long> prov(train_idx.size());
        for (std::size_t i = 0; i < train_idx.size(); ++i) prov[i] = static_cast<long>(train_idx[i]);
        builder.emplace(ctx, select_rows(*ctx.primary, train_idx), std::move(prov), job_seed,
                        "r" + std::to_string(rep) + "_f" + std::to_string(fold));
    }

    std::set<std::size_t> test_set(test_idx.begin(), test_idx.end());
    for (std::size_t mi = 0; mi < ctx.methods.size(); ++mi) {
        const auto& method = ctx.methods[mi];
        BuiltData built;
        if (global_entries) {
            const GlobalEntry& g = global_entries->at(method.id());
            std::vector<Table> parts = {select_rows(g.applied_primary, train_idx)};
            if (g.has_extra) parts.push_back(g.extra);
            built.train = stack(parts);
            built.test = select_rows(g.applied_primary, test_idx);
            built.warnings = g.warnings;
            for (std::size_t i : train_idx) built.provenance.push_back(static_cast<long>(i));
            built.provenance.insert(built.provenance.end(), g.extra_prov.begin(),
                                    g.extra_prov.end());
        } else {
            built = builder->build(method, test_primary);
            if (ctx.config->debug_leakage_check) {
                for (long pr : built.provenance) {
                    if (pr >= 0 && test_set.count(static_cast<std::size_t>(pr))) {
                        throw Error("leakage: test row " + std::to_string(pr) +
                                    " entered the training side of method " + method.id());
                    }
                }
            }
        }
        for (std::size_t li = 0; li < ctx.config->learners.size(); ++li) {
            const auto& learner = ctx.config->learners[li];
            if (learner.repetitions && rep >= *learner.repetitions) continue;
            evaluate_method_learner(ctx, rep, fold, method, learner, li, built, job_seed, out);
        }
    }
    return out;
}

std::vector<JobOutput> execute_grid(const RunContext& ctx) {
    const std::size_t n_jobs = ctx.plan.repetitions * ctx.plan.k;
    std::vector<JobOutput> outputs(n_jobs);

    std::map<std::string, GlobalEntry> global_entries;
    const bool global = ctx.config->unsafe_global_augmentation;
    if (global) global_entries = build_global_entries(ctx);

    std::size_t workers = ctx.config->workers;
    if (workers == 0) {
        const char* env = std::getenv("TABAUG_WORKERS");
        if (env && *env) workers = static_cast<std::size_t>(std::strtoul(env, nullptr, 10));
    }
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, n_jobs);

    std::atomic<std::size_t> next{0};
    auto work = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n_jobs) break;
            const std::size_t rep = i / ctx.plan.k;
            const std::size_t fold = i % ctx.plan.k;
            try {
                outputs[i] = run_job(ctx, rep, fold, global ? &global_entries : nullptr);
            } catch (...) {
                outputs[i].error = std::current_exception();
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    for (const auto& o : outputs) {
        if (o.error) std::rethrow_exception(o.error);
    }
    return outputs;
}

// ---------------------------------------------------------------------------
// Artifact emission.

std::string join_warnings(const std::vector<std::string>& warnings) {
    std::string out;
    for (const auto& w : warnings) {
        if (!out.empty()) out += ';';
        out += w;
    }
    return out;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    q += '"';
    return q;
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out << text;
}

Table load_dataset(const DatasetRef& ref) {
    const Schema schema = read_schema_file(ref.schema_path);
    return read_csv_file(ref.data_path, schema);
}

struct PreparedData {
    Table primary;
    std::optional<Table> aux;
    std::size_t dropped_primary = 0, dropped_aux = 0;
};

PreparedData prepare_data(const ExperimentConfig& /*config*/, const Table& primary_in,
                          const std::optional<Table>& aux_in) {
    PreparedData prep;
    const auto& target_opt = primary_in.schema().target;
    if (!target_opt) throw SchemaError("primary schema does not declare a target");
    const std::string& target = *target_opt;

    auto keep_observed_target = [&](const Table& t, std::size_t& dropped) {
        const std::size_t tj = t.schema().require(target);
        std::vector<std::size_t> keep;
        for (std::size_t i = 0; i < t.n_rows(); ++i) {
            if (!t.at(i, tj).is_missing()) keep.push_back(i);
        }
        dropped = t.n_rows() - keep.size();
        return select_rows(t, keep);
    };
    prep.primary = keep_observed_target(primary_in, prep.dropped_primary);
    if (aux_in) {
        if (!aux_in->schema().target || *aux_in->schema().target != target) {
            throw SchemaError("auxiliary schema must declare the same target");
        }
        const auto& plevels =
            prep.primary.schema().features[prep.primary.schema().require(target)].kind.levels;
        const auto& alevels =
            aux_in->schema().features[aux_in->schema().require(target)].kind.levels;
        for (const auto& l : alevels) {
            if (std::find(plevels.begin(), plevels.end(), l) == plevels.end()) {
                throw SchemaError("auxiliary target level '" + l + "' unknown to the primary");
            }
        }
        prep.aux = keep_observed_target(*aux_in, prep.dropped_aux);
    }
    return prep;
}

RunContext make_context(const ExperimentConfig& config, const PreparedData& prep,
                        const std::vector<AugmentationMethod>& methods,
                        const std::string& models_dir) {
    RunContext ctx;
    ctx.config = &config;
    ctx.methods = methods;
    ctx.primary = &prep.primary;
    ctx.aux = prep.aux ? &*prep.aux : nullptr;
    ctx.target = *prep.primary.schema().target;
    const std::size_t tj = prep.primary.schema().require(ctx.target);
    const auto& levels = prep.primary.schema().features[tj].kind.levels;
    ctx.labels = target_indices(prep.primary, ctx.target);
    ctx.plan = make_folds(ctx.labels, levels.size(), config.k, config.repetitions,
                          config.stratified, config.seed);
    ctx.models_dir = models_dir;
    return ctx;
}

void write_result_files(const RunContext& ctx, const std::vector<JobOutput>& outputs,
                        RunArtifact& artifact) {
    std::string results = "repetition,fold,method,learner,metric,value,warnings\n";
    std::string per_class = "repetition,fold,method,learner,class,metric,value,warnings\n";
    std::string ors = "repetition,fold,method,learner,class,feature,level,coefficient,odds_ratio\n";
    for (const auto& o : outputs) {
        for (const auto& r : o.results) {
            results += std::to_string(r.rep) + "," + std::to_string(r.fold) + "," +
                       csv_field(r.method) + "," + csv_field(r.learner) + "," + r.metric + "," +
                       (r.value ? format_double(*r.value) : "") + "," +
                       csv_field(join_warnings(r.warnings)) + "\n";
        }
        for (const auto& r : o.class_rows) {
            per_class += std::to_string(r.rep) + "," + std::to_string(r.fold) + "," +
                         csv_field(r.method) + "," + csv_field(r.learner) + "," +
                         csv_field(r.class_name) + ",class_accuracy," +
                         (r.value ? format_double(*r.value) : "") + "," +
                         csv_field(join_warnings(r.warnings)) + "\n";
        }
        for (const auto& r : o.or_rows) {
            ors += std::to_string(r.rep) + "," + std::to_string(r.fold) + "," +
                   csv_field(r.method) + "," + csv_field(r.learner) + "," +
                   csv_field(r.class_name) + "," + csv_field(r.feature) + "," +
                   csv_field(r.level) + "," + format_double(r.coefficient) + "," +
                   format_double(r.odds_ratio) + "\n";
        }
        for (const auto& [w, c] : o.warning_counts) artifact.warning_counts[w] += c;
    }

    // PFI report path: per repetition, the mean over folds.
    struct PfiKey {
        std::size_t rep;
        std::string method, learner, feature;
        bool operator<(const PfiKey& o) const {
            return std::tie(rep, method, learner, feature) <
                   std::tie(o.rep, o.method, o.learner, o.feature);
        }
    };
    std::map<PfiKey, std::pair<double, std::size_t>> pfi_acc;
    std::vector<PfiKey> order;
    for (const auto& o : outputs) {
        for (const auto& r : o.pfi_rows) {
            PfiKey key{r.rep, r.method, r.learner, r.feature};
            auto it = pfi_acc.find(key);
            if (it == pfi_acc.end()) {
                order.push_back(key);
                pfi_acc.emplace(key, std::make_pair(r.importance, std::size_t{1}));
            } else {
                it->second.first += r.importance;
                ++it->second.second;
            }
        }
    }
    std::string pfi_text = "repetition,method,learner,feature,importance\n";
    for (const auto& key : order) {
        const auto& [sum, count] = pfi_acc.at(key);
        pfi_text += std::to_string(key.rep) + "," + csv_field(key.method) + "," +
                    csv_field(key.learner) + "," + csv_field(key.feature) + "," +
                    format_double(sum / static_cast<double>(count)) + "\n";
    }

    artifact.results_csv = artifact.output_dir + "/results.csv";
    artifact.per_class_csv = artifact.output_dir + "/per_class.csv";
    artifact.pfi_csv = artifact.output_dir + "/pfi.csv";
    artifact.odds_ratios_csv = artifact.output_dir + "/odds_ratios.csv";
    write_file(artifact.results_csv, results);
    write_file(artifact.per_class_csv, per_class);
    write_file(artifact.pfi_csv, pfi_text);
    write_file(artifact.odds_ratios_csv, ors);
    (void)ctx;
}

void write_summary(const ExperimentConfig& config, const PreparedData& prep,
                   RunArtifact& artifact, const std::string& mode) {
    json j;
    j["format"] = "tabaug.summary.v1";
    j["version"] = "0.1.0";
    j["mode"] = mode;
    j["config"] = experiment_config_to_json(config);
    j["n_primary_rows"] = prep.primary.n_rows();
    j["n_auxiliary_rows"] = prep.aux ? json(prep.aux->n_rows()) : json();
    j["rows_dropped_missing_target"] =
        json{{"primary", prep.dropped_primary}, {"auxiliary", prep.dropped_aux}};
    json w = json::object();
    for (const auto& [k, v] : artifact.warning_counts) w[k] = v;
    j["warning_counts"] = w;
    j["runtime_seconds"] = artifact.runtime_seconds;
    json outputs = json::object();
    auto base_name = [](const std::string& p) { return fs::path(p).filename().string(); };
    if (!artifact.results_csv.empty()) outputs["results_csv"] = base_name(artifact.results_csv);
    if (!artifact.per_class_csv.empty()) outputs["per_class_csv"] = base_name(artifact.per_class_csv);
    if (!artifact.pfi_csv.empty()) outputs["pfi_csv"] = base_name(artifact.pfi_csv);
    if (!artifact.odds_ratios_csv.empty()) {
        outputs["odds_ratios_csv"] = base_name(artifact.odds_ratios_csv);
    }
    if (!artifact.sweep_csv.empty()) outputs["sweep_csv"] = base_name(artifact.sweep_csv);
    j["outputs"] = outputs;
    artifact.summary_json = artifact.output_dir + "/summary.json";
    save_json_file(artifact.summary_json, j);
}

RunArtifact prepare_artifact(const ExperimentConfig& config) {
    RunArtifact artifact;
    artifact.output_dir = config.output_dir;
    fs::create_directories(artifact.output_dir);
    artifact.models_dir = artifact.output_dir + "/models";
    fs::create_directories(artifact.models_dir);
    return artifact;
}

}  // namespace

RunArtifact run_experiment_on(const ExperimentConfig& config, const Table& primary,
                              const std::optional<Table>& aux) {
    config.validate();
    if (config.methods.empty()) throw ConfigError("no methods configured");
    const auto t0 = std::chrono::steady_clock::now();
    RunArtifact artifact = prepare_artifact(config);
    const PreparedData prep = prepare_data(config, primary, aux);
    const RunContext ctx = make_context(config, prep, config.methods,
                                        config.cache_models ? artifact.models_dir : "");
    const std::vector<JobOutput> outputs = execute_grid(ctx);
    write_result_files(ctx, outputs, artifact);
    artifact.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_summary(config, prep, artifact, "experiment");
    return artifact;
}

RunArtifact run_experiment(const ExperimentConfig& config) {
    const Table primary = load_dataset(config.primary);
    std::optional<Table> aux;
    if (config.auxiliary) aux = load_dataset(*config.auxiliary);
    return run_experiment_on(config, primary, aux);
}

RunArtifact sweep_synth_on(const ExperimentConfig& config, const Table& primary,
                           const std::optional<Table>& aux) {
    config.validate();
    if (!config.sweep) throw ConfigError("sweep requires a sweep block in the config");
    const auto t0 = std::chrono::steady_clock::now();
    RunArtifact artifact = prepare_artifact(config);
    const PreparedData prep = prepare_data(config, primary, aux);

    std::string sweep_text = "n_synth,base,learner,metric,mean,sd\n";
    const std::vector<std::string> metric_order = {"accuracy", "auc", "brier", "log_loss"};
    for (std::size_t n = config.sweep->from; n <= config.sweep->to; n += config.sweep->step) {
        std::vector<AugmentationMethod> methods;
        for (Scope base : config.sweep->bases) {
            AugmentationMethod m;
            m.kind = AugmentationMethod::Kind::Synth;
            m.n_synth = n;
            m.base = base;
            methods.push_back(m);
        }
        const RunContext ctx = make_context(config, prep, methods,
                                            config.cache_models ? artifact.models_dir : "");
        const std::vector<JobOutput> outputs = execute_grid(ctx);
        for (const auto& m : methods) {
            for (const auto& l : config.learners) {
                for (const auto& metric : metric_order) {
                    std::vector<std::optional<double>> values;
                    for (const auto& o : outputs) {
                        for (const auto& r : o.results) {
                            if (r.method == m.id() && r.learner == l.id && r.metric == metric) {
                                values.push_back(r.value);
                            }
                        }
                    }
                    const Aggregate agg = aggregate(values);
                    sweep_text += std::to_string(n) + "," + scope_name(m.base) + "," +
                                  csv_field(l.id) + "," + metric + "," + format_double(agg.mean) +
                                  "," + format_double(agg.sd) + "\n";
                }
            }
        }
        for (const auto& o : outputs) {
            for (const auto& [w, c] : o.warning_counts) artifact.warning_counts[w] += c;
        }
    }
    artifact.sweep_csv = artifact.output_dir + "/sweep.csv";
    write_file(artifact.sweep_csv, sweep_text);
    artifact.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_summary(config, prep, artifact, "sweep");
    return artifact;
}

RunArtifact sweep_synth(const ExperimentConfig& config) {
    const Table primary = load_dataset(config.primary);
    std::optional<Table> aux;
    if (config.auxiliary) aux = load_dataset(*config.auxiliary);
    return sweep_synth_on(config, primary, aux);
}

std::string emit_summary_tables(const std::string& results_csv_path) {
    std::ifstream in(results_csv_path, std::ios::binary);
    if (!in) throw Error("cannot open '" + results_csv_path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    const Table t = parse_csv(ss.str(), std::nullopt);

    const std::size_t method_col = t.schema().require("method");
    const std::size_t learner_col = t.schema().require("learner");
    const std::size_t metric_col = t.schema().require("metric");
    const std::size_t value_col = t.schema().require("value");

    struct Key {
        std::string learner, metric;
        bool operator<(const Key& o) const {
            return std::tie(learner, metric) < std::tie(o.learner, o.metric);
        }
    };
    // Grid rows are method kinds ("meanmode", "synth_82", ...); columns are
    // scopes. Order of first appearance.
    std::vector<std::string> kinds;
    std::vector<Key> keys;
    std::map<Key, std::map<std::pair<std::string, std::string>, std::vector<std::optional<double>>>>
        cells;
    const std::vector<std::string> scopes = {"primary", "joint", "transfer"};
    for (std::size_t i = 0; i < t.n_rows(); ++i) {
        const std::string method = t.level_of(i, method_col);
        const auto at = method.find('@');
        if (at == std::string::npos) continue;
        const std::string kind = method.substr(0, at);
        const std::string scope = method.substr(at + 1);
        if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end()) kinds.push_back(kind);
        Key key{t.level_of(i, learner_col), t.level_of(i, metric_col)};
        if (!cells.count(key)) keys.push_back(key);
        std::optional<double> value;
        if (!t.at(i, value_col).is_missing()) value = t.at(i, value_col).number();
        cells[key][{kind, scope}].push_back(value);
    }

    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(2);
    for (const auto& key : keys) {
        out << "== " << key.learner << " / " << key.metric << " ==\n";
        out << "method";
        for (const auto& s : scopes) out << "\t" << s;
        out << "\n";
        for (const auto& kind : kinds) {
            out << kind;
            for (const auto& s : scopes) {
                auto it = cells[key].find({kind, s});
                if (it == cells[key].end()) {
                    out << "\t-";
                    continue;
                }
                const Aggregate agg = aggregate(it->second);
                if (agg.n == 0) {
                    out << "\t-";
                } else {
                    out << "\t" << agg.mean << " (" << agg.sd << ")";
                }
            }
            out << "\n";
        }
        out << "\n";
    }
    return out.str();
}

}  // namespace tabaug
