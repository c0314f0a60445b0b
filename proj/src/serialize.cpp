#include "tabaug/serialize.hpp"

#include <fstream>
#include <limits>

namespace tabaug {

using nlohmann::json;

namespace {

void check_format(const json& j, const std::string& expected) {
    if (!j.contains("format") || j["format"].get<std::string>() != expected) {
        throw Error("unexpected serialization format (wanted '" + expected + "')");
    }
}

}  // namespace

json schema_to_json(const Schema& schema) {
    json j;
    j["features"] = json::array();
    for (const auto& f : schema.features) {
        json fj;
        fj["name"] = f.name;
        fj["kind"] = f.kind.is_numeric() ? "numeric" : "categorical";
        if (f.kind.is_categorical()) fj["levels"] = f.kind.levels;
        j["features"].push_back(fj);
    }
    j["target"] = schema.target ? json(*schema.target) : json();
    j["source_feature"] = schema.source_feature ? json(*schema.source_feature) : json();
    return j;
}

Schema schema_from_json(const json& j) {
    Schema s;
    for (const auto& fj : j.at("features")) {
        Feature f;
        f.name = fj.at("name").get<std::string>();
        if (fj.at("kind").get<std::string>() == "numeric") {
            f.kind = FeatureKind::numeric();
        } else {
            f.kind = FeatureKind::categorical(fj.at("levels").get<std::vector<std::string>>());
        }
        s.features.push_back(std::move(f));
    }
    if (!j.at("target").is_null()) s.target = j["target"].get<std::string>();
    if (!j.at("source_feature").is_null()) s.source_feature = j["source_feature"].get<std::string>();
    s.validate();
    return s;
}

json forest_to_json(const Forest& forest) {
    json j;
    j["format"] = "tabaug.forest.v1";
    j["params"] = {{"n_trees", forest.params.n_trees},
                   {"mtry", forest.params.mtry},
                   {"min_node_size", forest.params.min_node_size},
                   {"bootstrap", forest.params.bootstrap}};
    j["seed"] = forest.seed;
    j["feature_schema"] = schema_to_json(forest.feature_schema);
    j["target_name"] = forest.target_name;
    j["classes"] = forest.classes;
    j["train_labels"] = forest.train_labels;
    j["single_class_warning"] = forest.single_class_warning;
    j["oob_votes"] = forest.oob_votes;
    j["trees"] = json::array();
    for (std::size_t t = 0; t < forest.trees.size(); ++t) {
        json tj;
        tj["nodes"] = json::array();
        for (const auto& node : forest.trees[t].nodes) {
            json nj;
            if (node.leaf) {
                nj["counts"] = node.class_counts;
                nj["rows"] = node.inbag_rows;
            } else {
                nj["f"] = node.split.feature;
                if (forest.feature_schema.features[static_cast<std::size_t>(node.split.feature)]
                        .kind.is_numeric()) {
                    nj["t"] = node.split.threshold;
                } else {
                    nj["m"] = node.split.level_mask;
                }
                nj["l"] = node.left;
                nj["r"] = node.right;
            }
            tj["nodes"].push_back(std::move(nj));
        }
        tj["oob"] = forest.oob_rows[t];
        j["trees"].push_back(std::move(tj));
    }
    return j;
}

Forest forest_from_json(const json& j) {
    check_format(j, "tabaug.forest.v1");
    Forest f;
    f.params.n_trees = j["params"].at("n_trees").get<int>();
    f.params.mtry = j["params"].at("mtry").get<int>();
    f.params.min_node_size = j["params"].at("min_node_size").get<int>();
    f.params.bootstrap = j["params"].at("bootstrap").get<bool>();
    f.seed = j.at("seed").get<std::uint64_t>();
    f.feature_schema = schema_from_json(j.at("feature_schema"));
    f.target_name = j.at("target_name").get<std::string>();
    f.classes = j.at("classes").get<std::vector<std::string>>();
    f.train_labels = j.at("train_labels").get<std::vector<int>>();
    f.single_class_warning = j.at("single_class_warning").get<bool>();
    f.oob_votes = j.at("oob_votes").get<std::vector<std::uint32_t>>();
    for (const auto& tj : j.at("trees")) {
        Tree tree;
        for (const auto& nj : tj.at("nodes")) {
            TreeNode node;
            if (nj.contains("f")) {
                node.leaf = false;
                node.split.feature = nj.at("f").get<int>();
                if (nj.contains("t")) node.split.threshold = nj["t"].get<double>();
                if (nj.contains("m")) node.split.level_mask = nj["m"].get<std::uint64_t>();
                node.left = nj.at("l").get<int>();
                node.right = nj.at("r").get<int>();
            } else {
                node.class_counts = nj.at("counts").get<std::vector<std::uint32_t>>();
                node.inbag_rows = nj.at("rows").get<std::vector<std::uint32_t>>();
            }
            tree.nodes.push_back(std::move(node));
        }
        f.trees.push_back(std::move(tree));
        f.oob_rows.push_back(tj.at("oob").get<std::vector<std::uint32_t>>());
    }
    return f;
}

json arf_to_json(const ArfModel& model) {
    json j;
    j["format"] = "tabaug.arf.v1";
    j["schema"] = schema_to_json(model.schema);
    j["forest"] = forest_to_json(model.forest);
    j["col_min"] = model.col_min;
    j["col_max"] = model.col_max;
    j["col_sd"] = model.col_sd;
    j["accuracy_history"] = model.accuracy_history;
    j["delta"] = model.delta;
    j["converged"] = model.converged;
    j["smoothing"] = model.smoothing;
    j["seed"] = model.seed;
    j["leaves"] = json::array();
    for (const auto& leaf : model.leaves) {
        json lj;
        lj["tree"] = leaf.tree;
        lj["node"] = leaf.node;
        lj["weight"] = leaf.weight;
        lj["mu"] = leaf.num_mu;
        lj["sd"] = leaf.num_sd;
        lj["lo"] = leaf.num_lo;
        lj["hi"] = leaf.num_hi;
        json probs = json::array();
        for (const auto& pv : leaf.cat_probs) probs.push_back(pv);
        lj["cat"] = std::move(probs);
        j["leaves"].push_back(std::move(lj));
    }
    return j;
}

ArfModel arf_from_json(const json& j) {
    check_format(j, "tabaug.arf.v1");
    ArfModel m;
    m.schema = schema_from_json(j.at("schema"));
    m.forest = forest_from_json(j.at("forest"));
    m.col_min = j.at("col_min").get<std::vector<double>>();
    m.col_max = j.at("col_max").get<std::vector<double>>();
    m.col_sd = j.at("col_sd").get<std::vector<double>>();
    m.accuracy_history = j.at("accuracy_history").get<std::vector<double>>();
    m.delta = j.at("delta").get<double>();
    m.converged = j.at("converged").get<bool>();
    m.smoothing = j.at("smoothing").get<bool>();
    m.seed = j.at("seed").get<std::uint64_t>();
    // Unbounded leaf intervals serialize as null (JSON has no infinity).
    auto bounds = [](const json& arr, double inf_value) {
        std::vector<double> out;
        out.reserve(arr.size());
        for (const auto& v : arr) out.push_back(v.is_null() ? inf_value : v.get<double>());
        return out;
    };
    for (const auto& lj : j.at("leaves")) {
        LeafDensity leaf;
        leaf.tree = lj.at("tree").get<int>();
        leaf.node = lj.at("node").get<int>();
        leaf.weight = lj.at("weight").get<double>();
        leaf.num_mu = lj.at("mu").get<std::vector<double>>();
        leaf.num_sd = lj.at("sd").get<std::vector<double>>();
        leaf.num_lo = bounds(lj.at("lo"), -std::numeric_limits<double>::infinity());
        leaf.num_hi = bounds(lj.at("hi"), std::numeric_limits<double>::infinity());
        for (const auto& pv : lj.at("cat")) {
            leaf.cat_probs.push_back(pv.get<std::vector<double>>());
        }
        m.leaves.push_back(std::move(leaf));
    }
    return m;
}

json imputer_to_json(const ImputerModel& model) {
    json j;
    j["format"] = "tabaug.imputer.v1";
    j["kind"] = model.kind == ImputerKind::MeanMode ? "meanmode" : "missarf";
    j["schema"] = schema_to_json(model.schema);
    j["n"] = model.n;
    j["missing_counts"] = model.missing_counts;
    j["seed"] = model.seed;
    if (model.kind == ImputerKind::MeanMode) {
        j["means"] = model.means;
        j["modes"] = model.modes;
    } else {
        j["arf"] = arf_to_json(*model.arf);
    }
    return j;
}

ImputerModel imputer_from_json(const json& j) {
    check_format(j, "tabaug.imputer.v1");
    ImputerModel m;
    m.kind = j.at("kind").get<std::string>() == "meanmode" ? ImputerKind::MeanMode
                                                           : ImputerKind::MissArf;
    m.schema = schema_from_json(j.at("schema"));
    m.n = j.at("n").get<std::size_t>();
    m.missing_counts = j.at("missing_counts").get<std::vector<std::size_t>>();
    m.seed = j.at("seed").get<std::uint64_t>();
    if (m.kind == ImputerKind::MeanMode) {
        m.means = j.at("means").get<std::vector<double>>();
        m.modes = j.at("modes").get<std::vector<int>>();
    } else {
        m.arf = arf_from_json(j.at("arf"));
    }
    return m;
}

json lr_to_json(const FittedLR& model) {
    json j;
    j["format"] = "tabaug.lr.v1";
    j["target_name"] = model.target_name;
    j["classes"] = model.classes;
    j["reference_class"] = model.reference_class;
    j["pivot"] = model.pivot;
    j["p_enc"] = model.p_enc;
    j["lambda"] = model.lambda;
    j["converged"] = model.converged;
    j["final_grad_norm"] = model.final_grad_norm;
    j["n_iter"] = model.n_iter;
    j["coef_std"] = model.coef_std;
    j["coef_orig"] = model.coef_orig;
    j["intercept_std"] = model.intercept_std;
    j["intercept_orig"] = model.intercept_orig;
    j["class_absent"] = model.class_absent;
    j["encoding"] = json::array();
    for (const auto& e : model.encoding) {
        j["encoding"].push_back({{"name", e.name},
                                 {"numeric", e.numeric},
                                 {"mean", e.mean},
                                 {"sd", e.sd},
                                 {"levels", e.levels},
                                 {"first_column", e.first_column},
                                 {"n_columns", e.n_columns}});
    }
    return j;
}

FittedLR lr_from_json(const json& j) {
    check_format(j, "tabaug.lr.v1");
    FittedLR m;
    m.target_name = j.at("target_name").get<std::string>();
    m.classes = j.at("classes").get<std::vector<std::string>>();
    m.reference_class = j.at("reference_class").get<std::string>();
    m.pivot = j.at("pivot").get<std::size_t>();
    m.p_enc = j.at("p_enc").get<std::size_t>();
    m.lambda = j.at("lambda").get<double>();
    m.converged = j.at("converged").get<bool>();
    m.final_grad_norm = j.at("final_grad_norm").get<double>();
    m.n_iter = j.at("n_iter").get<int>();
    m.coef_std = j.at("coef_std").get<std::vector<double>>();
    m.coef_orig = j.at("coef_orig").get<std::vector<double>>();
    m.intercept_std = j.at("intercept_std").get<std::vector<double>>();
    m.intercept_orig = j.at("intercept_orig").get<std::vector<double>>();
    m.class_absent = j.at("class_absent").get<std::vector<bool>>();
    for (const auto& ej : j.at("encoding")) {
        EncodedFeature e;
        e.name = ej.at("name").get<std::string>();
        e.numeric = ej.at("numeric").get<bool>();
        e.mean = ej.at("mean").get<double>();
        e.sd = ej.at("sd").get<double>();
        e.levels = ej.at("levels").get<std::vector<std::string>>();
        e.first_column = ej.at("first_column").get<std::size_t>();
        e.n_columns = ej.at("n_columns").get<std::size_t>();
        m.encoding.push_back(std::move(e));
    }
    return m;
}

void save_json_file(const std::string& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out << j.dump(2) << "\n";
}

json load_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    return json::parse(in);
}

}  // namespace tabaug
