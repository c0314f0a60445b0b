#pragma once

#include <json.hpp>

#include "tabaug/arf.hpp"
#include "tabaug/forest.hpp"
#include "tabaug/impute.hpp"
#include "tabaug/learners.hpp"

namespace tabaug {

// Versioned JSON bundles. Loaders check the format tag and rebuild any
// derived state (leaf bounds are recomputed from the split structure).
nlohmann::json forest_to_json(const Forest& forest);
Forest forest_from_json(const nlohmann::json& j);

nlohmann::json arf_to_json(const ArfModel& model);
ArfModel arf_from_json(const nlohmann::json& j);

nlohmann::json imputer_to_json(const ImputerModel& model);
ImputerModel imputer_from_json(const nlohmann::json& j);

nlohmann::json lr_to_json(const FittedLR& model);
FittedLR lr_from_json(const nlohmann::json& j);

nlohmann::json schema_to_json(const Schema& schema);
Schema schema_from_json(const nlohmann::json& j);

void save_json_file(const std::string& path, const nlohmann::json& j);
nlohmann::json load_json_file(const std::string& path);

}  // namespace tabaug
