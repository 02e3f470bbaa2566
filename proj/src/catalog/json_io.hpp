#pragma once

// JSON mapping of catalog records, shared with the report writer.

#include "cfo/catalog/catalog.hpp"
#include "json.hpp"

namespace cfo::catalog {

nlohmann::json to_json(const TechniqueRecord& r);
TechniqueRecord record_from_json(const nlohmann::json& j);

}  // namespace cfo::catalog
