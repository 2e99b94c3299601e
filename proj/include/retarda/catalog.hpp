#pragma once

#include <string>
#include <vector>

#include "retarda/system.hpp"

namespace retarda {

/// Names of the built-in systems, in listing order.
std::vector<std::string> catalog_names();

bool catalog_has(const std::string& name);

/// Raw system-spec JSON of a built-in entry (also mirrored under catalog/).
const char* catalog_json(const std::string& name);

SystemDef load_catalog(const std::string& name);

} // namespace retarda
