#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "retarda/history.hpp"
#include "retarda/signals.hpp"

namespace retarda {

using Json = nlohmann::json;

/// History literal: {"dim", "point_value", "pieces": [{"from","to","poly_coeffs"}]}.
/// poly_coeffs[k] is the R^n coefficient of tau^k with tau = s - from.
/// Doubles are serialized with 17 significant digits, so round-trips are exact.
Json history_to_json(const PiecewiseHistory& h);
PiecewiseHistory history_from_json(const Json& j);

/// Signal literal: same piece layout on [0, T_sig); zero beyond T_sig.
Json signal_to_json(const InputSignal& u);
InputSignal signal_from_json(const Json& j);

/// Write via a temp file in the target directory plus rename, so readers
/// never observe a partial file.
void atomic_write_file(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

} // namespace retarda
