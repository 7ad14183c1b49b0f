#pragma once

#include <string>

#include "json.hpp"
#include "qunet/protocols.hpp"

namespace qunet {

/// {"dims": [...], "amplitudes": [[re, im], ...]}
nlohmann::json to_json(const StateVector& s);
nlohmann::json to_json(const ResourceUsage& r);
nlohmann::json report_to_json(const ProtocolReport& report);
/// Pretty-printed report with a trailing newline; identical reports give
/// identical bytes.
std::string report_to_string(const ProtocolReport& report);

}  // namespace qunet
