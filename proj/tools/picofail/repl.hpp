#pragma once

#include <iosfwd>
#include <string>

#include <nlohmann/json.hpp>

#include "picofail/simulator.hpp"

namespace picofail::cli {

// Operator-facing rendering of a device response.
std::string format_response(const nlohmann::ordered_json& response);

/// Interactive console session. Lines starting with '!' are meta-commands that
/// act on the simulated plant; everything else goes to the device over the
/// console transport. speed > 0 paces sim time against wall time; speed 0
/// only advances sim time through `!run`. Returns the process exit code.
int run_repl(Simulator& sim, std::istream& in, std::ostream& out, double speed);

}  // namespace picofail::cli
