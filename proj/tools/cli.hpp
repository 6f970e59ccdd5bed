#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "netcap/graph.hpp"
#include "netcap/routing.hpp"

namespace netcap::cli {

enum ExitCode : int { kOk = 0, kValidation = 2, kNumerical = 3, kIo = 4 };

// walk | degree-biased[:<beta>] | shortest-path | matrix:<path>. A bare
// "degree-biased" takes its exponent from beta.
RoutingSpec build_routing(const Graph& g, std::string_view spec, double beta = 0.0);

// Entry point shared by the executable and the tests. args excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace netcap::cli
