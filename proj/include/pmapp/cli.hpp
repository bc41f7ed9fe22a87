#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pmapp {

/// Exit codes: 0 ok, 1 validation failure, 2 input error, 3 non-convergence.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pmapp
