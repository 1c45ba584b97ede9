#pragma once
// Command-line front end. Exit codes: 0 ok, 1 runtime failure, 2 usage or
// configuration error.

#include <ostream>
#include <string>
#include <vector>

namespace rdsclust {

// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace rdsclust
