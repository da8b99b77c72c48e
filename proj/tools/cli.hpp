#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace surgplan::cli {

// Exit codes: 0 success, 1 usage error, 2 engine error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace surgplan::cli
