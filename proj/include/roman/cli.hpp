#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace roman {

/// Exit codes: 0 success, 1 negative answer (unrealizable), 2 usage or
/// input error. `args` excludes the program name.
int run_cli(const std::vector<std::string> &args, std::istream &in, std::ostream &out,
            std::ostream &err);

} // namespace roman
