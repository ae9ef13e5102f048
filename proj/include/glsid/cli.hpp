#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "glsid/errors.hpp"

namespace glsid {

/// 0 ok; 1 I/O, parse or usage; 2 precondition or identification failure;
/// 3 numerical failure; 4 statistical check failed.
int exit_code_for(ErrorCode code);

/// Runs one command. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace glsid
