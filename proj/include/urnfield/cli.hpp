#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace urnfield::cli {

enum ExitCode { ok = 0, failure = 1, usage = 2, condition = 3, io_error = 4 };

/// Runs the command line `args` (args[0] is the program name). Data goes to `out` when
/// no --out path is given; diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace urnfield::cli
