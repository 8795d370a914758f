#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace spanforge {

// Runs one command line (args[0] is the program name). Exit codes: 0 on
// success, 1 on usage, validation or format errors, 2 on I/O or transport
// errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace spanforge
