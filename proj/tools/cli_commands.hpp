#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lhalf::cli {

enum ExitCode : int {
    kOk = 0,
    kUsage = 1,  // bad flags, unreadable or malformed files
    kIterationCap = 2,
    kStalled = 3,
};

/// Runs one command line (args[0] is the program name). Never throws.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lhalf::cli
