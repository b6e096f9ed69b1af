#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace edc::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitData = 3,
  kExitInternal = 4,
};

// Entry point shared by the edcluster binary and the tests. `args` excludes
// the program name. Library errors are mapped onto the exit codes above and
// reported on `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace edc::cli
