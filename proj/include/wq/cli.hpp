#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace wq::cli {

/// Runs one `wq` invocation. `args` excludes the program name. Returns 0 on
/// success, 2 on a usage error and 1 when the pipeline itself fails.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, const char* const* argv);

}  // namespace wq::cli
