#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cranimem::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kBackend = 2, kData = 3 };

// args excludes the program name. Never lets an exception escape.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace cranimem::cli
