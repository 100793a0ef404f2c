#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace oms::cli {

/// Entry point of the `oms` tool. Returns the process exit code; on failure
/// a one-line diagnostic goes to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace oms::cli
