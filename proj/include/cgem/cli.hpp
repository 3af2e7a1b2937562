#pragma once

#include <string>
#include <vector>

namespace cgem::cli {

// Exit codes: 0 ok, 1 internal, 2 usage, 3 malformed input document,
// 4 missing input file, 5 validation failure. Failures also emit a
// machine-readable error record on stderr.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);  // without the program name

}  // namespace cgem::cli
