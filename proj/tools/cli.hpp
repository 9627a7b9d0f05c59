#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace qdtm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitRuntime = 3;

// Runs one command line. Results go to `out` when no output file is given;
// errors are written to `err` as one JSON object per line.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qdtm::cli
