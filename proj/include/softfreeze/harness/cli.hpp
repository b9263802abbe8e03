#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace softfreeze {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 1;
inline constexpr int kExitInternalError = 2;

// Parses flags (overriding an optional --config file), runs the selected
// mode and returns the process exit code.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace softfreeze
