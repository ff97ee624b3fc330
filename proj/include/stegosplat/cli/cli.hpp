#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace stegosplat::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// Runs one subcommand. `args` excludes the program name. Failures print a
/// single line to `err`; with --json a summary object goes to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace stegosplat::cli
