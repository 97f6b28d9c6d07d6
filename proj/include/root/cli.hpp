#pragma once

#include <iosfwd>

namespace root {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUserError = 1;
inline constexpr int kExitInternal = 2;

/// Entry point of the `root` command. Normal output goes to `out`, usage
/// text, diagnostics and progress to `err`. With `--json` exactly one JSON
/// document is written to `out`.
int runCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace root
