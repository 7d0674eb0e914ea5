#pragma once

#include <iosfwd>

namespace msdybo::cli {

/// Entry point of the `msdybo` tool. Returns 0, 2 (configuration) or 3 (numerical failure);
/// 1 for any other error (I/O and the like).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace msdybo::cli
