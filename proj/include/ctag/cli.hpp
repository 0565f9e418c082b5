#pragma once

#include <iosfwd>

namespace ctag {

/// Entry point of the `ctag` tool. Exit codes: 0 pass, 1 property failure,
/// 2 usage error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ctag
