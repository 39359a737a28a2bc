#pragma once

#include <iostream>

namespace bwshare::cli {

/// Dispatches the command line. Returns 0 on success, 1 on usage or
/// validation errors, 2 on numerical failures. All randomness derives from
/// --seed; identical invocations with --no-header produce byte-identical
/// output.
int run(int argc, const char* const* argv, std::ostream& out = std::cout,
        std::ostream& err = std::cerr);

}  // namespace bwshare::cli
