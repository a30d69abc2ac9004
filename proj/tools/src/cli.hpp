#pragma once

#include <ostream>

namespace hsplat::cli {

/// Runs one command line. Returns the process exit code; failures print a
/// single `error: code=<name> message="..."` line to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hsplat::cli
