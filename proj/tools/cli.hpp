#pragma once

#include <iosfwd>

namespace prada {

/// Entry point of the `prada` tool. Returns the process exit status: 0 on
/// success, 2 usage error, 3 data error, 4 numeric failure. Failures print a
/// single `error ...` line to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace prada
