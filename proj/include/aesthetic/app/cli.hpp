#pragma once

#include <ostream>

namespace aesthetic::app {

/// Entry point of the aesguide tool. Returns the process exit code: 0 on
/// success, 1 on runtime failure, 2 on a usage error.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace aesthetic::app
