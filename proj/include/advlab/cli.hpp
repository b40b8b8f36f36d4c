#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace advlab {

// In-process entry point used by both main() and the tests. args excludes the
// program name. Exit codes: 0 ok, 2 config error, 3 data error, 4 training
// divergence. Errors print one "error: <kind>: ..." line to err.
int cli_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace advlab
