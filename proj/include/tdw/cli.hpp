#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tdw {

/// Runs one `tdw` subcommand (timegen, etl, query, bench, serve). args[0]
/// is the program name. Returns the process exit code; diagnostics go to
/// `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tdw
