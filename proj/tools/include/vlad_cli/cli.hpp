#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vlad::cli {

/// Runs one `vlad` command. Returns the process exit status; on failure a
/// single "error: <category>: <message>" line goes to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Exit status for each error category (0 is success).
int exit_code_for(const std::string& category);

}  // namespace vlad::cli
