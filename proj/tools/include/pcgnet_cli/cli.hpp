#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace pcgnet::cli {

enum ExitCode : int { kOk = 0, kInternal = 1, kInputError = 2, kValidationError = 3 };

/// Parses "key = value" lines; '#' starts a comment. Errors name the line.
std::map<std::string, std::string> parse_config_file(const std::string& path);

/// Entry point shared by the executable and the tests.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pcgnet::cli
