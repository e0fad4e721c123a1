#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace ecc {

/// Exit codes: 0 success, 1 usage or validation error, 2 runtime error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Directory holding the shipped fixtures ($ECC_DATA_DIR overrides).
std::filesystem::path data_dir();

}  // namespace ecc
