#pragma once

#include <string>
#include <vector>

namespace pssr::cli {

// Entry point shared by the pssr binary and the test suites.
// args excludes argv[0]. Returns the process exit code: 0 on success,
// 1 on usage/config errors, 2 on runtime failures.
int run(const std::vector<std::string>& args);

}  // namespace pssr::cli
