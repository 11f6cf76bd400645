#pragma once

namespace cforge {

// Entry point of the concept_forge command-line tool.
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical abort.
int run_cli(int argc, const char* const argv[]);

}  // namespace cforge
