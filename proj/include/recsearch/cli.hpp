#pragma once

namespace recsearch {

/// Entry point of the `recsearch` tool. Returns 0 on success, 1 on a usage
/// error and 2 on a runtime error.
int run_cli(int argc, char** argv);

}  // namespace recsearch
