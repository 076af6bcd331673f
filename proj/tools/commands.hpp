// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace odorgen::cli {

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kBadInput = 2,
  kDiverged = 3,
  kValidationFailed = 4,
};

/// Parses argv and dispatches one subcommand. Machine-readable results go to
/// `out`, human-readable progress and errors to `err`. Never throws.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace odorgen::cli
