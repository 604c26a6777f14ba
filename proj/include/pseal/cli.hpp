#pragma once

// The `passport_seal` command line. Exit codes: 0 success or accept,
// 1 reject, 2 input error, 3 verification unavailable, 64 usage.

#include <ostream>
#include <string>
#include <vector>

#include "pseal/error.hpp"

namespace pseal::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitReject = 1;
inline constexpr int kExitInput = 2;
inline constexpr int kExitUnavailable = 3;
inline constexpr int kExitUsage = 64;

/// Exit code for an error escaping a command. Codec and decryption failures
/// map to kExitUnavailable, everything else to kExitInput.
int exit_class(ErrorCode code);

/// `args` excludes the program name. Diagnostics go to `err` as one line.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pseal::cli
