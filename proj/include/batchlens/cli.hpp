#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace batchlens::cli {

/// Parses a subcommand and its flags and runs it. Returns 0 on success,
/// 1 on user error (bad flag, missing or malformed input) and 2 on
/// internal error.
int dispatch(int argc, char** argv);

/// Same as above with explicit streams; used by tests.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace batchlens::cli
