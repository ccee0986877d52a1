// Command-line front end. `dispatch` is the whole program minus main so it can
// be driven from tests with captured streams.
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace brsa::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // domain failure: check failed, attack resisted, mismatch
inline constexpr int kExitConfig = 2;   // bad configuration or input file
inline constexpr int kExitUsage = 64;   // unknown subcommand or flag

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace brsa::cli
