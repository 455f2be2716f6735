#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace nlmob {

enum ExitCode : int {
    kExitOk = 0,
    kExitVerdictFailed = 1,
    kExitConfigError = 2,
};

/// Entry point of the nlmob command line tool. args excludes the program name.
/// Messages go to out and err; study outputs are written under --out.
int run_subcommand(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run_subcommand(int argc, const char* const* argv);

/// printf("%.17g"), with inf and nan spelled out.
std::string format_double(double v);

/// One line per check, "<name>: pass|fail". Returns true when all pass.
bool run_selftest(std::uint64_t seed, std::ostream& out);

const char* version_string();

}  // namespace nlmob
