#ifndef DIFFDIST_CLI_HPP
#define DIFFDIST_CLI_HPP

#include <iosfwd>

namespace diffdist {

/// Subcommands dist, bench, sweep, calibrate, validate. Returns 2 on a
/// parse or configuration error, 1 when validation (or a solve) fails and 0
/// otherwise.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace diffdist

#endif // DIFFDIST_CLI_HPP
