#pragma once

#include <iosfwd>
#include <string>

#include "gaussbound/common.hpp"

namespace gaussbound {

class IoError : public Error {
 public:
  using Error::Error;
};

enum ExitCode : int { kExitOk = 0, kExitInput = 2, kExitIo = 3, kExitNumeric = 4 };

/// Reads a CSV with header x0..x{dx-1},y0..y{dy-1}. Malformed rows raise
/// ParameterError naming the line; unreadable files raise IoError.
PairedSamples read_samples_csv(const std::string& path);

/// Writes the same layout with round-trip precision and LF line endings.
void write_samples_csv(const std::string& path, const PairedSamples& samples);

/// Entry point of the `gaussbound` executable. Subcommands: bound, curve,
/// gen, reproduce.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gaussbound
