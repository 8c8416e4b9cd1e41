#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "finhardy/config.hpp"

namespace finhardy {

enum ExitCode { kExitOk = 0, kExitInput = 1, kExitCheck = 2 };

const std::vector<std::string>& subcommand_names();

// Runs one subcommand, writing its files into out_dir and its summary lines to `log`. Input errors propagate as
// exceptions; a failed mathematical check returns kExitCheck.
int run_subcommand(const std::string& name, const RunConfig& cfg, const std::string& out_dir, std::ostream& log);

// Every *.conf in config_dir (sorted), each with its `output.subcommand`, into out_dir/<stem>/. Returns the
// largest exit code.
int repro_all(const std::string& config_dir, const std::string& out_dir, std::optional<std::uint64_t> seed,
              std::ostream& log);

}  // namespace finhardy
