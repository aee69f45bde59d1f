#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "pairfair/kv_config.hpp"

namespace pairfair::cli {

/// Exit codes: 0 success, 1 usage, 2 I/O, 3 data validation,
/// 4 empty mining result, 5 numeric failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Fully resolved configuration: built-in defaults, then the --config file,
/// then explicit flags. Keys are the long flag names without dashes.
KvConfig default_config();
KvConfig resolve_config(const KvConfig& file, const KvConfig& flags);

}  // namespace pairfair::cli
