// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace gadgetforge::cli {

/// Exit statuses.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kDataError = 2;
inline constexpr int kInternal = 3;

/// "key = value" lines under optional "[section]" headers; '#' and ';'
/// start comments. Keys before any header land in section "".
using ConfigFile = std::map<std::string, std::map<std::string, std::string>>;
ConfigFile parse_config(std::string_view text);

/// Runs one subcommand. `args[0]` is the program name. Option values come
/// from the command line, then GADGETFORGE_<SUB>_<KEY> / GADGETFORGE_<KEY>
/// environment variables, then the config file ([<sub>] section before
/// the global one), then built-in defaults.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gadgetforge::cli
