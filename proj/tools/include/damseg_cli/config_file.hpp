#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace damseg::cli {

class ConfigFileError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parses `key = value` lines; '#' starts a comment. Keys may use '_' or '-'.
/// Throws ConfigFileError naming the line on anything else.
std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path);

/// Expands `--config <file>` into `--key value` tokens placed right after the
/// subcommand, skipping keys that the command line already sets.
std::vector<std::string> merge_config(const std::vector<std::string>& args);

}  // namespace damseg::cli
