#include "damseg_cli/config_file.hpp"

#include <algorithm>
#include <fstream>
#include <set>

namespace damseg::cli {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::string option_name(std::string key) {
    std::replace(key.begin(), key.end(), '_', '-');
    return "--" + key;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigFileError("cannot open config file " + path);
    std::vector<std::pair<std::string, std::string>> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string key = eq == std::string::npos ? std::string{} : trim(line.substr(0, eq));
        const std::string value = eq == std::string::npos ? std::string{} : trim(line.substr(eq + 1));
        if (key.empty() || value.empty() || key.find_first_of(" \t") != std::string::npos) {
            throw ConfigFileError(path + ":" + std::to_string(line_no) + ": expected 'key = value'");
        }
        entries.emplace_back(key, value);
    }
    return entries;
}

std::vector<std::string> merge_config(const std::vector<std::string>& args) {
    std::vector<std::string> rest;
    std::string config_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) throw ConfigFileError("--config requires a file path");
            config_path = args[++i];
        } else if (args[i].starts_with("--config=")) {
            config_path = args[i].substr(9);
        } else {
            rest.push_back(args[i]);
        }
    }
    if (config_path.empty() || rest.empty()) return rest;

    std::set<std::string> given;
    for (const auto& a : rest) {
        if (a.starts_with("--")) given.insert(a.substr(0, a.find('=')));
    }
    std::vector<std::string> merged = {rest.front()};
    for (const auto& [key, value] : read_config_file(config_path)) {
        const auto name = option_name(key);
        if (given.count(name)) continue;
        merged.push_back(name);
        merged.push_back(value);
    }
    merged.insert(merged.end(), rest.begin() + 1, rest.end());
    return merged;
}

}  // namespace damseg::cli
