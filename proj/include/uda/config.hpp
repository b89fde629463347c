#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "uda/data.hpp"
#include "uda/trainer.hpp"

namespace uda {

// Everything a run needs besides its input files.
struct RunConfig {
    std::uint64_t seed = 0;
    TrainConfig train;
    SyntheticSpec data;
};

// Flat `key = value` text. Blank lines and lines starting with '#' are
// ignored; keys are dotted (schedule.kind, loss.delta, ...).
using ConfigEntries = std::map<std::string, std::string>;

// Throws ParseError naming the line for lines without '=' or duplicate keys.
ConfigEntries parse_config(const std::string& text);
ConfigEntries load_config(const std::filesystem::path& path);
std::string format_config(const ConfigEntries& entries);

// Every recognised key, in a stable order.
const std::vector<std::string>& config_keys();

// Applies entries over `base`. Throws ConfigError naming the key for unknown
// keys, unparsable values and values the train config rejects.
RunConfig apply_config(RunConfig base, const ConfigEntries& entries);

// All keys with their resolved values; apply_config(RunConfig{}, to_entries(c))
// reproduces c.
ConfigEntries to_entries(const RunConfig& config);

}  // namespace uda
