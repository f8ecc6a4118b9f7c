#ifndef TWISIM_CONFIG_HPP
#define TWISIM_CONFIG_HPP

#include <filesystem>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "twisim/params.hpp"
#include "twisim/sim.hpp"

namespace twisim {

// Flat `key = value` experiment configuration. `#` starts a comment, keys
// carry unit suffixes (_s, _ms, _m), sensor-specific keys are
// `sensor.<id>.<field>` with `sensor.*.<field>` as a default for all ids.
// Unknown and duplicate keys are rejected with their line number.
struct ParsedConfig {
    ScenarioConfig scenario;
    CommConfig comm;
    std::vector<SensorLink> sensors; // index 0 = sensor 1
    SimFlags sim_flags;
};

ParsedConfig parse_config_text(std::string_view text, std::string_view source_name);
ParsedConfig parse_config_file(const std::filesystem::path& path);

// Canonical SI echo of a resolved configuration. Values print with 17
// significant digits so a re-run from the echoed file reproduces the run.
void echo_resolved_config(std::ostream& out, const ParsedConfig& config);
void write_config_echo(const std::filesystem::path& path, const ParsedConfig& config);

} // namespace twisim

#endif
