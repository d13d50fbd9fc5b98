#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "ioi/attacks.hpp"

namespace ioi {

// Run configuration resolved from built-in defaults < JSON config < CLI flags.
// Defaults: epsilon 0.1; f 0.07 for images, 0.05 for video paths; d 0.005;
// n_stop 5.
struct RunConfig {
    // metric
    std::string metric_name = "toy_cnn";
    uint64_t metric_seed = 7;
    std::optional<double> range_lo, range_hi;  // informational echo; oracles declare their own

    // attack
    std::string attack_name = "ioi";
    double epsilon = 0.1;
    std::optional<double> f;  // resolved per item kind when unset
    int iterations = 1;
    Direction direction = Direction::increase;
    bool ifgsm_step_clamp = false;

    // align
    double rg_target = 0.05;
    double d = 0.005;
    int n_stop = 5;

    // io
    std::string input;
    std::string output;
    std::string frame_pattern = "%03d.png";

    uint64_t seed = 1;

    double f_for_image() const { return f.value_or(0.07); }
    double f_for_video() const { return f.value_or(0.05); }

    AttackConfig attack_config(bool video) const;
    // Throws ConfigError on out-of-range values.
    void validate() const;
};

// Parses the JSON config file ({metric:{name,seed,range}, attack:{name,epsilon,
// f,iterations,direction}, align:{rg_target,d,n_stop}, io:{input,output,
// frame_pattern}, seed}) over the given base. Unknown keys raise ConfigError.
RunConfig load_config(const std::string& path, RunConfig base = {});
RunConfig parse_config_json(const std::string& text, RunConfig base = {});

// Canonical JSON echo of a resolved config (deterministic key order).
std::string config_echo(const RunConfig& cfg);

Direction direction_from_name(const std::string& name);  // ConfigError on unknown
std::string direction_name(Direction d);

}  // namespace ioi
