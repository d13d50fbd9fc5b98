#pragma once

#include <stdexcept>
#include <string>

namespace ioi {

// Exit codes used by the CLI: 0 success, 2 config, 3 I/O, 4 invariant violation.
enum ExitCode {
    kExitOk = 0,
    kExitConfig = 2,
    kExitIo = 3,
    kExitInvariant = 4,
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Dimension/shape violations on in-memory data (a flavor of config error at the CLI).
struct DimensionError : ConfigError {
    explicit DimensionError(const std::string& msg) : ConfigError(msg) {}
};

// A runtime falsification of a property the build treats as load-bearing
// (the perturbation bound, gradient admission).
struct InvariantViolation : std::runtime_error {
    explicit InvariantViolation(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace ioi
