#pragma once

#include <stdexcept>
#include <string>

namespace crossflow {

/// Invalid scenario or run configuration (maps to CLI exit code 2).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A destination region with no walkable cell.
struct UnreachableDestinationError : ConfigError {
    explicit UnreachableDestinationError(const std::string& msg) : ConfigError(msg) {}
};

/// Origin and destination not connected by walkable cells.
struct DisconnectedScenarioError : ConfigError {
    explicit DisconnectedScenarioError(const std::string& msg) : ConfigError(msg) {}
};

/// Feature vector length does not match the trained model.
struct DimensionMismatchError : ConfigError {
    explicit DimensionMismatchError(const std::string& msg) : ConfigError(msg) {}
};

/// Strict dataset extraction hit a frame with an empty camera cutout.
struct ProtocolViolationError : ConfigError {
    explicit ProtocolViolationError(const std::string& msg) : ConfigError(msg) {}
};

/// File system failure (maps to CLI exit code 3).
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace crossflow
