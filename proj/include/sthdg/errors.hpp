#pragma once

#include <stdexcept>
#include <string>

namespace sthdg {

/// Mesh or face incidence violates a structural assumption.
struct TopologyError : std::runtime_error {
    explicit TopologyError(const std::string& what) : std::runtime_error(what) {}
};

/// A requested capability (e.g. quadrature degree) exceeds what is built in.
struct CapabilityError : std::runtime_error {
    explicit CapabilityError(const std::string& what) : std::runtime_error(what) {}
};

/// User-supplied data (callables, fields) cannot be used as required.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// A solver or system is mis-configured (singular system, broken constraint).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// File system failure while reading or writing artifacts.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace sthdg
