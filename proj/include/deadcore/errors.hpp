#pragma once

#include <stdexcept>
#include <string>

namespace deadcore {

/// Invalid problem or run configuration. `key()` names the offending setting.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& what)
        : std::runtime_error(what), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

/// The lattice contains no interior node.
class DomainTooSmallError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A caller broke an operation's precondition (e.g. queried a strip node).
class ContractError : public std::logic_error {
    using std::logic_error::logic_error;
};

/// External data (tables, CSV files) does not match the lattice.
class IngestionError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Overflow, NaN, or a failed estimate inside a numerical routine.
class NumericalError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace deadcore
