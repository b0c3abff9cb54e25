#pragma once

#include <stdexcept>
#include <string>

namespace hairnet {

/// Raised by every binary reader (.hair, .ornt, .vis, .hnet).
class FormatError : public std::runtime_error {
public:
    enum class Kind { BadMagic, VersionMismatch, Truncation, Io, Invalid };

    FormatError(Kind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

/// Tensor shapes that do not chain. The message names the offending dimension.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Non-finite gradient or loss during optimisation.
class DivergenceError : public std::runtime_error {
public:
    explicit DivergenceError(const std::string& what = "divergence")
        : std::runtime_error(what) {}
};

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace hairnet
