// errors.hpp - exception taxonomy; the CLI maps these to exit codes
#pragma once

#include <stdexcept>
#include <string>

namespace cvdx {

// invalid configuration; message names the offending field
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// dataset / checkpoint / report file problems; message names the path or row
struct LoadError : std::runtime_error {
    explicit LoadError(const std::string& msg) : std::runtime_error(msg) {}
};

// bad runtime values (shape mismatches, degenerate vectors, empty inputs)
struct ValueError : std::runtime_error {
    explicit ValueError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace cvdx
