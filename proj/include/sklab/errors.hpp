#pragma once

#include <stdexcept>
#include <string>

namespace sklab {

// Failure classes map 1:1 onto CLI exit codes (see tools/sklab.cpp).
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ResourceError : std::runtime_error {
    explicit ResourceError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class ExitCode : int {
    ok = 0,
    validation = 2,
    resource = 3,
    numerical = 4,
    io = 5,
};

} // namespace sklab
