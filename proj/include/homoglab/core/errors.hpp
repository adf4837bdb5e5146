#pragma once

#include <stdexcept>
#include <string>

namespace homoglab {

// Error taxonomy mapped onto process exit codes by the CLI:
// config_error -> 2, solver_error and io_error -> 3, gated check failure -> 1.
struct config_error : std::runtime_error {
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

struct solver_error : std::runtime_error {
    explicit solver_error(const std::string& what) : std::runtime_error(what) {}
};

struct io_error : std::runtime_error {
    explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace homoglab
