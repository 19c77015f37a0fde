#pragma once

#include <stdexcept>
#include <string>

namespace zsl {

// Malformed or truncated on-disk data (weight files, NPY, manifests).
class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

// Infeasible or inconsistent run configuration.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite losses/gradients and other failures inside a training run.
class TrainingError : public std::runtime_error {
public:
    explicit TrainingError(const std::string& msg) : std::runtime_error(msg) {}
};

// Metric preconditions violated (empty classes, labels outside the class set).
class EvalError : public std::runtime_error {
public:
    explicit EvalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace zsl
