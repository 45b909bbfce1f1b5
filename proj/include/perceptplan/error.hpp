#pragma once

#include <cstddef>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>

namespace perceptplan {

// Bad argument to an operation: unknown symbol, length mismatch, ...
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A model/automaton/scenario file that cannot be turned into a valid object.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class EvidenceImpossible : public std::runtime_error {
public:
    EvidenceImpossible() : std::runtime_error("evidence has probability zero") {}
};

class EnumerationInfeasible : public std::runtime_error {
public:
    EnumerationInfeasible(double required, double cap)
        : std::runtime_error("exact enumeration needs " + count(required) +
                             " observation records, cap is " + count(cap) +
                             "; use the sampled estimator instead"),
          required_(required), cap_(cap) {}

    double required() const noexcept { return required_; }
    double cap() const noexcept { return cap_; }

private:
    static std::string count(double x) {
        std::ostringstream out;
        out << std::setprecision(x < 1e15 ? 15 : 6) << x;
        return out.str();
    }

    double required_;
    double cap_;
};

class NonFiniteGradient : public std::runtime_error {
public:
    NonFiniteGradient(std::size_t iteration, std::size_t coordinate)
        : std::runtime_error("non-finite gradient at iteration " + std::to_string(iteration) +
                             ", coordinate " + std::to_string(coordinate)),
          iteration_(iteration), coordinate_(coordinate) {}

    std::size_t iteration() const noexcept { return iteration_; }
    std::size_t coordinate() const noexcept { return coordinate_; }

private:
    std::size_t iteration_;
    std::size_t coordinate_;
};

}  // namespace perceptplan
