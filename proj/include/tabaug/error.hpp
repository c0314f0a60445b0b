#pragma once

#include <stdexcept>
#include <string>

namespace tabaug {

// Base class for all tabaug errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input text (CSV, JSON). Carries a human-readable location.
struct ParseError : Error {
    ParseError(const std::string& msg, std::size_t row, std::size_t col)
        : Error(msg + " (row " + std::to_string(row) + ", column " + std::to_string(col) + ")"),
          row(row), column(col) {}
    std::size_t row;
    std::size_t column;
};

// Structurally valid input that violates a schema contract.
struct SchemaError : Error {
    using Error::Error;
};

// Invalid or contradictory configuration.
struct ConfigError : Error {
    using Error::Error;
};

// Model fitting failed (degenerate input, non-finite loss, ...).
struct FitError : Error {
    using Error::Error;
};

// A row could not be routed through a tree (missing value at a split).
struct RoutingError : Error {
    RoutingError(std::size_t row, const std::string& feature)
        : Error("cannot route row " + std::to_string(row) +
                ": value for feature '" + feature + "' is missing"),
          row(row), feature(feature) {}
    std::size_t row;
    std::string feature;
};

}  // namespace tabaug
