#pragma once

#include <stdexcept>
#include <string>

namespace lumi {

// File and format problems: unreadable paths, bad headers, version mismatches.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Inputs that parse but violate a contract (shape mismatch, empty cloud, ...).
struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite values where the pipeline requires finite ones.
struct NumericsError : std::runtime_error {
  explicit NumericsError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace lumi
