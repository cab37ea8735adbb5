#pragma once

#include <stdexcept>
#include <string>

namespace damseg {

/// Shapes or extents of operands do not agree.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A scalar parameter lies outside its admissible range.
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A computation produced (or was fed) NaN or Inf.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller broke an API contract (e.g. backward from a non-scalar root).
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Persisted data does not match the expected on-disk layout.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace damseg
