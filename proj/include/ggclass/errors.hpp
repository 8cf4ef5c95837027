#pragma once

#include <stdexcept>
#include <string>

namespace ggc {

/// Malformed or inconsistent input data (bad CSV, duplicate rows, empty class...).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A numerical routine could not produce a usable result.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace ggc
