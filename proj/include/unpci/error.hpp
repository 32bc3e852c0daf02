#pragma once

#include <stdexcept>
#include <string>

namespace unpci {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Statistical degeneracy: constant features, empty or singleton clusters,
/// rank-deficient covariance, zero total variation. The CLI maps these to
/// exit code 1.
class DegenerateError : public Error {
public:
    explicit DegenerateError(const std::string& what) : Error(what) {}
};

/// File and parsing problems. The CLI maps these to exit code 3.
class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(what) {}
};

}
