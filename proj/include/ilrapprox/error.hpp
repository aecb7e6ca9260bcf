#ifndef ILRAPPROX_ERROR_HPP
#define ILRAPPROX_ERROR_HPP

#include <stdexcept>
#include <string>

namespace ilrapprox {

/// Base class for every error thrown by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

/// A value violates a type invariant (e.g. a composition that does not sum to one).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

/// An iterative routine gave up; carries the number of iterations performed.
class ConvergenceError : public NumericalError {
public:
    ConvergenceError(const std::string& what, int iterations)
        : NumericalError(what + " after " + std::to_string(iterations) + " iterations"), iterations_(iterations) {}

    int iterations() const { return iterations_; }

private:
    int iterations_;
};

}

#endif
