// Error types shared by every module.
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace projhead {

// Base for all library errors so callers can catch one type.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the documented domain (negative scale, empty input, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

// Dimension mismatch between vectors/matrices.
class ShapeError : public Error {
public:
    using Error::Error;
};

// Root finder was given an interval without a sign change.
class BracketError : public Error {
public:
    using Error::Error;
};

// A numerical procedure failed to converge or produced non-finite output.
class NumericalError : public Error {
public:
    using Error::Error;
};

// Homogeneous-only routine called with a spiked model (or vice versa).
class WrongModelError : public Error {
public:
    using Error::Error;
};

// Parameters for which a quantity is undefined (e.g. zero augmentation).
class DegenerateError : public Error {
public:
    using Error::Error;
};

// Object is in the wrong state for the requested operation.
class StateError : public Error {
public:
    using Error::Error;
};

// Embedding with zero norm inside a cosine-similarity loss.
class DegenerateEmbeddingError : public Error {
public:
    using Error::Error;
};

// Training produced a non-finite loss.
class TrainingDivergedError : public Error {
public:
    TrainingDivergedError(const std::string& what, std::size_t epoch)
        : Error(what), epoch_(epoch) {}
    std::size_t epoch() const { return epoch_; }

private:
    std::size_t epoch_;
};

// Malformed input file or experiment description.
class ParseError : public Error {
public:
    using Error::Error;
};

}  // namespace projhead
