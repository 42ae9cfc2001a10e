#pragma once

#include <stdexcept>
#include <string>

namespace wq {

/// Base class for every error raised by the library. The CLI maps these to
/// exit status 1 and prints what() verbatim.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SchemaError : public Error { public: using Error::Error; };
class EmptyInputError : public Error { public: using Error::Error; };
class ParameterError : public Error { public: using Error::Error; };
class DataError : public Error { public: using Error::Error; };
class InsufficientDataError : public Error { public: using Error::Error; };
class PreconditionError : public Error { public: using Error::Error; };
class NumericalError : public Error { public: using Error::Error; };
class ShapeError : public Error { public: using Error::Error; };

/// Raised when a value is outside the domain of a transform, e.g. a
/// non-positive sample under multiplicative decomposition.
class DomainError : public Error {
public:
    DomainError(const std::string& msg, std::size_t index)
        : Error(msg), index_(index) {}
    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

}  // namespace wq
