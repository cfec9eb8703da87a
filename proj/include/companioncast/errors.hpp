#pragma once

#include <stdexcept>
#include <string>

namespace companioncast {

/// Base class for every error raised by the engine.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input document (bad JSON, wrong field type).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Well-formed input that violates a domain invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

class NotFoundError : public Error {
public:
    using Error::Error;
};

/// Caller broke an operation's precondition.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Trigger candidates presented out of video-time order.
class OrderingError : public Error {
public:
    using Error::Error;
};

/// A chat or TTS backend failed after its retry budget.
class BackendError : public Error {
public:
    using Error::Error;
};

} // namespace companioncast
