#pragma once

#include <stdexcept>
#include <string>

namespace retarda {

/// Malformed value or violated precondition in a public operation.
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// System-spec text/JSON rejected; carries a position when one is known.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& msg, std::size_t position = npos)
        : std::runtime_error(position == npos ? msg
                                              : msg + " (at position " + std::to_string(position) + ")"),
          position_(position) {}

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

/// Right-hand side produced a non-finite value.
class EvalOverflow : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical procedure failed (step collapse without blow-up evidence, etc.).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Envelope fitting declined the data; the message carries the diagnostic.
class EnvelopeRefusal : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace retarda
