#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mlseq {

/// Chain file could not be parsed. `line` is 1-based.
class ParseError : public std::runtime_error {
public:
    ParseError(std::string message, std::size_t line)
        : std::runtime_error(message + ", line " + std::to_string(line)),
          line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// A successor source was asked about a state it does not know.
class NotFoundError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// An external successor source violated the wire contract
/// (malformed reply, unsorted entries, process exit mid-stream, ...).
class ProtocolError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// An operation was requested that the source tier cannot support,
/// e.g. exact DP over a generative source.
class CapabilityError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Exhaustive enumeration was refused because the search space is too large.
class SizeGuardError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace mlseq
