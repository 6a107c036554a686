#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace graspsynth {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input that violates a documented contract (bad grasp, bad config, unknown id).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Malformed file content. Carries the 1-based line number when known (0 otherwise).
class ParseError : public ValidationError {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : ValidationError(format(source, line, what)), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    static std::string format(const std::string& source, std::size_t line, const std::string& what) {
        std::string msg = source;
        if (line > 0) msg += ":" + std::to_string(line);
        return msg + ": " + what;
    }

    std::size_t line_;
};

/// Lookup of a scene, object or file that does not exist.
class NotFoundError : public Error {
public:
    using Error::Error;
};

/// I/O failure (unwritable directory, short write, failed fsync).
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace graspsynth
