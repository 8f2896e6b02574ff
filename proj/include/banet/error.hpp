#pragma once

#include <stdexcept>
#include <string>

namespace banet {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Tensor shapes that do not fit an operation's contract.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Filesystem failures: missing files, unwritable paths.
class IoError : public Error {
public:
    using Error::Error;
};

enum class FormatErrc {
    bad_magic,
    bad_version,
    truncated,
    checksum,
    bad_header,
    unsupported,
    out_of_range,
    trailing_data,
};

inline const char* to_string(FormatErrc code) {
    switch (code) {
        case FormatErrc::bad_magic: return "bad_magic";
        case FormatErrc::bad_version: return "bad_version";
        case FormatErrc::truncated: return "truncated";
        case FormatErrc::checksum: return "checksum";
        case FormatErrc::bad_header: return "bad_header";
        case FormatErrc::unsupported: return "unsupported";
        case FormatErrc::out_of_range: return "out_of_range";
        case FormatErrc::trailing_data: return "trailing_data";
    }
    return "unknown";
}

/// Malformed or unsupported file content. The code lets callers tell
/// truncation from checksum failures without parsing the message.
class FormatError : public Error {
public:
    FormatError(FormatErrc code, const std::string& what)
        : Error(std::string(to_string(code)) + ": " + what), code_(code) {}

    FormatErrc code() const noexcept { return code_; }

private:
    FormatErrc code_;
};

/// Weight store does not match what the model configuration demands.
class ParameterError : public Error {
public:
    ParameterError(std::string path, const std::string& what)
        : Error(path + ": " + what), path_(std::move(path)) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

} // namespace banet
