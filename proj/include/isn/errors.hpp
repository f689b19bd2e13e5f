#pragma once

#include <stdexcept>
#include <string>

namespace isn {

// Exit-code mapping used by the CLI: UsageError -> 2, DataFormatError -> 3,
// NumericError -> 4, anything else -> 1.
struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataFormatError : std::runtime_error {
    explicit DataFormatError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : DataFormatError {
    explicit ConfigError(const std::string& msg) : DataFormatError(msg) {}
};

}  // namespace isn
