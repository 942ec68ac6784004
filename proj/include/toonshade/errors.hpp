#pragma once

#include <stdexcept>
#include <string>

namespace toonshade {

// Broad failure categories. The CLI maps these onto process exit codes
// (config/input problems -> 2, plugin adapter failures -> 3), and tests
// assert on them instead of parsing message strings.
enum class ErrorKind {
    io,                  // file system / stream failures
    format,              // malformed file contents (magic, rank, truncation)
    shape,               // tensor/image dimension mismatch
    parameter,           // invalid argument values
    sequence,            // gaps in numbered frame/flow files
    capacity,            // hot-tier capacity too small
    completeness,        // missing per-window output in aggregation
    geometry,            // resolution not compatible with the latent grid
    contract,            // a model plugin violated its interface contract
    plugin,              // external plugin process failed
    config,              // config file parse/validation errors
    insufficient_input,  // not enough frames for the requested operation
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
    if (!condition) fail(kind, message);
}

}  // namespace toonshade
