#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rcnn {

// Error taxonomy. The CLI maps these onto exit codes: argument/usage -> 1,
// data/format -> 2, numeric -> 3.
struct ArgumentError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Shape mismatches are hard errors everywhere; no broadcasting.
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A backward pass was asked for without the matching forward caches.
struct StateError : std::logic_error {
    using std::logic_error::logic_error;
};

// Corrupt or truncated on-disk container; carries the offending byte offset.
struct FormatError : std::runtime_error {
    FormatError(const std::string& msg, std::size_t offset)
        : std::runtime_error(msg + " (byte offset " + std::to_string(offset) + ")"),
          byte_offset(offset) {}
    std::size_t byte_offset;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace rcnn
