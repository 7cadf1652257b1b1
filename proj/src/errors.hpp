#pragma once

#include <stdexcept>

namespace flowmeter {

// Thrown when a file cannot be opened, read, or written.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown when file content does not match its declared format.
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown for recognized-but-unsupported inputs (e.g. nanosecond pcap).
struct UnsupportedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace flowmeter
