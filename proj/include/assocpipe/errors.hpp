#pragma once

#include <stdexcept>
#include <string>

namespace assocpipe {

// Error taxonomy used across the library. format_error messages carry a byte
// offset (binary inputs) or a line number (text inputs) whenever one exists.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct argument_error : error {
    using error::error;
};

struct type_error : error {
    using error::error;
};

struct format_error : error {
    using error::error;
};

struct io_error : error {
    using error::error;
};

struct schema_error : error {
    using error::error;
};

}  // namespace assocpipe
